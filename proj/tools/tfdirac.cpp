#include "tfdirac/tfdirac.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

using namespace tfdirac;
using nlohmann::json;

namespace {

constexpr int kExitTolerance = 1;
constexpr int kExitInput = 2;
constexpr int kExitAborted = 3;

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

SpinorField load_field(const std::string& path, std::optional<double> mass = std::nullopt) {
  Snapshot s = read_snapshot(path);
  if (mass) s.header.mass = *mass;
  return field_from_snapshot(s);
}

std::vector<double> time_grid(double a, double b, int count) { return linear_grid(a, b, count); }

int cmd_clifford(int dim, double mass, double tol) {
  const auto set = build_dirac_matrices(dim, mass);
  const auto r = verify_clifford(set, tol);
  print_json({{"dim", dim},
              {"spinor_dim", set.spinor_dim},
              {"ok", r.ok},
              {"hermitian", r.hermitian},
              {"anticommute", r.anticommute},
              {"mass_block_form", r.mass_block_form},
              {"max_anticommutator_residual", r.max_anticommutator_residual},
              {"worst_pair", {r.worst_i, r.worst_j}},
              {"max_hermiticity_residual", r.max_hermiticity_residual},
              {"worst_hermitian", r.worst_hermitian},
              {"mass_block_residual", r.mass_block_residual}});
  return r.ok ? 0 : kExitTolerance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral Dirac solver and time-frequency analysis toolkit"};
  app.require_subcommand(1);

  // clifford-check
  int c_dim = 3;
  double c_mass = 1.0, c_tol = 1e-12;
  auto* clifford = app.add_subcommand("clifford-check", "Build and verify Dirac matrices; prints JSON");
  clifford->add_option("--dim", c_dim, "Spatial dimension")->required()->check(CLI::Range(1, 16));
  clifford->add_option("--mass", c_mass, "Mass")->check(CLI::NonNegativeNumber);
  clifford->add_option("--tol", c_tol, "Tolerance");

  // evolve
  double e_t = 0.0, e_mass = 1.0;
  int e_steps = 1, e_dim = 1;
  std::string e_in, e_out;
  auto* evolve = app.add_subcommand("evolve", "Free Dirac evolution of a field snapshot");
  evolve->add_option("--t", e_t, "Final time")->required();
  evolve->add_option("--steps", e_steps, "Number of equal propagation steps")->check(CLI::PositiveNumber);
  evolve->add_option("--mass", e_mass, "Mass")->check(CLI::NonNegativeNumber);
  evolve->add_option("--dim", e_dim, "Spatial dimension (must match the snapshot)");
  evolve->add_option("--input", e_in, "Input snapshot")->required();
  evolve->add_option("--output", e_out, "Output snapshot")->required();

  // dispersion-check
  double k_t = 1.0, k_mass = 1.0, k_tol = 1e-10;
  int k_dim = 1;
  std::string k_in;
  auto* disp = app.add_subcommand("dispersion-check", "Per-mode Klein-Gordon phase residuals as CSV");
  disp->add_option("--input", k_in, "Input snapshot")->required();
  disp->add_option("--t", k_t, "Time");
  disp->add_option("--mass", k_mass, "Mass")->check(CLI::NonNegativeNumber);
  disp->add_option("--dim", k_dim, "Spatial dimension (must match the snapshot)");
  disp->add_option("--tol", k_tol, "Tolerance on the largest residual");

  // norm
  std::string n_spec = "M:2:2:0:0", n_in, n_method = "direct";
  double n_width = 1.0;
  auto* norm = app.add_subcommand("norm", "Modulation or Wiener amalgam norm of a field");
  norm->add_option("--spec", n_spec, "K:p:q:r:s with K in {M, W}, 'inf' allowed");
  norm->add_option("--input", n_in, "Input snapshot")->required();
  norm->add_option("--method", n_method, "direct or bupu")->check(CLI::IsMember({"direct", "bupu"}));
  norm->add_option("--window-width", n_width, "Gaussian window width (direct method)");

  // weyl-apply
  std::string w_sym, w_in, w_out;
  auto* weyl = app.add_subcommand("weyl-apply", "Apply the Weyl quantization of a symbol (d = 1)");
  weyl->add_option("--symbol", w_sym, "Symbol snapshot")->required();
  weyl->add_option("--input", w_in, "Input field snapshot")->required();
  weyl->add_option("--output", w_out, "Output field snapshot");

  // solve
  std::string s_pot = "none", s_nl = "none", s_in, s_out;
  double s_T = 1.0, s_dt = 1e-2, s_tol = 1e-12;
  int s_iter = 200, s_every = 0;
  auto* solve = app.add_subcommand("solve", "Volterra (potential) or Duhamel (nonlinear) evolution");
  solve->add_option("--input", s_in, "Initial datum snapshot")->required();
  solve->add_option("--potential", s_pot, "none | mult:file | weyl:file");
  solve->add_option("--nonlinearity", s_nl, "none | power:k | thirring | general:file");
  solve->add_option("--T", s_T, "Horizon")->required();
  solve->add_option("--dt", s_dt, "Quadrature step")->required();
  solve->add_option("--tol", s_tol, "Picard tolerance");
  solve->add_option("--max-iter", s_iter, "Picard iteration limit");
  solve->add_option("--save-every", s_every, "Write every k-th state (0: final state only)");
  solve->add_option("--out", s_out, "Output directory")->required();

  // fit-growth
  std::string f_in, f_spec = "M:inf:inf:0:0", f_csv;
  double f_t0 = 1.0, f_t1 = 50.0;
  int f_count = 50;
  auto* fit = app.add_subcommand("fit-growth", "Fit the free-evolution norm growth exponent");
  fit->add_option("--input", f_in, "Initial datum snapshot")->required();
  fit->add_option("--spec", f_spec, "Norm spec (kind M, r = 0)");
  fit->add_option("--t-min", f_t0, "First time");
  fit->add_option("--t-max", f_t1, "Last time");
  fit->add_option("--count", f_count, "Number of times");
  fit->add_option("--csv", f_csv, "Write the (t, norm, tail_fraction) series here");

  // smoothing-ratio
  std::string r_in;
  double r_p = kInf, r_q = 1.0, r_s = 1.0, r_gamma = -1.0, r_t0 = 1.5, r_t1 = 50.0;
  int r_count = 25;
  auto* smooth = app.add_subcommand("smoothing-ratio", "Smoothing-estimate ratio series as CSV");
  smooth->add_option("--input", r_in, "Initial datum snapshot")->required();
  smooth->add_option("--p", r_p, "Exponent p ('inf' allowed)");
  smooth->add_option("--q", r_q, "Exponent q");
  smooth->add_option("--s", r_s, "Smoothness order s");
  smooth->add_option("--gamma", r_gamma, "Exponent gamma (default d|1/2 - 1/p|)");
  smooth->add_option("--t-min", r_t0, "First time (> 1)");
  smooth->add_option("--t-max", r_t1, "Last time");
  smooth->add_option("--count", r_count, "Number of times");

  // run-suite
  std::string u_cfg, u_out = "suite-out";
  auto* suite = app.add_subcommand("run-suite", "Run an experiment suite file");
  suite->add_option("--config", u_cfg, "Suite file")->required();
  suite->add_option("--out", u_out, "Output directory (overrides [suite] output)");

  // helpers producing inputs
  int m_dim = 1, m_nodes = 256, m_seed = 1;
  double m_period = 32.0, m_mass = 1.0, m_amp = 1.0, m_width = 1.0;
  std::string m_kind = "gaussian", m_out;
  auto* make_field = app.add_subcommand("make-field", "Write a Gaussian or random-packet field snapshot");
  make_field->add_option("--dim", m_dim, "Spatial dimension");
  make_field->add_option("--nodes", m_nodes, "Nodes per axis (power of two)");
  make_field->add_option("--period", m_period, "Period L");
  make_field->add_option("--mass", m_mass, "Mass")->check(CLI::NonNegativeNumber);
  make_field->add_option("--kind", m_kind, "gaussian or random")->check(CLI::IsMember({"gaussian", "random"}));
  make_field->add_option("--amplitude", m_amp, "Amplitude");
  make_field->add_option("--width", m_width, "Gaussian width");
  make_field->add_option("--seed", m_seed, "Seed for random fields");
  make_field->add_option("--output", m_out, "Output snapshot")->required();

  std::string p_like, p_out;
  double p_strength = 0.5;
  auto* make_pot = app.add_subcommand("make-potential", "Write a smooth Hermitian matrix potential matching a field");
  make_pot->add_option("--like", p_like, "Field snapshot fixing lattice and spinor dimension")->required();
  make_pot->add_option("--strength", p_strength, "Amplitude");
  make_pot->add_option("--output", p_out, "Output snapshot")->required();

  std::string y_like, y_kind = "smooth", y_out;
  double y_strength = 0.5;
  auto* make_sym = app.add_subcommand("make-symbol", "Write a Weyl symbol snapshot matching a field (d = 1)");
  make_sym->add_option("--like", y_like, "Field snapshot fixing lattice and spinor dimension")->required();
  make_sym->add_option("--kind", y_kind, "identity or smooth")->check(CLI::IsMember({"identity", "smooth"}));
  make_sym->add_option("--strength", y_strength, "Amplitude of the smooth symbol");
  make_sym->add_option("--output", y_out, "Output snapshot")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is an input error
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    if (*clifford) return cmd_clifford(c_dim, c_mass, c_tol);

    if (*evolve) {
      SpinorField f = load_field(e_in, e_mass);
      if (f.lattice().dim() != e_dim) throw std::invalid_argument("evolve: --dim does not match the snapshot");
      MultiplierCache cache;
      for (int i = 0; i < e_steps; ++i) f = evolve_free(f, e_t / e_steps, cache);
      write_snapshot(e_out, to_snapshot(f));
      print_json({{"t", e_t}, {"steps", e_steps}, {"l2_norm", f.l2_norm()}});
      return 0;
    }

    if (*disp) {
      const SpinorField f = load_field(k_in, k_mass);
      if (f.lattice().dim() != k_dim) throw std::invalid_argument("dispersion-check: --dim does not match the snapshot");
      const auto res = dispersion_residuals(f, evolve_free(f, k_t), k_t);
      double worst = 0.0;
      for (int j = 0; j < k_dim; ++j) std::cout << 'k' << j << ',';
      std::cout << "residual\n";
      for (const auto& r : res) {
        for (int k : r.index) std::cout << k << ',';
        std::cout << format_g17(r.residual) << '\n';
        worst = std::max(worst, r.residual);
      }
      return worst < k_tol ? 0 : kExitTolerance;
    }

    if (*norm) {
      const SpinorField f = load_field(n_in);
      const NormSpec spec = NormSpec::parse(n_spec);
      NormResult r;
      if (n_method == "direct") {
        r = modulation_norm(f, spec, Window::gaussian(f.lattice(), n_width));
      } else {
        r = uniform_decomposition_norm(f, spec, build_bupu(spec.kind == 'M' ? f.lattice().dual() : f.lattice()));
      }
      print_json({{"value", r.value}, {"tail_fraction", r.tail_fraction}, {"tail_flag", r.tail_flag}, {"method", n_method},
                  {"spec", spec.str()}});
      return 0;
    }

    if (*weyl) {
      const PhaseSpaceArray sigma = symbol_from_snapshot(read_snapshot(w_sym));
      const SpinorField f = load_field(w_in);
      if (!f.lattice().same_as(sigma.positions) || f.components() != sigma.n) {
        throw std::invalid_argument("weyl-apply: symbol and field do not match");
      }
      const SpinorField g = apply_operator(quantize(sigma), f);
      if (!w_out.empty()) write_snapshot(w_out, to_snapshot(g));
      print_json({{"l2_in", f.l2_norm()}, {"l2_out", g.l2_norm()}});
      return 0;
    }

    if (*solve) {
      const SpinorField psi0 = load_field(s_in);
      const EvolutionConfig cfg{s_T, s_dt, s_tol, s_iter};
      std::filesystem::create_directories(s_out);
      const bool has_pot = s_pot != "none";
      const NonlinearitySpec nl = detail::parse_nonlinearity(s_nl);
      if (has_pot && nl.kind != NonlinearityKind::Zero) {
        throw std::invalid_argument("solve: combine either a potential or a nonlinearity, not both");
      }
      Trajectory traj;
      json cert;
      if (nl.kind != NonlinearityKind::Zero) {
        NonlinearSolution sol = solve_nonlinear(psi0, nl, cfg);
        traj = std::move(sol.trajectory);
        const auto& c = sol.certificate;
        cert = {{"contraction_factors", c.contraction_factors},
                {"residuals", c.residuals},
                {"horizon_used", c.horizon_used},
                {"restarts", c.restarts},
                {"iterations", c.iterations},
                {"x_norm", c.x_norm},
                {"x_increments", c.x_increments},
                {"l2_increments", c.l2_increments}};
      } else {
        Potential v = Potential::none();
        if (s_pot.rfind("mult:", 0) == 0) {
          v = Potential::multiplication(matrix_field_from_snapshot(read_snapshot(s_pot.substr(5))));
        } else if (s_pot.rfind("weyl:", 0) == 0) {
          v = Potential::weyl(symbol_from_snapshot(read_snapshot(s_pot.substr(5))));
        } else if (has_pot) {
          throw std::invalid_argument("solve: --potential must be none, mult:file or weyl:file");
        }
        LinearSolution sol = solve_linear(psi0, v, cfg);
        traj = std::move(sol.trajectory);
        cert = {{"contraction_factors", json::array()},
                {"increments", sol.increments},
                {"residuals", sol.residuals},
                {"horizon_used", traj.times.back()},
                {"iterations", sol.iterations}};
      }
      const std::size_t last = traj.states.size() - 1;
      for (std::size_t i = 0; i <= last; ++i) {
        const bool keep = i == last || (s_every > 0 && i % static_cast<std::size_t>(s_every) == 0);
        if (!keep) continue;
        char name[32];
        std::snprintf(name, sizeof name, "state_%06zu.bin", i);
        write_snapshot((std::filesystem::path(s_out) / name).string(), to_snapshot(traj.states[i]));
      }
      {
        std::ofstream out(std::filesystem::path(s_out) / "trajectory.csv");
        out << "t,l2_norm\n";
        for (std::size_t i = 0; i <= last; ++i) out << format_g17(traj.times[i]) << ',' << format_g17(traj.states[i].l2_norm()) << '\n';
      }
      std::ofstream(std::filesystem::path(s_out) / "certificate.json") << cert.dump(2) << '\n';
      print_json(cert);
      return 0;
    }

    if (*fit) {
      const SpinorField psi0 = load_field(f_in);
      try {
        const GrowthFit g = fit_growth_exponent(psi0, NormSpec::parse(f_spec), time_grid(f_t0, f_t1, f_count));
        if (!f_csv.empty()) {
          std::vector<SeriesRow> rows;
          for (std::size_t i = 0; i < g.times.size(); ++i) rows.push_back({g.times[i], g.norms[i], g.tail_fractions[i]});
          write_series_csv(f_csv, rows);
        }
        print_json({{"slope", g.slope}, {"slope_stderr", g.slope_stderr}, {"intercept", g.intercept}, {"r_squared", g.r_squared}});
        return 0;
      } catch (const FitAborted& e) {
        print_json({{"aborted", true}, {"reason", e.what()}, {"time", e.time}, {"tail_fraction", e.tail_fraction}});
        return kExitAborted;
      }
    }

    if (*smooth) {
      const SpinorField psi0 = load_field(r_in);
      const double d = psi0.lattice().dim();
      const double gamma = r_gamma >= 0.0 ? r_gamma : d * std::abs(0.5 - (std::isinf(r_p) ? 0.0 : 1.0 / r_p));
      const auto s = smoothing_ratio(psi0, r_p, r_q, r_s, gamma, time_grid(r_t0, r_t1, r_count));
      if (s.degenerate) {
        std::cerr << "degenerate datum: ratio undefined\n";
        return 0;
      }
      std::cout << "t,ratio,tail_fraction\n";
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        std::cout << format_g17(s.times[i]) << ',' << format_g17(s.ratios[i]) << ',' << format_g17(s.tail_fractions[i]) << '\n';
      }
      return 0;
    }

    if (*suite) {
      std::ifstream in(u_cfg);
      if (!in) throw std::invalid_argument("cannot open " + u_cfg);
      const SuiteConfig cfg = parse_suite(in);
      std::string dir = u_out;
      if (!suite->count("--out") && cfg.suite.count("output")) dir = cfg.suite.at("output");
      const auto reports = run_suite(cfg);
      write_suite_output(dir, reports);
      bool ok = true;
      for (const auto& r : reports) {
        ok = ok && r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << ": " << r.message;
        if (r.sentinel_flag) std::cout << " [convergence sentinel drift " << r.sentinel_drift << "]";
        std::cout << '\n';
      }
      return ok ? 0 : kExitTolerance;
    }

    if (*make_field) {
      const Lattice lat(m_dim, m_nodes, m_period);
      auto set = std::make_shared<const DiracMatrixSet>(build_dirac_matrices(m_dim, m_mass));
      SpinorField f = m_kind == "gaussian" ? gaussian_datum(lat, set, m_amp, m_width)
                                           : random_packets(lat, set->spinor_dim, static_cast<std::uint64_t>(m_seed), 3, 2.0, 2.0, set);
      if (m_kind == "random") f *= m_amp;
      write_snapshot(m_out, to_snapshot(f));
      return 0;
    }

    if (*make_pot) {
      const SpinorField f = load_field(p_like);
      const int n = f.components();
      MatrixField v(f.lattice(), n);
      std::vector<double> x(f.lattice().dim());
      for (std::size_t i = 0; i < f.nodes(); ++i) {
        f.lattice().positions_of(i, x);
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        const double bump = p_strength * std::exp(-r2 / 4);
        auto m = v.node(i);
        for (int a = 0; a < n; ++a) m[a * n + a] = bump * (a % 2 ? -0.5 : 1.0);
        if (n >= 2) {
          m[1] = cplx{0.0, 0.3 * bump};
          m[n] = cplx{0.0, -0.3 * bump};
        }
      }
      write_snapshot(p_out, to_snapshot(v, f.dirac() ? f.dirac()->mass : 0.0));
      return 0;
    }

    if (*make_sym) {
      const SpinorField f = load_field(y_like);
      const int n = f.components();
      const PhaseSpaceArray sigma =
          make_symbol(f.lattice(), n, [&](std::span<const double> x, std::span<const double> xi, Eigen::MatrixXcd& m) {
            if (y_kind == "identity") {
              m.setIdentity();
              return;
            }
            const double b = y_strength * std::exp(-x[0] * x[0] / 4) / (1 + xi[0] * xi[0]);
            for (int a = 0; a < n; ++a) m(a, a) = b;
            if (n >= 2) {
              m(0, 1) = cplx{0.0, 0.5 * b};
              m(1, 0) = cplx{0.0, -0.5 * b};
            }
          });
      write_snapshot(y_out, to_snapshot(sigma, f.dirac() ? f.dirac()->mass : 0.0));
      return 0;
    }
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTolerance;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
