#pragma once

// Binary snapshot format (all fields little-endian):
//
//   offset  size  field
//   0       8     magic "TFDFIELD"
//   8       4     u32 version (= 1)
//   12      4     u32 layout: 0 spinor field, 1 matrix field, 2 matrix symbol
//   16      4     u32 d (spatial dimension)
//   20      4     u32 N (nodes per axis)
//   24      8     f64 L (spatial period)
//   32      4     u32 n (spinor dimension)
//   36      8     f64 m (mass)
//   44      ...   f64 re, f64 im pairs
//
// Values are row-major over nodes with components fastest.  Layout 0 stores n
// values per node on the d-dimensional lattice; layout 1 stores n*n (row-major
// matrix) per node on the same lattice; layout 2 stores n*n per node on the
// 2d-dimensional phase-space lattice whose first d axes have period L and last
// d axes period N/L.

#include "tfdirac/clifford.hpp"
#include "tfdirac/lattice.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfdirac {

enum class SnapshotLayout : std::uint32_t { Spinor = 0, Matrix = 1, Symbol = 2 };

struct SnapshotHeader {
  std::uint32_t version = 1;
  SnapshotLayout layout = SnapshotLayout::Spinor;
  std::uint32_t dim = 0;
  std::uint32_t nodes = 0;
  double period = 0.0;
  std::uint32_t spinor_dim = 0;
  double mass = 0.0;
};

/// Raw snapshot: header plus flat values.
struct Snapshot {
  SnapshotHeader header;
  std::vector<cplx> values;

  Lattice spatial_lattice() const { return Lattice(static_cast<int>(header.dim), static_cast<int>(header.nodes), header.period); }

  std::size_t expected_values() const {
    std::size_t nodes = 1;
    const std::uint32_t axes = header.layout == SnapshotLayout::Symbol ? 2 * header.dim : header.dim;
    for (std::uint32_t j = 0; j < axes; ++j) nodes *= header.nodes;
    const std::size_t per = header.layout == SnapshotLayout::Spinor
                                ? header.spinor_dim
                                : static_cast<std::size_t>(header.spinor_dim) * header.spinor_dim;
    return nodes * per;
  }
};

inline constexpr std::array<char, 8> kSnapshotMagic{'T', 'F', 'D', 'F', 'I', 'E', 'L', 'D'};

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& buf, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <class T>
T get_le(const unsigned char*& p, const unsigned char* end) {
  if (end - p < static_cast<std::ptrdiff_t>(sizeof(T))) throw std::runtime_error("snapshot: truncated file");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  p += sizeof(T);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const Snapshot& s) {
  if (s.values.size() != s.expected_values()) throw std::invalid_argument("snapshot: value count does not match header");
  std::vector<unsigned char> buf(kSnapshotMagic.begin(), kSnapshotMagic.end());
  buf.reserve(44 + 16 * s.values.size());
  detail::put_le(buf, s.header.version);
  detail::put_le(buf, static_cast<std::uint32_t>(s.header.layout));
  detail::put_le(buf, s.header.dim);
  detail::put_le(buf, s.header.nodes);
  detail::put_le(buf, s.header.period);
  detail::put_le(buf, s.header.spinor_dim);
  detail::put_le(buf, s.header.mass);
  for (const auto& v : s.values) {
    detail::put_le(buf, v.real());
    detail::put_le(buf, v.imag());
  }
  return buf;
}

inline Snapshot decode_snapshot(const std::vector<unsigned char>& buf) {
  if (buf.size() < 44 || !std::equal(kSnapshotMagic.begin(), kSnapshotMagic.end(), buf.begin())) {
    throw std::runtime_error("snapshot: bad magic");
  }
  const unsigned char* p = buf.data() + 8;
  const unsigned char* end = buf.data() + buf.size();
  Snapshot s;
  s.header.version = detail::get_le<std::uint32_t>(p, end);
  if (s.header.version != 1) throw std::runtime_error("snapshot: unsupported version " + std::to_string(s.header.version));
  const auto layout = detail::get_le<std::uint32_t>(p, end);
  if (layout > 2) throw std::runtime_error("snapshot: unknown layout " + std::to_string(layout));
  s.header.layout = static_cast<SnapshotLayout>(layout);
  s.header.dim = detail::get_le<std::uint32_t>(p, end);
  s.header.nodes = detail::get_le<std::uint32_t>(p, end);
  s.header.period = detail::get_le<double>(p, end);
  s.header.spinor_dim = detail::get_le<std::uint32_t>(p, end);
  s.header.mass = detail::get_le<double>(p, end);
  if (s.header.dim < 1 || s.header.dim > 8 || s.header.nodes < 2 || s.header.spinor_dim < 1) {
    throw std::runtime_error("snapshot: implausible header");
  }
  const std::size_t count = s.expected_values();
  if (static_cast<std::size_t>(end - p) != 16 * count) throw std::runtime_error("snapshot: payload size does not match header");
  s.values.resize(count);
  for (auto& v : s.values) {
    const double re = detail::get_le<double>(p, end);
    const double im = detail::get_le<double>(p, end);
    v = {re, im};
  }
  return s;
}

inline void write_snapshot(const std::string& path, const Snapshot& s) {
  const auto buf = encode_snapshot(s);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(buf);
}

/// Spinor snapshot of a field on an isotropic lattice.
inline Snapshot to_snapshot(const SpinorField& f) {
  const Lattice& lat = f.lattice();
  for (int j = 1; j < lat.dim(); ++j) {
    if (lat.period(j) != lat.period(0)) throw std::invalid_argument("snapshot: lattice must be isotropic");
  }
  Snapshot s;
  s.header.layout = SnapshotLayout::Spinor;
  s.header.dim = static_cast<std::uint32_t>(lat.dim());
  s.header.nodes = static_cast<std::uint32_t>(lat.nodes_per_axis());
  s.header.period = lat.period(0);
  s.header.spinor_dim = static_cast<std::uint32_t>(f.components());
  s.header.mass = f.dirac() ? f.dirac()->mass : 0.0;
  s.values.assign(f.values().begin(), f.values().end());
  return s;
}

/// Rebuilds a spinor field; the Dirac matrices are regenerated from (d, m)
/// when n matches the default construction.
inline SpinorField field_from_snapshot(const Snapshot& s) {
  if (s.header.layout != SnapshotLayout::Spinor) throw std::runtime_error("snapshot: not a spinor field");
  const int d = static_cast<int>(s.header.dim);
  std::shared_ptr<const DiracMatrixSet> set;
  if (static_cast<int>(s.header.spinor_dim) == spinor_dimension(d)) {
    set = std::make_shared<const DiracMatrixSet>(build_dirac_matrices(d, s.header.mass));
  }
  SpinorField f(s.spatial_lattice(), static_cast<int>(s.header.spinor_dim), set);
  std::copy(s.values.begin(), s.values.end(), f.values().begin());
  return f;
}

inline Snapshot to_snapshot(const MatrixField& v, double mass = 0.0) {
  Snapshot s;
  s.header.layout = SnapshotLayout::Matrix;
  s.header.dim = static_cast<std::uint32_t>(v.lattice.dim());
  s.header.nodes = static_cast<std::uint32_t>(v.lattice.nodes_per_axis());
  s.header.period = v.lattice.period(0);
  s.header.spinor_dim = static_cast<std::uint32_t>(v.n);
  s.header.mass = mass;
  s.values = v.values;
  return s;
}

inline MatrixField matrix_field_from_snapshot(const Snapshot& s) {
  if (s.header.layout != SnapshotLayout::Matrix) throw std::runtime_error("snapshot: not a matrix field");
  MatrixField v(s.spatial_lattice(), static_cast<int>(s.header.spinor_dim));
  v.values = s.values;
  return v;
}

}  // namespace tfdirac
