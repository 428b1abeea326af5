#pragma once

#include "tfdirac/clifford.hpp"
#include "tfdirac/evolution.hpp"
#include "tfdirac/experiments.hpp"
#include "tfdirac/io.hpp"
#include "tfdirac/lattice.hpp"
#include "tfdirac/propagator.hpp"
#include "tfdirac/tfa.hpp"
#include "tfdirac/weyl.hpp"
