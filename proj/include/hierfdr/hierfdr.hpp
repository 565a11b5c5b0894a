#pragma once

#include "hierfdr/aux_regression.hpp"
#include "hierfdr/baselines.hpp"
#include "hierfdr/bench.hpp"
#include "hierfdr/beta_quadrature.hpp"
#include "hierfdr/dataset.hpp"
#include "hierfdr/matrix.hpp"
#include "hierfdr/methods.hpp"
#include "hierfdr/mlp.hpp"
#include "hierfdr/neural_prior.hpp"
#include "hierfdr/numerics.hpp"
#include "hierfdr/predictive_recursion.hpp"
#include "hierfdr/random.hpp"
#include "hierfdr/simulate.hpp"
#include "hierfdr/two_groups.hpp"

namespace hierfdr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hierfdr
