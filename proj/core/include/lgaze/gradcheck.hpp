#pragma once

#include <cstdint>
#include <string>

#include "lgaze/neural.hpp"

namespace lgaze {

struct GradCheckConfig {
  Mode mode = Mode::Eval;
  int n_params = 1000;         // sampled parameter coordinates
  int batch = 8;               // random input columns
  double step = 1e-4;          // five-point stencil spacing
  double rel_floor = 1e-6;     // denominator floor for relative error
  bool perturb_buffers = true; // move batch-norm running statistics off the identity
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  int n_checked = 0;
  std::string worst_tensor;
};

// Compares backward() against a Richardson-extrapolated five-point difference of the mean
// angular loss on random inputs. The model's buffers are left unchanged.
GradCheckResult gradient_check(MlpModel model, const GradCheckConfig& cfg);

}  // namespace lgaze
