#pragma once

#include <cstddef>
#include <vector>

#include "mbrlab/tensor.hpp"

namespace mbrlab {

struct RmsPropConfig {
  double lr = 1e-4;
  double alpha = 0.99;
  double eps = 1e-8;
};

// RMSProp without momentum. State is keyed by parameter order, so the same
// parameter list must be passed on every step.
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig cfg) : cfg_(cfg) {}
  const RmsPropConfig& config() const { return cfg_; }

  // lr_scale multiplies the base learning rate (warmup schedule).
  void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
            double lr_scale);

 private:
  RmsPropConfig cfg_;
  std::vector<Tensor> sq_avg_;
};

// Linear warmup to 1.0 over `warmup` steps; `step` is 0-based.
double warmup_scale(std::size_t step, std::size_t warmup);

}  // namespace mbrlab
