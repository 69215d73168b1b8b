#include "mbrlab/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mbrlab {

void RmsProp::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                   double lr_scale) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("RmsProp::step: params/grads size mismatch");
  }
  if (sq_avg_.empty()) {
    sq_avg_.reserve(params.size());
    for (Tensor* p : params) sq_avg_.push_back(Tensor::zeros(p->shape));
  }
  if (sq_avg_.size() != params.size()) {
    throw std::invalid_argument("RmsProp::step: parameter list changed");
  }
  double lr = cfg_.lr * lr_scale;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& v = sq_avg_[i];
    if (!p.same_shape(g)) throw std::invalid_argument("RmsProp::step: grad shape mismatch");
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      double gk = g.data[k];
      v.data[k] = cfg_.alpha * v.data[k] + (1.0 - cfg_.alpha) * gk * gk;
      p.data[k] -= lr * gk / (std::sqrt(v.data[k]) + cfg_.eps);
    }
  }
}

double warmup_scale(std::size_t step, std::size_t warmup) {
  if (warmup == 0) return 1.0;
  double s = static_cast<double>(step + 1) / static_cast<double>(warmup);
  return s < 1.0 ? s : 1.0;
}

}  // namespace mbrlab
