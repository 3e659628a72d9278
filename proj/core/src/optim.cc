#include "logitdyn/optim.h"

#include <cmath>

#include "logitdyn/errors.h"

namespace logitdyn {

AdamW::AdamW(std::size_t n_params, AdamWConfig cfg)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {
  if (!(cfg_.learning_rate > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(cfg_.weight_decay >= 0.0)) {
    throw ConfigError("weight decay must be non-negative");
  }
}

void AdamW::Step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DataError("AdamW parameter/gradient size mismatch");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  const double lr = cfg_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr * cfg_.weight_decay * params[i];
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
  }
}

}  // namespace logitdyn
