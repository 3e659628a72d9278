#ifndef LOGITDYN_OPTIM_H_
#define LOGITDYN_OPTIM_H_

#include <cstddef>
#include <span>
#include <vector>

namespace logitdyn {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

// AdamW with decoupled weight decay:
//   theta -= lr * wd * theta
//   theta -= lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  AdamW(std::size_t n_params, AdamWConfig cfg);

  void Step(std::span<double> params, std::span<const double> grads);
  std::size_t steps() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t step_ = 0;
};

}  // namespace logitdyn

#endif  // LOGITDYN_OPTIM_H_
