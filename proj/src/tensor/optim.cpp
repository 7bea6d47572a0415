#include "dmae/tensor/optim.hpp"

#include <cmath>

namespace dmae::tensor {

template <class T>
void AdamW<T>::step(ParamStore<T>& params) {
  for (const auto& e : params.entries()) {
    if (e.value.has_grad()) check_finite<T>(e.value.grad(), "gradient of " + e.name);
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const T lr = static_cast<T>(config_.lr);
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T eps = static_cast<T>(config_.eps);
  const T inv_bc1 = static_cast<T>(1.0 / bc1);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);
  const T decay_factor = static_cast<T>(1.0 - config_.lr * config_.weight_decay);

  for (auto& e : params.entries()) {
    auto data = e.value.mutable_data();
    auto& mom = moments_[e.name];
    if (mom.first.size() != data.size()) {
      mom.first.assign(data.size(), T(0));
      mom.second.assign(data.size(), T(0));
    }
    const bool has_grad = e.value.has_grad();
    const auto grad = e.value.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const T g = has_grad ? grad[i] : T(0);
      if (e.decay) data[i] *= decay_factor;
      mom.first[i] = b1 * mom.first[i] + (T(1) - b1) * g;
      mom.second[i] = b2 * mom.second[i] + (T(1) - b2) * g * g;
      const T mhat = mom.first[i] * inv_bc1;
      const T vhat = mom.second[i] * inv_bc2;
      data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <class T>
void AdamW<T>::restore(std::uint64_t step, std::unordered_map<std::string, Moments> moments) {
  step_ = step;
  moments_ = std::move(moments);
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace dmae::tensor
