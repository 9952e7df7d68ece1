#include "alst/optim.hpp"

#include <cmath>

#include "alst/errors.hpp"
#include "alst/kernels.hpp"

namespace alst {

AdamState AdamState::init_like(const std::vector<const Tensor*>& params, double beta1,
                               double beta2, double epsilon) {
  AdamState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const Tensor* p : params) {
    s.first_moment.emplace_back(p->shape());
    s.second_moment.emplace_back(p->shape());
  }
  return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw ContractError("adam_step: parameter/gradient/state count mismatch");
  if (lr <= 0.0) throw ContractError("adam_step: lr must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]))
      throw ContractError("adam_step: parameter/gradient shape mismatch at index " +
                          std::to_string(i));
    if (!grads[i]->all_finite())
      throw NumericError("adam_step: non-finite gradient at parameter index " +
                         std::to_string(i) + ", step refused");
  }
  const auto t = static_cast<double>(state.step_count + 1);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    kernels::adam_update(params[i]->data(), grads[i]->data(), state.first_moment[i].data(),
                         state.second_moment[i].data(), params[i]->size(), lr, state.beta1,
                         state.beta2, state.epsilon, bc1, bc2);
  }
  ++state.step_count;
}

double lr_at(const LrSchedule& s, std::int64_t global_step, std::int64_t epoch) {
  if (global_step < 0 || epoch < 0) throw ContractError("lr_at: negative step or epoch");
  double warm = 1.0;
  if (s.warmup_steps > 0)
    warm = std::min(1.0, static_cast<double>(global_step + 1) / static_cast<double>(s.warmup_steps));
  double decay = 1.0;
  if (epoch >= s.decay_start_epoch) {
    const std::int64_t k = (epoch - s.decay_start_epoch) / s.decay_step_epochs + 1;
    decay = std::pow(s.decay_rate, static_cast<double>(k));
  }
  return s.base_lr * warm * decay;
}

}  // namespace alst
