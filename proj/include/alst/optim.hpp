#pragma once

#include <cstdint>
#include <vector>

#include "alst/tensor.hpp"

namespace alst {

// Adam with bias correction. One state object covers a whole parameter list;
// moment buffers are aligned with the parameter order.
struct AdamState {
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  static AdamState init_like(const std::vector<const Tensor*>& params, double beta1 = 0.9,
                             double beta2 = 0.999, double epsilon = 1e-8);
};

// In-place update of every parameter. Refuses the step (NumericError) if any
// gradient is non-finite.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr);

// Linear warmup over optimizer steps, multiplicative decay on epoch
// boundaries: lr = base * min(1,(step+1)/warmup) * rate^(floor((epoch-start)/step_epochs)+1)
// once epoch >= decay_start_epoch.
struct LrSchedule {
  double base_lr = 1e-4;
  std::int64_t warmup_steps = 100;
  std::int64_t decay_start_epoch = 20;
  std::int64_t decay_step_epochs = 5;
  double decay_rate = 0.5;
};

double lr_at(const LrSchedule& s, std::int64_t global_step, std::int64_t epoch);

}  // namespace alst
