#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "alst/model.hpp"
#include "alst/optim.hpp"

namespace alst {

// Versioned binary container: model config, parameter tensors (name, shape,
// float64 little-endian), optimizer state, RNG state, epoch counter, plus the
// resolved run-config echo.
struct Checkpoint {
  AlstConfig config;
  AlstParams params;
  AdamState adam;
  bool has_adam = false;
  std::string rng_state;
  std::int64_t epoch = 0;
  std::string config_echo;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace alst
