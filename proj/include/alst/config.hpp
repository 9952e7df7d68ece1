#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "alst/model.hpp"
#include "alst/synth.hpp"

namespace alst {

struct TrainConfig {
  AlstConfig model;
  int epochs = 100;
  int batch_size = 32;
  double base_lr = 1e-4;
  int warmup_steps = 100;
  int decay_start_epoch = 20;
  int decay_step_epochs = 5;
  double decay_rate = 0.5;
  std::uint64_t seed = 0;
  int eval_every = 0;     // 0: evaluate only at the end
  double grad_clip = 0.0; // 0: off
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct SweepSpecFile {
  std::string axis;  // lambda_ce | position_mode | layer | variant
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
  // layer axis only: value -> (train manifest, test manifest)
  std::map<std::string, std::pair<std::string, std::string>> layer_manifests;
};

struct PathsConfig {
  std::string train_manifest;
  std::string test_manifest;
};

// Mirrors the config file: [model], [train], [synth], [sweep], [paths].
struct RunConfig {
  TrainConfig train;
  SynthConfig synth;
  SweepSpecFile sweep;
  PathsConfig paths;
  std::string synth_transcript_path;  // loaded into synth.transcript
};

// Strict parser: unknown sections or keys are errors. Lines are
// `key = value`, comments start with '#'.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Full echo of every field in a stable order; parse(format(c)) == c.
std::string format_config(const RunConfig& cfg);

// One `section.key=value` override (CLI flags route through this).
void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

// [model] section alone; used inside checkpoints.
std::string format_model_config(const AlstConfig& cfg);
AlstConfig parse_model_config(const std::string& text);

const char* to_string(PositionMode mode);
const char* to_string(PoolingMode mode);
PositionMode position_mode_from(const std::string& s);
PoolingMode pooling_mode_from(const std::string& s);

}  // namespace alst
