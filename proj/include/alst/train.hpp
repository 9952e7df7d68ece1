#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alst/checkpoint.hpp"
#include "alst/config.hpp"
#include "alst/data.hpp"
#include "alst/metrics.hpp"

namespace alst {

struct RunLog {
  struct Epoch {
    std::int64_t epoch = 0;
    double train_loss = 0.0;
    double lr = 0.0;  // at the last step of the epoch
    double wall_seconds = 0.0;
    std::int64_t steps = 0;
  };
  struct Eval {
    std::int64_t epoch = 0;
    MetricReport report;  // regression branch
  };
  std::vector<Epoch> epochs;
  std::vector<Eval> evals;
  std::vector<double> step_lrs;  // full per-step lr trace
  std::string checkpoint_path;

  // One JSON record per line. Wall times are only serialized when asked:
  // deterministic output trees are the default contract.
  std::string to_jsonl(bool include_timing = false) const;
};

struct TrainResult {
  Checkpoint checkpoint;
  RunLog log;
};

// The full recipe: epochs x shuffled patient batches of forward -> combined
// loss -> backward -> Adam with the warmup/decay schedule. The last epoch's
// parameters are the result. Deterministic in (config, manifest contents).
// Non-finite losses abort with epoch/batch context (NumericError).
TrainResult train_model(const CohortManifest& train_manifest, const TrainConfig& cfg,
                        const CohortManifest* eval_manifest = nullptr,
                        const std::string& config_echo = "");

// Forward the manifest through a checkpoint and compute the metric suite for
// one output branch.
MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const CohortManifest& manifest,
                                 Branch branch);
std::vector<UttPrediction> checkpoint_predictions(const Checkpoint& ckpt,
                                                  const CohortManifest& manifest);

}  // namespace alst
