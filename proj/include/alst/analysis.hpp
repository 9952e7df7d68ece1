#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alst/checkpoint.hpp"
#include "alst/config.hpp"
#include "alst/metrics.hpp"
#include "alst/train.hpp"

namespace alst {

// ---- sweeps ----

struct SweepCell {
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  MetricReport regression;
  MetricReport classification;
  bool from_cache = false;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::size_t cache_hits = 0;
  std::size_t trained = 0;
  std::string raw_csv() const;
  std::string summary_csv() const;  // mean +- sd over seeds per (value, branch, metric)
};

// Trains one model per (value, seed) with the axis field overridden on the
// base config, evaluating both branches on the test manifest. Cells are
// cached under out_dir/cells/<content-hash>; completed cells are not re-run.
SweepResult run_sweep(const RunConfig& base, const std::filesystem::path& out_dir);

// ---- phoneme importance ----

enum class SegmentPolicy { first, longest, all, keep_all };
const char* to_string(SegmentPolicy p);
SegmentPolicy segment_policy_from(const std::string& s);

struct PhonemeImportance {
  struct Entry {
    std::string label;  // merged buckets join labels with '+'
    double macro_f1 = 0.0;
    std::size_t utterances = 0;
  };
  std::vector<Entry> entries;  // sorted by macro_f1 descending
  std::string policy;
  std::string to_csv() const;
};

// For every phoneme bucket: keep one segment of it per utterance (policy),
// zero-mask the rest of that utterance's frames, score the patient sequence,
// and pool macro F1 over all utterances containing the phoneme. AH0/UW0 are
// merged into one bucket.
PhonemeImportance phoneme_importance(const Checkpoint& ckpt, const CohortManifest& manifest,
                                     SegmentPolicy policy, Branch branch = Branch::regression);

// ---- linear baseline ----

struct LinearBaselineConfig {
  double l2 = 1e-3;
  double lr = 0.1;
  int iterations = 500;
  std::uint64_t seed = 0;
};

// One-vs-rest linear classifiers on per-utterance mean frame features,
// trained by full-batch hinge-loss gradient descent on standardized inputs.
// No longitudinal context: every utterance is scored independently.
MetricReport linear_baseline(const CohortManifest& train_manifest,
                             const CohortManifest& test_manifest,
                             const LinearBaselineConfig& cfg,
                             Branch branch = Branch::classification);

// ---- report artifacts ----

// 5x5 counts plus row-normalized rates as CSV (rows: true class).
void emit_confusion(const MetricReport& report, const std::filesystem::path& path);

// Merge labeled reports into one comparison CSV.
std::string merge_reports_csv(const std::vector<std::pair<std::string, MetricReport>>& reports);

// Rebuild the scalar fields of a report from its JSON (sweep cache path).
MetricReport metric_report_from_json(const std::string& text);

}  // namespace alst
