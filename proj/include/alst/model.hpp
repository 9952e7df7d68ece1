#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "alst/autodiff.hpp"
#include "alst/rng.hpp"
#include "alst/sequence.hpp"
#include "alst/tensor.hpp"

namespace alst {

enum class PositionMode {
  none,                 // every utterance encoded as its own sequence
  longitudinal_no_pos,  // whole patient sequence, no positional embeddings
  order_trainable,
  order_sinusoid,
  day_sinusoid,
  day_trainable,
};

enum class Branch { regression, classification };

struct AlstConfig {
  int input_dim = 1024;
  int hidden_dim = 512;
  int num_layers = 2;
  int num_heads = 1;  // only single-head is supported; kept for config generality
  int ffn_dim = 2048;
  int num_classes = 5;
  PoolingMode pooling_mode = PoolingMode::utterance;
  PositionMode position_mode = PositionMode::longitudinal_no_pos;
  double lambda_ce = 1.0;
  int max_order = 64;          // date-rank embedding rows; larger ranks clamp
  int day_bucket_size = 30;    // days per trainable day-embedding bucket
  int day_bucket_cap = 120;    // trainable day-embedding rows
  int max_token_position = 256;  // within-utterance position rows
  double dropout = 0.0;
  std::vector<std::string> phoneme_vocab;  // sorted

  void validate() const;
};

// All trainable tensors, in a fixed creation order that doubles as the
// optimizer and serialization order.
class AlstParams {
 public:
  static AlstParams init(const AlstConfig& cfg, std::uint64_t seed);

  Tensor& p(const std::string& name);
  const Tensor& p(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  Tensor& tensor(std::size_t i) { return entries_[i].second; }
  const Tensor& tensor(std::size_t i) const { return entries_[i].second; }
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::int64_t parameter_count() const;

  Tensor& add(const std::string& name, std::vector<std::size_t> shape);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Per-tape leaf vars for every parameter, aligned with AlstParams order.
struct BoundParams {
  std::vector<Var> vars;
  std::unordered_map<std::string, std::size_t> index;
  const Var& v(const std::string& name) const;
};
BoundParams bind_params(Tape& tape, const AlstParams& params);

// Counters for clamped embedding indices (diagnostics, not errors).
struct ForwardStats {
  std::uint64_t order_rank_clamped = 0;
  std::uint64_t day_bucket_clamped = 0;
  std::uint64_t within_pos_clamped = 0;
};

// Token-level view of (part of) a patient sequence, optionally padded.
struct TokenInput {
  Tensor tokens;  // [T, input_dim]
  std::vector<std::uint8_t> keep;
  std::vector<std::int64_t> phoneme_ids;
  std::vector<std::int64_t> within_pos;
  std::vector<std::vector<std::size_t>> utt_groups;  // real token indices per utterance
  std::vector<std::int64_t> utt_rank;
  std::vector<std::int64_t> utt_day;
  std::vector<int> scores;
};
TokenInput token_input_from(const PatientSequence& seq, std::size_t pad_to = 0);
TokenInput token_input_for_utterance(const PatientSequence& seq, std::size_t u);

// Differentiable forward over one token input: projection + positional
// embeddings + transformer blocks + output projection + phoneme/generic
// embedding + utterance mean pooling + dual-head scorer.
struct HeadOutput {
  Var y_hat;  // [U, 1]
  Var p_hat;  // [U, num_classes]
};
HeadOutput forward_tokens(Tape& tape, const BoundParams& bp, const AlstConfig& cfg,
                          const TokenInput& in, ForwardStats* stats = nullptr,
                          Rng* dropout_rng = nullptr);

// Mode-aware scoring of a whole patient sequence (position_mode none splits
// into per-utterance forwards).
struct SequenceOutput {
  std::vector<HeadOutput> chunks;
  std::vector<int> scores;  // all utterances, chunk order
};
SequenceOutput score_sequence(Tape& tape, const BoundParams& bp, const AlstConfig& cfg,
                              const PatientSequence& seq, ForwardStats* stats = nullptr,
                              Rng* dropout_rng = nullptr);

// Mean over all utterances in the batch of (y_hat - y)^2 + lambda_ce * CE.
Var batch_loss(Tape& tape, const std::vector<SequenceOutput>& outputs, double lambda_ce);

// Inference result per utterance.
struct UttPrediction {
  std::string patient_id;
  std::string utterance_id;
  std::int64_t date_days = 0;
  int true_score = 0;
  double y_hat = 0.0;
  std::array<double, 5> p_hat{};
};
std::vector<UttPrediction> predict_sequences(const AlstParams& params, const AlstConfig& cfg,
                                             const std::vector<PatientSequence>& seqs,
                                             ForwardStats* stats = nullptr);

// classification: argmax p_hat (ties toward the lower class);
// regression: round(y_hat) clamped to [0, 4].
int predict_class(const UttPrediction& pred, Branch branch);

// Fixed [0,1,0,1,...] -style sinusoidal encoding of an integer value.
void sinusoid_encoding(std::int64_t value, std::size_t dim, double* out);

}  // namespace alst
