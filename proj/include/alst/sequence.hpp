#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alst/data.hpp"
#include "alst/tensor.hpp"

namespace alst {

enum class PoolingMode { utterance, phoneme };

// Mean of the frames inside each [start, end) segment; one output row per
// segment (Eq-level phoneme pooling; a single whole-utterance segment gives
// utterance pooling). utterance_id is only for error context.
Tensor pool_segments(const FeatureMatrix& frames,
                     const std::vector<std::pair<std::size_t, std::size_t>>& bounds,
                     const std::string& utterance_id);

// One patient's recordings in date order, flattened to the token level.
struct PatientSequence {
  std::string patient_id;
  Tensor tokens;  // [T, input_dim]
  std::vector<std::int64_t> phoneme_ids;  // [T]; -1 when there is no alignment token identity
  std::vector<std::int64_t> within_pos;   // [T] token index within its utterance
  std::vector<int> utt_of_token;          // [T]
  // per utterance:
  std::vector<std::string> utterance_ids;
  std::vector<std::int64_t> date_days;
  std::vector<std::int64_t> date_rank;  // rank of the date within the patient
  std::vector<int> scores;

  std::size_t num_tokens() const { return utt_of_token.size(); }
  std::size_t num_utterances() const { return scores.size(); }
};

// Builds PatientSequence objects from manifest records: loads features, pools
// them per the mode, and maps phonemes through a fixed vocabulary.
class SequenceBuilder {
 public:
  SequenceBuilder(PoolingMode mode, std::vector<std::string> vocab,
                  std::filesystem::path base_dir);

  PatientSequence build(const PatientRecords& patient) const;
  std::vector<PatientSequence> build_all(const CohortManifest& manifest) const;

  // Same, but with one utterance's features substituted (phoneme-importance
  // masking path).
  PatientSequence build_with_features(const PatientRecords& patient,
                                      const std::vector<FeatureMatrix>& features) const;

  std::int64_t phoneme_id(const std::string& label) const;  // -1 if unknown
  PoolingMode mode() const { return mode_; }

 private:
  PoolingMode mode_;
  std::vector<std::string> vocab_;
  std::filesystem::path base_dir_;
};

// One training batch: up to batch_size patients, padded—by contract—to the
// longest token length; keep marks real tokens.
struct PatientBatch {
  std::vector<const PatientSequence*> sequences;
  std::size_t max_tokens = 0;
  std::vector<std::uint8_t> keep_row(std::size_t i) const {
    std::vector<std::uint8_t> k(max_tokens, 0);
    for (std::size_t t = 0; t < sequences[i]->num_tokens(); ++t) k[t] = 1;
    return k;
  }
};

// Deterministic epoch batching: every patient exactly once per epoch, order
// shuffled by (seed, epoch).
std::vector<PatientBatch> batch_patients(const std::vector<PatientSequence>& sequences,
                                         std::size_t batch_size, std::uint64_t seed,
                                         std::int64_t epoch);

}  // namespace alst
