#include "alst/sequence.hpp"

#include <algorithm>
#include <numeric>

#include "alst/errors.hpp"
#include "alst/rng.hpp"

namespace alst {

Tensor pool_segments(const FeatureMatrix& frames,
                     const std::vector<std::pair<std::size_t, std::size_t>>& bounds,
                     const std::string& utterance_id) {
  Tensor out({bounds.size(), frames.dim});
  std::size_t prev_end = 0;
  for (std::size_t s = 0; s < bounds.size(); ++s) {
    const auto [start, end] = bounds[s];
    if (start == end)
      throw DataError("pool_segments: empty segment " + std::to_string(s) + " in utterance " +
                      utterance_id);
    if (start > end || end > frames.frames || start < prev_end)
      throw ContractError("pool_segments: bad segment " + std::to_string(s) + " [" +
                          std::to_string(start) + "," + std::to_string(end) + ") in utterance " +
                          utterance_id);
    prev_end = end;
    double* row = out.data() + s * frames.dim;
    for (std::size_t f = start; f < end; ++f)
      for (std::size_t j = 0; j < frames.dim; ++j)
        row[j] += static_cast<double>(frames.at(f, j));
    const double inv = 1.0 / static_cast<double>(end - start);
    for (std::size_t j = 0; j < frames.dim; ++j) row[j] *= inv;
  }
  return out;
}

SequenceBuilder::SequenceBuilder(PoolingMode mode, std::vector<std::string> vocab,
                                 std::filesystem::path base_dir)
    : mode_(mode), vocab_(std::move(vocab)), base_dir_(std::move(base_dir)) {}

std::int64_t SequenceBuilder::phoneme_id(const std::string& label) const {
  auto it = std::lower_bound(vocab_.begin(), vocab_.end(), label);
  if (it == vocab_.end() || *it != label) return -1;
  return it - vocab_.begin();
}

PatientSequence SequenceBuilder::build(const PatientRecords& patient) const {
  std::vector<FeatureMatrix> features;
  features.reserve(patient.sessions.size());
  for (const auto& r : patient.sessions) features.push_back(read_feature_file(base_dir_ / r.feature_path));
  return build_with_features(patient, features);
}

PatientSequence SequenceBuilder::build_with_features(
    const PatientRecords& patient, const std::vector<FeatureMatrix>& features) const {
  if (features.size() != patient.sessions.size())
    throw ContractError("build_with_features: feature count mismatch");
  PatientSequence seq;
  seq.patient_id = patient.patient_id;

  std::vector<Tensor> pooled;
  std::vector<std::vector<std::int64_t>> ids;
  std::size_t total_tokens = 0, dim = 0;
  for (std::size_t u = 0; u < patient.sessions.size(); ++u) {
    const SessionRecord& r = patient.sessions[u];
    const FeatureMatrix& fm = features[u];
    std::vector<std::pair<std::size_t, std::size_t>> bounds;
    std::vector<std::int64_t> utt_ids;
    if (mode_ == PoolingMode::utterance) {
      bounds.emplace_back(0, fm.frames);
      utt_ids.push_back(-1);
    } else {
      if (r.alignment.empty())
        throw DataError("phoneme pooling requires an alignment: utterance " + r.utterance_id);
      for (const auto& seg : r.alignment) {
        bounds.emplace_back(seg.start_frame, seg.end_frame);
        const std::int64_t id = phoneme_id(seg.phoneme);
        if (id < 0)
          throw DataError("utterance " + r.utterance_id + ": phoneme '" + seg.phoneme +
                          "' not in the model vocabulary");
        utt_ids.push_back(id);
      }
    }
    Tensor t = pool_segments(fm, bounds, r.utterance_id);
    dim = t.cols();
    total_tokens += t.rows();
    pooled.push_back(std::move(t));
    ids.push_back(std::move(utt_ids));

    seq.utterance_ids.push_back(r.utterance_id);
    seq.date_days.push_back(r.date_days);
    seq.scores.push_back(r.score);
  }

  // date rank within the patient; ties keep session order
  std::vector<std::size_t> order(seq.date_days.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return seq.date_days[a] < seq.date_days[b]; });
  seq.date_rank.assign(order.size(), 0);
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    seq.date_rank[order[rank]] = static_cast<std::int64_t>(rank);

  seq.tokens = Tensor({total_tokens, dim});
  std::size_t t0 = 0;
  for (std::size_t u = 0; u < pooled.size(); ++u) {
    const Tensor& t = pooled[u];
    std::copy_n(t.data(), t.size(), seq.tokens.data() + t0 * dim);
    for (std::size_t j = 0; j < t.rows(); ++j) {
      seq.phoneme_ids.push_back(ids[u][j]);
      seq.within_pos.push_back(static_cast<std::int64_t>(j));
      seq.utt_of_token.push_back(static_cast<int>(u));
    }
    t0 += t.rows();
  }
  return seq;
}

std::vector<PatientSequence> SequenceBuilder::build_all(const CohortManifest& manifest) const {
  std::vector<PatientSequence> out;
  out.reserve(manifest.patients.size());
  for (const auto& p : manifest.patients) out.push_back(build(p));
  return out;
}

std::vector<PatientBatch> batch_patients(const std::vector<PatientSequence>& sequences,
                                         std::size_t batch_size, std::uint64_t seed,
                                         std::int64_t epoch) {
  if (batch_size < 1) throw ContractError("batch_patients: batch_size must be >= 1");
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, "batch/epoch/" + std::to_string(epoch));
  rng.shuffle(order);

  std::vector<PatientBatch> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    PatientBatch b;
    const std::size_t end = std::min(order.size(), at + batch_size);
    for (std::size_t i = at; i < end; ++i) {
      const PatientSequence* s = &sequences[order[i]];
      b.max_tokens = std::max(b.max_tokens, s->num_tokens());
      b.sequences.push_back(s);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace alst
