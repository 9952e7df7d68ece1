#include "alst/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "alst/errors.hpp"
#include "alst/fileutil.hpp"
#include "alst/rng.hpp"

#include "json.hpp"

namespace alst {

namespace fs = std::filesystem;

std::vector<std::vector<std::string>> default_transcript() {
  // "I owe you a yoyo today"
  return {{"AY1"}, {"OW1"}, {"Y"}, {"UW1"}, {"AH0"}, {"Y"}, {"OW1"},
          {"Y"},   {"OW0"}, {"T"}, {"AH0", "UW0"},   {"D"}, {"EY1"}};
}

std::vector<std::vector<std::string>> parse_transcript(const std::string& text) {
  std::vector<std::vector<std::string>> slots;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string word;
    while (words >> word) {
      std::vector<std::string> variants;
      std::size_t pos = 0;
      while (pos <= word.size()) {
        std::size_t bar = word.find('|', pos);
        variants.push_back(
            word.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos));
        if (bar == std::string::npos) break;
        pos = bar + 1;
      }
      slots.push_back(std::move(variants));
    }
  }
  if (slots.empty()) throw DataError("transcript: no phoneme slots");
  return slots;
}

std::vector<std::vector<double>> synth_class_means(const SynthConfig& cfg) {
  const std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
  Rng rng = Rng::stream(cfg.seed, "synth/means");
  std::vector<std::vector<double>> means(5, std::vector<double>(d, 0.0));
  // Gram-Schmidt over Gaussian draws: orthonormal directions make every
  // pairwise class distance exactly class_separation.
  const bool orthogonalize = d >= 5;
  for (int c = 0; c < 5; ++c) {
    auto& v = means[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < d; ++j) v[j] = rng.normal();
    if (orthogonalize) {
      for (int prev = 0; prev < c; ++prev) {
        const auto& u = means[static_cast<std::size_t>(prev)];
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += v[j] * u[j];
        for (std::size_t j = 0; j < d; ++j) v[j] -= dot * u[j];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  const double scale = cfg.class_separation / std::sqrt(2.0);
  for (auto& v : means)
    for (double& x : v) x *= scale;
  return means;
}

CohortManifest synthesize_cohort(const SynthConfig& cfg, const fs::path& out_dir) {
  if (cfg.feature_dim < 2) throw ConfigError("synth: feature_dim must be >= 2");
  if (cfg.num_patients < 1) throw ConfigError("synth: num_patients must be >= 1");
  if (cfg.sessions_min < 1 || cfg.sessions_max < cfg.sessions_min)
    throw ConfigError("synth: bad sessions range");
  if (cfg.decline_hazard < 0.0 || cfg.decline_hazard > 1.0)
    throw ConfigError("synth: decline_hazard must be in [0,1]");
  double psum = 0.0;
  for (double p : cfg.baseline_score_distribution) psum += p;
  if (std::abs(psum - 1.0) > 1e-9)
    throw ConfigError("synth: baseline_score_distribution must sum to 1");
  if (cfg.min_segment_frames < 1 || cfg.max_segment_frames < cfg.min_segment_frames)
    throw ConfigError("synth: bad segment frame range");

  const auto transcript = cfg.transcript.empty() ? default_transcript() : cfg.transcript;
  const auto means = synth_class_means(cfg);
  const std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
  const std::set<std::string> signal_set(cfg.signal_phonemes.begin(), cfg.signal_phonemes.end());

  fs::create_directories(out_dir / "features");

  std::vector<SessionRecord> records;
  std::vector<double> gaps;
  double baseline_sum = 0.0;
  std::array<std::int64_t, 5> score_hist{};

  for (int p = 0; p < cfg.num_patients; ++p) {
    char pid[16];
    std::snprintf(pid, sizeof pid, "P%04d", p);
    Rng rng = Rng::stream(cfg.seed, std::string("synth/patient/") + pid);

    const int n_sessions =
        static_cast<int>(rng.uniform_int(cfg.sessions_min, cfg.sessions_max));
    const int baseline = static_cast<int>(rng.categorical(
        {cfg.baseline_score_distribution.begin(), cfg.baseline_score_distribution.end()}));
    baseline_sum += baseline;
    const int bias = cfg.rating_offset_max == 0
                         ? 0
                         : static_cast<int>(rng.uniform_int(-cfg.rating_offset_max,
                                                            cfg.rating_offset_max));
    std::vector<double> offset(d);
    for (std::size_t j = 0; j < d; ++j) offset[j] = cfg.patient_offset_scale * rng.normal();

    std::int64_t day = rng.uniform_int(30, 730);
    int severity = baseline;
    const auto gap_lo = std::max<std::int64_t>(1, std::llround(0.5 * cfg.mean_gap_days));
    const auto gap_hi = std::max<std::int64_t>(gap_lo, std::llround(1.5 * cfg.mean_gap_days));

    for (int s = 0; s < n_sessions; ++s) {
      if (s > 0) {
        const std::int64_t gap = rng.uniform_int(gap_lo, gap_hi);
        gaps.push_back(static_cast<double>(gap));
        day += gap;
        if (rng.uniform01() < cfg.decline_hazard) severity = std::max(0, severity - 1);
      }
      const int recorded = std::clamp(severity + bias, 0, 4);
      ++score_hist[static_cast<std::size_t>(recorded)];

      SessionRecord r;
      r.patient_id = pid;
      char uid[24];
      std::snprintf(uid, sizeof uid, "%s_S%02d", pid, s);
      r.utterance_id = uid;
      r.date_days = day;
      r.score = recorded;
      r.feature_path = std::string("features/") + uid + ".alstf";

      // segments: transcript repeated, one variant picked per slot per repeat
      std::size_t frame = 0;
      for (int rep = 0; rep < cfg.transcript_repeats; ++rep) {
        for (const auto& variants : transcript) {
          AlignmentSegment seg;
          seg.phoneme =
              variants[static_cast<std::size_t>(rng.uniform_int(
                  0, static_cast<std::int64_t>(variants.size()) - 1))];
          seg.start_frame = frame;
          frame += static_cast<std::size_t>(
              rng.uniform_int(cfg.min_segment_frames, cfg.max_segment_frames));
          seg.end_frame = frame;
          r.alignment.push_back(std::move(seg));
        }
      }

      FeatureMatrix fm;
      fm.frames = frame;
      fm.dim = d;
      fm.values.assign(frame * d, 0.0f);
      const auto& mu = means[static_cast<std::size_t>(severity)];
      for (const auto& seg : r.alignment) {
        const bool with_signal = signal_set.empty() || signal_set.count(seg.phoneme) > 0;
        for (std::size_t f = seg.start_frame; f < seg.end_frame; ++f)
          for (std::size_t j = 0; j < d; ++j) {
            double x = offset[j] + cfg.noise_scale * rng.normal();
            if (with_signal) x += mu[j];
            fm.at(f, j) = static_cast<float>(x);
          }
      }
      write_feature_file(out_dir / r.feature_path, fm);
      records.push_back(std::move(r));
    }
  }

  CohortManifest manifest = build_manifest(std::move(records), out_dir, false);
  save_manifest(manifest, out_dir / "cohort.manifest");

  double gap_mean = 0.0;
  for (double g : gaps) gap_mean += g;
  gap_mean = gaps.empty() ? 0.0 : gap_mean / static_cast<double>(gaps.size());

  nlohmann::ordered_json stats;
  stats["num_patients"] = cfg.num_patients;
  stats["num_utterances"] = manifest.num_utterances();
  stats["mean_gap_days"] = gap_mean;
  stats["mean_baseline_score"] = baseline_sum / cfg.num_patients;
  stats["score_histogram"] = score_hist;
  stats["feature_dim"] = cfg.feature_dim;
  write_file_text(out_dir / "stats.json", stats.dump(2) + "\n");

  return manifest;
}

}  // namespace alst
