#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alst/data.hpp"

namespace alst {

// Synthetic cohort generator. Per patient: a baseline score drawn from
// baseline_score_distribution declines monotonically (one level per session
// with probability decline_hazard); session gaps are uniform around
// mean_gap_days; every utterance carries the configured phoneme transcript
// repeated transcript_repeats times with random segment durations. Frame
// features are class mean + per-patient offset + per-frame noise.
struct SynthConfig {
  std::uint64_t seed = 0;
  int num_patients = 100;
  int sessions_min = 3;
  int sessions_max = 10;
  double mean_gap_days = 50.0;
  int feature_dim = 32;
  // Exact pairwise distance between class mean vectors (feature_dim >= 5).
  double class_separation = 6.0;
  std::array<double, 5> baseline_score_distribution{0.02, 0.05, 0.13, 0.25, 0.55};
  double decline_hazard = 0.25;
  double noise_scale = 1.0;
  // Componentwise stddev of the per-patient feature offset.
  double patient_offset_scale = 0.3;
  // Per-patient label bias drawn uniformly from [-k, k]; recorded score is
  // clamp(true severity + bias, 0, 4). 0 disables.
  int rating_offset_max = 0;
  int transcript_repeats = 5;
  int min_segment_frames = 2;
  int max_segment_frames = 6;
  // Phoneme slots for one repetition; each slot lists pronunciation variants.
  std::vector<std::vector<std::string>> transcript;
  // When non-empty, the class-mean signal is only present in frames whose
  // phoneme is listed here; other frames carry offset + noise only.
  std::vector<std::string> signal_phonemes;
};

// ARPABET slots for one repetition of the prompt sentence, with both
// pronunciation variants of the second phoneme of "today".
std::vector<std::vector<std::string>> default_transcript();

// Parse a transcript file: '#' comments, whitespace-separated slots,
// '|'-separated variants within a slot.
std::vector<std::vector<std::string>> parse_transcript(const std::string& text);

// The 5 class mean vectors used by the generator (and by nearest-centroid
// checks). Deterministic in (seed, feature_dim, class_separation).
std::vector<std::vector<double>> synth_class_means(const SynthConfig& cfg);

// Writes cohort.manifest, features/*.alstf and stats.json under out_dir and
// returns the loaded manifest. Bitwise deterministic in the config.
CohortManifest synthesize_cohort(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace alst
