#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace alst {

// Frame-level speech features for one utterance. Stored as float32 to match
// the on-disk format exactly; arithmetic downstream happens in double.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // frame-major

  float at(std::size_t f, std::size_t d) const { return values[f * dim + d]; }
  float& at(std::size_t f, std::size_t d) { return values[f * dim + d]; }
};

// Feature file layout (bit-exact): magic "ALSTF1\0\0", then u32-LE frame
// count, u32-LE feature dim, then frame-major float32-LE payload.
FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m);
// Frame count / dim without reading the payload.
std::pair<std::uint32_t, std::uint32_t> read_feature_header(const std::filesystem::path& path);

// Zero every frame outside the kept ranges ([start, end) pairs).
FeatureMatrix mask_frames(const FeatureMatrix& m,
                          const std::vector<std::pair<std::size_t, std::size_t>>& keep);

struct AlignmentSegment {
  std::string phoneme;  // uppercase ARPABET, stress digit included
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;  // exclusive
};

struct SessionRecord {
  std::string patient_id;
  std::string utterance_id;
  std::int64_t date_days = 0;  // days since diagnosis
  int score = 0;               // ALSFRS-R speech sub-score, 0..4
  std::string feature_path;    // relative to the manifest directory
  std::vector<AlignmentSegment> alignment;
  std::optional<std::string> onset_type;  // "bulbar" | "limb"
};

struct PatientRecords {
  std::string patient_id;
  std::vector<SessionRecord> sessions;  // sorted by date_days
};

struct CohortManifest {
  std::vector<PatientRecords> patients;   // sorted by patient_id
  std::vector<std::string> phoneme_vocab; // sorted unique labels seen in alignments
  std::filesystem::path base_dir;         // directory feature paths resolve against

  std::size_t num_utterances() const;
  const std::filesystem::path feature_file(const SessionRecord& r) const {
    return base_dir / r.feature_path;
  }
};

// Line-delimited manifest: one record per line of tab-separated key=value
// pairs (keys match SessionRecord). Validates everything and reports all
// offending records at once. check_features also opens each feature file to
// verify alignment bounds against its frame count.
CohortManifest load_manifest(const std::filesystem::path& path, bool check_features = true);
void save_manifest(const CohortManifest& manifest, const std::filesystem::path& path);

// Group records from loose order, sort, derive the vocabulary, validate.
CohortManifest build_manifest(std::vector<SessionRecord> records, std::filesystem::path base_dir,
                              bool check_features = true);

// Patient-disjoint split, deterministic per seed. round(test_fraction * n)
// patients (at least 1, at most n-1) go to the test side.
std::pair<CohortManifest, CohortManifest> split_by_patient(const CohortManifest& manifest,
                                                           double test_fraction,
                                                           std::uint64_t seed);

}  // namespace alst
