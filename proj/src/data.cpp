#include "alst/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "alst/errors.hpp"
#include "alst/fileutil.hpp"
#include "alst/rng.hpp"

namespace alst {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'A', 'L', 'S', 'T', 'F', '1', '\0', '\0'};

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

FeatureMatrix read_feature_file(const fs::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw DataError("feature file " + path.string() + ": bad magic at byte offset 0");
  const std::uint32_t frames = get_u32le(bytes.data() + 8);
  const std::uint32_t dim = get_u32le(bytes.data() + 12);
  if (dim == 0)
    throw DataError("feature file " + path.string() + ": zero feature dim at byte offset 12");
  const std::size_t expected = 16 + std::size_t{4} * frames * dim;
  if (bytes.size() != expected)
    throw DataError("feature file " + path.string() + ": expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(bytes.size()));
  FeatureMatrix m;
  m.frames = frames;
  m.dim = dim;
  m.values.resize(std::size_t{frames} * dim);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const std::uint32_t u = get_u32le(bytes.data() + 16 + 4 * i);
    float f;
    std::memcpy(&f, &u, 4);
    m.values[i] = f;
  }
  return m;
}

std::pair<std::uint32_t, std::uint32_t> read_feature_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char head[16];
  in.read(reinterpret_cast<char*>(head), 16);
  if (in.gcount() != 16 || std::memcmp(head, kMagic, 8) != 0)
    throw DataError("feature file " + path.string() + ": bad magic at byte offset 0");
  return {get_u32le(head + 8), get_u32le(head + 12)};
}

void write_feature_file(const fs::path& path, const FeatureMatrix& m) {
  if (m.dim == 0) throw ContractError("write_feature_file: zero feature dim");
  if (m.values.size() != m.frames * m.dim)
    throw ContractError("write_feature_file: value count does not match frames x dim");
  std::string out;
  out.reserve(16 + 4 * m.values.size());
  out.append(kMagic, 8);
  put_u32le(out, static_cast<std::uint32_t>(m.frames));
  put_u32le(out, static_cast<std::uint32_t>(m.dim));
  for (float f : m.values) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32le(out, u);
  }
  write_file_bytes(path, out.data(), out.size());
}

FeatureMatrix mask_frames(const FeatureMatrix& m,
                          const std::vector<std::pair<std::size_t, std::size_t>>& keep) {
  for (const auto& [s, e] : keep)
    if (s >= e || e > m.frames)
      throw ContractError("mask_frames: bad keep range [" + std::to_string(s) + "," +
                          std::to_string(e) + ") for " + std::to_string(m.frames) + " frames");
  FeatureMatrix out;
  out.frames = m.frames;
  out.dim = m.dim;
  out.values.assign(m.values.size(), 0.0f);
  for (const auto& [s, e] : keep)
    std::copy(m.values.begin() + static_cast<std::ptrdiff_t>(s * m.dim),
              m.values.begin() + static_cast<std::ptrdiff_t>(e * m.dim),
              out.values.begin() + static_cast<std::ptrdiff_t>(s * m.dim));
  return out;
}

std::size_t CohortManifest::num_utterances() const {
  std::size_t n = 0;
  for (const auto& p : patients) n += p.sessions.size();
  return n;
}

namespace {

std::string format_alignment(const std::vector<AlignmentSegment>& segs) {
  std::string s;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (i) s += ',';
    s += segs[i].phoneme + ":" + std::to_string(segs[i].start_frame) + "-" +
         std::to_string(segs[i].end_frame);
  }
  return s;
}

std::vector<AlignmentSegment> parse_alignment(const std::string& s) {
  std::vector<AlignmentSegment> segs;
  if (s.empty()) return segs;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const std::size_t colon = item.rfind(':');
    const std::size_t dash = item.find('-', colon == std::string::npos ? 0 : colon);
    if (colon == std::string::npos || dash == std::string::npos)
      throw DataError("bad alignment segment '" + item + "'");
    AlignmentSegment seg;
    seg.phoneme = item.substr(0, colon);
    seg.start_frame = std::stoull(item.substr(colon + 1, dash - colon - 1));
    seg.end_frame = std::stoull(item.substr(dash + 1));
    segs.push_back(std::move(seg));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return segs;
}

SessionRecord parse_record_line(const std::string& line, std::size_t line_no) {
  SessionRecord r;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t tab = line.find('\t', pos);
    std::string field =
        line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos);
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos)
      throw DataError("line " + std::to_string(line_no) + ": field '" + field +
                      "' is not key=value");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (!seen.insert(key).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    if (key == "patient_id") {
      r.patient_id = value;
    } else if (key == "utterance_id") {
      r.utterance_id = value;
    } else if (key == "date_days") {
      r.date_days = std::stoll(value);
    } else if (key == "score") {
      r.score = std::stoi(value);
    } else if (key == "feature_path") {
      r.feature_path = value;
    } else if (key == "alignment") {
      r.alignment = parse_alignment(value);
    } else if (key == "onset_type") {
      r.onset_type = value;
    } else {
      throw DataError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  for (const char* req : {"patient_id", "utterance_id", "date_days", "score", "feature_path",
                          "alignment"})
    if (!seen.count(req))
      throw DataError("line " + std::to_string(line_no) + ": missing key '" + req + "'");
  return r;
}

void validate_records(const std::vector<SessionRecord>& records, const fs::path& base_dir,
                      bool check_features) {
  std::vector<std::string> problems;
  std::set<std::pair<std::string, std::string>> ids;
  std::map<std::uint32_t, std::string> dims_seen;
  for (const SessionRecord& r : records) {
    const std::string who = r.patient_id + "/" + r.utterance_id;
    if (r.score < 0 || r.score > 4)
      problems.push_back(who + ": score " + std::to_string(r.score) + " outside 0..4");
    if (r.date_days < 0)
      problems.push_back(who + ": negative date_days " + std::to_string(r.date_days));
    if (!ids.insert({r.patient_id, r.utterance_id}).second)
      problems.push_back(who + ": duplicate (patient_id, utterance_id)");
    if (r.onset_type && *r.onset_type != "bulbar" && *r.onset_type != "limb")
      problems.push_back(who + ": onset_type '" + *r.onset_type + "' not bulbar/limb");
    for (std::size_t i = 0; i < r.alignment.size(); ++i) {
      const auto& seg = r.alignment[i];
      if (seg.start_frame >= seg.end_frame)
        problems.push_back(who + ": segment " + std::to_string(i) + " (" + seg.phoneme +
                           ") empty or inverted");
      if (i + 1 < r.alignment.size() && seg.end_frame > r.alignment[i + 1].start_frame)
        problems.push_back(who + ": segment " + std::to_string(i) + " overlaps segment " +
                           std::to_string(i + 1));
    }
    if (check_features) {
      try {
        auto [frames, dim] = read_feature_header(base_dir / r.feature_path);
        if (!r.alignment.empty() && r.alignment.back().end_frame > frames)
          problems.push_back(who + ": alignment ends at frame " +
                             std::to_string(r.alignment.back().end_frame) + " but file has " +
                             std::to_string(frames));
        auto it = dims_seen.find(dim);
        if (dims_seen.empty()) dims_seen.emplace(dim, who);
        else if (it == dims_seen.end())
          problems.push_back(who + ": feature dim " + std::to_string(dim) +
                             " differs from the cohort's (" +
                             std::to_string(dims_seen.begin()->first) + " at " +
                             dims_seen.begin()->second + ")");
      } catch (const std::exception& e) {
        problems.push_back(who + ": " + e.what());
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "manifest validation failed (" + std::to_string(problems.size()) +
                      " problems):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }
}

CohortManifest group_and_sort(std::vector<SessionRecord> records, fs::path base_dir) {
  std::map<std::string, std::vector<SessionRecord>> by_patient;
  std::set<std::string> vocab;
  for (SessionRecord& r : records) {
    for (const auto& seg : r.alignment) vocab.insert(seg.phoneme);
    by_patient[r.patient_id].push_back(std::move(r));
  }
  CohortManifest m;
  m.base_dir = std::move(base_dir);
  for (auto& [pid, sessions] : by_patient) {
    std::stable_sort(sessions.begin(), sessions.end(),
                     [](const SessionRecord& a, const SessionRecord& b) {
                       return std::tie(a.date_days, a.utterance_id) <
                              std::tie(b.date_days, b.utterance_id);
                     });
    m.patients.push_back({pid, std::move(sessions)});
  }
  m.phoneme_vocab.assign(vocab.begin(), vocab.end());
  return m;
}

}  // namespace

CohortManifest build_manifest(std::vector<SessionRecord> records, fs::path base_dir,
                              bool check_features) {
  validate_records(records, base_dir, check_features);
  return group_and_sort(std::move(records), std::move(base_dir));
}

CohortManifest load_manifest(const fs::path& path, bool check_features) {
  const std::string text = read_file_text(path);
  std::vector<SessionRecord> records;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    ++line_no;
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    records.push_back(parse_record_line(line, line_no));
  }
  if (records.empty()) throw DataError("manifest " + path.string() + " has no records");
  return build_manifest(std::move(records), path.parent_path(), check_features);
}

void save_manifest(const CohortManifest& manifest, const fs::path& path) {
  std::string out;
  for (const auto& p : manifest.patients) {
    for (const auto& r : p.sessions) {
      out += "patient_id=" + r.patient_id;
      out += "\tutterance_id=" + r.utterance_id;
      out += "\tdate_days=" + std::to_string(r.date_days);
      out += "\tscore=" + std::to_string(r.score);
      out += "\tfeature_path=" + r.feature_path;
      out += "\talignment=" + format_alignment(r.alignment);
      if (r.onset_type) out += "\tonset_type=" + *r.onset_type;
      out += '\n';
    }
  }
  write_file_text(path, out);
}

std::pair<CohortManifest, CohortManifest> split_by_patient(const CohortManifest& manifest,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ContractError("split_by_patient: test_fraction must be in (0,1)");
  const std::size_t n = manifest.patients.size();
  if (n < 2) throw DataError("split_by_patient: need at least 2 patients, got " +
                             std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::stream(seed, "split");
  rng.shuffle(order);
  std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  auto take = [&](std::size_t from, std::size_t to) {
    std::vector<SessionRecord> recs;
    for (std::size_t i = from; i < to; ++i)
      for (const auto& r : manifest.patients[order[i]].sessions) recs.push_back(r);
    return group_and_sort(std::move(recs), manifest.base_dir);
  };
  return {take(n_test, n), take(0, n_test)};
}

}  // namespace alst
