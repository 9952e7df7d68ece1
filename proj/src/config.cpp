#include "alst/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "alst/errors.hpp"
#include "alst/fileutil.hpp"

namespace alst {

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (base_lr <= 0.0) throw ConfigError("train: base_lr must be positive");
  if (warmup_steps < 0) throw ConfigError("train: warmup_steps must be >= 0");
  if (decay_step_epochs < 1) throw ConfigError("train: decay_step_epochs must be >= 1");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0))
    throw ConfigError("train: decay_rate must be in (0,1]");
  if (eval_every < 0) throw ConfigError("train: eval_every must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("train: grad_clip must be >= 0");
}

const char* to_string(PositionMode mode) {
  switch (mode) {
    case PositionMode::none: return "none";
    case PositionMode::longitudinal_no_pos: return "longitudinal_no_pos";
    case PositionMode::order_trainable: return "order_trainable";
    case PositionMode::order_sinusoid: return "order_sinusoid";
    case PositionMode::day_sinusoid: return "day_sinusoid";
    case PositionMode::day_trainable: return "day_trainable";
  }
  return "?";
}

const char* to_string(PoolingMode mode) {
  return mode == PoolingMode::utterance ? "utterance" : "phoneme";
}

PositionMode position_mode_from(const std::string& s) {
  for (PositionMode m : {PositionMode::none, PositionMode::longitudinal_no_pos,
                         PositionMode::order_trainable, PositionMode::order_sinusoid,
                         PositionMode::day_sinusoid, PositionMode::day_trainable})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown position_mode '" + s + "'");
}

PoolingMode pooling_mode_from(const std::string& s) {
  if (s == "utterance") return PoolingMode::utterance;
  if (s == "phoneme") return PoolingMode::phoneme;
  throw ConfigError("unknown pooling_mode '" + s + "'");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError("key '" + key + "': bad number '" + v + "'");
  return x;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError("key '" + key + "': bad integer '" + v + "'");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (v.empty()) return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t comma = v.find(',', pos);
    out.push_back(v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Field> schema(RunConfig& c) {
  std::vector<Field> f;
  auto add = [&](const char* sec, const char* key, std::function<void(const std::string&)> set,
                 std::function<std::string()> get) {
    f.push_back({sec, key, std::move(set), std::move(get)});
  };
  auto int_field = [&](const char* sec, const char* key, int& ref) {
    add(sec, key,
        [&ref, key](const std::string& v) { ref = static_cast<int>(parse_int(key, v)); },
        [&ref] { return std::to_string(ref); });
  };
  auto u64_field = [&](const char* sec, const char* key, std::uint64_t& ref) {
    add(sec, key,
        [&ref, key](const std::string& v) {
          ref = static_cast<std::uint64_t>(parse_int(key, v));
        },
        [&ref] { return std::to_string(ref); });
  };
  auto dbl_field = [&](const char* sec, const char* key, double& ref) {
    add(sec, key, [&ref, key](const std::string& v) { ref = parse_double(key, v); },
        [&ref] { return fmt(ref); });
  };

  // [model]
  AlstConfig& m = c.train.model;
  int_field("model", "input_dim", m.input_dim);
  int_field("model", "hidden_dim", m.hidden_dim);
  int_field("model", "num_layers", m.num_layers);
  int_field("model", "num_heads", m.num_heads);
  int_field("model", "ffn_dim", m.ffn_dim);
  int_field("model", "num_classes", m.num_classes);
  add("model", "pooling_mode",
      [&m](const std::string& v) { m.pooling_mode = pooling_mode_from(v); },
      [&m] { return std::string(to_string(m.pooling_mode)); });
  add("model", "position_mode",
      [&m](const std::string& v) { m.position_mode = position_mode_from(v); },
      [&m] { return std::string(to_string(m.position_mode)); });
  dbl_field("model", "lambda_ce", m.lambda_ce);
  int_field("model", "max_order", m.max_order);
  int_field("model", "day_bucket_size", m.day_bucket_size);
  int_field("model", "day_bucket_cap", m.day_bucket_cap);
  int_field("model", "max_token_position", m.max_token_position);
  dbl_field("model", "dropout", m.dropout);
  add("model", "phoneme_vocab",
      [&m](const std::string& v) { m.phoneme_vocab = split_list(v); },
      [&m] { return join_list(m.phoneme_vocab); });

  // [train]
  TrainConfig& t = c.train;
  int_field("train", "epochs", t.epochs);
  int_field("train", "batch_size", t.batch_size);
  dbl_field("train", "base_lr", t.base_lr);
  int_field("train", "warmup_steps", t.warmup_steps);
  int_field("train", "decay_start_epoch", t.decay_start_epoch);
  int_field("train", "decay_step_epochs", t.decay_step_epochs);
  dbl_field("train", "decay_rate", t.decay_rate);
  u64_field("train", "seed", t.seed);
  int_field("train", "eval_every", t.eval_every);
  dbl_field("train", "grad_clip", t.grad_clip);
  dbl_field("train", "adam_beta1", t.adam_beta1);
  dbl_field("train", "adam_beta2", t.adam_beta2);
  dbl_field("train", "adam_epsilon", t.adam_epsilon);

  // [synth]
  SynthConfig& s = c.synth;
  u64_field("synth", "seed", s.seed);
  int_field("synth", "num_patients", s.num_patients);
  int_field("synth", "sessions_min", s.sessions_min);
  int_field("synth", "sessions_max", s.sessions_max);
  dbl_field("synth", "mean_gap_days", s.mean_gap_days);
  int_field("synth", "feature_dim", s.feature_dim);
  dbl_field("synth", "class_separation", s.class_separation);
  add("synth", "baseline_score_distribution",
      [&s](const std::string& v) {
        auto parts = split_list(v);
        if (parts.size() != 5)
          throw ConfigError("baseline_score_distribution needs 5 comma-separated values");
        for (std::size_t i = 0; i < 5; ++i)
          s.baseline_score_distribution[i] = parse_double("baseline_score_distribution", parts[i]);
      },
      [&s] {
        std::vector<std::string> parts;
        for (double p : s.baseline_score_distribution) parts.push_back(fmt(p));
        return join_list(parts);
      });
  dbl_field("synth", "decline_hazard", s.decline_hazard);
  dbl_field("synth", "noise_scale", s.noise_scale);
  dbl_field("synth", "patient_offset_scale", s.patient_offset_scale);
  int_field("synth", "rating_offset_max", s.rating_offset_max);
  int_field("synth", "transcript_repeats", s.transcript_repeats);
  int_field("synth", "min_segment_frames", s.min_segment_frames);
  int_field("synth", "max_segment_frames", s.max_segment_frames);
  add("synth", "signal_phonemes",
      [&s](const std::string& v) { s.signal_phonemes = split_list(v); },
      [&s] { return join_list(s.signal_phonemes); });
  add("synth", "transcript_path",
      [&c](const std::string& v) { c.synth_transcript_path = v; },
      [&c] { return c.synth_transcript_path; });

  // [sweep]
  SweepSpecFile& w = c.sweep;
  add("sweep", "axis", [&w](const std::string& v) { w.axis = v; }, [&w] { return w.axis; });
  add("sweep", "values", [&w](const std::string& v) { w.values = split_list(v); },
      [&w] { return join_list(w.values); });
  add("sweep", "seeds",
      [&w](const std::string& v) {
        w.seeds.clear();
        for (const auto& p : split_list(v))
          w.seeds.push_back(static_cast<std::uint64_t>(parse_int("seeds", p)));
      },
      [&w] {
        std::vector<std::string> parts;
        for (auto sd : w.seeds) parts.push_back(std::to_string(sd));
        return join_list(parts);
      });
  add("sweep", "layer_manifests",
      [&w](const std::string& v) {
        w.layer_manifests.clear();
        if (v.empty()) return;
        for (const auto& item : split_list(v)) {
          // value=train_manifest;test_manifest entries are ';'-separated to
          // leave ',' for the list itself
          const std::size_t eq = item.find('=');
          const std::size_t semi = item.find(';', eq == std::string::npos ? 0 : eq);
          if (eq == std::string::npos || semi == std::string::npos)
            throw ConfigError("layer_manifests entry '" + item +
                              "' is not value=train;test");
          w.layer_manifests[item.substr(0, eq)] = {item.substr(eq + 1, semi - eq - 1),
                                                   item.substr(semi + 1)};
        }
      },
      [&w] {
        std::vector<std::string> parts;
        for (const auto& [k, v] : w.layer_manifests)
          parts.push_back(k + "=" + v.first + ";" + v.second);
        return join_list(parts);
      });

  // [paths]
  add("paths", "train_manifest",
      [&c](const std::string& v) { c.paths.train_manifest = v; },
      [&c] { return c.paths.train_manifest; });
  add("paths", "test_manifest", [&c](const std::string& v) { c.paths.test_manifest = v; },
      [&c] { return c.paths.test_manifest; });

  return f;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_into(RunConfig& cfg, const std::string& text) {
  auto fields = schema(cfg);
  std::string section;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
      section = line.substr(1, line.size() - 2);
      bool known = false;
      for (const auto& f : fields) known = known || f.section == section;
      if (!known)
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (auto& f : fields) {
      if (f.section == section && f.key == key) {
        f.set(value);
        found = true;
        break;
      }
    }
    if (!found)
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                        "' in section [" + section + "]");
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  parse_into(cfg, text);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg = parse_config_text(read_file_text(path));
  if (!cfg.synth_transcript_path.empty()) {
    std::filesystem::path p = cfg.synth_transcript_path;
    if (p.is_relative()) p = path.parent_path() / p;
    cfg.synth.transcript = parse_transcript(read_file_text(p));
  }
  return cfg;
}

std::string format_config(const RunConfig& cfg) {
  auto fields = schema(const_cast<RunConfig&>(cfg));
  std::string out;
  std::string section;
  for (const auto& f : fields) {
    if (f.section != section) {
      if (!out.empty()) out += '\n';
      out += "[" + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get() + "\n";
  }
  return out;
}

void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override '" + dotted_key + "' must be section.key");
  const std::string section = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  for (auto& f : schema(cfg)) {
    if (f.section == section && f.key == key) {
      f.set(value);
      return;
    }
  }
  throw ConfigError("override '" + dotted_key + "': unknown key");
}

std::string format_model_config(const AlstConfig& cfg) {
  RunConfig rc;
  rc.train.model = cfg;
  const std::string full = format_config(rc);
  // keep just the [model] section
  const std::size_t start = full.find("[model]");
  std::size_t end = full.find("\n[", start);
  if (end == std::string::npos) end = full.size();
  return full.substr(start, end - start);
}

AlstConfig parse_model_config(const std::string& text) {
  RunConfig rc;
  parse_into(rc, text);
  return rc.train.model;
}

}  // namespace alst
