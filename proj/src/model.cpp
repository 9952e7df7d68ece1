#include "alst/model.hpp"

#include <algorithm>
#include <cmath>

#include "alst/errors.hpp"

namespace alst {

void AlstConfig::validate() const {
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
  if (num_layers < 1) throw ConfigError("model: num_layers must be >= 1");
  if (num_heads != 1) throw ConfigError("model: only single-head attention is supported");
  if (ffn_dim < 1) throw ConfigError("model: ffn_dim must be >= 1");
  if (num_classes != 5) throw ConfigError("model: num_classes must be 5 (ALSFRS-R speech)");
  if (lambda_ce < 0.0) throw ConfigError("model: lambda_ce must be >= 0");
  if (max_order < 1 || day_bucket_size < 1 || day_bucket_cap < 1 || max_token_position < 1)
    throw ConfigError("model: embedding table sizes must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model: dropout must be in [0,1)");
}

Tensor& AlstParams::add(const std::string& name, std::vector<std::size_t> shape) {
  if (index_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  entries_.emplace_back(name, Tensor(std::move(shape)));
  return entries_.back().second;
}

Tensor& AlstParams::p(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& AlstParams::p(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter '" + name + "'");
  return entries_[it->second].second;
}

std::vector<Tensor*> AlstParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& [n, t] : entries_) out.push_back(&t);
  return out;
}

std::vector<const Tensor*> AlstParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& [n, t] : entries_) out.push_back(&t);
  return out;
}

std::int64_t AlstParams::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : entries_) n += static_cast<std::int64_t>(t.size());
  return n;
}

namespace {

void init_linear(Tensor& w, Rng& rng) {
  // uniform(-a, a), a = sqrt(6 / (fan_in + fan_out))
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (std::size_t i = 0; i < w.size(); ++i) w.at(i) = rng.uniform(-a, a);
}

void init_embedding(Tensor& t, Rng& rng) {
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = 0.02 * rng.normal();
}

}  // namespace

AlstParams AlstParams::init(const AlstConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.input_dim);
  const auto h = static_cast<std::size_t>(cfg.hidden_dim);
  const auto f = static_cast<std::size_t>(cfg.ffn_dim);
  const auto c = static_cast<std::size_t>(cfg.num_classes);

  AlstParams params;
  Rng rng = Rng::stream(seed, "init");

  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    init_linear(params.add(name + ".w", {in, out}), rng);
    params.add(name + ".b", {out});  // zeros
  };

  linear("input", d, h);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string b = "block" + std::to_string(l);
    linear(b + ".attn.q", h, h);
    linear(b + ".attn.k", h, h);
    linear(b + ".attn.v", h, h);
    linear(b + ".attn.o", h, h);
    params.add(b + ".ln1.gain", {h}).fill(1.0);
    params.add(b + ".ln1.bias", {h});
    linear(b + ".ffn.1", h, f);
    linear(b + ".ffn.2", f, h);
    params.add(b + ".ln2.gain", {h}).fill(1.0);
    params.add(b + ".ln2.bias", {h});
  }
  linear("output", h, h);

  init_embedding(params.add("emb.order", {static_cast<std::size_t>(cfg.max_order), h}), rng);
  init_embedding(params.add("emb.day", {static_cast<std::size_t>(cfg.day_bucket_cap), h}), rng);
  init_embedding(
      params.add("emb.within", {static_cast<std::size_t>(cfg.max_token_position), h}), rng);
  init_embedding(
      params.add("emb.phoneme", {std::max<std::size_t>(1, cfg.phoneme_vocab.size()), h}), rng);
  init_embedding(params.add("emb.generic", {1, h}), rng);

  linear("scorer", h, 1 + c);
  // The regression output starts at the score-range midpoint; warmup plus the
  // epoch decay leave too few effective steps to move the output mean there
  // from zero.
  params.p("scorer.b").at(0) = 2.0;
  return params;
}

const Var& BoundParams::v(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw ContractError("no bound parameter '" + name + "'");
  return vars[it->second];
}

BoundParams bind_params(Tape& tape, const AlstParams& params) {
  BoundParams bp;
  for (std::size_t i = 0; i < params.size(); ++i) {
    bp.index[params.name(i)] = bp.vars.size();
    bp.vars.push_back(tape.leaf(params.tensor(i), params.name(i)));
  }
  return bp;
}

void sinusoid_encoding(std::int64_t value, std::size_t dim, double* out) {
  for (std::size_t k = 0; 2 * k < dim; ++k) {
    const double rate = std::pow(10000.0, -(2.0 * static_cast<double>(k)) / static_cast<double>(dim));
    const double x = static_cast<double>(value) * rate;
    out[2 * k] = std::sin(x);
    if (2 * k + 1 < dim) out[2 * k + 1] = std::cos(x);
  }
}

TokenInput token_input_from(const PatientSequence& seq, std::size_t pad_to) {
  const std::size_t t_real = seq.num_tokens();
  const std::size_t t_pad = std::max(pad_to, t_real);
  const std::size_t d = seq.tokens.cols();

  TokenInput in;
  in.tokens = Tensor({t_pad, d});
  std::copy_n(seq.tokens.data(), seq.tokens.size(), in.tokens.data());
  in.keep.assign(t_pad, 0);
  std::fill_n(in.keep.begin(), t_real, std::uint8_t{1});
  in.phoneme_ids = seq.phoneme_ids;
  in.within_pos = seq.within_pos;
  in.phoneme_ids.resize(t_pad, -1);
  in.within_pos.resize(t_pad, 0);
  in.utt_groups.assign(seq.num_utterances(), {});
  for (std::size_t t = 0; t < t_real; ++t)
    in.utt_groups[static_cast<std::size_t>(seq.utt_of_token[t])].push_back(t);
  in.utt_rank = seq.date_rank;
  in.utt_day = seq.date_days;
  in.scores = seq.scores;
  return in;
}

TokenInput token_input_for_utterance(const PatientSequence& seq, std::size_t u) {
  TokenInput in;
  std::vector<std::size_t> token_ids;
  for (std::size_t t = 0; t < seq.num_tokens(); ++t)
    if (seq.utt_of_token[t] == static_cast<int>(u)) token_ids.push_back(t);
  const std::size_t d = seq.tokens.cols();
  in.tokens = Tensor({token_ids.size(), d});
  in.utt_groups.assign(1, {});
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    std::copy_n(seq.tokens.data() + token_ids[i] * d, d, in.tokens.data() + i * d);
    in.phoneme_ids.push_back(seq.phoneme_ids[token_ids[i]]);
    in.within_pos.push_back(seq.within_pos[token_ids[i]]);
    in.utt_groups[0].push_back(i);
  }
  in.keep.assign(token_ids.size(), 1);
  in.utt_rank = {seq.date_rank[u]};
  in.utt_day = {seq.date_days[u]};
  in.scores = {seq.scores[u]};
  return in;
}

namespace {

// e^pos per token: within-utterance index term + date term (Eq-style sum).
// Trainable modes look up learned tables; sinusoid modes bake fixed values.
// none / longitudinal_no_pos contribute nothing (handled by the caller).
Var position_embeddings(Tape& tape, const BoundParams& bp, const AlstConfig& cfg,
                        const TokenInput& in, ForwardStats* stats) {
  const std::size_t t_all = in.keep.size();
  const std::size_t h = static_cast<std::size_t>(cfg.hidden_dim);

  std::vector<std::int64_t> utt_of_token(t_all, 0);
  for (std::size_t u = 0; u < in.utt_groups.size(); ++u)
    for (std::size_t t : in.utt_groups[u]) utt_of_token[t] = static_cast<std::int64_t>(u);

  for (std::int64_t day : in.utt_day)
    if (day < 0) throw DataError("position embeddings: negative recording day");

  const bool trainable = cfg.position_mode == PositionMode::order_trainable ||
                         cfg.position_mode == PositionMode::day_trainable;
  if (trainable) {
    std::vector<std::int64_t> date_ids(t_all, 0), within_ids(t_all, 0);
    for (std::size_t t = 0; t < t_all; ++t) {
      if (!in.keep[t]) continue;
      const std::size_t u = static_cast<std::size_t>(utt_of_token[t]);
      if (cfg.position_mode == PositionMode::order_trainable) {
        std::int64_t r = in.utt_rank[u];
        if (r >= cfg.max_order) {
          r = cfg.max_order - 1;
          if (stats) ++stats->order_rank_clamped;
        }
        date_ids[t] = r;
      } else {
        std::int64_t b = in.utt_day[u] / cfg.day_bucket_size;
        if (b >= cfg.day_bucket_cap) {
          b = cfg.day_bucket_cap - 1;
          if (stats) ++stats->day_bucket_clamped;
        }
        date_ids[t] = b;
      }
      std::int64_t w = in.within_pos[t];
      if (w >= cfg.max_token_position) {
        w = cfg.max_token_position - 1;
        if (stats) ++stats->within_pos_clamped;
      }
      within_ids[t] = w;
    }
    const char* table =
        cfg.position_mode == PositionMode::order_trainable ? "emb.order" : "emb.day";
    return add(embedding(bp.v(table), date_ids), embedding(bp.v("emb.within"), within_ids));
  }

  // sinusoid modes: fixed encodings of (rank or day) plus the within index
  Tensor enc({t_all, h});
  std::vector<double> tmp(h);
  for (std::size_t t = 0; t < t_all; ++t) {
    if (!in.keep[t]) continue;
    const std::size_t u = static_cast<std::size_t>(utt_of_token[t]);
    const std::int64_t date_value = cfg.position_mode == PositionMode::order_sinusoid
                                        ? in.utt_rank[u]
                                        : in.utt_day[u];
    sinusoid_encoding(date_value, h, enc.data() + t * h);
    sinusoid_encoding(in.within_pos[t], h, tmp.data());
    for (std::size_t j = 0; j < h; ++j) enc.at(t, j) += tmp[j];
  }
  return tape.constant(std::move(enc), "pos_sinusoid");
}

Var maybe_dropout(Tape& tape, const Var& x, double p, Rng* rng) {
  if (p <= 0.0 || rng == nullptr) return x;
  Tensor mask(x.value().shape());
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.at(i) = rng->uniform01() < p ? 0.0 : scale;
  return mul(x, tape.constant(std::move(mask), "dropout_mask"));
}

}  // namespace

HeadOutput forward_tokens(Tape& tape, const BoundParams& bp, const AlstConfig& cfg,
                          const TokenInput& in, ForwardStats* stats, Rng* dropout_rng) {
  if (in.tokens.rows() != in.keep.size())
    throw ContractError("forward_tokens: token/mask length mismatch");
  if (in.tokens.cols() != static_cast<std::size_t>(cfg.input_dim))
    throw ConfigError("forward_tokens: token dim " + std::to_string(in.tokens.cols()) +
                      " != configured input_dim " + std::to_string(cfg.input_dim));

  Var x = tape.constant(in.tokens, "tokens");
  x = add_rowvec(matmul(x, bp.v("input.w")), bp.v("input.b"));

  if (cfg.position_mode != PositionMode::none &&
      cfg.position_mode != PositionMode::longitudinal_no_pos)
    x = add(x, position_embeddings(tape, bp, cfg, in, stats));

  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string b = "block" + std::to_string(l);
    Var q = add_rowvec(matmul(x, bp.v(b + ".attn.q.w")), bp.v(b + ".attn.q.b"));
    Var k = add_rowvec(matmul(x, bp.v(b + ".attn.k.w")), bp.v(b + ".attn.k.b"));
    Var v = add_rowvec(matmul(x, bp.v(b + ".attn.v.w")), bp.v(b + ".attn.v.b"));
    Var attn = attention(q, k, v, in.keep);
    attn = add_rowvec(matmul(attn, bp.v(b + ".attn.o.w")), bp.v(b + ".attn.o.b"));
    attn = maybe_dropout(tape, attn, cfg.dropout, dropout_rng);
    x = layer_norm_rows(add(x, attn), bp.v(b + ".ln1.gain"), bp.v(b + ".ln1.bias"));

    Var ff = relu(add_rowvec(matmul(x, bp.v(b + ".ffn.1.w")), bp.v(b + ".ffn.1.b")));
    ff = add_rowvec(matmul(ff, bp.v(b + ".ffn.2.w")), bp.v(b + ".ffn.2.b"));
    ff = maybe_dropout(tape, ff, cfg.dropout, dropout_rng);
    x = layer_norm_rows(add(x, ff), bp.v(b + ".ln2.gain"), bp.v(b + ".ln2.bias"));
  }

  Var h = add_rowvec(matmul(x, bp.v("output.w")), bp.v("output.b"));

  // token-identity term: phoneme embedding, or the learned generic token when
  // there is no alignment
  if (cfg.pooling_mode == PoolingMode::phoneme) {
    std::vector<std::int64_t> ids = in.phoneme_ids;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (!in.keep[t]) ids[t] = 0;  // padding reads row 0; no loss path touches it
      else if (ids[t] < 0)
        throw ContractError("forward_tokens: phoneme token without id");
    }
    h = add(h, embedding(bp.v("emb.phoneme"), ids));
  } else {
    h = add(h, embedding(bp.v("emb.generic"),
                         std::vector<std::int64_t>(in.keep.size(), 0)));
  }

  Var z_utt = segment_mean(h, in.utt_groups);
  Var sc = add_rowvec(matmul(z_utt, bp.v("scorer.w")), bp.v("scorer.b"));
  HeadOutput out;
  out.y_hat = slice_cols(sc, 0, 1);
  out.p_hat = softmax_rows(slice_cols(sc, 1, 1 + static_cast<std::size_t>(cfg.num_classes)));
  return out;
}

SequenceOutput score_sequence(Tape& tape, const BoundParams& bp, const AlstConfig& cfg,
                              const PatientSequence& seq, ForwardStats* stats,
                              Rng* dropout_rng) {
  SequenceOutput out;
  if (cfg.position_mode == PositionMode::none) {
    for (std::size_t u = 0; u < seq.num_utterances(); ++u) {
      out.chunks.push_back(
          forward_tokens(tape, bp, cfg, token_input_for_utterance(seq, u), stats, dropout_rng));
      out.scores.push_back(seq.scores[u]);
    }
  } else {
    out.chunks.push_back(forward_tokens(tape, bp, cfg, token_input_from(seq), stats, dropout_rng));
    out.scores = seq.scores;
  }
  return out;
}

Var batch_loss(Tape& tape, const std::vector<SequenceOutput>& outputs, double lambda_ce) {
  if (lambda_ce < 0.0) throw ContractError("batch_loss: lambda_ce must be >= 0");
  Var total;
  std::size_t n_utts = 0;
  for (const SequenceOutput& so : outputs) {
    std::size_t at = 0;
    for (const HeadOutput& head : so.chunks) {
      const std::size_t u = head.y_hat.value().rows();
      Tensor target({u, 1});
      std::vector<std::size_t> labels(u);
      for (std::size_t i = 0; i < u; ++i) {
        const int y = so.scores[at + i];
        if (y < 0 || y > 4) throw ContractError("batch_loss: score outside 0..4");
        target.at(i, 0) = static_cast<double>(y);
        labels[i] = static_cast<std::size_t>(y);
      }
      at += u;
      n_utts += u;

      Var diff = sub(head.y_hat, tape.constant(std::move(target), "target"));
      Var term = sum_all(mul(diff, diff));
      if (lambda_ce > 0.0) {
        Var ce = scale(sum_all(log_floor(take_per_row(head.p_hat, labels))), -lambda_ce);
        term = add(term, ce);
      }
      total = total.defined() ? add(total, term) : term;
    }
  }
  if (n_utts == 0) throw ContractError("batch_loss: no utterances");
  return scale(total, 1.0 / static_cast<double>(n_utts));
}

std::vector<UttPrediction> predict_sequences(const AlstParams& params, const AlstConfig& cfg,
                                             const std::vector<PatientSequence>& seqs,
                                             ForwardStats* stats) {
  std::vector<UttPrediction> preds;
  for (const PatientSequence& seq : seqs) {
    Tape tape;
    BoundParams bp = bind_params(tape, params);
    SequenceOutput so = score_sequence(tape, bp, cfg, seq, stats);
    std::size_t at = 0;
    for (const HeadOutput& head : so.chunks) {
      for (std::size_t i = 0; i < head.y_hat.value().rows(); ++i, ++at) {
        UttPrediction p;
        p.patient_id = seq.patient_id;
        p.utterance_id = seq.utterance_ids[at];
        p.date_days = seq.date_days[at];
        p.true_score = seq.scores[at];
        p.y_hat = head.y_hat.value().at(i, 0);
        for (int c = 0; c < cfg.num_classes; ++c)
          p.p_hat[static_cast<std::size_t>(c)] = head.p_hat.value().at(i, static_cast<std::size_t>(c));
        preds.push_back(std::move(p));
      }
    }
  }
  return preds;
}

int predict_class(const UttPrediction& pred, Branch branch) {
  if (branch == Branch::regression) {
    const auto r = static_cast<int>(std::llround(pred.y_hat));
    return std::clamp(r, 0, 4);
  }
  int best = 0;
  for (int c = 1; c < 5; ++c)
    if (pred.p_hat[static_cast<std::size_t>(c)] > pred.p_hat[static_cast<std::size_t>(best)])
      best = c;
  return best;
}

}  // namespace alst
