#include "alst/train.hpp"

#include <chrono>
#include <cmath>

#include "alst/errors.hpp"
#include "alst/optim.hpp"
#include "alst/sequence.hpp"

#include "json.hpp"

namespace alst {

namespace {

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void clip_gradients(std::vector<Tensor>& grads, double clip) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (std::size_t i = 0; i < g.size(); ++i) sq += g.at(i) * g.at(i);
  const double norm = std::sqrt(sq);
  if (norm <= clip) return;
  const double factor = clip / norm;
  for (Tensor& g : grads)
    for (std::size_t i = 0; i < g.size(); ++i) g.at(i) *= factor;
}

AlstConfig resolve_model_config(const TrainConfig& cfg, const CohortManifest& manifest) {
  AlstConfig model = cfg.model;
  if (model.phoneme_vocab.empty()) model.phoneme_vocab = manifest.phoneme_vocab;
  if (model.input_dim == 0) {
    const auto& first = manifest.patients.at(0).sessions.at(0);
    model.input_dim = static_cast<int>(read_feature_header(manifest.feature_file(first)).second);
  }
  model.validate();
  return model;
}

}  // namespace

TrainResult train_model(const CohortManifest& train_manifest, const TrainConfig& cfg,
                        const CohortManifest* eval_manifest, const std::string& config_echo) {
  cfg.validate();
  if (train_manifest.patients.empty()) throw DataError("train: empty manifest");
  const AlstConfig model_cfg = resolve_model_config(cfg, train_manifest);

  SequenceBuilder builder(model_cfg.pooling_mode, model_cfg.phoneme_vocab,
                          train_manifest.base_dir);
  const std::vector<PatientSequence> sequences = builder.build_all(train_manifest);
  for (const auto& s : sequences)
    if (s.tokens.cols() != static_cast<std::size_t>(model_cfg.input_dim))
      throw ConfigError("train: feature dim " + std::to_string(s.tokens.cols()) +
                        " does not match model input_dim " + std::to_string(model_cfg.input_dim));

  AlstParams params = AlstParams::init(model_cfg, cfg.seed);
  std::vector<const Tensor*> param_views;
  for (Tensor* t : params.tensors()) param_views.push_back(t);
  AdamState adam =
      AdamState::init_like(param_views, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);

  const LrSchedule sched{cfg.base_lr, cfg.warmup_steps, cfg.decay_start_epoch,
                         cfg.decay_step_epochs, cfg.decay_rate};
  Rng dropout_rng = Rng::stream(cfg.seed, "dropout");
  Rng* drop = model_cfg.dropout > 0.0 ? &dropout_rng : nullptr;

  TrainResult result;
  std::int64_t global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t utt_sum = 0;
    double last_lr = 0.0;
    std::int64_t steps_this_epoch = 0;

    const auto batches =
        batch_patients(sequences, static_cast<std::size_t>(cfg.batch_size), cfg.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const PatientBatch& batch = batches[b];
      try {
        Tape tape;
        BoundParams bp = bind_params(tape, params);
        std::vector<SequenceOutput> outputs;
        std::size_t batch_utts = 0;
        for (const PatientSequence* seq : batch.sequences) {
          outputs.push_back(score_sequence(tape, bp, model_cfg, *seq, nullptr, drop));
          batch_utts += seq->num_utterances();
        }
        Var loss = batch_loss(tape, outputs, model_cfg.lambda_ce);
        tape.backward(loss);

        const double lr = lr_at(sched, global_step, epoch);
        std::vector<Tensor> grads;
        grads.reserve(bp.vars.size());
        for (const Var& v : bp.vars) grads.push_back(v.grad());
        if (cfg.grad_clip > 0.0) clip_gradients(grads, cfg.grad_clip);
        std::vector<Tensor*> ps = params.tensors();
        std::vector<const Tensor*> gs;
        for (const Tensor& g : grads) gs.push_back(&g);
        adam_step(ps, gs, adam, lr);

        loss_sum += loss.value().at(0) * static_cast<double>(batch_utts);
        utt_sum += batch_utts;
        last_lr = lr;
        result.log.step_lrs.push_back(lr);
        ++global_step;
        ++steps_this_epoch;
      } catch (const NumericError& e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b) + ": " + e.what());
      }
    }

    RunLog::Epoch entry;
    entry.epoch = epoch;
    entry.train_loss = utt_sum ? loss_sum / static_cast<double>(utt_sum) : 0.0;
    entry.lr = last_lr;
    entry.wall_seconds = elapsed_s(t0);
    entry.steps = steps_this_epoch;
    result.log.epochs.push_back(entry);

    if (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) {
      Checkpoint probe;
      probe.config = model_cfg;
      probe.params = params;
      const CohortManifest& m = eval_manifest ? *eval_manifest : train_manifest;
      RunLog::Eval ev;
      ev.epoch = epoch;
      ev.report = evaluate_checkpoint(probe, m, Branch::regression);
      result.log.evals.push_back(std::move(ev));
    }
  }

  result.checkpoint.config = model_cfg;
  result.checkpoint.params = std::move(params);
  result.checkpoint.adam = std::move(adam);
  result.checkpoint.has_adam = true;
  result.checkpoint.rng_state = dropout_rng.serialize();
  result.checkpoint.epoch = cfg.epochs;
  result.checkpoint.config_echo = config_echo;
  return result;
}

std::vector<UttPrediction> checkpoint_predictions(const Checkpoint& ckpt,
                                                  const CohortManifest& manifest) {
  if (manifest.patients.empty()) throw DataError("evaluate: empty manifest");
  const auto& first = manifest.patients.at(0).sessions.at(0);
  const auto dim = read_feature_header(manifest.feature_file(first)).second;
  if (static_cast<int>(dim) != ckpt.config.input_dim)
    throw ConfigError("evaluate: manifest feature dim " + std::to_string(dim) +
                      " does not match checkpoint input_dim " +
                      std::to_string(ckpt.config.input_dim));
  SequenceBuilder builder(ckpt.config.pooling_mode, ckpt.config.phoneme_vocab,
                          manifest.base_dir);
  return predict_sequences(ckpt.params, ckpt.config, builder.build_all(manifest));
}

MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const CohortManifest& manifest,
                                 Branch branch) {
  return compute_metrics(to_labeled(checkpoint_predictions(ckpt, manifest), branch), branch);
}

std::string RunLog::to_jsonl(bool include_timing) const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["kind"] = "epoch";
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["lr"] = e.lr;
    j["steps"] = e.steps;
    if (include_timing) j["wall_seconds"] = e.wall_seconds;
    out += j.dump() + "\n";
  }
  for (const auto& ev : evals) {
    nlohmann::ordered_json j;
    j["kind"] = "eval";
    j["epoch"] = ev.epoch;
    j["report"] = nlohmann::ordered_json::parse(ev.report.to_json());
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace alst
