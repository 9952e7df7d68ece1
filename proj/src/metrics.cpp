#include "alst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "alst/errors.hpp"

#include "json.hpp"

namespace alst {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int predicted_class(const LabeledPrediction& p, Branch branch) {
  if (branch == Branch::classification) {
    if (!p.pred_probs) throw ContractError("metrics: classification branch needs pred_probs");
    int best = 0;
    for (int c = 1; c < 5; ++c)
      if ((*p.pred_probs)[static_cast<std::size_t>(c)] >
          (*p.pred_probs)[static_cast<std::size_t>(best)])
        best = c;
    return best;
  }
  return std::clamp(static_cast<int>(std::llround(p.pred_score)), 0, 4);
}

// patient groups in sorted patient order; records sorted by
// (date, true, pred) so results never depend on input order
std::map<std::string, std::vector<const LabeledPrediction*>> group_by_patient(
    const std::vector<LabeledPrediction>& preds) {
  std::map<std::string, std::vector<const LabeledPrediction*>> groups;
  for (const auto& p : preds) groups[p.patient_id].push_back(&p);
  for (auto& [id, recs] : groups)
    std::sort(recs.begin(), recs.end(), [](const LabeledPrediction* a, const LabeledPrediction* b) {
      return std::tie(a->date_days, a->true_score, a->pred_score) <
             std::tie(b->date_days, b->true_score, b->pred_score);
    });
  return groups;
}

}  // namespace

std::vector<LabeledPrediction> to_labeled(const std::vector<UttPrediction>& preds, Branch branch) {
  std::vector<LabeledPrediction> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    LabeledPrediction l;
    l.patient_id = p.patient_id;
    l.date_days = p.date_days;
    l.true_score = p.true_score;
    if (branch == Branch::classification) {
      l.pred_probs = p.p_hat;
      l.pred_score = static_cast<double>(predict_class(p, Branch::classification));
    } else {
      l.pred_score = p.y_hat;
    }
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ContractError("spearman_rho: need two equal-length vectors of size >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;  // a constant side carries no ordering
  return num / std::sqrt(dx * dy);
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (y.size() != n || n < 2)
    throw ContractError("kendall_tau_b: need two equal-length vectors of size >= 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(x[a], y[a]) < std::tie(x[b], y[b]);
  });

  auto pairs_of = [](std::int64_t t) { return t * (t - 1) / 2; };
  const std::int64_t n0 = pairs_of(static_cast<std::int64_t>(n));
  std::int64_t n1 = 0, n3 = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
      n1 += pairs_of(static_cast<std::int64_t>(j - i + 1));
      // joint ties inside the x-tie run
      std::size_t a = i;
      while (a <= j) {
        std::size_t b = a;
        while (b + 1 <= j && y[order[b + 1]] == y[order[a]]) ++b;
        n3 += pairs_of(static_cast<std::int64_t>(b - a + 1));
        a = b + 1;
      }
      i = j + 1;
    }
  }
  std::int64_t n2 = 0;
  {
    std::vector<double> ys = y;
    std::sort(ys.begin(), ys.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && ys[j + 1] == ys[i]) ++j;
      n2 += pairs_of(static_cast<std::int64_t>(j - i + 1));
      i = j + 1;
    }
  }

  // discordant-ish swaps: strict inversions of y in x-order (merge count)
  std::vector<double> seq(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = y[order[i]];
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, t = lo;
      while (a < mid && b < hi) {
        if (seq[b] < seq[a]) {
          swaps += static_cast<std::int64_t>(mid - a);
          tmp[t++] = seq[b++];
        } else {
          tmp[t++] = seq[a++];
        }
      }
      while (a < mid) tmp[t++] = seq[a++];
      while (b < hi) tmp[t++] = seq[b++];
      std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
                tmp.begin() + static_cast<std::ptrdiff_t>(hi),
                seq.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }

  const std::int64_t concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(concordant_minus_discordant) / denom;
}

double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size() || scores.empty())
    throw ContractError("binary_auc: bad inputs");
  const auto ranks = average_ranks(scores);
  std::int64_t n_pos = 0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (positive[i]) {
      ++n_pos;
      rank_sum += ranks[i];
    }
  const std::int64_t n_neg = static_cast<std::int64_t>(scores.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ContractError("binary_auc: single-class input");
  const double u = rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

ConfusionResult confusion_and_f1(const std::vector<LabeledPrediction>& preds, Branch branch) {
  if (preds.empty()) throw ContractError("confusion_and_f1: empty input");
  ConfusionResult r;
  for (const auto& p : preds) {
    if (p.true_score < 0 || p.true_score > 4)
      throw ContractError("confusion_and_f1: true score outside 0..4");
    const int pc = predicted_class(p, branch);
    ++r.confusion[static_cast<std::size_t>(p.true_score)][static_cast<std::size_t>(pc)];
    ++r.support[static_cast<std::size_t>(p.true_score)];
  }
  std::int64_t correct = 0;
  for (int c = 0; c < 5; ++c) correct += r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());

  // one-vs-all F1, averaged over classes present in truth or predictions
  double f1_sum = 0.0;
  for (int c = 0; c < 5; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::int64_t tp = r.confusion[cu][cu], fp = 0, fn = 0;
    for (std::size_t o = 0; o < 5; ++o) {
      if (o == cu) continue;
      fp += r.confusion[o][cu];
      fn += r.confusion[cu][o];
    }
    if (tp + fp + fn == 0 && r.support[cu] == 0) continue;  // absent everywhere
    const double prec = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    f1_sum += f1;
    r.classes_evaluated.push_back(c);
  }
  r.macro_f1 = r.classes_evaluated.empty() ? 0.0
                                           : f1_sum / static_cast<double>(r.classes_evaluated.size());
  return r;
}

std::optional<double> auc_ovr_macro(const std::vector<LabeledPrediction>& preds) {
  if (preds.empty()) throw ContractError("auc_ovr_macro: empty input");
  for (const auto& p : preds)
    if (!p.pred_probs) throw ContractError("auc_ovr_macro: pred_probs required for every record");
  double sum = 0.0;
  int evaluated = 0;
  for (int c = 0; c < 5; ++c) {
    std::vector<double> scores;
    std::vector<bool> positive;
    std::int64_t n_pos = 0;
    for (const auto& p : preds) {
      scores.push_back((*p.pred_probs)[static_cast<std::size_t>(c)]);
      const bool pos = p.true_score == c;
      positive.push_back(pos);
      n_pos += pos;
    }
    if (n_pos == 0 || n_pos == static_cast<std::int64_t>(preds.size())) continue;
    sum += binary_auc(scores, positive);
    ++evaluated;
  }
  if (evaluated == 0) return std::nullopt;
  return sum / evaluated;
}

IntraPatientRank intra_patient_rank(const std::vector<LabeledPrediction>& preds,
                                    RankStatistic statistic) {
  IntraPatientRank out;
  double sum = 0.0;
  for (const auto& [pid, recs] : group_by_patient(preds)) {
    if (recs.size() < 2) {
      ++out.excluded_single;
      continue;
    }
    std::vector<double> truth, guess;
    for (const auto* r : recs) {
      truth.push_back(static_cast<double>(r->true_score));
      guess.push_back(r->pred_score);
    }
    if (std::adjacent_find(truth.begin(), truth.end(), std::not_equal_to<>()) == truth.end()) {
      ++out.excluded_constant;
      continue;
    }
    MetricReport::PatientRank pr;
    pr.patient_id = pid;
    pr.n_records = recs.size();
    pr.rho = spearman_rho(truth, guess);
    pr.tau = kendall_tau_b(truth, guess);
    sum += statistic == RankStatistic::spearman ? pr.rho : pr.tau;
    out.per_patient.push_back(std::move(pr));
  }
  if (!out.per_patient.empty()) out.mean = sum / static_cast<double>(out.per_patient.size());
  return out;
}

std::optional<double> pairwise_accuracy(const std::vector<LabeledPrediction>& preds,
                                        double tie_epsilon) {
  std::int64_t total = 0, matched = 0;
  for (const auto& [pid, recs] : group_by_patient(preds)) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
      for (std::size_t j = i + 1; j < recs.size(); ++j) {
        // i is the earlier recording
        const int dt = recs[i]->true_score - recs[j]->true_score;
        const int true_label = dt > 0 ? 1 : dt < 0 ? -1 : 0;
        const double dp = recs[i]->pred_score - recs[j]->pred_score;
        const int pred_label = std::abs(dp) <= tie_epsilon ? 0 : dp > 0 ? 1 : -1;
        ++total;
        matched += true_label == pred_label;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(total);
}

double mse_metric(const std::vector<LabeledPrediction>& preds) {
  if (preds.empty()) throw ContractError("mse_metric: empty input");
  double s = 0.0;
  for (const auto& p : preds) {
    const double d = p.pred_score - static_cast<double>(p.true_score);
    s += d * d;
  }
  return s / static_cast<double>(preds.size());
}

MetricReport compute_metrics(const std::vector<LabeledPrediction>& preds, Branch branch,
                             double tie_epsilon) {
  MetricReport rep;
  rep.branch = branch == Branch::regression ? "regression" : "classification";
  rep.tie_epsilon = tie_epsilon;

  const ConfusionResult cf = confusion_and_f1(preds, branch);
  rep.confusion = cf.confusion;
  rep.support = cf.support;
  rep.macro_f1 = cf.macro_f1;
  rep.accuracy = cf.accuracy;
  rep.f1_classes_evaluated = cf.classes_evaluated;

  if (branch == Branch::classification) rep.auc_ovr_macro = auc_ovr_macro(preds);
  if (branch == Branch::regression) rep.mse = mse_metric(preds);

  const IntraPatientRank spear = intra_patient_rank(preds, RankStatistic::spearman);
  const IntraPatientRank kend = intra_patient_rank(preds, RankStatistic::kendall);
  rep.spearman_rho = spear.mean;
  rep.kendall_tau = kend.mean;
  rep.per_patient = spear.per_patient;
  rep.patients_excluded_constant = spear.excluded_constant;
  rep.patients_excluded_single = spear.excluded_single;
  rep.pairwise_accuracy = pairwise_accuracy(preds, tie_epsilon);
  return rep;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["branch"] = branch;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v)
      j[key] = *v;
    else
      j[key] = nullptr;
  };
  put("macro_f1", macro_f1);
  put("accuracy", accuracy);
  put("auc_ovr_macro", auc_ovr_macro);
  put("spearman_rho", spearman_rho);
  put("kendall_tau", kendall_tau);
  put("pairwise_accuracy", pairwise_accuracy);
  put("mse", mse);
  j["confusion"] = confusion;
  j["support"] = support;
  j["f1_classes_evaluated"] = f1_classes_evaluated;
  j["patients_excluded_constant"] = patients_excluded_constant;
  j["patients_excluded_single"] = patients_excluded_single;
  j["tie_epsilon"] = tie_epsilon;
  auto pp = nlohmann::ordered_json::array();
  for (const auto& r : per_patient)
    pp.push_back({{"patient_id", r.patient_id}, {"rho", r.rho}, {"tau", r.tau},
                  {"n_records", r.n_records}});
  j["per_patient"] = pp;
  return j.dump(2) + "\n";
}

std::string MetricReport::csv_header() {
  return "branch,macro_f1,accuracy,auc_ovr_macro,spearman_rho,kendall_tau,pairwise_accuracy,mse";
}

std::string MetricReport::csv_row() const {
  auto cell = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  return branch + "," + cell(macro_f1) + "," + cell(accuracy) + "," + cell(auc_ovr_macro) + "," +
         cell(spearman_rho) + "," + cell(kendall_tau) + "," + cell(pairwise_accuracy) + "," +
         cell(mse);
}

}  // namespace alst
