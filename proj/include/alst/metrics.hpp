#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alst/model.hpp"

namespace alst {

struct LabeledPrediction {
  std::string patient_id;
  std::int64_t date_days = 0;
  int true_score = 0;                                   // 0..4
  double pred_score = 0.0;                              // continuous or argmax class
  std::optional<std::array<double, 5>> pred_probs;      // classification branch only
};

// Map model outputs to metric inputs. regression: pred_score = y_hat, no
// probs; classification: pred_score = argmax class, probs attached.
std::vector<LabeledPrediction> to_labeled(const std::vector<UttPrediction>& preds, Branch branch);

struct MetricReport {
  std::string branch;
  std::optional<double> macro_f1;
  std::optional<double> accuracy;
  std::optional<double> auc_ovr_macro;
  std::optional<double> spearman_rho;
  std::optional<double> kendall_tau;
  std::optional<double> pairwise_accuracy;
  std::optional<double> mse;
  std::array<std::array<std::int64_t, 5>, 5> confusion{};  // [true][pred]
  std::array<std::int64_t, 5> support{};
  std::vector<int> f1_classes_evaluated;

  struct PatientRank {
    std::string patient_id;
    double rho = 0.0;
    double tau = 0.0;
    std::size_t n_records = 0;
  };
  std::vector<PatientRank> per_patient;
  std::size_t patients_excluded_constant = 0;  // constant true scores
  std::size_t patients_excluded_single = 0;    // fewer than 2 records
  double tie_epsilon = 0.1;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// Tie-aware building blocks (exposed for reuse and direct testing).
std::vector<double> average_ranks(const std::vector<double>& v);          // 1-based
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);
// Mann-Whitney AUC of scores for a binary split; ties credit 0.5.
double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive);

struct ConfusionResult {
  std::array<std::array<std::int64_t, 5>, 5> confusion{};
  std::array<std::int64_t, 5> support{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<int> classes_evaluated;
};
ConfusionResult confusion_and_f1(const std::vector<LabeledPrediction>& preds, Branch branch);

std::optional<double> auc_ovr_macro(const std::vector<LabeledPrediction>& preds);

enum class RankStatistic { spearman, kendall };
struct IntraPatientRank {
  std::optional<double> mean;  // unweighted over eligible patients
  std::vector<MetricReport::PatientRank> per_patient;
  std::size_t excluded_constant = 0;
  std::size_t excluded_single = 0;
};
IntraPatientRank intra_patient_rank(const std::vector<LabeledPrediction>& preds,
                                    RankStatistic statistic);

// All within-patient date-ordered pairs, pooled. True label is
// sign(y_earlier - y_later); predictions tie inside +-tie_epsilon.
std::optional<double> pairwise_accuracy(const std::vector<LabeledPrediction>& preds,
                                        double tie_epsilon = 0.1);

double mse_metric(const std::vector<LabeledPrediction>& preds);

// The full report; AUC only on the classification branch, MSE only on the
// regression branch.
MetricReport compute_metrics(const std::vector<LabeledPrediction>& preds, Branch branch,
                             double tie_epsilon = 0.1);

}  // namespace alst
