#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sumfact/corpus.hpp"
#include "sumfact/feedback.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/taxonomy.hpp"

namespace sumfact {

// ---- sentence level --------------------------------------------------------

/// Positive class is label 1 (fact error).
struct BalancedAccuracy {
  double bacc = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Throws DegenerateGroundTruth when `gt` holds a single class and
/// MisalignedInputs on a length mismatch.
BalancedAccuracy balanced_accuracy(std::span<const int> gt, std::span<const int> pred);

double plain_accuracy(std::span<const int> gt, std::span<const int> pred);

// ---- summary and system level ----------------------------------------------

double faithfulness_score(const FeedbackRecord& record);

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n = 0;
};

/// Regularized incomplete beta I_x(a, b) (continued fraction, |err| < 1e-10).
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p for a correlation coefficient r over n points, via the
/// Student-t statistic r*sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
double correlation_p_value(double r, std::size_t n);

/// Sample Pearson r. Throws TooFewPoints (n < 3), ConstantVector, MisalignedInputs.
Correlation pearson(std::span<const double> xs, std::span<const double> ys);

/// 1-based fractional ranks; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson on average ranks.
Correlation spearman(std::span<const double> xs, std::span<const double> ys);

/// Rank correlation between per-system mean scores. Throws KeyMismatch or
/// TooFewSystems (< 3).
Correlation spearman_system(const std::map<std::string, std::vector<double>>& gt_scores,
                            const std::map<std::string, std::vector<double>>& pred_scores);

// ---- error localization ----------------------------------------------------

struct CategoryLocalization {
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // correct / predicted, 0 when nothing was predicted

  bool operator==(const CategoryLocalization&) const = default;
};

struct LocalizationReport {
  std::map<ErrorCategory, CategoryLocalization> per_category;  // all seven localizable keys
  std::optional<double> mean;  // unweighted over the seven; empty when nothing was predicted
  std::size_t total_predicted = 0;
  std::size_t total_correct = 0;
};

/// Predictions of no_error / other are ignored. A prediction is correct when it
/// belongs to the union of that sentence's annotator categories.
LocalizationReport localization_accuracy(std::span<const ErrorCategory> predictions,
                                         std::span<const std::vector<ErrorCategory>> human_sets);

// ---- error distribution ----------------------------------------------------

struct ErrorDistribution {
  std::size_t no_error_sentences = 0;
  std::size_t error_sentences = 0;
  double sentence_error_ratio = 0.0;
  std::size_t summaries = 0;
  std::size_t summaries_with_error = 0;
  double summary_error_ratio = 0.0;
  std::map<ErrorCategory, std::size_t> category_histogram;
};

/// Keyed by summarizer_id.
std::map<std::string, ErrorDistribution> error_distribution(std::span<const FeedbackRecord> records);

// ---- full evaluation -------------------------------------------------------

/// Ground truth for one (doc, summarizer) pair.
struct GoldRecord {
  std::string doc_id;
  std::string summarizer_id;
  std::vector<int> labels;
  // Per-sentence union of annotator categories; empty when the source is binary only.
  std::vector<std::vector<ErrorCategory>> categories;
};

GoldRecord gold_from_feedback(const FeedbackRecord& record);
/// Throws InvalidRecord when two annotators still disagree (consolidate first).
GoldRecord gold_from_annotation(const HumanAnnotation& annotation);

struct DomainSlice {
  std::size_t n = 0;
  std::optional<Correlation> pearson;
  std::optional<Correlation> spearman;
};

struct EvalReport {
  std::optional<double> bacc;
  std::optional<double> tpr;
  std::optional<double> tnr;
  bool bacc_degenerate = false;  // single-class ground truth: bacc holds plain accuracy
  std::size_t n_sentences = 0;
  std::optional<Correlation> pearson;
  std::size_t n_summaries = 0;
  std::optional<Correlation> spearman;
  std::size_t n_systems = 0;
  std::optional<LocalizationReport> localization;
  std::map<std::string, DomainSlice> per_domain;
  double defaulted_fraction = 0.0;
  std::vector<std::string> warnings;
};

struct CoverageDiff {
  std::vector<std::string> missing_in_pred;
  std::vector<std::string> missing_in_gt;
  std::vector<std::string> sentence_count_mismatch;

  bool empty() const {
    return missing_in_pred.empty() && missing_in_gt.empty() && sentence_count_mismatch.empty();
  }
  std::string summary() const;
};

CoverageDiff coverage_diff(std::span<const GoldRecord> gt, std::span<const FeedbackRecord> pred);

/// Minimum number of summaries for a per-domain slice to be reported.
inline constexpr std::size_t kMinDomainSlice = 21;

/// `domain_of` maps doc_id to a domain name; unmapped documents fall in "other".
/// Throws CoverageMismatch unless gt and pred cover the same pairs with equal
/// sentence counts.
EvalReport evaluate(std::span<const GoldRecord> gt, std::span<const FeedbackRecord> pred,
                    const std::map<std::string, std::string>& domain_of);

Json to_json(const EvalReport& report);
std::string to_csv(const EvalReport& report);

}  // namespace sumfact
