#include "sumfact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace sumfact {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b)
    throw Error(ErrorKind::MisalignedInputs, "lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

// Lentz's continued fraction for I_x(a, b); valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

std::string pair_key(const std::string& doc, const std::string& summarizer) { return doc + "\x1f" + summarizer; }

std::string printable_key(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '\x1f', '/');
  return out;
}

std::optional<Correlation> try_correlation(const auto& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::ConstantVector:
      case ErrorKind::TooFewPoints:
      case ErrorKind::TooFewSystems:
        return std::nullopt;
      default:
        throw;
    }
  }
}

}  // namespace

BalancedAccuracy balanced_accuracy(std::span<const int> gt, std::span<const int> pred) {
  require_same_length(gt.size(), pred.size());
  BalancedAccuracy out;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool actual = gt[i] == 1;
    const bool predicted = pred[i] == 1;
    if (actual) (predicted ? out.tp : out.fn)++;
    else (predicted ? out.fp : out.tn)++;
  }
  if (out.tp + out.fn == 0 || out.tn + out.fp == 0)
    throw Error(ErrorKind::DegenerateGroundTruth, "ground truth holds a single class; bAcc is undefined");
  out.tpr = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fn);
  out.tnr = static_cast<double>(out.tn) / static_cast<double>(out.tn + out.fp);
  out.bacc = (out.tpr + out.tnr) / 2.0;
  return out;
}

double plain_accuracy(std::span<const int> gt, std::span<const int> pred) {
  require_same_length(gt.size(), pred.size());
  if (gt.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hits += (gt[i] == pred[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

double faithfulness_score(const FeedbackRecord& record) {
  if (record.feedback.empty()) return 0.0;
  std::size_t fact = 0;
  for (const auto& f : record.feedback) fact += f.binary_label == 0 ? 1 : 0;
  return static_cast<double>(fact) / static_cast<double>(record.feedback.size());
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  const double df = static_cast<double>(n - 2);
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  const double t2 = r2 * df / (1.0 - r2);
  // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2));
}

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  require_same_length(xs.size(), ys.size());
  if (xs.size() < 3) throw Error(ErrorKind::TooFewPoints, "need at least 3 points, got " + std::to_string(xs.size()));

  // Single-pass co-moment update.
  double mean_x = 0.0, mean_y = 0.0, co = 0.0, m2x = 0.0, m2y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    mean_x += dx / n;
    mean_y += dy / n;
    co += dx * (ys[i] - mean_y);
    m2x += dx * (xs[i] - mean_x);
    m2y += dy * (ys[i] - mean_y);
  }
  if (m2x <= 0.0 || m2y <= 0.0) throw Error(ErrorKind::ConstantVector, "correlation undefined for a constant vector");

  Correlation c;
  c.n = xs.size();
  c.r = std::clamp(co / std::sqrt(m2x * m2y), -1.0, 1.0);
  c.p = correlation_p_value(c.r, c.n);
  return c;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> xs, std::span<const double> ys) {
  require_same_length(xs.size(), ys.size());
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

Correlation spearman_system(const std::map<std::string, std::vector<double>>& gt_scores,
                            const std::map<std::string, std::vector<double>>& pred_scores) {
  std::vector<std::string> only_gt, only_pred;
  for (const auto& [k, _] : gt_scores)
    if (!pred_scores.contains(k)) only_gt.push_back(k);
  for (const auto& [k, _] : pred_scores)
    if (!gt_scores.contains(k)) only_pred.push_back(k);
  if (!only_gt.empty() || !only_pred.empty())
    throw Error(ErrorKind::KeyMismatch, std::to_string(only_gt.size()) + " system(s) only in ground truth, " +
                                            std::to_string(only_pred.size()) + " only in predictions");
  if (gt_scores.size() < 3)
    throw Error(ErrorKind::TooFewSystems, "need at least 3 systems, got " + std::to_string(gt_scores.size()));

  auto mean = [](const std::string& key, const std::vector<double>& v) {
    if (v.empty()) throw Error(ErrorKind::TooFewPoints, "system '" + key + "' has no scores");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::vector<double> gt_means, pred_means;
  for (const auto& [key, scores] : gt_scores) {
    gt_means.push_back(mean(key, scores));
    pred_means.push_back(mean(key, pred_scores.at(key)));
  }
  return spearman(gt_means, pred_means);
}

LocalizationReport localization_accuracy(std::span<const ErrorCategory> predictions,
                                         std::span<const std::vector<ErrorCategory>> human_sets) {
  require_same_length(predictions.size(), human_sets.size());
  LocalizationReport report;
  for (auto c : kLocalizableCategories) report.per_category[c] = {};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const ErrorCategory p = predictions[i];
    if (!is_localizable(p)) continue;
    auto& cell = report.per_category[p];
    ++cell.predicted;
    const auto& gold = human_sets[i];
    if (std::find(gold.begin(), gold.end(), p) != gold.end()) ++cell.correct;
  }
  double sum = 0.0;
  for (auto& [_, cell] : report.per_category) {
    cell.accuracy = cell.predicted == 0 ? 0.0 : static_cast<double>(cell.correct) / static_cast<double>(cell.predicted);
    report.total_predicted += cell.predicted;
    report.total_correct += cell.correct;
    sum += cell.accuracy;
  }
  if (report.total_predicted > 0) report.mean = sum / static_cast<double>(kLocalizableCategories.size());
  return report;
}

std::map<std::string, ErrorDistribution> error_distribution(std::span<const FeedbackRecord> records) {
  std::map<std::string, ErrorDistribution> out;
  for (const auto& r : records) {
    auto& d = out[r.summarizer_id];
    ++d.summaries;
    bool any_error = false;
    for (const auto& f : r.feedback) {
      if (f.binary_label == 0) ++d.no_error_sentences;
      else {
        ++d.error_sentences;
        any_error = true;
      }
      if (f.category) ++d.category_histogram[*f.category];
    }
    if (any_error) ++d.summaries_with_error;
  }
  for (auto& [_, d] : out) {
    const auto sentences = d.no_error_sentences + d.error_sentences;
    d.sentence_error_ratio = sentences == 0 ? 0.0 : static_cast<double>(d.error_sentences) / static_cast<double>(sentences);
    d.summary_error_ratio =
        d.summaries == 0 ? 0.0 : static_cast<double>(d.summaries_with_error) / static_cast<double>(d.summaries);
  }
  return out;
}

GoldRecord gold_from_feedback(const FeedbackRecord& record) {
  GoldRecord g;
  g.doc_id = record.doc_id;
  g.summarizer_id = record.summarizer_id;
  bool categorized = false;
  for (const auto& f : record.feedback) {
    g.labels.push_back(f.binary_label);
    categorized = categorized || f.category.has_value();
  }
  if (categorized) {
    for (const auto& f : record.feedback)
      g.categories.push_back(f.category ? std::vector<ErrorCategory>{*f.category} : std::vector<ErrorCategory>{});
  }
  return g;
}

GoldRecord gold_from_annotation(const HumanAnnotation& annotation) {
  GoldRecord g;
  g.doc_id = annotation.doc_id;
  g.summarizer_id = annotation.summarizer_id;
  bool categorized = false;
  for (std::size_t k = 0; k < annotation.per_sentence.size(); ++k) {
    const auto& s = annotation.per_sentence[k];
    const auto label = gold_label(s);
    if (!label)
      throw Error(ErrorKind::InvalidRecord, "(" + g.doc_id + ", " + g.summarizer_id + ") sentence " +
                                                std::to_string(k + 1) + ": annotators disagree; consolidate first");
    g.labels.push_back(*label);
    categorized = categorized || !s.categories.empty();
  }
  if (categorized)
    for (const auto& s : annotation.per_sentence) g.categories.push_back(gold_categories(s));
  return g;
}

std::string CoverageDiff::summary() const {
  std::ostringstream os;
  os << missing_in_pred.size() << " pair(s) missing from predictions, " << missing_in_gt.size()
     << " pair(s) missing from ground truth, " << sentence_count_mismatch.size()
     << " pair(s) with different sentence counts";
  auto list = [&os](const char* title, const std::vector<std::string>& keys) {
    const std::size_t shown = std::min<std::size_t>(keys.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) os << "\n  " << title << ' ' << keys[i];
    if (keys.size() > shown) os << "\n  " << title << " ... (" << keys.size() - shown << " more)";
  };
  list("- pred lacks", missing_in_pred);
  list("+ gt lacks", missing_in_gt);
  list("~ length differs", sentence_count_mismatch);
  return os.str();
}

CoverageDiff coverage_diff(std::span<const GoldRecord> gt, std::span<const FeedbackRecord> pred) {
  std::map<std::string, std::size_t> gt_len, pred_len;
  for (const auto& g : gt) gt_len[pair_key(g.doc_id, g.summarizer_id)] = g.labels.size();
  for (const auto& p : pred) pred_len[pair_key(p.doc_id, p.summarizer_id)] = p.feedback.size();
  CoverageDiff diff;
  for (const auto& [k, n] : gt_len) {
    auto it = pred_len.find(k);
    if (it == pred_len.end()) diff.missing_in_pred.push_back(printable_key(k));
    else if (it->second != n) diff.sentence_count_mismatch.push_back(printable_key(k));
  }
  for (const auto& [k, _] : pred_len)
    if (!gt_len.contains(k)) diff.missing_in_gt.push_back(printable_key(k));
  if (gt_len.size() != gt.size() || pred_len.size() != pred.size())
    diff.sentence_count_mismatch.push_back("(duplicate pairs present)");
  return diff;
}

EvalReport evaluate(std::span<const GoldRecord> gt, std::span<const FeedbackRecord> pred,
                    const std::map<std::string, std::string>& domain_of) {
  const CoverageDiff diff = coverage_diff(gt, pred);
  if (!diff.empty()) throw Error(ErrorKind::CoverageMismatch, diff.summary());

  // Canonical order makes the report independent of input order.
  std::map<std::string, const GoldRecord*> gold_by_key;
  std::map<std::string, const FeedbackRecord*> pred_by_key;
  for (const auto& g : gt) gold_by_key[pair_key(g.doc_id, g.summarizer_id)] = &g;
  for (const auto& p : pred) pred_by_key[pair_key(p.doc_id, p.summarizer_id)] = &p;

  EvalReport report;
  std::vector<int> gold_labels, pred_labels;
  std::vector<double> gold_faith, pred_faith;
  std::map<std::string, std::vector<double>> gold_by_system, pred_by_system;
  std::vector<ErrorCategory> loc_pred;
  std::vector<std::vector<ErrorCategory>> loc_gold;
  bool localizable = false;
  std::size_t defaulted = 0;

  struct Slice {
    std::vector<double> gold_faith, pred_faith;
    std::map<std::string, std::vector<double>> gold_sys, pred_sys;
  };
  std::map<std::string, Slice> slices;

  for (const auto& [key, g] : gold_by_key) {
    const FeedbackRecord& p = *pred_by_key.at(key);
    defaulted += p.defaulted ? 1 : 0;
    std::size_t fact_gold = 0;
    for (std::size_t k = 0; k < g->labels.size(); ++k) {
      gold_labels.push_back(g->labels[k]);
      pred_labels.push_back(p.feedback[k].binary_label);
      fact_gold += g->labels[k] == 0 ? 1 : 0;
    }
    const double fg = static_cast<double>(fact_gold) / static_cast<double>(g->labels.size());
    const double fp = faithfulness_score(p);
    gold_faith.push_back(fg);
    pred_faith.push_back(fp);
    gold_by_system[g->summarizer_id].push_back(fg);
    pred_by_system[g->summarizer_id].push_back(fp);

    auto dom = domain_of.find(g->doc_id);
    auto& slice = slices[dom == domain_of.end() ? std::string("other") : dom->second];
    slice.gold_faith.push_back(fg);
    slice.pred_faith.push_back(fp);
    slice.gold_sys[g->summarizer_id].push_back(fg);
    slice.pred_sys[g->summarizer_id].push_back(fp);

    if (!g->categories.empty()) {
      for (std::size_t k = 0; k < g->categories.size(); ++k) {
        if (!p.feedback[k].category) continue;
        localizable = true;
        loc_pred.push_back(*p.feedback[k].category);
        loc_gold.push_back(g->categories[k]);
      }
    }
  }

  report.n_sentences = gold_labels.size();
  try {
    const auto b = balanced_accuracy(gold_labels, pred_labels);
    report.bacc = b.bacc;
    report.tpr = b.tpr;
    report.tnr = b.tnr;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateGroundTruth) throw;
    report.bacc_degenerate = true;
    report.bacc = plain_accuracy(gold_labels, pred_labels);
    report.warnings.emplace_back("ground truth holds a single class; bacc reports plain accuracy");
  }

  report.n_summaries = gold_faith.size();
  report.pearson = try_correlation([&] { return pearson(gold_faith, pred_faith); });
  if (!report.pearson) report.warnings.emplace_back("summary-level Pearson undefined (constant scores or < 3 summaries)");

  report.n_systems = gold_by_system.size();
  report.spearman = try_correlation([&] { return spearman_system(gold_by_system, pred_by_system); });
  if (!report.spearman) report.warnings.emplace_back("system-level Spearman undefined (tied systems or < 3 systems)");

  if (localizable) report.localization = localization_accuracy(loc_pred, loc_gold);

  for (const auto& [name, slice] : slices) {
    if (slice.gold_faith.size() < kMinDomainSlice) continue;
    DomainSlice d;
    d.n = slice.gold_faith.size();
    d.pearson = try_correlation([&] { return pearson(slice.gold_faith, slice.pred_faith); });
    d.spearman = try_correlation([&] { return spearman_system(slice.gold_sys, slice.pred_sys); });
    report.per_domain[name] = d;
  }

  report.defaulted_fraction =
      gold_by_key.empty() ? 0.0 : static_cast<double>(defaulted) / static_cast<double>(gold_by_key.size());
  return report;
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const EvalReport& r) {
  Json j;
  j["bacc"] = opt(r.bacc);
  j["tpr"] = opt(r.tpr);
  j["tnr"] = opt(r.tnr);
  j["bacc_degenerate"] = r.bacc_degenerate;
  j["n_sentences"] = r.n_sentences;
  j["pearson_r"] = r.pearson ? Json(r.pearson->r) : Json(nullptr);
  j["pearson_p"] = r.pearson ? Json(r.pearson->p) : Json(nullptr);
  j["n_summaries"] = r.n_summaries;
  j["spearman_rho"] = r.spearman ? Json(r.spearman->r) : Json(nullptr);
  j["spearman_p"] = r.spearman ? Json(r.spearman->p) : Json(nullptr);
  j["n_systems"] = r.n_systems;
  if (r.localization) {
    Json loc;
    Json cats;
    for (auto c : kLocalizableCategories) {
      const auto& cell = r.localization->per_category.at(c);
      cats[std::string(id_of(c))] = {{"predicted", cell.predicted}, {"correct", cell.correct}, {"accuracy", cell.accuracy}};
    }
    loc["categories"] = std::move(cats);
    loc["mean"] = opt(r.localization->mean);
    loc["total_predicted"] = r.localization->total_predicted;
    loc["total_correct"] = r.localization->total_correct;
    j["localization"] = std::move(loc);
  } else {
    j["localization"] = nullptr;
  }
  Json domains = Json::object();
  for (const auto& [name, d] : r.per_domain) {
    domains[name] = {{"pearson_r", d.pearson ? Json(d.pearson->r) : Json(nullptr)},
                     {"pearson_p", d.pearson ? Json(d.pearson->p) : Json(nullptr)},
                     {"spearman_rho", d.spearman ? Json(d.spearman->r) : Json(nullptr)},
                     {"spearman_p", d.spearman ? Json(d.spearman->p) : Json(nullptr)},
                     {"n", d.n}};
  }
  j["per_domain"] = std::move(domains);
  j["defaulted_fraction"] = r.defaulted_fraction;
  j["warnings"] = r.warnings;
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  auto row = [&os](const std::string& key, const std::optional<double>& v) {
    os << key << ',';
    if (v) os << *v;
    os << '\n';
  };
  auto corr = [](const std::optional<Correlation>& c, bool want_r) -> std::optional<double> {
    if (!c) return std::nullopt;
    return want_r ? c->r : c->p;
  };
  os << "metric,value\n";
  row("bacc", r.bacc);
  row("tpr", r.tpr);
  row("tnr", r.tnr);
  row("bacc_degenerate", r.bacc_degenerate ? 1.0 : 0.0);
  row("n_sentences", static_cast<double>(r.n_sentences));
  row("pearson_r", corr(r.pearson, true));
  row("pearson_p", corr(r.pearson, false));
  row("n_summaries", static_cast<double>(r.n_summaries));
  row("spearman_rho", corr(r.spearman, true));
  row("spearman_p", corr(r.spearman, false));
  row("n_systems", static_cast<double>(r.n_systems));
  if (r.localization) {
    for (auto c : kLocalizableCategories) {
      const auto& cell = r.localization->per_category.at(c);
      const std::string prefix = "localization." + std::string(id_of(c));
      row(prefix + ".predicted", static_cast<double>(cell.predicted));
      row(prefix + ".correct", static_cast<double>(cell.correct));
      row(prefix + ".accuracy", cell.accuracy);
    }
    row("localization.mean", r.localization->mean);
  }
  for (const auto& [name, d] : r.per_domain) {
    const std::string prefix = "per_domain." + name;
    row(prefix + ".pearson_r", corr(d.pearson, true));
    row(prefix + ".pearson_p", corr(d.pearson, false));
    row(prefix + ".spearman_rho", corr(d.spearman, true));
    row(prefix + ".spearman_p", corr(d.spearman, false));
    row(prefix + ".n", static_cast<double>(d.n));
  }
  row("defaulted_fraction", r.defaulted_fraction);
  return os.str();
}

}  // namespace sumfact
