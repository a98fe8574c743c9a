#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctaf/common.hpp"
#include "ctaf/records.hpp"

namespace ctaf {

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Confusion matrix and F1
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<long long>> counts;  // [gold][pred]

  explicit ConfusionMatrix(std::vector<std::string> cls = {})
      : classes(std::move(cls)), counts(classes.size(), std::vector<long long>(classes.size(), 0)) {}

  std::size_t index(std::string_view label) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == label) return i;
    throw Error("label '" + std::string(label) + "' not in class set");
  }
  void add(std::string_view gold, std::string_view pred, long long n = 1) { counts[index(gold)][index(pred)] += n; }
  long long at(std::string_view gold, std::string_view pred) const { return counts[index(gold)][index(pred)]; }

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }
  long long trace() const {
    long long t = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) t += counts[i][i];
    return t;
  }
  long long row_sum(std::size_t g) const {
    long long t = 0;
    for (auto c : counts[g]) t += c;
    return t;
  }
  long long col_sum(std::size_t p) const {
    long long t = 0;
    for (const auto& row : counts) t += row[p];
    return t;
  }
  // Row-normalised: per-class recall on the diagonal. Empty rows stay zero.
  std::vector<std::vector<double>> row_normalized() const {
    std::vector<std::vector<double>> out(classes.size(), std::vector<double>(classes.size(), 0.0));
    for (std::size_t g = 0; g < classes.size(); ++g) {
      const auto n = row_sum(g);
      if (n == 0) continue;
      for (std::size_t p = 0; p < classes.size(); ++p) out[g][p] = static_cast<double>(counts[g][p]) / static_cast<double>(n);
    }
    return out;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Successful records of one condition. Error records are excluded.
inline ConfusionMatrix confusion(const std::vector<EvalRecord>& records) {
  std::optional<Condition> cond;
  ConfusionMatrix cm;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    if (!cond) {
      cond = r.condition;
      cm = ConfusionMatrix(framing_labels(r.condition.framing));
    } else if (!(r.condition == *cond)) {
      throw Error("confusion over mixed conditions: " + cond->key() + " and " + r.condition.key());
    }
    cm.add(r.gold, r.pred);
  }
  if (!cond) throw Error("confusion of an empty record set");
  return cm;
}

inline ConfusionMatrix confusion_from_labels(const std::vector<std::string>& classes, const std::vector<std::string>& gold,
                                             const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) throw Error("gold and prediction lengths differ");
  if (gold.empty()) throw Error("confusion of an empty record set");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < gold.size(); ++i) cm.add(gold[i], pred[i]);
  return cm;
}

struct ClassScore {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

// One-vs-rest. A class with no true positives gets F1 = 0, including the
// zero-support, zero-prediction case.
inline std::vector<ClassScore> per_class(const ConfusionMatrix& cm) {
  std::vector<ClassScore> out;
  for (std::size_t k = 0; k < cm.classes.size(); ++k) {
    const double tp = static_cast<double>(cm.counts[k][k]);
    const double pred = static_cast<double>(cm.col_sum(k));
    const double gold = static_cast<double>(cm.row_sum(k));
    ClassScore c{cm.classes[k], pred > 0 ? tp / pred : 0.0, gold > 0 ? tp / gold : 0.0, 0.0, cm.row_sum(k)};
    c.f1 = (pred + gold) > 0 ? 2.0 * tp / (pred + gold) : 0.0;
    out.push_back(c);
  }
  return out;
}

inline std::map<std::string, double> per_class_f1(const ConfusionMatrix& cm) {
  std::map<std::string, double> out;
  for (const auto& c : per_class(cm)) out[c.label] = c.f1;
  return out;
}

inline double macro_f1(const ConfusionMatrix& cm) {
  const auto pc = per_class(cm);
  if (pc.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : pc) s += c.f1;
  return s / static_cast<double>(pc.size());
}

inline double accuracy(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  return n ? static_cast<double>(cm.trace()) / static_cast<double>(n) : 0.0;
}

struct BinaryRates {
  long long tn = 0, fp = 0, fn = 0, tp = 0;
  double tn_rate() const { return tn + fp ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0; }
  double fp_rate() const { return tn + fp ? static_cast<double>(fp) / static_cast<double>(tn + fp) : 0.0; }
  double fn_rate() const { return fn + tp ? static_cast<double>(fn) / static_cast<double>(fn + tp) : 0.0; }
  double tp_rate() const { return fn + tp ? static_cast<double>(tp) / static_cast<double>(fn + tp) : 0.0; }
};

// Positive class = danger.
inline BinaryRates binary_rates(const ConfusionMatrix& cm) {
  if (cm.classes != framing_labels(Framing::binary)) throw Error("binary rates need a nominal/danger matrix");
  return {cm.at("nominal", "nominal"), cm.at("nominal", "danger"), cm.at("danger", "nominal"), cm.at("danger", "danger")};
}

// ---------------------------------------------------------------------------
// Ranking metrics over score_danger
// ---------------------------------------------------------------------------

struct Scored {
  double score;
  bool positive;
};

inline std::vector<Scored> scored_records(const std::vector<EvalRecord>& records) {
  std::vector<Scored> out;
  for (const auto& r : records)
    if (r.ok()) out.push_back({r.score_danger, is_danger_label(r.gold)});
  return out;
}

namespace metrics_detail {

struct Group {
  double score;
  long long pos = 0;
  long long neg = 0;
};

// Distinct scores, descending, with class counts.
inline std::vector<Group> groups_desc(std::vector<Scored> v) {
  std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<Group> g;
  for (const auto& s : v) {
    if (g.empty() || g.back().score != s.score) g.push_back({s.score});
    (s.positive ? g.back().pos : g.back().neg) += 1;
  }
  return g;
}

inline void require_both(const std::vector<Scored>& v) {
  const auto pos = std::count_if(v.begin(), v.end(), [](const Scored& s) { return s.positive; });
  if (pos == 0 || pos == static_cast<long long>(v.size()))
    throw UndefinedMetric("ranking metric needs at least one positive and one negative");
}

}  // namespace metrics_detail

// Mann-Whitney statistic with mid-rank ties: P(s+ > s-) + 0.5 P(s+ = s-).
// Computed from integer counts, so the result is an exact ratio.
inline double auroc(const std::vector<Scored>& v) {
  metrics_detail::require_both(v);
  long long neg_below = 0, twice_u = 0, P = 0, N = 0;
  auto g = metrics_detail::groups_desc(v);
  std::reverse(g.begin(), g.end());  // ascending
  for (const auto& x : g) {
    twice_u += 2 * x.pos * neg_below + x.pos * x.neg;
    neg_below += x.neg;
    P += x.pos;
    N += x.neg;
  }
  return static_cast<double>(twice_u) / static_cast<double>(2 * P * N);
}

inline double auroc(const std::vector<EvalRecord>& records) { return auroc(scored_records(records)); }

struct CurvePoint {
  double threshold;
  double x;
  double y;
};

// (FPR, TPR) at each distinct threshold, from (0,0) to (1,1).
inline std::vector<CurvePoint> roc_curve(const std::vector<Scored>& v) {
  metrics_detail::require_both(v);
  const auto g = metrics_detail::groups_desc(v);
  long long P = 0, N = 0;
  for (const auto& x : g) {
    P += x.pos;
    N += x.neg;
  }
  std::vector<CurvePoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  long long tp = 0, fp = 0;
  for (const auto& x : g) {
    tp += x.pos;
    fp += x.neg;
    out.push_back({x.score, static_cast<double>(fp) / static_cast<double>(N), static_cast<double>(tp) / static_cast<double>(P)});
  }
  return out;
}

struct PrCurve {
  std::vector<CurvePoint> points;  // x = recall, y = precision
  double average_precision = 0.0;
};

// Step-interpolated AP: sum over thresholds of (R_k - R_{k-1}) * P_k.
inline PrCurve pr_curve(const std::vector<Scored>& v) {
  metrics_detail::require_both(v);
  const auto g = metrics_detail::groups_desc(v);
  long long P = 0;
  for (const auto& x : g) P += x.pos;
  PrCurve c;
  long long tp = 0, fp = 0;
  double prev_recall = 0.0;
  for (const auto& x : g) {
    tp += x.pos;
    fp += x.neg;
    const double recall = static_cast<double>(tp) / static_cast<double>(P);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    c.points.push_back({x.score, recall, precision});
    c.average_precision += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return c;
}

inline PrCurve pr_curve(const std::vector<EvalRecord>& records) { return pr_curve(scored_records(records)); }

// ---------------------------------------------------------------------------
// Latency
// ---------------------------------------------------------------------------

// Linear interpolation between closest ranks.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw Error("percentile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

struct LatencySummary {
  std::size_t n = 0;
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

inline std::optional<LatencySummary> latency_summary(const std::vector<double>& lat) {
  if (lat.empty()) return std::nullopt;
  LatencySummary s;
  s.n = lat.size();
  for (double x : lat) s.mean += x;
  s.mean /= static_cast<double>(lat.size());
  s.p50 = percentile(lat, 50);
  s.p90 = percentile(lat, 90);
  s.p95 = percentile(lat, 95);
  s.max = *std::max_element(lat.begin(), lat.end());
  return s;
}

inline std::optional<LatencySummary> latency_summary(const std::vector<EvalRecord>& records) {
  std::vector<double> lat;
  for (const auto& r : records)
    if (r.ok()) lat.push_back(r.latency_s);
  return latency_summary(lat);
}

// ---------------------------------------------------------------------------
// Per-condition summary
// ---------------------------------------------------------------------------

struct ConditionSummary {
  Condition condition;
  std::size_t n = 0;  // successful records
  std::size_t errors = 0;
  std::size_t parse_failures = 0;
  ConfusionMatrix cm;
  std::vector<ClassScore> classes;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auroc;
  std::optional<PrCurve> pr;
  std::vector<CurvePoint> roc;
  std::optional<LatencySummary> latency;
  bool confidence_fallback = false;  // any record scored without logprobs
};

// Conditions with no successful records are omitted.
inline std::vector<ConditionSummary> summarize(const std::vector<EvalRecord>& records) {
  std::vector<ConditionSummary> out;
  for (const auto& [cond, recs] : by_condition(records)) {
    ConditionSummary s;
    s.condition = cond;
    for (const auto& r : recs) {
      if (!r.ok()) {
        ++s.errors;
        continue;
      }
      ++s.n;
      s.parse_failures += r.parse_failure;
      s.confidence_fallback = s.confidence_fallback || r.score_source != "logprob";
    }
    if (s.n == 0) continue;
    s.cm = confusion(recs);
    s.classes = per_class(s.cm);
    s.accuracy = accuracy(s.cm);
    s.macro_f1 = macro_f1(s.cm);
    const auto sc = scored_records(recs);
    try {
      s.auroc = auroc(sc);
      s.pr = pr_curve(sc);
      s.roc = roc_curve(sc);
    } catch (const UndefinedMetric&) {
    }
    s.latency = latency_summary(recs);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ctaf
