#pragma once

#include <array>
#include <string>
#include <vector>

#include "ctaf/common.hpp"
#include "ctaf/metrics.hpp"
#include "ctaf/records.hpp"
#include "ctaf/scenario.hpp"

namespace ctaf {

inline std::string fmt3(double v) { return str::printf("%.3f", v); }
inline std::string fmt3(const std::optional<double>& v) { return v ? fmt3(*v) : std::string(); }

// "logprob" or the fallback marker used in the curve legends.
inline std::string score_marker(const ConditionSummary& s) { return s.confidence_fallback ? "conf*" : "logprob"; }

inline std::string condition_columns(const Condition& c) {
  return c.model + "," + std::string(to_string(c.framing)) + "," + std::string(to_string(c.strategy)) + "," +
         std::string(to_string(c.protocol)) + "," + c.variant;
}

inline constexpr std::string_view kConditionHeader = "model,framing,strategy,protocol,variant";

// Accuracy, macro-F1, AUROC and AP per condition.
inline std::string table_main_csv(const std::vector<ConditionSummary>& sums) {
  std::string out = std::string(kConditionHeader) + ",n,errors,parse_failures,accuracy,macro_f1,auroc,ap,score\n";
  for (const auto& s : sums)
    out += condition_columns(s.condition) + "," + std::to_string(s.n) + "," + std::to_string(s.errors) + "," +
           std::to_string(s.parse_failures) + "," + fmt3(s.accuracy) + "," + fmt3(s.macro_f1) + "," + fmt3(s.auroc) + "," +
           (s.pr ? fmt3(s.pr->average_precision) : std::string()) + "," + score_marker(s) + "\n";
  return out;
}

// Per-class F1, one file per framing since the class sets differ.
inline std::string table_per_class_csv(const std::vector<ConditionSummary>& sums, Framing f) {
  const auto& labels = framing_labels(f);
  std::string out(kConditionHeader);
  for (const auto& l : labels) out += ",f1_" + l;
  out += ",macro_f1\n";
  for (const auto& s : sums) {
    if (s.condition.framing != f) continue;
    out += condition_columns(s.condition);
    for (const auto& c : s.classes) out += "," + fmt3(c.f1);
    out += "," + fmt3(s.macro_f1) + "\n";
  }
  return out;
}

// Binary confusion counts and row-normalised rates.
inline std::string table_confusion_binary_csv(const std::vector<ConditionSummary>& sums) {
  std::string out = std::string(kConditionHeader) + ",tn,fp,fn,tp,tn_rate,fp_rate,fn_rate,tp_rate\n";
  for (const auto& s : sums) {
    if (s.condition.framing != Framing::binary) continue;
    const auto r = binary_rates(s.cm);
    out += condition_columns(s.condition) + "," + std::to_string(r.tn) + "," + std::to_string(r.fp) + "," + std::to_string(r.fn) +
           "," + std::to_string(r.tp) + "," + fmt3(r.tn_rate()) + "," + fmt3(r.fp_rate()) + "," + fmt3(r.fn_rate()) + "," +
           fmt3(r.tp_rate()) + "\n";
  }
  return out;
}

// One row per (condition, gold class): counts then row-normalised percentages.
inline std::string table_confusion_grid_csv(const std::vector<ConditionSummary>& sums, Framing f) {
  const auto& labels = framing_labels(f);
  std::string out = std::string(kConditionHeader) + ",gold";
  for (const auto& l : labels) out += ",n_" + l;
  for (const auto& l : labels) out += ",pct_" + l;
  out += "\n";
  for (const auto& s : sums) {
    if (s.condition.framing != f) continue;
    const auto norm = s.cm.row_normalized();
    for (std::size_t g = 0; g < labels.size(); ++g) {
      out += condition_columns(s.condition) + "," + labels[g];
      for (std::size_t p = 0; p < labels.size(); ++p) out += "," + std::to_string(s.cm.counts[g][p]);
      for (std::size_t p = 0; p < labels.size(); ++p) out += "," + str::printf("%.1f", 100.0 * norm[g][p]);
      out += "\n";
    }
  }
  return out;
}

inline std::string table_latency_csv(const std::vector<ConditionSummary>& sums) {
  std::string out = std::string(kConditionHeader) + ",n,mean_s,p50_s,p90_s,p95_s,max_s\n";
  for (const auto& s : sums) {
    if (!s.latency) continue;
    const auto& l = *s.latency;
    out += condition_columns(s.condition) + "," + std::to_string(l.n) + "," + fmt3(l.mean) + "," + fmt3(l.p50) + "," +
           fmt3(l.p90) + "," + fmt3(l.p95) + "," + fmt3(l.max) + "\n";
  }
  return out;
}

inline std::string curves_csv(const std::vector<ConditionSummary>& sums) {
  std::string out = std::string(kConditionHeader) + ",curve,threshold,x,y\n";
  for (const auto& s : sums) {
    for (const auto& p : s.roc)
      out += condition_columns(s.condition) + ",roc," + (std::isinf(p.threshold) ? std::string("inf") : str::printf("%.6g", p.threshold)) +
             "," + str::printf("%.6f", p.x) + "," + str::printf("%.6f", p.y) + "\n";
    if (s.pr)
      for (const auto& p : s.pr->points)
        out += condition_columns(s.condition) + ",pr," + str::printf("%.6g", p.threshold) + "," + str::printf("%.6f", p.x) + "," +
               str::printf("%.6f", p.y) + "\n";
  }
  return out;
}

namespace report_detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr std::array<std::string_view, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace report_detail

// Unit-square curve plot with a legend. Step curves for PR.
inline std::string curve_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series,
                             bool diagonal) {
  using report_detail::xml_escape;
  const int W = 640, H = 480, L = 60, T = 40, S = 360;
  const auto X = [&](double x) { return L + x * S; };
  const auto Y = [&](double y) { return T + (1.0 - y) * S; };
  std::string out = str::printf("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" font-size=\"11\">\n", W, H);
  out += str::printf("<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"white\"/>\n", W, H);
  out += "<text x=\"" + std::to_string(L) + "\" y=\"24\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
  out += str::printf("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n", L, T, S, S);
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    out += str::printf("<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\">%.1f</text>\n", X(v), T + S + 14, v);
    out += str::printf("<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n", L - 4, Y(v) + 4, v);
  }
  out += str::printf("<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\">", X(0.5), T + S + 32) + xml_escape(xlabel) + "</text>\n";
  out += str::printf("<text x=\"14\" y=\"%.1f\" transform=\"rotate(-90 14 %.1f)\" text-anchor=\"middle\">", Y(0.5), Y(0.5)) +
         xml_escape(ylabel) + "</text>\n";
  if (diagonal)
    out += str::printf("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n", X(0), Y(0),
                       X(1), Y(1));
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto color = report_detail::kPalette[i % report_detail::kPalette.size()];
    std::string pts;
    for (const auto& [x, y] : series[i].second) pts += str::printf("%.2f,%.2f ", X(x), Y(y));
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const int ly = T + 12 + static_cast<int>(i) * 14;
    out += str::printf("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"", L + S + 10, ly - 4, L + S + 26, ly - 4) +
           std::string(color) + "\" stroke-width=\"2\"/>\n";
    out += str::printf("<text x=\"%d\" y=\"%d\">", L + S + 30, ly) + xml_escape(series[i].first) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

inline std::string legend_label(const ConditionSummary& s, double metric) {
  std::string l = s.condition.model + " " + std::string(to_string(s.condition.strategy)) +
                  (s.condition.protocol == Protocol::cot ? "+CoT" : "");
  if (!s.condition.variant.empty()) l += " [" + s.condition.variant + "]";
  l += " (" + fmt3(metric) + ")";
  if (s.confidence_fallback) l += " conf*";
  return l;
}

struct ReportFiles {
  std::vector<fs::path> written;
};

// Writes all tables and plots into `dir`. Throws on an empty record set.
inline ReportFiles write_report(const std::vector<EvalRecord>& records, const fs::path& dir) {
  if (records.empty()) throw Error("no records to report");
  const auto sums = summarize(canonical_records(records));
  if (sums.empty()) throw Error("no successful records to report");
  ReportFiles rf;
  const auto put = [&](const std::string& name, const std::string& body) {
    write_file(dir / name, body);
    rf.written.push_back(dir / name);
  };
  put("table_main.csv", table_main_csv(sums));
  put("table_latency.csv", table_latency_csv(sums));
  put("curves.csv", curves_csv(sums));
  for (auto f : {Framing::binary, Framing::three_class}) {
    const bool any = std::any_of(sums.begin(), sums.end(), [&](const auto& s) { return s.condition.framing == f; });
    if (!any) continue;
    const std::string tag(to_string(f));
    put("table_per_class_" + tag + ".csv", table_per_class_csv(sums, f));
    put("table_confusion_" + tag + ".csv", table_confusion_grid_csv(sums, f));
    if (f == Framing::binary) put("table_confusion_rates_binary.csv", table_confusion_binary_csv(sums));
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> roc, pr;
    for (const auto& s : sums) {
      if (s.condition.framing != f || !s.auroc) continue;
      std::vector<std::pair<double, double>> r, p;
      for (const auto& pt : s.roc) r.emplace_back(pt.x, pt.y);
      double prev_r = 0.0;
      for (const auto& pt : s.pr->points) {
        p.emplace_back(prev_r, pt.y);
        p.emplace_back(pt.x, pt.y);
        prev_r = pt.x;
      }
      roc.emplace_back(legend_label(s, *s.auroc), std::move(r));
      pr.emplace_back(legend_label(s, s.pr->average_precision), std::move(p));
    }
    if (!roc.empty()) {
      put("roc_" + tag + ".svg", curve_svg("ROC (" + tag + ", danger positive)", "false positive rate", "true positive rate", roc, true));
      put("pr_" + tag + ".svg", curve_svg("Precision-recall (" + tag + ", danger positive)", "recall", "precision", pr, false));
    }
  }
  return rf;
}

}  // namespace ctaf
