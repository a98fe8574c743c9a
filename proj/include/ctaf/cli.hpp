#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctaf/ablations.hpp"
#include "ctaf/config.hpp"
#include "ctaf/llm_eval.hpp"
#include "ctaf/report.hpp"
#include "ctaf/scenario_gen.hpp"

namespace ctaf {

// "100 scenarios (33/34/33), icl=6, test=94"
inline std::string dataset_summary(const Dataset& ds) {
  int n = 0, w = 0, h = 0;
  for (const auto& s : ds.scenarios) {
    n += s.label3 == SafetyLabel3::nominal;
    w += s.label3 == SafetyLabel3::warning;
    h += s.label3 == SafetyLabel3::hazard;
  }
  return str::printf("%zu scenarios (%d/%d/%d), icl=%zu, test=%zu", ds.scenarios.size(), n, w, h, ds.split(Split::icl).size(),
                     ds.split(Split::test).size());
}

inline std::string binary_test_summary(const Dataset& ds) {
  int nominal = 0, danger = 0;
  for (const auto* s : ds.split(Split::test)) (s->label_binary == SafetyLabelBinary::nominal ? nominal : danger) += 1;
  return str::printf("binary test split: %d nominal / %d danger", nominal, danger);
}

// True when a dataset exists at `dir` and was generated with `cfg`.
inline bool dataset_matches(const fs::path& dir, const GenConfig& cfg) {
  if (!fs::exists(dir / "dataset.json") || !fs::exists(dir / "manifest.csv")) return false;
  const auto j = nlohmann::ordered_json::parse(read_file(dir / "dataset.json"), nullptr, false);
  return !j.is_discarded() && j.contains("config") && j["config"] == cfg.to_json();
}

struct GenResult {
  Dataset dataset;
  bool reused = false;
};

inline GenResult cmd_gen(const RunConfig& cfg, std::ostream& os) {
  const auto dir = cfg.dataset_dir();
  GenResult r;
  if (dataset_matches(dir, cfg.gen)) {
    r.dataset = load_dataset(dir);
    r.reused = true;
    os << dataset_summary(r.dataset) << "\n" << binary_test_summary(r.dataset) << "\n";
    os << "dataset at " << dir.string() << " is up to date\n";
    return r;
  }
  std::unique_ptr<ChatEndpoint> gen_ep;
  if (cfg.gen.transcript_backend != "template") {
    const auto& name = cfg.generator_endpoint.empty() ? cfg.gen.transcript_backend : cfg.generator_endpoint;
    gen_ep = make_endpoint(cfg.endpoint(name), Dataset{});
  }
  EndpointGenOptions go;
  go.retry = cfg.retry;
  r.dataset = build_dataset(cfg.gen, gen_ep.get(), go);
  if (fs::exists(dir / "scenarios")) fs::remove_all(dir / "scenarios");
  save_dataset(dir, r.dataset);
  os << dataset_summary(r.dataset) << "\n" << binary_test_summary(r.dataset) << "\n";
  os << "wrote " << dir.string() << "\n";
  return r;
}

// Loads the configured dataset, generating it first if absent.
inline Dataset ensure_dataset(const RunConfig& cfg, std::ostream& os) {
  const auto dir = cfg.dataset_dir();
  if (!fs::exists(dir / "manifest.csv")) return cmd_gen(cfg, os).dataset;
  if (fs::exists(dir / "dataset.json") && !dataset_matches(dir, cfg.gen))
    throw ConfigError("dataset at " + dir.string() + " was generated with a different configuration; rerun gen or point dataset elsewhere");
  return load_dataset(dir);
}

struct EndpointSet {
  std::vector<std::unique_ptr<ChatEndpoint>> owned;
  std::vector<ChatEndpoint*> ptrs;
};

inline EndpointSet make_endpoints(const RunConfig& cfg, const std::vector<std::string>& names, const Dataset& ds) {
  EndpointSet set;
  const auto resolved = cfg.resolve(names);
  if (resolved.empty()) throw ConfigError("no endpoints configured");
  for (const auto& n : resolved) {
    set.owned.push_back(make_endpoint(cfg.endpoint(n), ds));
    set.ptrs.push_back(set.owned.back().get());
  }
  return set;
}

inline std::string stats_line(const MatrixStats& st) {
  return str::printf("planned %zu, written %zu, skipped %zu, errors %zu, parse failures %zu, leakage %zu%s", st.planned, st.written,
                     st.skipped, st.errors, st.parse_failures, st.leakage_violations, st.interrupted ? ", interrupted" : "");
}

struct EvalResult {
  MatrixStats stats;
  fs::path records;
  fs::path report;
};

inline EvalResult cmd_eval(const RunConfig& cfg, std::ostream& os, MatrixOptions opt = {}) {
  const Dataset ds = ensure_dataset(cfg, os);
  auto eps = make_endpoints(cfg, cfg.eval.endpoints, ds);
  MatrixSpec spec;
  spec.framings = cfg.eval.framings;
  spec.strategies = cfg.eval.strategies;
  spec.protocols = cfg.eval.protocols;
  spec.variant = cfg.eval.variant;
  opt.retry = cfg.retry;
  EvalResult r;
  r.records = cfg.out / "records.jsonl";
  r.report = cfg.out / "report";
  r.stats = run_matrix(ds, eps.ptrs, spec, r.records, opt);
  os << stats_line(r.stats) << "\n";
  if (r.stats.interrupted) {
    os << "run interrupted; rerun eval to resume\n";
    return r;
  }
  const auto sums = summarize(r.stats.records);
  if (sums.empty()) {
    os << "no successful records; report skipped\n";
    return r;
  }
  write_report(r.stats.records, r.report);
  os << table_main_csv(sums);
  os << "report written to " << r.report.string() << "\n";
  return r;
}

struct AblateResult {
  std::vector<std::pair<std::string, AblationResult>> plans;
};

inline AblateResult cmd_ablate(const RunConfig& cfg, std::ostream& os, MatrixOptions opt = {}) {
  if (cfg.ablations.empty()) throw ConfigError("no ablation plans configured");
  for (const auto& a : cfg.ablations) a.plan.validate();
  const Dataset ds = ensure_dataset(cfg, os);
  opt.retry = cfg.retry;
  AblateResult out;
  for (const auto& a : cfg.ablations) {
    auto eps = make_endpoints(cfg, a.endpoints, ds);
    const auto dir = cfg.out / "ablations" / a.plan.name;
    os << "ablation " << a.plan.name << " (" << to_string(a.plan.kind) << ")\n";
    auto res = run_ablation(ds, eps.ptrs, a.plan, dir, opt);
    for (const auto& [variant, st] : res.variants) os << "  " << variant << ": " << stats_line(st) << "\n";
    if (!res.interrupted && !summarize(res.records).empty()) {
      write_report(res.records, dir / "report");
      os << table_main_csv(summarize(res.records));
    }
    const bool stop = res.interrupted;
    out.plans.emplace_back(a.plan.name, std::move(res));
    if (stop) {
      os << "run interrupted; rerun ablate to resume\n";
      break;
    }
  }
  return out;
}

inline ReportFiles cmd_report(const fs::path& records, const fs::path& out_dir, std::ostream& os) {
  if (!fs::exists(records)) throw Error("records file " + records.string() + " not found");
  const auto recs = read_records(records);
  if (recs.empty()) throw Error("records file " + records.string() + " is empty");
  auto files = write_report(recs, out_dir);
  os << table_main_csv(summarize(canonical_records(recs)));
  os << "report written to " << out_dir.string() << "\n";
  return files;
}

inline std::string image_mime(const fs::path& p) {
  const auto ext = str::lower(p.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  throw ConfigError("unsupported image type " + ext);
}

// Qualitative passthrough: one zero-shot prompt per endpoint with the image attached.
inline nlohmann::ordered_json cmd_attach_image(const RunConfig& cfg, const std::string& scenario_id, const fs::path& image,
                                               std::ostream& os) {
  if (!fs::exists(image)) throw ConfigError("image " + image.string() + " not found");
  const Dataset ds = ensure_dataset(cfg, os);
  const Scenario* s = ds.find(scenario_id);
  if (!s) throw ConfigError("no scenario " + scenario_id);
  auto eps = make_endpoints(cfg, cfg.eval.endpoints, ds);
  ProtocolOptions po;
  po.retry = cfg.retry;
  po.extras.image_base64 = base64_encode(read_file(image));
  po.extras.image_mime = image_mime(image);
  const Framing f = cfg.eval.framings.front();
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (auto* ep : eps.ptrs) {
    nlohmann::ordered_json row{{"endpoint", ep->config().name}, {"scenario", s->id}};
    try {
      const auto v = run_protocol(*ep, f, Strategy::zs, Protocol::direct, *s, ds.split(Split::icl), po);
      row["label"] = v.label;
      row["confidence"] = v.confidence;
      row["reasoning"] = v.reasoning;
      row["latency_s"] = v.latency_s;
    } catch (const std::exception& e) {
      row["error"] = e.what();
    }
    out.push_back(row);
  }
  os << out.dump(2) << "\n";
  return out;
}

}  // namespace ctaf
