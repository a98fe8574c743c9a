#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctaf/airspace.hpp"
#include "ctaf/common.hpp"
#include "ctaf/metar.hpp"
#include "ctaf/transcript.hpp"

namespace ctaf {

enum class Split { icl, test };

inline std::string_view to_string(Split s) { return s == Split::icl ? "icl" : "test"; }
inline Split parse_split(std::string_view s) {
  if (s == "icl") return Split::icl;
  if (s == "test") return Split::test;
  throw Error("unknown split '" + std::string(s) + "'");
}

struct AdsbSnapshot {
  std::string callsign;
  AdsbState state;
  friend bool operator==(const AdsbSnapshot&, const AdsbSnapshot&) = default;
};

struct Scenario {
  std::string id;
  HazardType hazard_type = HazardType::nominal_single_aircraft;
  SafetyLabel3 label3 = SafetyLabel3::nominal;
  SafetyLabelBinary label_binary = SafetyLabelBinary::nominal;
  std::string metar_raw;
  std::string metar_decoded;
  std::vector<Aircraft> aircraft;
  std::vector<PositionEvent> events;
  std::vector<AdsbSnapshot> adsb;
  Transcript transcript;
  std::string advisory;
  Split split = Split::test;
  int duration_s = 0;

  Metar metar() const { return parse_metar(metar_raw); }
  const Aircraft* find_aircraft(std::string_view callsign) const {
    for (const auto& a : aircraft)
      if (a.callsign == callsign) return &a;
    return nullptr;
  }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using nlohmann::ordered_json;

inline ordered_json to_json(const Aircraft& a) {
  return {{"callsign", a.callsign}, {"type", a.type_name}, {"radio", std::string(to_string(a.radio))}};
}

inline Aircraft aircraft_from_json(const ordered_json& j) {
  return {j.at("callsign").get<std::string>(), j.at("type").get<std::string>(),
          parse_radio(j.at("radio").get<std::string>())};
}

inline ordered_json to_json(const PositionEvent& e) {
  return {{"t", e.t},
          {"callsign", e.callsign},
          {"phase", std::string(to_string(e.phase))},
          {"dist_nm", e.dist_nm},
          {"alt_ft", e.alt_ft},
          {"radio", std::string(to_string(e.radio))},
          {"lat", e.lat},
          {"lon", e.lon},
          {"heading_deg", e.heading_deg},
          {"speed_kt", e.speed_kt},
          {"announced", e.announced},
          {"runway", e.runway},
          {"pattern_side", std::string(to_string(e.pattern_side))}};
}

inline PositionEvent event_from_json(const ordered_json& j) {
  PositionEvent e;
  e.t = j.at("t").get<double>();
  e.callsign = j.at("callsign").get<std::string>();
  e.phase = parse_phase(j.at("phase").get<std::string>());
  e.dist_nm = j.at("dist_nm").get<double>();
  e.alt_ft = j.at("alt_ft").get<double>();
  e.radio = parse_radio(j.at("radio").get<std::string>());
  e.lat = j.value("lat", 0.0);
  e.lon = j.value("lon", 0.0);
  e.heading_deg = j.value("heading_deg", 0.0);
  e.speed_kt = j.value("speed_kt", 0.0);
  e.announced = j.value("announced", e.radio == RadioEquip::equipped);
  e.runway = j.value("runway", std::string("30"));
  e.pattern_side = parse_pattern_side(j.value("pattern_side", std::string("right")));
  return e;
}

inline ordered_json to_json(const AdsbSnapshot& a) {
  return {{"callsign", a.callsign},         {"t", a.state.t},
          {"lat", a.state.lat},             {"lon", a.state.lon},
          {"alt_msl_ft", a.state.alt_msl_ft}, {"heading_deg", a.state.heading_deg},
          {"speed_kt", a.state.speed_kt}};
}

inline AdsbSnapshot adsb_from_json(const ordered_json& j) {
  AdsbSnapshot a;
  a.callsign = j.at("callsign").get<std::string>();
  a.state = {j.at("t").get<double>(),          j.at("lat").get<double>(),         j.at("lon").get<double>(),
             j.at("alt_msl_ft").get<double>(), j.at("heading_deg").get<double>(), j.at("speed_kt").get<double>()};
  return a;
}

inline ordered_json scenario_meta_json(const Scenario& s) {
  ordered_json j;
  j["id"] = s.id;
  j["hazard_type"] = std::string(to_string(s.hazard_type));
  j["label3"] = std::string(to_string(s.label3));
  j["label_binary"] = std::string(to_string(s.label_binary));
  j["split"] = std::string(to_string(s.split));
  j["duration_s"] = s.duration_s;
  j["metar_raw"] = s.metar_raw;
  j["aircraft"] = ordered_json::array();
  for (const auto& a : s.aircraft) j["aircraft"].push_back(to_json(a));
  j["events"] = ordered_json::array();
  for (const auto& e : s.events) j["events"].push_back(to_json(e));
  return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

// One directory per scenario: metar.txt (raw, decoded), transcript.srt,
// advisory.txt, meta.json, adsb.json.
inline void save_scenario(const fs::path& dir, const Scenario& s) {
  fs::create_directories(dir);
  write_file(dir / "metar.txt", s.metar_raw + "\n" + s.metar_decoded + "\n");
  write_file(dir / "transcript.srt", emit_srt(s.transcript));
  write_file(dir / "advisory.txt", s.advisory + "\n");
  write_file(dir / "meta.json", scenario_meta_json(s).dump(2) + "\n");
  ordered_json adsb = ordered_json::array();
  for (const auto& a : s.adsb) adsb.push_back(to_json(a));
  write_file(dir / "adsb.json", adsb.dump(2) + "\n");
}

inline Scenario load_scenario(const fs::path& dir) {
  Scenario s;
  const auto meta = ordered_json::parse(read_file(dir / "meta.json"));
  s.id = meta.at("id").get<std::string>();
  s.hazard_type = parse_hazard_type(meta.at("hazard_type").get<std::string>());
  s.label3 = parse_label3(meta.at("label3").get<std::string>());
  s.label_binary = parse_label_binary(meta.at("label_binary").get<std::string>());
  s.split = parse_split(meta.at("split").get<std::string>());
  s.duration_s = meta.value("duration_s", 0);
  for (const auto& a : meta.at("aircraft")) s.aircraft.push_back(aircraft_from_json(a));
  for (const auto& e : meta.at("events")) s.events.push_back(event_from_json(e));
  const auto metar_lines = str::split(read_file(dir / "metar.txt"), '\n');
  s.metar_raw = metar_lines.size() > 0 ? std::string(str::trim(metar_lines[0])) : "";
  s.metar_decoded = metar_lines.size() > 1 ? std::string(str::trim(metar_lines[1])) : "";
  if (s.metar_raw.empty()) s.metar_raw = meta.value("metar_raw", std::string());
  s.transcript = parse_srt(read_file(dir / "transcript.srt"));
  std::string adv = read_file(dir / "advisory.txt");
  while (!adv.empty() && (adv.back() == '\n' || adv.back() == '\r')) adv.pop_back();
  s.advisory = adv;
  if (fs::exists(dir / "adsb.json"))
    for (const auto& a : ordered_json::parse(read_file(dir / "adsb.json"))) s.adsb.push_back(adsb_from_json(a));
  if (s.label_binary != collapse_to_binary(s.label3)) throw InvalidScenario(s.id + ": binary label disagrees with 3-class label");
  return s;
}

}  // namespace ctaf
