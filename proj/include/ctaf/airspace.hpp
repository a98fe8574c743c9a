#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ctaf/common.hpp"
#include "ctaf/metar.hpp"

namespace ctaf {

// ---------------------------------------------------------------------------
// Enumerations and their wire names
// ---------------------------------------------------------------------------

enum class PatternSide { left, right };
enum class RadioEquip { equipped, nordo };

enum class PatternPhase {
  crosswind,
  downwind,
  base,
  final,
  short_final,
  straight_in_final,
  go_around,
  on_runway,
  clear_of_runway,
  departure,
};

enum class SafetyLabel3 { nominal, warning, hazard };
enum class SafetyLabelBinary { nominal, danger };

enum class HazardType {
  simultaneous_final,
  silent_traffic,
  nominal_single_aircraft,
  nominal_instrument_approach,
  runway_incursion_risk,
  go_around_conflict,
  wrong_runway_call,
  vfr_into_imc,
  missing_position_calls,
  wrong_pattern_direction,
  converging_final_separated,
  midair_converging_altitude,
};

namespace names {

inline constexpr std::array<std::string_view, 2> kPatternSide{"left", "right"};
inline constexpr std::array<std::string_view, 2> kRadio{"radio", "NORDO"};
inline constexpr std::array<std::string_view, 10> kPhase{
    "crosswind", "downwind", "base", "final", "short_final", "straight_in_final",
    "go_around", "on_runway", "clear_of_runway", "departure"};
inline constexpr std::array<std::string_view, 3> kLabel3{"nominal", "warning", "hazard"};
inline constexpr std::array<std::string_view, 2> kLabelBinary{"nominal", "danger"};
inline constexpr std::array<std::string_view, 12> kHazard{
    "simultaneous_final",     "silent_traffic",     "nominal_single_aircraft", "nominal_instrument_approach",
    "runway_incursion_risk",  "go_around_conflict", "wrong_runway_call",       "vfr_into_imc",
    "missing_position_calls", "wrong_pattern_direction", "converging_final_separated",
    "midair_converging_altitude"};

template <typename E, std::size_t N>
E parse(std::string_view text, const std::array<std::string_view, N>& table, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (table[i] == text) return static_cast<E>(i);
  throw Error(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

}  // namespace names

inline std::string_view to_string(PatternSide v) { return names::kPatternSide[static_cast<int>(v)]; }
inline std::string_view to_string(RadioEquip v) { return names::kRadio[static_cast<int>(v)]; }
inline std::string_view to_string(PatternPhase v) { return names::kPhase[static_cast<int>(v)]; }
inline std::string_view to_string(SafetyLabel3 v) { return names::kLabel3[static_cast<int>(v)]; }
inline std::string_view to_string(SafetyLabelBinary v) { return names::kLabelBinary[static_cast<int>(v)]; }
inline std::string_view to_string(HazardType v) { return names::kHazard[static_cast<int>(v)]; }

inline PatternSide parse_pattern_side(std::string_view s) { return names::parse<PatternSide>(s, names::kPatternSide, "pattern side"); }
inline RadioEquip parse_radio(std::string_view s) { return names::parse<RadioEquip>(s, names::kRadio, "radio equipage"); }
inline PatternPhase parse_phase(std::string_view s) { return names::parse<PatternPhase>(s, names::kPhase, "pattern phase"); }
inline SafetyLabel3 parse_label3(std::string_view s) { return names::parse<SafetyLabel3>(s, names::kLabel3, "safety label"); }
inline SafetyLabelBinary parse_label_binary(std::string_view s) {
  return names::parse<SafetyLabelBinary>(s, names::kLabelBinary, "binary label");
}
inline HazardType parse_hazard_type(std::string_view s) { return names::parse<HazardType>(s, names::kHazard, "hazard type"); }

inline constexpr std::array<HazardType, 12> kAllHazardTypes{
    HazardType::simultaneous_final,     HazardType::silent_traffic,
    HazardType::nominal_single_aircraft, HazardType::nominal_instrument_approach,
    HazardType::runway_incursion_risk,  HazardType::go_around_conflict,
    HazardType::wrong_runway_call,      HazardType::vfr_into_imc,
    HazardType::missing_position_calls, HazardType::wrong_pattern_direction,
    HazardType::converging_final_separated, HazardType::midair_converging_altitude};

// Ground-truth class of each taxonomy member.
inline SafetyLabel3 target_label(HazardType h) {
  switch (h) {
    case HazardType::nominal_single_aircraft:
    case HazardType::nominal_instrument_approach:
      return SafetyLabel3::nominal;
    case HazardType::silent_traffic:
    case HazardType::vfr_into_imc:
    case HazardType::missing_position_calls:
    case HazardType::wrong_pattern_direction:
    case HazardType::converging_final_separated:
      return SafetyLabel3::warning;
    case HazardType::simultaneous_final:
    case HazardType::runway_incursion_risk:
    case HazardType::go_around_conflict:
    case HazardType::wrong_runway_call:
    case HazardType::midair_converging_altitude:
      return SafetyLabel3::hazard;
  }
  return SafetyLabel3::nominal;
}

// Taxonomy members of one class, in round-robin order.
inline std::vector<HazardType> hazard_types_for(SafetyLabel3 label) {
  std::vector<HazardType> out;
  for (auto h : kAllHazardTypes)
    if (target_label(h) == label) out.push_back(h);
  return out;
}

inline constexpr SafetyLabelBinary collapse_to_binary(SafetyLabel3 l) {
  return l == SafetyLabel3::nominal ? SafetyLabelBinary::nominal : SafetyLabelBinary::danger;
}

inline bool is_final_phase(PatternPhase p) {
  return p == PatternPhase::final || p == PatternPhase::short_final || p == PatternPhase::straight_in_final;
}

inline bool is_pattern_leg(PatternPhase p) {
  return p == PatternPhase::crosswind || p == PatternPhase::downwind || p == PatternPhase::base;
}

inline bool is_airborne(PatternPhase p) { return p != PatternPhase::on_runway && p != PatternPhase::clear_of_runway; }

// Phases that require a self-announcement from an equipped aircraft.
inline bool requires_call(PatternPhase p) {
  return p != PatternPhase::short_final && p != PatternPhase::on_runway;
}

// ---------------------------------------------------------------------------
// Geography
// ---------------------------------------------------------------------------

inline constexpr double kEarthRadiusNm = 3440.065;
inline constexpr double kShortFinalMaxNm = 1.0;
inline constexpr double kCloseFinalSeparationNm = 0.5;
inline constexpr double kSameAltitudeFt = 200.0;
inline constexpr double kConvergenceHorizonS = 60.0;

struct LatLon {
  double lat_deg = 0.0;
  double lon_deg = 0.0;  // east positive
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline double deg2rad(double d) { return d * M_PI / 180.0; }

// Haversine distance on a sphere of radius 3440.065 NM.
inline double great_circle_nm(LatLon a, LatLon b) {
  const double p1 = deg2rad(a.lat_deg);
  const double p2 = deg2rad(b.lat_deg);
  const double dp = p2 - p1;
  const double dl = deg2rad(b.lon_deg - a.lon_deg);
  const double h = std::sin(dp / 2) * std::sin(dp / 2) + std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusNm * std::asin(std::min(1.0, std::sqrt(h)));
}

// Local east/north offset of b from a, in NM (flat-earth, pattern scale).
struct Vec2 {
  double x = 0.0;  // east
  double y = 0.0;  // north
};

inline Vec2 local_offset_nm(LatLon from, LatLon to) {
  const double mean_lat = deg2rad((from.lat_deg + to.lat_deg) / 2.0);
  return {(to.lon_deg - from.lon_deg) * 60.0 * std::cos(mean_lat), (to.lat_deg - from.lat_deg) * 60.0};
}

inline LatLon offset_position(LatLon origin, double east_nm, double north_nm) {
  const double lat = origin.lat_deg + north_nm / 60.0;
  const double mean_lat = deg2rad((origin.lat_deg + lat) / 2.0);
  return {lat, origin.lon_deg + east_nm / (60.0 * std::cos(mean_lat))};
}

inline double normalize_heading(double h) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  return h;
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Airfield {
  std::string icao_id = "KHAF";
  std::string name = "Half Moon Bay";
  std::string runway = "30";
  std::string opposite_runway = "12";
  double runway_heading_deg = 300.0;
  double runway_length_nm = 0.82;
  PatternSide pattern_side = PatternSide::right;
  double field_elev_ft = 66.0;
  double pattern_altitude_ft = 1066.0;
  LatLon reference{37.5134, -122.5011};
  LatLon threshold{37.5086, -122.4960};  // runway 30 approach end
};

inline Airfield khaf() { return Airfield{}; }

// N-number: 'N' followed by 1-5 uppercase letters/digits.
inline bool is_valid_callsign(std::string_view c) {
  if (c.size() < 2 || c.size() > 6 || c[0] != 'N') return false;
  return std::all_of(c.begin() + 1, c.end(), [](char ch) { return (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9'); });
}

struct Aircraft {
  std::string callsign;
  std::string type_name;
  RadioEquip radio = RadioEquip::equipped;

  bool nordo() const { return radio == RadioEquip::nordo; }
  friend bool operator==(const Aircraft&, const Aircraft&) = default;
};

struct AdsbState {
  double t = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  double alt_msl_ft = 0.0;
  double heading_deg = 0.0;
  double speed_kt = 0.0;
  friend bool operator==(const AdsbState&, const AdsbState&) = default;
};

// One position snapshot. Besides the announced phase/distance/altitude it
// carries the surveillance kinematics used by the convergence rule, whether the
// pilot self-announced it, and the runway/pattern direction that was flown.
struct PositionEvent {
  double t = 0.0;
  std::string callsign;
  PatternPhase phase = PatternPhase::downwind;
  double dist_nm = 0.0;
  double alt_ft = 0.0;
  RadioEquip radio = RadioEquip::equipped;
  double lat = 0.0;
  double lon = 0.0;
  double heading_deg = 0.0;
  double speed_kt = 0.0;
  bool announced = true;
  std::string runway = "30";
  PatternSide pattern_side = PatternSide::right;

  LatLon position() const { return {lat, lon}; }
  friend bool operator==(const PositionEvent&, const PositionEvent&) = default;
};

// ---------------------------------------------------------------------------
// Rule engine
// ---------------------------------------------------------------------------

enum class Rule {
  // hazard
  simultaneous_final_close,
  runway_occupied_short_final,
  wrong_runway_active_approach,
  converging_same_altitude,
  // warning
  wrong_pattern_direction,
  simultaneous_final_separated,
  missing_required_call,
  nordo_traffic,
  vfr_pattern_in_imc,
};

inline std::string_view to_string(Rule r) {
  static constexpr std::array<std::string_view, 9> kNames{
      "simultaneous_final_close", "runway_occupied_short_final", "wrong_runway_active_approach",
      "converging_same_altitude", "wrong_pattern_direction",     "simultaneous_final_separated",
      "missing_required_call",    "nordo_traffic",               "vfr_pattern_in_imc"};
  return kNames[static_cast<int>(r)];
}

inline SafetyLabel3 severity(Rule r) {
  return static_cast<int>(r) <= static_cast<int>(Rule::converging_same_altitude) ? SafetyLabel3::hazard
                                                                                 : SafetyLabel3::warning;
}

struct Finding {
  Rule rule;
  double t = 0.0;                      // first instant the rule fired
  std::vector<std::string> callsigns;  // sorted
  double value = 0.0;                  // minimum separation (NM) for final rules, else 0
  std::optional<PatternPhase> phase;   // phase involved, when one is
};

namespace rules_detail {

struct State {
  PatternPhase phase;
  double dist_nm;
  double alt_ft;
  LatLon pos;
  double heading_deg;
  double speed_kt;
  std::string runway;
  PatternSide side;
};

using Track = std::vector<const PositionEvent*>;

// Index of the last event with t <= time, or -1.
inline long last_at_or_before(const Track& tr, double time) {
  auto it = std::upper_bound(tr.begin(), tr.end(), time, [](double v, const PositionEvent* e) { return v < e->t; });
  return static_cast<long>(it - tr.begin()) - 1;
}

inline State interpolate(const PositionEvent& a, const PositionEvent* b, double time) {
  State s{a.phase, a.dist_nm, a.alt_ft, a.position(), a.heading_deg, a.speed_kt, a.runway, a.pattern_side};
  if (b && b->t > a.t) {
    const double f = (time - a.t) / (b->t - a.t);
    s.dist_nm = std::lerp(a.dist_nm, b->dist_nm, f);
    s.alt_ft = std::lerp(a.alt_ft, b->alt_ft, f);
    s.pos = {std::lerp(a.lat, b->lat, f), std::lerp(a.lon, b->lon, f)};
  }
  return s;
}

// Aircraft state at `time`: present from its first to its last event; phase,
// heading and speed from the latest event, position linearly interpolated.
inline std::optional<State> state_at(const Track& tr, double time) {
  if (tr.empty() || time < tr.front()->t || time > tr.back()->t) return std::nullopt;
  const long i = last_at_or_before(tr, time);
  const PositionEvent* next = static_cast<std::size_t>(i + 1) < tr.size() ? tr[i + 1] : nullptr;
  return interpolate(*tr[i], next, time);
}

// Tracks intersect ahead of both aircraft within the horizon, and range is decreasing.
inline bool converging(const State& a, const State& b) {
  const Vec2 r = local_offset_nm(a.pos, b.pos);
  const auto vel = [](const State& s) {
    const double nm_per_s = s.speed_kt / 3600.0;
    return Vec2{nm_per_s * std::sin(deg2rad(s.heading_deg)), nm_per_s * std::cos(deg2rad(s.heading_deg))};
  };
  const Vec2 va = vel(a);
  const Vec2 vb = vel(b);
  const double closing = r.x * (vb.x - va.x) + r.y * (vb.y - va.y);
  if (!(closing < 0.0)) return false;
  // Solve pa + va*ta = pb + vb*tb.
  const double det = va.x * (-vb.y) - (-vb.x) * va.y;
  if (std::abs(det) < 1e-15) return false;
  const double ta = (r.x * (-vb.y) - (-vb.x) * r.y) / det;
  const double tb = (va.x * r.y - va.y * r.x) / det;
  return ta >= 0.0 && tb >= 0.0 && ta <= kConvergenceHorizonS && tb <= kConvergenceHorizonS;
}

// Minimum along-final separation while both aircraft are on final for the same
// runway, over the continuous overlap of their tracks; nullopt if they never are.
inline std::optional<double> min_final_separation(const Track& a, const Track& b) {
  const double lo = std::max(a.front()->t, b.front()->t);
  const double hi = std::min(a.back()->t, b.back()->t);
  if (lo > hi) return std::nullopt;
  std::vector<double> cuts;
  for (const auto* e : a)
    if (e->t >= lo && e->t <= hi) cuts.push_back(e->t);
  for (const auto* e : b)
    if (e->t >= lo && e->t <= hi) cuts.push_back(e->t);
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto both_final = [](const State& sa, const State& sb) {
    return is_final_phase(sa.phase) && is_final_phase(sb.phase) && sa.runway == sb.runway;
  };
  // Value approached from the left at `time` along the segment starting at the
  // latest event at or before `from`.
  const auto left_limit = [](const Track& tr, double from, double time) {
    const long i = last_at_or_before(tr, from);
    const PositionEvent* next = static_cast<std::size_t>(i + 1) < tr.size() ? tr[i + 1] : nullptr;
    return interpolate(*tr[i], next, time).dist_nm;
  };

  std::optional<double> best;
  const auto take = [&](double v) { best = best ? std::min(*best, v) : v; };
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const auto sa = state_at(a, cuts[k]);
    const auto sb = state_at(b, cuts[k]);
    if (!sa || !sb || !both_final(*sa, *sb)) continue;
    const double d0 = sa->dist_nm - sb->dist_nm;
    take(std::abs(d0));
    if (k + 1 < cuts.size()) {
      const double d1 = left_limit(a, cuts[k], cuts[k + 1]) - left_limit(b, cuts[k], cuts[k + 1]);
      if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) take(0.0);
      take(std::abs(d1));
    }
  }
  return best;
}

}  // namespace rules_detail

// Evaluates every rule over the scenario. Rules other than the final-approach
// separation rules are evaluated at each distinct event instant with all
// aircraft states interpolated to that instant.
inline std::vector<Finding> evaluate_rules(std::span<const PositionEvent> events, std::span<const Aircraft> aircraft,
                                           const Metar& metar, const Airfield& field = khaf()) {
  using namespace rules_detail;
  if (events.empty()) throw InvalidScenario("scenario has no position events");
  if (aircraft.empty()) throw InvalidScenario("scenario has no aircraft");

  std::map<std::string, const Aircraft*> by_callsign;
  for (const auto& a : aircraft) {
    if (!by_callsign.emplace(a.callsign, &a).second) throw InvalidScenario("duplicate aircraft " + a.callsign);
  }
  std::vector<const PositionEvent*> sorted;
  for (const auto& e : events) {
    if (!by_callsign.count(e.callsign)) throw InvalidScenario("event for unknown aircraft " + e.callsign);
    if (!(e.dist_nm >= 0.0)) throw InvalidScenario("negative distance for " + e.callsign);
    sorted.push_back(&e);
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* x, const auto* y) { return x->t < y->t; });
  std::map<std::string, Track> tracks;
  for (const auto* e : sorted) tracks[e->callsign].push_back(e);

  std::map<std::tuple<Rule, std::vector<std::string>>, Finding> found;
  const auto fire = [&](Rule r, double t, std::vector<std::string> who, double value = 0.0,
                        std::optional<PatternPhase> phase = std::nullopt) {
    std::sort(who.begin(), who.end());
    auto key = std::make_tuple(r, who);
    auto it = found.find(key);
    if (it == found.end()) {
      found.emplace(key, Finding{r, t, std::move(who), value, phase});
    } else if (t < it->second.t) {
      it->second.t = t;
    }
  };

  const bool imc = flight_category(metar) == FlightCategory::IFR || flight_category(metar) == FlightCategory::LIFR;

  // Per-event rules.
  for (const auto* e : sorted) {
    const Aircraft& ac = *by_callsign.at(e->callsign);
    if (ac.nordo()) {
      fire(Rule::nordo_traffic, e->t, {e->callsign});
    } else if (!e->announced && requires_call(e->phase)) {
      fire(Rule::missing_required_call, e->t, {e->callsign}, 0.0, e->phase);
    }
  }

  std::vector<double> instants;
  for (const auto* e : sorted) instants.push_back(e->t);
  instants.erase(std::unique(instants.begin(), instants.end()), instants.end());

  std::size_t cursor = 0;
  for (double t : instants) {
    std::vector<std::pair<std::string, State>> present;
    for (const auto& [cs, tr] : tracks)
      if (auto s = state_at(tr, t)) present.emplace_back(cs, *s);

    bool active_approach = false;
    for (const auto& [cs, s] : present) {
      active_approach = active_approach || is_final_phase(s.phase);
      if (is_pattern_leg(s.phase) && s.side != field.pattern_side) fire(Rule::wrong_pattern_direction, t, {cs}, 0.0, s.phase);
      if (is_pattern_leg(s.phase) && imc) fire(Rule::vfr_pattern_in_imc, t, {cs}, 0.0, s.phase);
    }

    // Announcements made at this instant.
    while (cursor < sorted.size() && sorted[cursor]->t < t) ++cursor;
    for (std::size_t k = cursor; k < sorted.size() && sorted[k]->t == t; ++k) {
      const auto* e = sorted[k];
      const bool equipped = !by_callsign.at(e->callsign)->nordo();
      if (equipped && e->announced && !e->runway.empty() && e->runway != field.runway && active_approach)
        fire(Rule::wrong_runway_active_approach, t, {e->callsign});
    }

    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t j = 0; j < present.size(); ++j) {
        if (i == j) continue;
        const auto& [ci, si] = present[i];
        const auto& [cj, sj] = present[j];
        if (si.phase == PatternPhase::on_runway && sj.phase == PatternPhase::short_final)
          fire(Rule::runway_occupied_short_final, t, {ci, cj});
        if (i < j && is_airborne(si.phase) && is_airborne(sj.phase) &&
            std::abs(si.alt_ft - sj.alt_ft) <= kSameAltitudeFt && converging(si, sj))
          fire(Rule::converging_same_altitude, t, {ci, cj});
      }
    }
  }

  // Continuous final-approach separation per pair.
  for (auto a = tracks.begin(); a != tracks.end(); ++a) {
    for (auto b = std::next(a); b != tracks.end(); ++b) {
      if (auto sep = min_final_separation(a->second, b->second)) {
        const Rule r = *sep < kCloseFinalSeparationNm ? Rule::simultaneous_final_close : Rule::simultaneous_final_separated;
        const double t0 = std::max(a->second.front()->t, b->second.front()->t);
        fire(r, t0, {a->first, b->first}, *sep);
      }
    }
  }

  std::vector<Finding> out;
  for (auto& [key, f] : found) out.push_back(std::move(f));
  std::stable_sort(out.begin(), out.end(), [](const Finding& x, const Finding& y) {
    return std::tie(x.rule, x.t, x.callsigns) < std::tie(y.rule, y.t, y.callsigns);
  });
  return out;
}

inline SafetyLabel3 label_from_findings(std::span<const Finding> findings) {
  SafetyLabel3 label = SafetyLabel3::nominal;
  for (const auto& f : findings)
    if (static_cast<int>(severity(f.rule)) > static_cast<int>(label)) label = severity(f.rule);
  return label;
}

// Ground-truth 3-class label: hazard if any hazard rule fires, else warning if
// any warning rule fires, else nominal.
inline SafetyLabel3 label_scenario(std::span<const PositionEvent> events, std::span<const Aircraft> aircraft,
                                   const Metar& metar, const Airfield& field = khaf()) {
  return label_from_findings(evaluate_rules(events, aircraft, metar, field));
}

// "Would a CTAF advisory flag this for any reason?"
inline SafetyLabelBinary any_flag(std::span<const PositionEvent> events, std::span<const Aircraft> aircraft,
                                  const Metar& metar, const Airfield& field = khaf()) {
  return evaluate_rules(events, aircraft, metar, field).empty() ? SafetyLabelBinary::nominal : SafetyLabelBinary::danger;
}

}  // namespace ctaf
