#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctaf/airspace.hpp"
#include "ctaf/common.hpp"
#include "ctaf/llm_client.hpp"
#include "ctaf/metar.hpp"
#include "ctaf/rng.hpp"
#include "ctaf/scenario.hpp"
#include "ctaf/transcript.hpp"

namespace ctaf {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ClassTargets {
  int nominal = 33;
  int warning = 34;
  int hazard = 33;

  int total() const { return nominal + warning + hazard; }
  int of(SafetyLabel3 l) const {
    return l == SafetyLabel3::nominal ? nominal : l == SafetyLabel3::warning ? warning : hazard;
  }
  friend bool operator==(const ClassTargets&, const ClassTargets&) = default;
};

struct GenConfig {
  std::uint64_t seed = 42;
  int n_scenarios = 100;
  ClassTargets class_targets;
  int icl_per_class = 2;
  Airfield airport = khaf();
  std::string transcript_backend = "template";  // or an endpoint name

  void validate() const {
    if (n_scenarios <= 0) throw ConfigError("n_scenarios must be positive");
    if (class_targets.total() != n_scenarios)
      throw ConfigError("class targets sum to " + std::to_string(class_targets.total()) + ", expected " +
                        std::to_string(n_scenarios));
    if (icl_per_class < 0) throw ConfigError("icl_per_class must be non-negative");
    for (auto l : {SafetyLabel3::nominal, SafetyLabel3::warning, SafetyLabel3::hazard})
      if (class_targets.of(l) < icl_per_class)
        throw ConfigError("class " + std::string(to_string(l)) + " has fewer scenarios than ICL exemplars");
  }

  nlohmann::ordered_json to_json() const {
    return {{"seed", seed},
            {"n_scenarios", n_scenarios},
            {"class_targets", {{"nominal", class_targets.nominal}, {"warning", class_targets.warning}, {"hazard", class_targets.hazard}}},
            {"icl_per_class", icl_per_class},
            {"airport", airport.icao_id},
            {"transcript_backend", transcript_backend}};
  }
};

// ---------------------------------------------------------------------------
// Aircraft and weather sampling
// ---------------------------------------------------------------------------

struct AircraftType {
  std::string_view name;
  std::string_view spoken;
  int min_kt;
  int max_kt;
};

inline constexpr std::array<AircraftType, 6> kAircraftTypes{{
    {"Cessna 172", "Skyhawk", 60, 95},
    {"Piper PA-28 Cherokee", "Cherokee", 65, 100},
    {"Piper Seneca", "Seneca", 85, 110},
    {"Cirrus SR22", "Cirrus", 80, 110},
    {"Beechcraft Bonanza", "Bonanza", 80, 110},
    {"Diamond DA40", "Diamond", 65, 100},
}};

inline std::string spoken_type(std::string_view type_name) {
  for (const auto& t : kAircraftTypes)
    if (t.name == type_name) return std::string(t.spoken);
  const auto words = str::split_ws(type_name);
  return words.empty() ? std::string("Aircraft") : words.front();
}

// N + three digits + two letters (no I or O), e.g. N910YZ.
inline std::string sample_callsign(Rng& rng) {
  static constexpr std::string_view kLetters = "ABCDEFGHJKLMNPQRSTUVWXYZ";
  std::string cs = "N";
  cs.push_back(static_cast<char>('1' + rng.index(9)));
  cs.push_back(static_cast<char>('0' + rng.index(10)));
  cs.push_back(static_cast<char>('0' + rng.index(10)));
  cs.push_back(kLetters[rng.index(kLetters.size())]);
  cs.push_back(kLetters[rng.index(kLetters.size())]);
  return cs;
}

namespace gen_detail {

inline std::string visibility_token(int whole, int num, int den) {
  if (den == 0) return std::to_string(whole) + "SM";
  if (whole == 0) return std::to_string(num) + "/" + std::to_string(den) + "SM";
  return std::to_string(whole) + " " + std::to_string(num) + "/" + std::to_string(den) + "SM";
}

inline std::string cloud_token(const char* cover, int hundreds) { return str::printf("%s%03d", cover, hundreds); }

}  // namespace gen_detail

// A KHAF METAR of the requested flight category. The observation day/hour is
// derived from the scenario index so every scenario's METAR text is distinct.
inline std::string sample_metar(Rng& rng, FlightCategory family, int scenario_index) {
  using namespace gen_detail;
  for (;;) {
    std::vector<std::string> tok{"KHAF"};
    tok.push_back(str::printf("%02d%02d%02dZ", 1 + (scenario_index / 24) % 28, scenario_index % 24,
                              static_cast<int>(rng.uniform_int(0, 59))));
    const bool is_auto = rng.chance(0.5);
    if (is_auto) tok.push_back("AUTO");
    if (rng.chance(0.05)) {
      tok.push_back("00000KT");
    } else {
      const int dir = 10 * static_cast<int>(rng.uniform_int(24, 32));
      const int spd = static_cast<int>(rng.uniform_int(3, 15));
      std::string w = str::printf("%03d%02d", dir, spd);
      if (rng.chance(0.15)) w += str::printf("G%02d", spd + static_cast<int>(rng.uniform_int(8, 12)));
      tok.push_back(w + "KT");
    }
    int temp = static_cast<int>(rng.uniform_int(10, 22));
    int dew = temp - static_cast<int>(rng.uniform_int(0, 6));
    switch (family) {
      case FlightCategory::VFR: {
        static constexpr int kVis[] = {10, 10, 10, 9, 8, 7};
        tok.push_back(visibility_token(kVis[rng.index(6)], 0, 0));
        const double r = rng.uniform01();
        if (r < 0.4) {
          tok.push_back(is_auto ? "CLR" : "SKC");
        } else if (r < 0.7) {
          tok.push_back(cloud_token("FEW", static_cast<int>(rng.uniform_int(15, 50))));
        } else {
          tok.push_back(cloud_token("SCT", static_cast<int>(rng.uniform_int(20, 45))));
          tok.push_back(cloud_token("BKN", static_cast<int>(rng.uniform_int(50, 120))));
        }
        break;
      }
      case FlightCategory::MVFR: {
        if (rng.chance(0.5)) {
          tok.push_back(visibility_token(static_cast<int>(rng.uniform_int(3, 5)), 0, 0));
          tok.push_back(rng.chance(0.7) ? "-BR" : "HZ");
          if (tok.back() == "-BR") tok.back() = "BR";
          tok.push_back(cloud_token("FEW", static_cast<int>(rng.uniform_int(8, 12))));
          tok.push_back(cloud_token("BKN", static_cast<int>(rng.uniform_int(15, 30))));
        } else {
          tok.push_back(visibility_token(static_cast<int>(rng.uniform_int(6, 10)), 0, 0));
          tok.push_back(cloud_token(rng.chance(0.5) ? "BKN" : "OVC", static_cast<int>(rng.uniform_int(10, 30))));
        }
        dew = std::max(dew, temp - 3);
        break;
      }
      case FlightCategory::IFR: {
        static constexpr std::array<std::array<int, 3>, 4> kVis{{{1, 0, 0}, {1, 1, 2}, {2, 0, 0}, {2, 1, 2}}};
        const auto v = kVis[rng.index(4)];
        if (rng.chance(0.6)) {
          tok.push_back(visibility_token(v[0], v[1], v[2]));
          static constexpr const char* kWx[] = {"BR", "-RA BR", "RA BR", "-DZ BR"};
          for (auto& w : str::split_ws(kWx[rng.index(4)])) tok.push_back(w);
          tok.push_back(cloud_token("OVC", static_cast<int>(rng.uniform_int(6, 15))));
        } else {
          tok.push_back(visibility_token(static_cast<int>(rng.uniform_int(3, 6)), 0, 0));
          tok.push_back("BR");
          tok.push_back(cloud_token("OVC", static_cast<int>(rng.uniform_int(5, 9))));
        }
        dew = std::max(dew, temp - 2);
        break;
      }
      case FlightCategory::LIFR: {
        if (rng.chance(0.6)) {
          static constexpr std::array<std::array<int, 2>, 3> kVis{{{1, 4}, {1, 2}, {3, 4}}};
          const auto v = kVis[rng.index(3)];
          tok.push_back(visibility_token(0, v[0], v[1]));
          tok.push_back("FG");
          tok.push_back(rng.chance(0.5) ? str::printf("VV%03d", static_cast<int>(rng.uniform_int(1, 4)))
                                        : cloud_token("OVC", static_cast<int>(rng.uniform_int(1, 4))));
        } else {
          tok.push_back(visibility_token(static_cast<int>(rng.uniform_int(1, 2)), 0, 0));
          tok.push_back("BR");
          tok.push_back(cloud_token("OVC", static_cast<int>(rng.uniform_int(2, 4))));
        }
        dew = std::max(dew, temp - 1);
        break;
      }
    }
    tok.push_back(str::printf("%02d/%02d", temp, dew));
    tok.push_back(str::printf("A%04d", static_cast<int>(rng.uniform_int(2985, 3025))));
    if (is_auto) {
      tok.push_back("RMK");
      tok.push_back("AO2");
    }
    const std::string raw = str::join(tok, " ");
    const Metar m = parse_metar(raw);
    if (flight_category(m) == family) return emit_metar(m);
  }
}

inline FlightCategory metar_family_for(HazardType h, Rng& rng) {
  if (h == HazardType::vfr_into_imc) return rng.chance(0.5) ? FlightCategory::IFR : FlightCategory::LIFR;
  return rng.chance(0.75) ? FlightCategory::VFR : FlightCategory::MVFR;
}

// ---------------------------------------------------------------------------
// Scripted traffic
// ---------------------------------------------------------------------------

namespace gen_detail {

inline std::string_view number_word(int n) {
  static constexpr std::array<std::string_view, 11> kWords{"zero", "one", "two",   "three", "four", "five",
                                                          "six",  "seven", "eight", "nine",  "ten"};
  return kWords[std::clamp(n, 0, 10)];
}

// 2.0 -> "two-mile", 1.5 -> "one-and-a-half-mile", 0.5 -> "half-mile"
inline std::string mile_words(double d) {
  const int halves = std::max(1, static_cast<int>(std::lround(d * 2.0)));
  const int whole = halves / 2;
  if (whole == 0) return "half-mile";
  std::string s(number_word(whole));
  if (halves % 2) s += "-and-a-half";
  return s + "-mile";
}

struct Role {
  Aircraft aircraft;
  double speed_kt = 80;
  std::string intention;  // spoken intention used on pattern calls
};

struct Remark {
  double beat = 0;
  int who = 0;
  std::string text;
};

// Builds one scenario's events on a beat grid. Announced calls sit on whole
// beats, unannounced snapshots on half beats, so cue timing is fixed by
// construction: a call never lasts longer than beat - 3 s.
class Script {
 public:
  Script(const Airfield& field, Rng& rng, long long beat_ms) : field_(field), rng_(rng), beat_ms_(beat_ms) {
    const double h = deg2rad(field.runway_heading_deg);
    u_ = {std::sin(h), std::cos(h)};
    s_ = {std::sin(h + M_PI / 2), std::cos(h + M_PI / 2)};
  }

  int add(RadioEquip radio, std::set<std::string>& used) {
    const auto& type = kAircraftTypes[rng_.index(kAircraftTypes.size())];
    std::string cs;
    do cs = sample_callsign(rng_);
    while (used.count(cs));
    used.insert(cs);
    Role r;
    r.aircraft = {cs, std::string(type.name), radio};
    r.speed_kt = static_cast<double>(rng_.uniform_int(type.min_kt, type.max_kt));
    r.intention = rng_.chance(0.6) ? "full stop" : "touch and go";
    roles_.push_back(r);
    return static_cast<int>(roles_.size()) - 1;
  }

  Role& role(int who) { return roles_[who]; }
  double speed_nm_s(int who) const { return roles_[who].speed_kt / 3600.0; }
  double time_s(double beat) const { return static_cast<double>(std::llround(beat * static_cast<double>(beat_ms_))) / 1000.0; }

  // (a, b): NM along the landing direction from the threshold and NM toward
  // the right-traffic side.
  PositionEvent& event(double beat, int who, PatternPhase phase, double a, double b, double alt, double heading,
                       std::string position, std::string intention = "", bool announced = true) {
    PositionEvent e;
    e.t = time_s(beat);
    e.callsign = roles_[who].aircraft.callsign;
    e.radio = roles_[who].aircraft.radio;
    e.phase = phase;
    e.dist_nm = std::round(std::hypot(a, b) * 100.0) / 100.0;
    e.alt_ft = std::round(alt / 10.0) * 10.0;
    const LatLon p = offset_position(field_.threshold, a * u_.x + b * s_.x, a * u_.y + b * s_.y);
    e.lat = p.lat_deg;
    e.lon = p.lon_deg;
    e.heading_deg = normalize_heading(heading);
    e.speed_kt = (phase == PatternPhase::on_runway || phase == PatternPhase::clear_of_runway) ? 0.0 : roles_[who].speed_kt;
    e.announced = announced && e.radio == RadioEquip::equipped;
    e.runway = field_.runway;
    e.pattern_side = field_.pattern_side;
    events_.push_back(e);
    positions_.push_back(std::move(position));
    intentions_.push_back(std::move(intention));
    return events_.back();
  }

  // Final-approach snapshot at distance d.
  PositionEvent& on_final(double beat, int who, PatternPhase phase, double d, double alt, std::string position,
                          std::string intention = "", bool announced = true) {
    auto& e = event(beat, who, phase, -d, 0.0, alt, field_.runway_heading_deg, std::move(position), std::move(intention),
                    announced);
    e.dist_nm = std::round(d * 100.0) / 100.0;
    return e;
  }

  void remark(double beat, int who, std::string text) { remarks_.push_back({beat, who, std::move(text)}); }

  double hdg(double offset) const { return normalize_heading(field_.runway_heading_deg + offset); }
  std::string rwy() const { return spell_runway(field_.runway); }
  std::string side() const { return std::string(to_string(field_.pattern_side)); }
  double length() const { return field_.runway_length_nm; }
  double tpa() const { return field_.pattern_altitude_ft; }
  double elev() const { return field_.field_elev_ft; }
  // Altitude on a 3 degree glidepath at d NM.
  double glide(double d) const { return elev() + 318.0 * d; }

  std::vector<Role> roles_;
  std::vector<PositionEvent> events_;
  std::vector<std::string> positions_;
  std::vector<std::string> intentions_;
  std::vector<Remark> remarks_;
  const Airfield& field_;
  Rng& rng_;
  long long beat_ms_;
  Vec2 u_, s_;
};

inline double jitter(Rng& rng, double x, double amount, double step = 0.05) {
  return std::round((x + rng.uniform(-amount, amount)) / step) * step;
}

// --- nominal ---------------------------------------------------------------

inline void script_nominal_single(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);
  const std::string it = sc.role(a).intention;
  const std::string R = " runway " + sc.rwy();
  const std::string side = sc.side();
  double k = 0;
  if (rng.chance(0.5)) {
    sc.event(k++, a, PatternPhase::crosswind, sc.length() + 0.5, jitter(rng, 0.35, 0.1), sc.tpa() - 250, sc.hdg(90),
             side + " crosswind" + R, it);
    sc.event(k++, a, PatternPhase::downwind, sc.length() * 0.5, 0.75, sc.tpa(), sc.hdg(180), "midfield " + side + " downwind" + R, it);
  } else {
    sc.event(k++, a, PatternPhase::downwind, sc.length() * 0.8, 0.75, sc.tpa(), sc.hdg(180),
             "entering " + side + " downwind" + R + " on the forty-five", it);
  }
  sc.event(k++, a, PatternPhase::base, -jitter(rng, 0.8, 0.1), jitter(rng, 0.45, 0.1), sc.tpa() - 250, sc.hdg(270),
           "turning " + side + " base" + R, it);
  const double d = jitter(rng, 1.2, 0.1);
  sc.on_final(k++, a, PatternPhase::final, d, sc.glide(d), "turning final" + R, it);
  if (it == "full stop") {
    sc.on_final(k++, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, it);
    sc.event(k++, a, PatternPhase::clear_of_runway, sc.length() * 0.6, -0.05, sc.elev(), sc.hdg(90), "clear of" + R);
  } else {
    sc.on_final(k++, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, it);
  }
}

inline void script_nominal_instrument(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);
  sc.role(a).intention = "full stop";
  const std::string R = " runway " + sc.rwy();
  const bool departure = rng.chance(0.5);
  double k = 0;
  int b = -1;
  if (departure) {
    b = sc.add(RadioEquip::equipped, used);
    sc.event(k++, b, PatternPhase::on_runway, 0.05, 0.0, sc.elev(), sc.hdg(0), "taking" + R + " for departure");
  }
  const double d0 = static_cast<double>(rng.uniform_int(5, 7));
  sc.on_final(k++, a, PatternPhase::straight_in_final, d0, sc.glide(d0),
              mile_words(d0) + " straight-in RNAV final" + R, "full stop");
  if (departure)
    sc.event(k++, b, PatternPhase::departure, sc.length() + 0.4, 0.0, sc.elev() + 450, sc.hdg(0), "departing" + R,
             "departing to the north");
  sc.on_final(k++, a, PatternPhase::straight_in_final, 3.0, sc.glide(3.0), "three-mile straight-in final" + R, "full stop");
  if (departure)
    sc.event(k++, b, PatternPhase::crosswind, sc.length() + 0.8, 0.3, sc.elev() + 1000, sc.hdg(90),
             sc.side() + " crosswind" + R + ", departing to the north");
  sc.on_final(k++, a, PatternPhase::straight_in_final, 1.5, sc.glide(1.5), "one-and-a-half-mile final" + R, "full stop");
  sc.on_final(k++, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, "full stop");
  sc.event(k++, a, PatternPhase::clear_of_runway, sc.length() * 0.7, -0.05, sc.elev(), sc.hdg(90), "clear of" + R);
}

// --- hazard ----------------------------------------------------------------

inline void script_simultaneous_final(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);  // straight-in
  const int b = sc.add(RadioEquip::equipped, used);  // pattern traffic
  sc.role(a).intention = "full stop";
  const std::string R = " runway " + sc.rwy();
  const std::string ia = sc.role(a).intention;
  const std::string ib = sc.role(b).intention;
  const std::string side = sc.side();
  sc.event(0, b, PatternPhase::base, -jitter(rng, 0.9, 0.1), jitter(rng, 0.55, 0.1), sc.tpa() - 170, sc.hdg(270),
           side + " base" + R, ib);
  sc.on_final(1, a, PatternPhase::straight_in_final, 2.0, sc.glide(2.0) + 100, "two-mile straight-in RNAV final" + R, ia);
  sc.on_final(2, b, PatternPhase::final, jitter(rng, 1.1, 0.05), sc.glide(1.1), "turning " + side + " final" + R, ib);
  sc.on_final(3, a, PatternPhase::straight_in_final, 1.5, sc.glide(1.5), "one-and-a-half-mile final" + R, ia);
  sc.on_final(4, b, PatternPhase::short_final, 0.7, sc.glide(0.7), "short final" + R, ib);
  sc.on_final(5, a, PatternPhase::straight_in_final, 1.0, sc.glide(1.0), "one-mile final" + R, ia);
  sc.remark(6, a, "traffic on short final, say position");
  sc.on_final(7, b, PatternPhase::short_final, 0.5, sc.glide(0.5) - 20, "on short final " + sc.rwy() + ", negative contact");
  sc.on_final(8, a, PatternPhase::straight_in_final, 0.5, sc.glide(0.5) + 40,
              "half-mile final, I have traffic now, you're directly below me");
  sc.event(9, a, PatternPhase::go_around, -0.2, 0.0, sc.glide(0.5) + 120, sc.hdg(0),
           "going around" + R + ", traffic conflict on final");
}

inline void script_runway_incursion(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int b = sc.add(RadioEquip::equipped, used);  // landing
  const int a = sc.add(RadioEquip::equipped, used);  // departing
  const std::string R = " runway " + sc.rwy();
  const std::string ib = sc.role(b).intention;
  const std::string side = sc.side();
  sc.event(0, b, PatternPhase::downwind, sc.length() * 0.5, 0.75, sc.tpa(), sc.hdg(180), "midfield " + side + " downwind" + R, ib);
  sc.event(1, b, PatternPhase::base, -jitter(rng, 0.8, 0.1), 0.45, sc.tpa() - 250, sc.hdg(270), "turning " + side + " base" + R, ib);
  sc.on_final(2, b, PatternPhase::final, 1.2, sc.glide(1.2), "turning final" + R, ib);
  const bool announced = rng.chance(0.6);
  sc.event(announced ? 3 : 3.5, a, PatternPhase::on_runway, 0.05, 0.0, sc.elev(), sc.hdg(0),
           announced ? "taking" + R + " for departure" : "", "", announced);
  sc.on_final(4, b, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, ib);
  sc.event(5, b, PatternPhase::go_around, -0.2, 0.0, sc.glide(0.5) + 80, sc.hdg(0), "going around" + R + ", aircraft on the runway");
  sc.event(6, a, PatternPhase::departure, sc.length() + 0.3, 0.0, sc.elev() + 350, sc.hdg(0), "departing" + R);
}

inline void script_go_around_conflict(Script& sc, std::set<std::string>& used) {
  const int a = sc.add(RadioEquip::equipped, used);  // goes around
  const int b = sc.add(RadioEquip::equipped, used);  // departing ahead
  const std::string R = " runway " + sc.rwy();
  const std::string side = sc.side();
  const double L = sc.length();
  sc.on_final(0, a, PatternPhase::final, 1.2, sc.glide(1.2), "turning final" + R, sc.role(a).intention);
  sc.event(1, b, PatternPhase::departure, L + 0.2, 0.0, sc.elev() + 280, sc.hdg(0), "departing" + R);
  const double t2 = sc.time_s(2);
  const double t4 = sc.time_s(4);
  const double a2 = 0.1;
  const double a4 = a2 + sc.speed_nm_s(a) * (t4 - t2);
  sc.event(2, a, PatternPhase::go_around, a2, 0.0, sc.elev() + 180, sc.hdg(0), "going around" + R);
  sc.event(3, b, PatternPhase::crosswind, L + 0.3, -0.1, sc.elev() + 380, sc.hdg(90), "turning " + side + " crosswind" + R);
  sc.event(4, a, PatternPhase::go_around, a4, 0.0, sc.elev() + 380, sc.hdg(0),
           "going around, traffic departing ahead, climbing runway heading");
  sc.remark(5, b, "we have the go-around traffic in sight, continuing to climb");
}

inline void script_wrong_runway(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);
  const int b = sc.add(RadioEquip::equipped, used);
  const std::string R = " runway " + sc.rwy();
  const std::string Rx = " runway " + spell_runway(sc.field_.opposite_runway);
  const std::string ia = sc.role(a).intention;
  const std::string side = sc.side();
  const double L = sc.length();
  sc.event(0, a, PatternPhase::downwind, L * 0.5, 0.75, sc.tpa(), sc.hdg(180), "midfield " + side + " downwind" + R, ia);
  sc.event(1, a, PatternPhase::base, -0.8, jitter(rng, 0.45, 0.1), sc.tpa() - 250, sc.hdg(270), "turning " + side + " base" + R, ia);
  sc.on_final(2, a, PatternPhase::final, 1.2, sc.glide(1.2), "turning final" + R, ia);
  const double d3 = static_cast<double>(rng.uniform_int(3, 4));
  auto& w = sc.event(3, b, PatternPhase::final, L + d3, 0.0, sc.elev() + 318 * d3, sc.hdg(180), mile_words(d3) + " final" + Rx,
                     "full stop");
  w.runway = sc.field_.opposite_runway;
  w.dist_nm = d3;
  sc.on_final(4, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, ia);
  auto& w2 = sc.event(5, b, PatternPhase::final, L + d3 - 1, 0.0, sc.elev() + 318 * (d3 - 1), sc.hdg(180),
                      mile_words(d3 - 1) + " final" + Rx, "full stop");
  w2.runway = sc.field_.opposite_runway;
  w2.dist_nm = d3 - 1;
  sc.event(6, a, PatternPhase::go_around, -0.2, 0.0, sc.glide(0.5) + 80, sc.hdg(0), "going around" + R + ", opposite direction traffic");
}

// A joins downwind on the 45 while B flies downwind; both reach point P on the
// downwind line at the same moment at pattern altitude.
inline void script_midair(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);
  const int b = sc.add(RadioEquip::equipped, used);
  const std::string R = " runway " + sc.rwy();
  const std::string side = sc.side();
  const double pa = jitter(rng, 0.3, 0.15);
  const double pb = 0.75;
  const double tp = sc.time_s(2) + rng.uniform(4.0, 8.0);
  const double va = sc.speed_nm_s(a);
  const double vb = sc.speed_nm_s(b);
  const double k = 1.0 / std::sqrt(2.0);
  const auto a_at = [&](double t) { return std::pair{pa + va * (tp - t) * k, pb + va * (tp - t) * k}; };
  const auto b_at = [&](double t) { return std::pair{pa + vb * (tp - t), pb}; };
  const double alt = sc.tpa() + 10.0 * static_cast<double>(rng.uniform_int(-5, 5));
  auto [a0x, a0y] = a_at(sc.time_s(0));
  sc.event(0, a, PatternPhase::downwind, a0x, a0y, alt, sc.hdg(225), "entering " + side + " downwind" + R + " on the forty-five",
           sc.role(a).intention);
  auto [b1x, b1y] = b_at(sc.time_s(1));
  sc.event(1, b, PatternPhase::downwind, b1x, b1y, sc.tpa(), sc.hdg(180), "midfield " + side + " downwind" + R, sc.role(b).intention);
  auto [a2x, a2y] = a_at(sc.time_s(2));
  sc.event(2, a, PatternPhase::downwind, a2x, a2y, alt, sc.hdg(225), side + " downwind" + R + ", looking for traffic");
  auto [b3x, b3y] = b_at(sc.time_s(3));
  sc.event(3, b, PatternPhase::downwind, b3x, b3y, sc.tpa() + 150, sc.hdg(180),
           side + " downwind, traffic alert, near midair, climbing");
  sc.remark(4, a, "traffic in sight now, sorry about that, extending downwind");
}

// --- warning ---------------------------------------------------------------

inline void script_silent_traffic(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);
  const int c = sc.add(RadioEquip::nordo, used);
  sc.role(a).intention = "full stop";
  const std::string R = " runway " + sc.rwy();
  const std::string side = sc.side();
  const double L = sc.length();
  const double nordo_alt = sc.tpa() + 10.0 * static_cast<double>(rng.uniform_int(3, 10));
  sc.event(0, a, PatternPhase::base, -0.8, 0.45, sc.tpa() - 250, sc.hdg(270), "turning " + side + " base" + R, "full stop");
  sc.event(0.5, c, PatternPhase::downwind, L * 0.6, 0.75, nordo_alt, sc.hdg(180), "", "", false);
  sc.on_final(1, a, PatternPhase::final, 1.2, sc.glide(1.2), "turning final" + R, "full stop");
  sc.remark(2, a, "traffic on " + side + " downwind, not talking, no radio contact");
  sc.event(2.5, c, PatternPhase::downwind, -0.2, 0.75, nordo_alt, sc.hdg(180), "", "", false);
  sc.on_final(3, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, "full stop");
  sc.event(3.5, c, PatternPhase::base, -0.8, 0.5, sc.tpa() - 200, sc.hdg(270), "", "", false);
  sc.event(4, a, PatternPhase::clear_of_runway, L * 0.6, -0.05, sc.elev(), sc.hdg(90), "clear of" + R);
  sc.on_final(4.5, c, PatternPhase::final, 1.2, sc.glide(1.2), "", "", false);
  if (rng.chance(0.5)) sc.remark(5, a, "heads up, non-radio traffic now on final " + sc.rwy());
}

inline void script_vfr_into_imc(Script& sc, std::set<std::string>& used) {
  const int a = sc.add(RadioEquip::equipped, used);
  const std::string R = " runway " + sc.rwy();
  const std::string side = sc.side();
  const double L = sc.length();
  const std::string it = sc.role(a).intention;
  sc.event(0, a, PatternPhase::departure, L + 0.3, 0.0, sc.elev() + 350, sc.hdg(0), "uh, departing" + R + ", staying in the pattern");
  sc.event(1, a, PatternPhase::crosswind, L + 0.5, 0.35, sc.tpa() - 200, sc.hdg(90),
           "uh, " + side + " crosswind, I got... correction, " + side + " crosswind" + R, it);
  sc.event(2, a, PatternPhase::downwind, L * 0.5, 0.75, sc.tpa() - 150, sc.hdg(180),
           side + " downwind" + R + ", uh, losing the shoreline, clouds ahead", it);
  sc.event(3, a, PatternPhase::base, -0.7, 0.45, sc.tpa() - 350, sc.hdg(270), "turning " + side + " base, I think, uh," + R, it);
  sc.on_final(4, a, PatternPhase::final, 1.0, sc.glide(1.0), "uh, final" + R + ", field in sight, I think", it);
}

inline void script_missing_calls(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int a = sc.add(RadioEquip::equipped, used);
  const std::string R = " runway " + sc.rwy();
  const std::string side = sc.side();
  const std::string it = sc.role(a).intention;
  const double L = sc.length();
  // At least one of downwind/base goes unannounced.
  const int mask = 1 + static_cast<int>(rng.index(3));
  const bool call_downwind = (mask & 1) == 0;
  const bool call_base = (mask & 2) == 0;
  // Unannounced legs sit between call beats so the cue timeline has no holes.
  double k = 0;
  sc.event(k, a, PatternPhase::crosswind, L + 0.5, 0.35, sc.tpa() - 250, sc.hdg(90), side + " crosswind" + R, it);
  if (call_downwind)
    sc.event(++k, a, PatternPhase::downwind, L * 0.5, 0.75, sc.tpa(), sc.hdg(180), "midfield " + side + " downwind" + R, it);
  else
    sc.event(k + 0.35, a, PatternPhase::downwind, L * 0.5, 0.75, sc.tpa(), sc.hdg(180), "", "", false);
  if (call_base)
    sc.event(++k, a, PatternPhase::base, -0.8, 0.45, sc.tpa() - 250, sc.hdg(270), "turning " + side + " base" + R, it);
  else
    sc.event(k + 0.7, a, PatternPhase::base, -0.8, 0.45, sc.tpa() - 250, sc.hdg(270), "", "", false);
  sc.on_final(++k, a, PatternPhase::final, 1.0, sc.glide(1.0), "final" + R, it);
  sc.event(++k, a, PatternPhase::clear_of_runway, L * 0.6, -0.05, sc.elev(), sc.hdg(90), "clear of" + R);
}

inline void script_wrong_pattern(Script& sc, std::set<std::string>& used) {
  const int a = sc.add(RadioEquip::equipped, used);
  const std::string R = " runway " + sc.rwy();
  const std::string it = sc.role(a).intention;
  const PatternSide wrong = sc.field_.pattern_side == PatternSide::right ? PatternSide::left : PatternSide::right;
  const std::string side(to_string(wrong));
  const double sgn = sc.field_.pattern_side == PatternSide::right ? -1.0 : 1.0;  // flip to the other side
  const double turn = sgn < 0 ? -90.0 : 90.0;
  const double L = sc.length();
  sc.event(0, a, PatternPhase::crosswind, L + 0.5, sgn * 0.35, sc.tpa() - 250, sc.hdg(turn), side + " crosswind" + R, it)
      .pattern_side = wrong;
  sc.event(1, a, PatternPhase::downwind, L * 0.5, sgn * 0.75, sc.tpa(), sc.hdg(180), side + " downwind" + R, it).pattern_side =
      wrong;
  sc.event(2, a, PatternPhase::base, -0.8, sgn * 0.45, sc.tpa() - 250, sc.hdg(180 - turn), "turning " + side + " base" + R, it)
      .pattern_side = wrong;
  sc.on_final(3, a, PatternPhase::final, 1.2, sc.glide(1.2), "turning final" + R, it);
  sc.on_final(4, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, it);
}

inline void script_converging_final_separated(Script& sc, std::set<std::string>& used) {
  auto& rng = sc.rng_;
  const int b = sc.add(RadioEquip::equipped, used);  // ahead
  const int a = sc.add(RadioEquip::equipped, used);  // straight-in behind
  sc.role(a).intention = "full stop";
  sc.role(b).intention = "full stop";
  const std::string R = " runway " + sc.rwy();
  const double L = sc.length();
  const double d0 = jitter(rng, 1.3, 0.1);
  sc.on_final(0, b, PatternPhase::final, d0, sc.glide(d0), "turning final" + R, "full stop");
  sc.on_final(1, a, PatternPhase::straight_in_final, 3.0, sc.glide(3.0), "three-mile straight-in final" + R, "full stop");
  sc.on_final(2, b, PatternPhase::short_final, 0.6, sc.glide(0.6), "short final" + R, "full stop");
  sc.on_final(3, a, PatternPhase::straight_in_final, 2.0, sc.glide(2.0), "two-mile straight-in final" + R,
              "traffic to follow in sight");
  sc.event(4, b, PatternPhase::clear_of_runway, L * 0.6, -0.05, sc.elev(), sc.hdg(90), "clear of" + R);
  sc.on_final(5, a, PatternPhase::final, 1.0, sc.glide(1.0), "one-mile final" + R, "full stop");
  sc.on_final(6, a, PatternPhase::short_final, 0.5, sc.glide(0.5), "short final" + R, "full stop");
}

}  // namespace gen_detail

// ---------------------------------------------------------------------------
// Transcript and advisory rendering
// ---------------------------------------------------------------------------

// "Skyhawk November Niner One Zero Yankee Zulu"
inline std::string spoken_identity(const Aircraft& a) { return spoken_type(a.type_name) + " " + nato_spell(a.callsign); }

namespace gen_detail {

inline long long cue_duration_ms(const std::string& text, long long beat_ms) {
  const long long words = static_cast<long long>(str::split_ws(text).size());
  const long long raw = 1200 + 180 * words;
  const long long hi = std::min(kMaxUtteranceMs, beat_ms - kMinGapMs);
  return std::clamp(raw, kMinUtteranceMs, hi) / 100 * 100;
}

}  // namespace gen_detail

// ---------------------------------------------------------------------------
// Scenario assembly
// ---------------------------------------------------------------------------

struct SampledScenario {
  Scenario scenario;
  std::vector<Finding> findings;
  // Template phrasing per event (parallel to scenario.events) and remarks.
  std::vector<std::string> positions;
  std::vector<std::string> intentions;
  std::vector<gen_detail::Remark> remarks;
  long long beat_ms = 8500;
};

namespace gen_detail {

inline void run_script(HazardType h, Script& sc, std::set<std::string>& used) {
  switch (h) {
    case HazardType::nominal_single_aircraft: return script_nominal_single(sc, used);
    case HazardType::nominal_instrument_approach: return script_nominal_instrument(sc, used);
    case HazardType::simultaneous_final: return script_simultaneous_final(sc, used);
    case HazardType::runway_incursion_risk: return script_runway_incursion(sc, used);
    case HazardType::go_around_conflict: return script_go_around_conflict(sc, used);
    case HazardType::wrong_runway_call: return script_wrong_runway(sc, used);
    case HazardType::midair_converging_altitude: return script_midair(sc, used);
    case HazardType::silent_traffic: return script_silent_traffic(sc, used);
    case HazardType::vfr_into_imc: return script_vfr_into_imc(sc, used);
    case HazardType::missing_position_calls: return script_missing_calls(sc, used);
    case HazardType::wrong_pattern_direction: return script_wrong_pattern(sc, used);
    case HazardType::converging_final_separated: return script_converging_final_separated(sc, used);
  }
}

}  // namespace gen_detail

// Samples aircraft, events, ADS-B snapshots and METAR for one hazard type and
// checks that the rule engine assigns the type's target label. Retries with
// fresh sub-streams up to 20 times.
inline SampledScenario sample_scenario(std::uint64_t stream_seed, HazardType hazard, const Airfield& field = khaf(),
                                       int scenario_index = 0) {
  constexpr int kMaxAttempts = 20;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(stream_seed, static_cast<std::uint64_t>(attempt), 0x5CE7A));
    const long long beat_ms = 100 * rng.uniform_int(80, 90);
    gen_detail::Script sc(field, rng, beat_ms);
    std::set<std::string> used;
    gen_detail::run_script(hazard, sc, used);

    SampledScenario out;
    Scenario& s = out.scenario;
    s.hazard_type = hazard;
    s.metar_raw = sample_metar(rng, metar_family_for(hazard, rng), scenario_index);
    const Metar m = parse_metar(s.metar_raw);
    s.metar_decoded = decode_metar(m);
    for (const auto& r : sc.roles_) s.aircraft.push_back(r.aircraft);

    // Stable time order; keep phrasing aligned with events.
    std::vector<std::size_t> order(sc.events_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sc.events_[x].t < sc.events_[y].t; });
    for (auto i : order) {
      s.events.push_back(sc.events_[i]);
      out.positions.push_back(sc.positions_[i]);
      out.intentions.push_back(sc.intentions_[i]);
    }
    out.remarks = sc.remarks_;
    out.beat_ms = beat_ms;

    for (const auto& a : s.aircraft) {
      const auto it = std::find_if(s.events.begin(), s.events.end(), [&](const auto& e) { return e.callsign == a.callsign; });
      if (it == s.events.end()) continue;
      s.adsb.push_back({a.callsign, {it->t, it->lat, it->lon, it->alt_ft, it->heading_deg, it->speed_kt}});
    }

    out.findings = evaluate_rules(s.events, s.aircraft, m, field);
    s.label3 = label_from_findings(out.findings);
    s.label_binary = collapse_to_binary(s.label3);
    if (s.label3 != target_label(hazard)) continue;
    return out;
  }
  throw InvalidScenario("could not realise " + std::string(to_string(hazard)) + " after 20 attempts");
}

// Deterministic phraseology rendering: one framed self-announcement per
// announced event plus scripted remarks, each starting on its beat.
inline Transcript template_transcript(const SampledScenario& ss, const Airfield& field = khaf()) {
  const Scenario& s = ss.scenario;
  struct Line {
    double t;
    std::string text;
  };
  std::vector<Line> lines;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    if (!e.announced) continue;
    const Aircraft* a = s.find_aircraft(e.callsign);
    lines.push_back({e.t, frame_call(field.name, spoken_identity(*a), ss.positions[i], ss.intentions[i])});
  }
  for (const auto& r : ss.remarks) {
    const auto& a = s.aircraft[static_cast<std::size_t>(r.who)];
    const double t = static_cast<double>(std::llround(r.beat * static_cast<double>(ss.beat_ms))) / 1000.0;
    lines.push_back({t, frame_call(field.name, spoken_identity(a), r.text, "")});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) { return x.t < y.t; });
  // A skipped beat would leave a gap over 8 s; such cues are pulled earlier.
  Transcript t;
  for (const auto& l : lines) {
    long long start = std::llround(l.t * 1000.0);
    if (t.cues.empty()) start = 0;
    else start = std::min(start, t.cues.back().end_ms + kMaxGapMs);
    t.cues.push_back({static_cast<int>(t.cues.size() + 1), start, start + gen_detail::cue_duration_ms(l.text, ss.beat_ms), l.text});
  }
  return t;
}

// Checks a transcript against the scenario geometry: every announced event has
// a call from that aircraft for the same phase within 10 s, and no call is
// attributed to a NORDO aircraft.
inline std::vector<std::string> audit_transcript(const Scenario& s, const Transcript& t, bool require_calls = true) {
  std::vector<std::string> issues;
  std::vector<RadioCall> calls;
  for (const auto& c : t.cues) calls.push_back(parse_radio_call(c.text));
  const auto same_family = [](PatternPhase x, PatternPhase y) {
    return x == y || (is_final_phase(x) && is_final_phase(y));
  };
  for (std::size_t i = 0; i < calls.size(); ++i) {
    if (!calls[i].callsign) continue;
    const Aircraft* a = s.find_aircraft(*calls[i].callsign);
    if (a && a->nordo()) issues.push_back("cue " + std::to_string(t.cues[i].index) + " attributed to NORDO " + a->callsign);
  }
  if (!require_calls) return issues;
  for (const auto& e : s.events) {
    if (!e.announced) continue;
    bool found = false;
    for (std::size_t i = 0; i < calls.size() && !found; ++i) {
      const double dt = std::abs(static_cast<double>(t.cues[i].start_ms) / 1000.0 - e.t);
      found = dt <= 10.0 && calls[i].callsign == e.callsign && calls[i].phase && same_family(*calls[i].phase, e.phase);
    }
    if (!found)
      issues.push_back("no " + std::string(to_string(e.phase)) + " call from " + e.callsign + " near t=" + str::compact(e.t) + "s");
  }
  return issues;
}

namespace gen_detail {

// "Runway Three Zero"
inline std::string runway_title(std::string_view rwy) {
  std::string r = spell_runway(rwy);
  for (std::size_t i = 0; i < r.size(); ++i)
    if (i == 0 || r[i - 1] == ' ') r[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(r[i])));
  return "Runway " + r;
}

inline std::string describe_position(const PositionEvent& e) {
  const std::string R = runway_title(e.runway);
  const std::string side(to_string(e.pattern_side));
  switch (e.phase) {
    case PatternPhase::crosswind: return side + " crosswind " + R;
    case PatternPhase::downwind: return side + " downwind " + R;
    case PatternPhase::base: return side + " base " + R;
    case PatternPhase::final: return mile_words(e.dist_nm) + " final " + R;
    case PatternPhase::short_final: return "short final " + R;
    case PatternPhase::straight_in_final: return mile_words(e.dist_nm) + " straight-in final " + R;
    case PatternPhase::go_around: return "going around " + R;
    case PatternPhase::on_runway: return "on " + R;
    case PatternPhase::clear_of_runway: return "clear of " + R;
    case PatternPhase::departure: return "departing " + R;
  }
  return R;
}

inline const PositionEvent* latest_event(const Scenario& s, const std::string& cs, double t) {
  const PositionEvent* best = nullptr;
  for (const auto& e : s.events)
    if (e.callsign == cs && (e.t <= t || !best)) best = &e;
  return best;
}

inline std::string who(const Scenario& s, const std::string& cs) {
  const Aircraft* a = s.find_aircraft(cs);
  return a ? cs + ", " + spoken_type(a->type_name) : cs;
}


}  // namespace gen_detail

// Template advisory (2-4 sentences) rendered from rule findings.
inline std::string render_advisory(const Scenario& s, const std::vector<Finding>& findings, const Airfield& field = khaf()) {
  using namespace gen_detail;
  std::vector<std::string> sent;
  const auto pos = [&](const std::string& cs, double t) {
    const auto* e = latest_event(s, cs, t);
    return e ? describe_position(*e) : std::string("in the pattern");
  };
  const std::string R = runway_title(field.runway);

  if (findings.empty()) {
    std::vector<std::string> parts;
    for (const auto& a : s.aircraft) {
      const auto* last = latest_event(s, a.callsign, 1e9);
      parts.push_back(a.callsign + ", " + spoken_type(a.type_name) + (last ? ", " + describe_position(*last) : ""));
    }
    sent.push_back("Normal operations: " + str::join(parts, "; ") + ", with all required position reports made.");
    sent.push_back("Traffic is sequenced and separated and weather is " +
                   std::string(category_name(flight_category(s.metar()))) + "; no action required.");
    return str::join(sent, " ");
  }

  const Finding& lead = findings.front();  // findings are ordered hazard rules first
  const auto& cs = lead.callsigns;
  switch (lead.rule) {
    case Rule::simultaneous_final_close: {
      // The trailing aircraft (farther out when the overlap began) goes around.
      const auto* e0 = latest_event(s, cs[0], lead.t);
      const auto* e1 = latest_event(s, cs[1], lead.t);
      const bool first_trails = e0 && e1 && e0->dist_nm >= e1->dist_nm;
      const std::string& trail = first_trails ? cs[0] : cs[1];
      const std::string& lead_ac = first_trails ? cs[1] : cs[0];
      const double t_conf = std::max(lead.t, s.events.back().t * 0.6);
      sent.push_back("Traffic alert: " + who(s, trail) + " " + pos(trail, t_conf) + ", and " + who(s, lead_ac) + " " +
                     pos(lead_ac, t_conf) + ", converging on the same runway.");
      sent.push_back(trail + ", go around immediately; " + lead_ac +
                     ", continue landing or clear the runway without delay; both aircraft maintain visual separation.");
      break;
    }
    case Rule::runway_occupied_short_final: {
      // Finding callsigns are sorted; recover roles from the events at the finding time.
      const auto* e0 = latest_event(s, cs[0], lead.t);
      const bool first_on_runway = e0 && e0->phase == PatternPhase::on_runway;
      const std::string& on_rwy = first_on_runway ? cs[0] : cs[1];
      const std::string& landing = first_on_runway ? cs[1] : cs[0];
      sent.push_back("Safety alert: " + who(s, on_rwy) + ", is on " + R + " while " + who(s, landing) +
                     ", is on short final.");
      sent.push_back(landing + ", go around immediately; " + on_rwy + ", expedite your departure or clear the runway without delay.");
      break;
    }
    case Rule::wrong_runway_active_approach: {
      const std::string& wrong = cs[0];
      std::string other;
      for (const auto& a : s.aircraft)
        if (a.callsign != wrong) other = a.callsign;
      const auto* e = latest_event(s, wrong, lead.t);
      sent.push_back("Safety alert: " + who(s, wrong) + ", announced " + (e ? describe_position(*e) : "the opposite runway") +
                     " while " + (other.empty() ? std::string("traffic") : who(s, other)) + " is on final for the active " + R + ".");
      sent.push_back(wrong + ", break off your approach immediately and enter the " + std::string(to_string(field.pattern_side)) +
                     "-hand pattern for " + R + (other.empty() ? "." : "; " + other + ", be alert for opposite-direction traffic."));
      break;
    }
    case Rule::converging_same_altitude: {
      sent.push_back("Traffic alert: " + who(s, cs[0]) + ", " + pos(cs[0], lead.t) + ", and " + who(s, cs[1]) + ", " +
                     pos(cs[1], lead.t) + ", are converging at the same altitude.");
      sent.push_back(cs[0] + " and " + cs[1] + ", turn away from each other immediately and maintain visual separation.");
      break;
    }
    case Rule::wrong_pattern_direction: {
      sent.push_back("Caution: " + who(s, cs[0]) + ", is flying a " + pos(cs[0], lead.t) + " pattern leg, but " + R + " uses " +
                     std::string(to_string(field.pattern_side)) + " traffic.");
      sent.push_back(cs[0] + ", exit the pattern and re-enter on a " + std::string(to_string(field.pattern_side)) +
                     " downwind; other traffic, expect non-standard pattern entries.");
      break;
    }
    case Rule::simultaneous_final_separated: {
      const auto* e0 = latest_event(s, cs[0], lead.t);
      const auto* e1 = latest_event(s, cs[1], lead.t);
      const bool first_trails = e0 && e1 && e0->dist_nm >= e1->dist_nm;
      const std::string& trail = first_trails ? cs[0] : cs[1];
      const std::string& ahead = first_trails ? cs[1] : cs[0];
      sent.push_back("Caution: " + who(s, ahead) + ", and " + who(s, trail) + ", are both on final for " + R + ", about " +
                     str::compact(lead.value, 1) + " miles apart.");
      sent.push_back(trail + ", reduce speed and maintain spacing behind " + ahead + "; be prepared to go around.");
      break;
    }
    case Rule::missing_required_call: {
      std::vector<std::string> phases;
      for (const auto& f : findings)
        if (f.rule == Rule::missing_required_call && f.callsigns == cs && f.phase)
          phases.push_back(std::string(to_string(*f.phase)));
      for (const auto& e : s.events)
        if (e.callsign == cs[0] && !e.announced && requires_call(e.phase) &&
            std::find(phases.begin(), phases.end(), std::string(to_string(e.phase))) == phases.end())
          phases.push_back(std::string(to_string(e.phase)));
      sent.push_back("Caution: " + who(s, cs[0]) + ", did not announce its " + str::join(phases, " and ") + " position.");
      sent.push_back(cs[0] + ", make all required position reports on CTAF; traffic in the pattern, maintain vigilance.");
      break;
    }
    case Rule::nordo_traffic: {
      const Aircraft* a = s.find_aircraft(cs[0]);
      sent.push_back("Caution: " + cs[0] + ", a " + (a ? a->type_name : std::string("aircraft")) +
                     " with no radio, is in the pattern on " + pos(cs[0], lead.t) + ".");
      sent.push_back("All traffic maintain visual lookout for the non-radio aircraft and announce positions carefully.");
      break;
    }
    case Rule::vfr_pattern_in_imc: {
      const Metar m = s.metar();
      sent.push_back("Caution: " + who(s, cs[0]) + ", is flying the VFR traffic pattern in " +
                     std::string(category_name(flight_category(m))) + " conditions with " +
                     (m.visibility ? str::compact(*m.visibility_sm(), 2) : std::string("reduced")) + " miles visibility.");
      sent.push_back(cs[0] + ", remain clear of clouds and land as soon as practical or obtain an IFR clearance.");
      break;
    }
  }
  // One supporting sentence from a different rule, if any.
  for (const auto& f : findings) {
    if (f.rule == lead.rule) continue;
    if (f.rule == Rule::missing_required_call) {
      sent.push_back(f.callsigns[0] + " also omitted a required position report.");
    } else if (f.rule == Rule::nordo_traffic) {
      sent.push_back("Non-radio traffic " + f.callsigns[0] + " is also in the pattern.");
    } else if (f.rule == Rule::simultaneous_final_separated || f.rule == Rule::simultaneous_final_close) {
      sent.push_back(f.callsigns[0] + " and " + f.callsigns[1] + " are sharing the final approach course.");
    } else if (f.rule == Rule::vfr_pattern_in_imc) {
      sent.push_back("Weather is below VFR minimums for pattern work.");
    } else {
      continue;
    }
    break;
  }
  return str::join(sent, " ");
}

// ---------------------------------------------------------------------------
// Generator prompts (endpoint backend)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTranscriptSystemPrompt =
    "You generate realistic CTAF radio transcripts for Half Moon Bay Airport (KHAF), runway 30, right-traffic pattern.\n"
    "\n"
    "Given exact aircraft positions, write an SRT-format transcript of pilot radio calls.\n"
    "\n"
    "FORMAT (strict):\n"
    "{index}\n"
    "{HH:MM:SS,mmm} --> {HH:MM:SS,mmm}\n"
    "{text}\n"
    "\n"
    "RULES:\n"
    "- Use NATO phonetic alphabet for letters (Alpha, Bravo...) and \"niner\" for 9.\n"
    "- Each self-announced call: \"Half Moon Bay traffic, [callsign], [position], [runway 30], [intention], Half Moon Bay.\"\n"
    "- NORDO aircraft: only mentioned by other pilots.\n"
    "- Timing: each utterance 3-6 s; gap between calls 3-8 s. Timestamps start at 00:00:00,000.\n"
    "- CRITICAL: total scenario duration MUST be under 90 s; if the last timestamp would exceed 90 s, stop writing calls early.\n"
    "- CRITICAL: write at most 10 lines total; stop at 10 even if not all events are covered.\n"
    "- Return ONLY raw SRT -- no markdown fences, no triple-backtick blocks.\n"
    "- Cover the KEY position events only -- not every single distance update.\n"
    "- Pilots call position at major phase changes: entering downwind, turning base, turning final, short final, going around, clear of runway.\n"
    "- Do NOT have pilots repeat the same position multiple times unless there is a conflict.\n"
    "- For IMC / disoriented pilots: write hesitant, confused speech (\"uh\", \"I got...\", corrections).\n"
    "- Return ONLY the SRT content.";

inline constexpr std::string_view kAdvisorySystemPrompt =
    "You are an AI aviation safety advisor monitoring CTAF at KHAF (Half Moon Bay Airport).\n"
    "Write a concise ground-truth safety advisory (2-4 sentences, ~100-200 words) based on the scenario.\n"
    "Identify aircraft by callsign and type, state their positions precisely, assess the safety situation, and give "
    "recommended actions if needed.\n"
    "Return ONLY the advisory text.";

inline int scenario_duration_s(const Scenario& s) {
  double end = 0;
  for (const auto& e : s.events) end = std::max(end, e.t);
  if (!s.transcript.cues.empty()) end = std::max(end, static_cast<double>(s.transcript.cues.back().end_ms) / 1000.0);
  return static_cast<int>(std::ceil((end + 0.001) / 5.0) * 5.0);
}

// The per-scenario generator user message.
inline std::string build_generator_user_message(const Scenario& s) {
  if (s.aircraft.empty()) throw InvalidScenario("scenario " + s.id + " has no aircraft");
  std::string out;
  out += "SCENARIO: " + std::string(to_string(s.hazard_type)) + " (" + std::string(to_string(s.label3)) + ")\n";
  out += "METAR: " + s.metar_raw + "\n";
  out += "DURATION: ~" + std::to_string(s.duration_s > 0 ? s.duration_s : scenario_duration_s(s)) + "s\n";
  out += "\nAIRCRAFT:\n";
  for (const auto& a : s.aircraft)
    out += "  " + a.callsign + " (" + a.type_name + ") \xE2\x80\x94 " + std::string(to_string(a.radio)) + "\n";
  out += "\nPOSITION EVENTS:\n";
  for (const auto& e : s.events) {
    out += "  t=" + str::printf("%.1f", e.t) + "s  " + e.callsign + "  " + std::string(to_string(e.phase)) + "  " +
           str::printf("%.1f", e.dist_nm) + "NM  " + str::printf("%.0f", e.alt_ft) + "ft  " + std::string(to_string(e.radio)) + "\n";
  }
  out += "\nWrite the SRT transcript.";
  return out;
}

inline std::string strip_code_fences(std::string_view text) {
  std::vector<std::string> kept;
  for (auto& line : str::split(text, '\n'))
    if (!str::starts_with(str::trim(line), "```")) kept.push_back(line);
  return std::string(str::trim(str::join(kept, "\n")));
}

class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, std::vector<std::string> problems) : Error(what), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct EndpointGenOptions {
  RetryPolicy retry;
  Sleeper sleeper = real_sleeper();
  int regenerations = 3;
};

inline Transcript endpoint_transcript(ChatEndpoint& ep, const Scenario& s, const EndpointGenOptions& opt = {}) {
  const std::vector<Message> msgs{{"system", std::string(kTranscriptSystemPrompt), "", ""},
                                  {"user", build_generator_user_message(s), "", ""}};
  CompletionOptions co;
  co.temperature = 0.7;
  co.max_tokens = 1200;
  std::vector<std::string> problems;
  for (int attempt = 0; attempt <= opt.regenerations; ++attempt) {
    problems.clear();
    const Completion c = complete(ep, msgs, co, opt.retry, opt.sleeper);
    Transcript t;
    try {
      t = renumbered(parse_srt(strip_code_fences(c.text)));
    } catch (const ParseError& e) {
      problems.push_back(e.what());
      continue;
    }
    if (t.cues.empty()) problems.push_back("empty transcript");
    for (const auto& v : validate_timing(t)) problems.push_back(std::string(to_string(v.kind)) + ": " + v.detail);
    for (const auto& issue : audit_transcript(s, t, false)) problems.push_back(issue);
    if (problems.empty()) return t;
  }
  throw GenerationError("transcript for " + s.id + " failed validation after " + std::to_string(opt.regenerations) +
                            " regenerations",
                        problems);
}

inline std::string endpoint_advisory(ChatEndpoint& ep, const Scenario& s, const EndpointGenOptions& opt = {}) {
  const std::vector<Message> msgs{{"system", std::string(kAdvisorySystemPrompt), "", ""},
                                  {"user", build_generator_user_message(s), "", ""}};
  CompletionOptions co;
  co.temperature = 0.7;
  co.max_tokens = 1200;
  for (int attempt = 0; attempt <= opt.regenerations; ++attempt) {
    const std::string text(str::trim(complete(ep, msgs, co, opt.retry, opt.sleeper).text));
    if (!text.empty()) return text;
  }
  throw GenerationError("empty advisory for " + s.id, {"empty advisory"});
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct ManifestRow {
  std::string id;
  HazardType hazard_type;
  SafetyLabel3 label3;
  SafetyLabelBinary label_binary;
  Split split;
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Dataset {
  GenConfig config;
  std::vector<Scenario> scenarios;

  std::vector<ManifestRow> manifest() const {
    std::vector<ManifestRow> rows;
    for (const auto& s : scenarios) rows.push_back({s.id, s.hazard_type, s.label3, s.label_binary, s.split});
    return rows;
  }
  std::vector<const Scenario*> split(Split which) const {
    std::vector<const Scenario*> out;
    for (const auto& s : scenarios)
      if (s.split == which) out.push_back(&s);
    return out;
  }
  const Scenario* find(std::string_view id) const {
    for (const auto& s : scenarios)
      if (s.id == id) return &s;
    return nullptr;
  }
};

struct Assignment {
  SafetyLabel3 label;
  HazardType hazard;
  Split split;
};

// Class order cycles nominal, warning, hazard, skipping classes whose quota is
// full; hazard types rotate within each class; the first icl_per_class of each
// class form the ICL pool.
inline std::vector<Assignment> plan_dataset(const GenConfig& cfg) {
  cfg.validate();
  const std::array<SafetyLabel3, 3> order{SafetyLabel3::nominal, SafetyLabel3::warning, SafetyLabel3::hazard};
  std::array<int, 3> used{0, 0, 0};
  std::vector<Assignment> plan;
  std::size_t cursor = 0;
  for (int i = 0; i < cfg.n_scenarios; ++i) {
    while (used[cursor % 3] >= cfg.class_targets.of(order[cursor % 3])) ++cursor;
    const std::size_t c = cursor % 3;
    const auto types = hazard_types_for(order[c]);
    const HazardType h = types[static_cast<std::size_t>(used[c]) % types.size()];
    plan.push_back({order[c], h, used[c] < cfg.icl_per_class ? Split::icl : Split::test});
    ++used[c];
    ++cursor;
  }
  return plan;
}

inline std::string scenario_id(int index) { return str::printf("S%03d", index + 1); }

// Builds the benchmark. Scenario i draws only from sub-stream (seed, i), so
// its content does not depend on n_scenarios.
inline Dataset build_dataset(const GenConfig& cfg, ChatEndpoint* generator = nullptr, const EndpointGenOptions& gen_opt = {}) {
  const auto plan = plan_dataset(cfg);
  if (cfg.transcript_backend != "template" && !generator)
    throw ConfigError("transcript backend '" + cfg.transcript_backend + "' needs a generation endpoint");
  Dataset ds;
  ds.config = cfg;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const int index = static_cast<int>(i);
    SampledScenario ss = sample_scenario(derive_seed(cfg.seed, i), plan[i].hazard, cfg.airport, index);
    Scenario& s = ss.scenario;
    s.id = scenario_id(index);
    s.split = plan[i].split;
    if (generator) {
      s.duration_s = scenario_duration_s(s);
      s.transcript = endpoint_transcript(*generator, s, gen_opt);
      s.advisory = endpoint_advisory(*generator, s, gen_opt);
    } else {
      s.transcript = template_transcript(ss, cfg.airport);
      const auto issues = audit_transcript(s, s.transcript);
      if (!issues.empty()) throw GenerationError("template transcript audit failed for " + s.id, issues);
      if (const auto v = validate_timing(s.transcript); !v.empty())
        throw GenerationError("template transcript timing failed for " + s.id, {v.front().detail});
      s.advisory = render_advisory(s, ss.findings, cfg.airport);
    }
    s.duration_s = scenario_duration_s(s);
    ds.scenarios.push_back(std::move(s));
  }
  return ds;
}

inline std::string manifest_csv(const Dataset& ds) {
  std::string out = "id,hazard_type,label3,label_binary,split\n";
  for (const auto& r : ds.manifest())
    out += r.id + "," + std::string(to_string(r.hazard_type)) + "," + std::string(to_string(r.label3)) + "," +
           std::string(to_string(r.label_binary)) + "," + std::string(to_string(r.split)) + "\n";
  return out;
}

inline void save_dataset(const fs::path& root, const Dataset& ds) {
  fs::create_directories(root / "scenarios");
  for (const auto& s : ds.scenarios) save_scenario(root / "scenarios" / s.id, s);
  write_file(root / "manifest.csv", manifest_csv(ds));
  nlohmann::ordered_json j;
  j["format"] = 1;
  j["config"] = ds.config.to_json();
  j["scenario_count"] = ds.scenarios.size();
  write_file(root / "dataset.json", j.dump(2) + "\n");
}

inline Dataset load_dataset(const fs::path& root) {
  if (!fs::exists(root / "manifest.csv")) throw Error("no dataset at " + root.string() + " (manifest.csv missing)");
  Dataset ds;
  if (fs::exists(root / "dataset.json")) {
    const auto j = nlohmann::ordered_json::parse(read_file(root / "dataset.json"));
    const auto& c = j.at("config");
    ds.config.seed = c.at("seed").get<std::uint64_t>();
    ds.config.n_scenarios = c.at("n_scenarios").get<int>();
    ds.config.class_targets = {c.at("class_targets").at("nominal").get<int>(), c.at("class_targets").at("warning").get<int>(),
                               c.at("class_targets").at("hazard").get<int>()};
    ds.config.icl_per_class = c.at("icl_per_class").get<int>();
    ds.config.transcript_backend = c.value("transcript_backend", std::string("template"));
  }
  const auto lines = str::split(read_file(root / "manifest.csv"), '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (str::trim(lines[i]).empty()) continue;
    const auto cols = str::split(str::trim(lines[i]), ',');
    if (cols.size() < 5) throw Error("malformed manifest row " + std::to_string(i + 1));
    Scenario s = load_scenario(root / "scenarios" / cols[0]);
    if (std::string(to_string(s.split)) != cols[4] || std::string(to_string(s.label3)) != cols[2])
      throw InvalidScenario(s.id + ": manifest disagrees with scenario metadata");
    ds.scenarios.push_back(std::move(s));
  }
  return ds;
}

// Recomputes every stored label from its events.
inline std::vector<std::string> verify_labels(const Dataset& ds) {
  std::vector<std::string> bad;
  for (const auto& s : ds.scenarios) {
    const auto l = label_scenario(s.events, s.aircraft, s.metar());
    if (l != s.label3 || s.label_binary != collapse_to_binary(s.label3)) bad.push_back(s.id);
  }
  return bad;
}

}  // namespace ctaf
