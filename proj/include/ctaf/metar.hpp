#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctaf/common.hpp"

namespace ctaf {

enum class FlightCategory { VFR, MVFR, IFR, LIFR };

inline std::string_view to_string(FlightCategory c) {
  switch (c) {
    case FlightCategory::VFR: return "VFR";
    case FlightCategory::MVFR: return "MVFR";
    case FlightCategory::IFR: return "IFR";
    case FlightCategory::LIFR: return "LIFR";
  }
  return "?";
}

inline std::string_view category_name(FlightCategory c) {
  switch (c) {
    case FlightCategory::VFR: return "VFR";
    case FlightCategory::MVFR: return "Marginal VFR";
    case FlightCategory::IFR: return "IFR";
    case FlightCategory::LIFR: return "Low IFR";
  }
  return "?";
}

struct Wind {
  bool variable = false;              // VRB
  std::optional<int> direction_deg;   // absent when variable
  int speed_kt = 0;
  std::optional<int> gust_kt;
  int speed_digits = 2;
  int gust_digits = 2;

  bool calm() const { return !variable && speed_kt == 0 && direction_deg.value_or(0) == 0 && !gust_kt; }
  friend bool operator==(const Wind&, const Wind&) = default;
};

struct WindVariation {
  int from_deg = 0;
  int to_deg = 0;
  friend bool operator==(const WindVariation&, const WindVariation&) = default;
};

// Statute-mile visibility: whole + numerator/denominator, with M (less than)
// and P (greater than) prefixes. "1 1/2SM" -> {1, 1, 2}.
struct Visibility {
  int whole = 0;
  int numerator = 0;
  int denominator = 0;
  bool less_than = false;
  bool greater_than = false;

  double statute_miles() const {
    double v = whole;
    if (denominator > 0) v += static_cast<double>(numerator) / denominator;
    return v;
  }
  friend bool operator==(const Visibility&, const Visibility&) = default;
};

struct WeatherGroup {
  std::string intensity;   // "-", "+", "VC" or empty
  std::string descriptor;  // MI PR BC DR BL SH TS FZ or empty
  std::string phenomena;   // concatenated two-letter codes, e.g. "RA", "RASN"

  std::string code() const { return intensity + descriptor + phenomena; }
  friend bool operator==(const WeatherGroup&, const WeatherGroup&) = default;
};

struct CloudLayer {
  std::string coverage;              // SKC CLR FEW SCT BKN OVC
  std::optional<int> base_ft_agl;    // absent for SKC/CLR
  std::string suffix;                // CB, TCU or empty

  bool is_ceiling() const { return coverage == "BKN" || coverage == "OVC"; }
  friend bool operator==(const CloudLayer&, const CloudLayer&) = default;
};

struct Metar {
  // A body token the grammar did not recognise, kept verbatim. `slot` is the
  // number of recognised groups that precede it, which is enough to re-emit the
  // original token order.
  struct Extra {
    std::size_t slot = 0;
    std::string token;
    friend bool operator==(const Extra&, const Extra&) = default;
  };

  std::string station;
  std::string observation_time;  // DDHHMMZ, may be empty
  std::string modifier;          // AUTO, COR or empty
  std::optional<Wind> wind;
  std::optional<WindVariation> wind_variation;
  std::optional<Visibility> visibility;
  std::vector<WeatherGroup> weather;
  std::vector<CloudLayer> clouds;
  std::optional<int> vertical_visibility_ft;
  std::optional<int> temp_c;
  std::optional<int> dewpoint_c;
  std::optional<int> altimeter_hundredths;  // A2999 -> 2999
  bool has_remarks = false;
  std::string remarks;  // text after RMK, single-space separated
  std::vector<Extra> extras;

  bool is_auto() const { return modifier == "AUTO"; }
  std::optional<double> altimeter_inhg() const {
    if (!altimeter_hundredths) return std::nullopt;
    return *altimeter_hundredths / 100.0;
  }
  std::optional<double> visibility_sm() const {
    if (!visibility) return std::nullopt;
    return visibility->statute_miles();
  }

  // Lowest broken/overcast base, or vertical visibility.
  std::optional<int> ceiling_ft() const {
    std::optional<int> best = vertical_visibility_ft;
    for (const auto& l : clouds) {
      if (l.is_ceiling() && l.base_ft_agl && (!best || *l.base_ft_agl < *best)) best = l.base_ft_agl;
    }
    return best;
  }

  friend bool operator==(const Metar&, const Metar&) = default;
};

namespace metar_detail {

struct Token {
  std::string text;
  std::size_t offset;
};

inline std::vector<Token> tokenize(std::string_view raw) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
    if (j > i) out.push_back({std::string(raw.substr(i, j - i)), i});
    i = j;
  }
  return out;
}

inline bool is_upper_alnum(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); });
}

inline std::optional<Wind> parse_wind(std::string_view t) {
  if (!str::ends_with(t, "KT")) return std::nullopt;
  t.remove_suffix(2);
  if (t.size() < 5) return std::nullopt;
  Wind w;
  auto dir = t.substr(0, 3);
  if (dir == "VRB") {
    w.variable = true;
  } else if (str::all_digits(dir)) {
    w.direction_deg = *str::to_int(dir);
    if (*w.direction_deg > 360) return std::nullopt;
  } else {
    return std::nullopt;
  }
  t.remove_prefix(3);
  auto g = t.find('G');
  auto speed = t.substr(0, g);
  if (speed.size() < 2 || speed.size() > 3 || !str::all_digits(speed)) return std::nullopt;
  w.speed_kt = *str::to_int(speed);
  w.speed_digits = static_cast<int>(speed.size());
  if (g != std::string_view::npos) {
    auto gust = t.substr(g + 1);
    if (gust.size() < 2 || gust.size() > 3 || !str::all_digits(gust)) return std::nullopt;
    w.gust_kt = *str::to_int(gust);
    w.gust_digits = static_cast<int>(gust.size());
  }
  return w;
}

inline std::optional<WindVariation> parse_wind_variation(std::string_view t) {
  if (t.size() != 7 || t[3] != 'V') return std::nullopt;
  auto a = t.substr(0, 3);
  auto b = t.substr(4, 3);
  if (!str::all_digits(a) || !str::all_digits(b)) return std::nullopt;
  return WindVariation{*str::to_int(a), *str::to_int(b)};
}

// Parses the part before "SM" of a single visibility token: "10", "3/4", "M1/4", "P6".
inline std::optional<Visibility> parse_visibility_body(std::string_view t) {
  Visibility v;
  if (str::starts_with(t, "M")) {
    v.less_than = true;
    t.remove_prefix(1);
  } else if (str::starts_with(t, "P")) {
    v.greater_than = true;
    t.remove_prefix(1);
  }
  auto slash = t.find('/');
  if (slash == std::string_view::npos) {
    if (t.size() > 2 || !str::all_digits(t)) return std::nullopt;
    v.whole = *str::to_int(t);
    return v;
  }
  auto num = t.substr(0, slash);
  auto den = t.substr(slash + 1);
  if (num.empty() || num.size() > 2 || den.empty() || den.size() > 2 || !str::all_digits(num) ||
      !str::all_digits(den))
    return std::nullopt;
  v.numerator = *str::to_int(num);
  v.denominator = *str::to_int(den);
  if (v.denominator == 0 || v.numerator >= v.denominator) return std::nullopt;
  return v;
}

constexpr std::array<std::string_view, 8> kDescriptors{"MI", "PR", "BC", "DR", "BL", "SH", "TS", "FZ"};
constexpr std::array<std::string_view, 22> kPhenomena{"DZ", "RA", "SN", "SG", "IC", "PL", "GR", "GS",
                                                      "UP", "BR", "FG", "FU", "VA", "DU", "SA", "HZ",
                                                      "PY", "PO", "SQ", "FC", "SS", "DS"};

inline bool in_list(std::string_view code, std::span<const std::string_view> list) {
  return std::find(list.begin(), list.end(), code) != list.end();
}

inline std::optional<WeatherGroup> parse_weather(std::string_view t) {
  WeatherGroup g;
  if (str::starts_with(t, "-") || str::starts_with(t, "+")) {
    g.intensity = std::string(t.substr(0, 1));
    t.remove_prefix(1);
  } else if (str::starts_with(t, "VC")) {
    g.intensity = "VC";
    t.remove_prefix(2);
  }
  if (t.size() >= 2 && in_list(t.substr(0, 2), kDescriptors)) {
    g.descriptor = std::string(t.substr(0, 2));
    t.remove_prefix(2);
  }
  if (t.size() % 2 != 0) return std::nullopt;
  for (std::size_t i = 0; i < t.size(); i += 2) {
    if (!in_list(t.substr(i, 2), kPhenomena)) return std::nullopt;
  }
  g.phenomena = std::string(t);
  if (g.descriptor.empty() && g.phenomena.empty()) return std::nullopt;
  return g;
}

inline std::optional<CloudLayer> parse_cloud(std::string_view t) {
  if (t == "SKC" || t == "CLR" || t == "NSC") return CloudLayer{std::string(t), std::nullopt, {}};
  if (t.size() < 6) return std::nullopt;
  auto cov = t.substr(0, 3);
  if (cov != "FEW" && cov != "SCT" && cov != "BKN" && cov != "OVC") return std::nullopt;
  auto base = t.substr(3, 3);
  if (!str::all_digits(base)) return std::nullopt;
  auto suffix = t.substr(6);
  if (!suffix.empty() && suffix != "CB" && suffix != "TCU") return std::nullopt;
  return CloudLayer{std::string(cov), *str::to_int(base) * 100, std::string(suffix)};
}

inline std::optional<int> parse_temp_value(std::string_view t) {
  bool neg = false;
  if (str::starts_with(t, "M")) {
    neg = true;
    t.remove_prefix(1);
  }
  if (t.size() != 2 || !str::all_digits(t)) return std::nullopt;
  int v = *str::to_int(t);
  return neg ? -v : v;
}

inline std::string temp_text(int v) {
  return (v < 0 ? "M" : "") + str::printf("%02d", v < 0 ? -v : v);
}

enum Stage : int { kTime, kModifier, kWind, kWindVar, kVis, kWx, kCloud, kTemp, kAlt, kDone };

}  // namespace metar_detail

// Parses a raw METAR. Recognised groups must appear in standard order; other
// body tokens are preserved verbatim so emit_metar can reproduce the input.
inline Metar parse_metar(std::string_view raw) {
  using namespace metar_detail;
  auto tokens = tokenize(raw);
  if (tokens.empty()) throw ParseError("empty METAR", "", 0);

  Metar m;
  std::size_t idx = 0;
  if (tokens[0].text == "METAR" || tokens[0].text == "SPECI") ++idx;
  if (idx >= tokens.size()) throw ParseError("missing station identifier", "", raw.size());
  {
    const auto& st = tokens[idx];
    if (st.text.size() != 4 || !is_upper_alnum(st.text) || !(st.text[0] >= 'A' && st.text[0] <= 'Z'))
      throw ParseError("bad station identifier '" + st.text + "' at offset " + std::to_string(st.offset), st.text,
                       st.offset);
    m.station = st.text;
    ++idx;
  }

  std::size_t recognised = 0;
  int stage = kTime;
  for (; idx < tokens.size(); ++idx) {
    const std::string& t = tokens[idx].text;
    const std::size_t off = tokens[idx].offset;
    auto fail = [&](const char* what) {
      throw ParseError(std::string(what) + " '" + t + "' at offset " + std::to_string(off), t, off);
    };

    if (t == "RMK") {
      m.has_remarks = true;
      std::vector<std::string> rest;
      for (std::size_t k = idx + 1; k < tokens.size(); ++k) rest.push_back(tokens[k].text);
      m.remarks = str::join(rest, " ");
      break;
    }

    bool matched = false;
    if (!matched && stage <= kTime && t.size() == 7 && t[6] == 'Z' && str::all_digits(std::string_view(t).substr(0, 6))) {
      m.observation_time = t;
      stage = kModifier;
      matched = true;
    }
    if (!matched && stage <= kModifier && (t == "AUTO" || t == "COR")) {
      m.modifier = t;
      stage = kWind;
      matched = true;
    }
    if (!matched && stage <= kWind) {
      if (auto w = parse_wind(t)) {
        m.wind = *w;
        stage = kWindVar;
        matched = true;
      }
    }
    if (!matched && stage <= kWindVar && m.wind) {
      if (auto v = parse_wind_variation(t)) {
        m.wind_variation = *v;
        stage = kVis;
        matched = true;
      }
    }
    if (!matched && stage <= kVis) {
      // "1 1/2SM" arrives as two tokens.
      if (str::all_digits(t) && t.size() <= 2 && idx + 1 < tokens.size() &&
          str::ends_with(tokens[idx + 1].text, "SM") && tokens[idx + 1].text.find('/') != std::string::npos) {
        const auto& next = tokens[idx + 1];
        auto frac = parse_visibility_body(std::string_view(next.text).substr(0, next.text.size() - 2));
        if (!frac || frac->less_than || frac->greater_than || frac->denominator == 0)
          throw ParseError("malformed visibility '" + next.text + "' at offset " + std::to_string(next.offset),
                           next.text, next.offset);
        frac->whole = *str::to_int(t);
        m.visibility = *frac;
        ++idx;
        stage = kWx;
        matched = true;
      } else if (str::ends_with(t, "SM")) {
        auto v = parse_visibility_body(std::string_view(t).substr(0, t.size() - 2));
        if (!v) fail("malformed visibility");
        m.visibility = *v;
        stage = kWx;
        matched = true;
      }
    }
    if (!matched && stage <= kWx) {
      if (auto g = parse_weather(t)) {
        m.weather.push_back(*g);
        stage = kWx;
        matched = true;
      }
    }
    if (!matched && stage <= kCloud) {
      if (auto c = parse_cloud(t)) {
        m.clouds.push_back(*c);
        stage = kCloud;
        matched = true;
      } else if (t.size() == 5 && str::starts_with(t, "VV") && str::all_digits(std::string_view(t).substr(2))) {
        m.vertical_visibility_ft = *str::to_int(std::string_view(t).substr(2)) * 100;
        stage = kCloud;
        matched = true;
      }
    }
    if (!matched && stage <= kTemp) {
      auto slash = t.find('/');
      if (slash != std::string::npos && t.find('/', slash + 1) == std::string::npos) {
        auto tc = parse_temp_value(std::string_view(t).substr(0, slash));
        auto dew_text = std::string_view(t).substr(slash + 1);
        auto dc = dew_text.empty() ? std::optional<int>{} : parse_temp_value(dew_text);
        if (tc && (dew_text.empty() || dc)) {
          if (dc && *dc > *tc + 1) fail("dewpoint exceeds temperature in");
          m.temp_c = tc;
          m.dewpoint_c = dc;
          stage = kAlt;
          matched = true;
        }
      }
    }
    if (!matched && stage <= kAlt && t.size() >= 2 && t[0] == 'A' && t[1] >= '0' && t[1] <= '9') {
      if (t.size() != 5 || !str::all_digits(std::string_view(t).substr(1))) fail("malformed altimeter");
      m.altimeter_hundredths = *str::to_int(std::string_view(t).substr(1));
      stage = kDone;
      matched = true;
    }

    if (matched) {
      ++recognised;
      continue;
    }
    // Unrecognised. Tokens that claim to be wind, visibility or altimeter groups
    // but fail their grammar are errors rather than extras.
    if (str::ends_with(t, "KT") || str::ends_with(t, "MPS")) fail("malformed wind");
    if (str::ends_with(t, "SM")) fail("malformed visibility");
    if (t.size() >= 2 && t[0] == 'A' && t[1] >= '0' && t[1] <= '9') fail("malformed altimeter");
    m.extras.push_back({recognised, t});
  }
  return m;
}

namespace metar_detail {

inline std::string wind_text(const Wind& w) {
  std::string s = w.variable ? "VRB" : str::printf("%03d", w.direction_deg.value_or(0));
  s += str::printf("%0*d", w.speed_digits, w.speed_kt);
  if (w.gust_kt) s += "G" + str::printf("%0*d", w.gust_digits, *w.gust_kt);
  return s + "KT";
}

inline std::string visibility_text(const Visibility& v) {
  std::string prefix = v.less_than ? "M" : (v.greater_than ? "P" : "");
  if (v.denominator == 0) return prefix + std::to_string(v.whole) + "SM";
  std::string frac = std::to_string(v.numerator) + "/" + std::to_string(v.denominator);
  if (v.whole == 0) return prefix + frac + "SM";
  return prefix + std::to_string(v.whole) + " " + frac + "SM";
}

}  // namespace metar_detail

// Canonical single-space METAR text. emit_metar(parse_metar(s)) equals s with
// whitespace normalised.
inline std::string emit_metar(const Metar& m) {
  using namespace metar_detail;
  std::vector<std::string> groups;
  if (!m.observation_time.empty()) groups.push_back(m.observation_time);
  if (!m.modifier.empty()) groups.push_back(m.modifier);
  if (m.wind) groups.push_back(wind_text(*m.wind));
  if (m.wind_variation)
    groups.push_back(str::printf("%03dV%03d", m.wind_variation->from_deg, m.wind_variation->to_deg));
  if (m.visibility) groups.push_back(visibility_text(*m.visibility));
  for (const auto& w : m.weather) groups.push_back(w.code());
  // Vertical visibility replaces the cloud groups in practice; emit it first.
  if (m.vertical_visibility_ft) groups.push_back(str::printf("VV%03d", *m.vertical_visibility_ft / 100));
  for (const auto& c : m.clouds) {
    groups.push_back(c.base_ft_agl ? c.coverage + str::printf("%03d", *c.base_ft_agl / 100) + c.suffix : c.coverage);
  }
  if (m.temp_c) groups.push_back(temp_text(*m.temp_c) + "/" + (m.dewpoint_c ? temp_text(*m.dewpoint_c) : ""));
  if (m.altimeter_hundredths) groups.push_back(str::printf("A%04d", *m.altimeter_hundredths));

  std::vector<std::string> out{m.station};
  std::size_t extra = 0;
  for (std::size_t g = 0; g <= groups.size(); ++g) {
    while (extra < m.extras.size() && m.extras[extra].slot == g) out.push_back(m.extras[extra++].token);
    if (g < groups.size()) out.push_back(groups[g]);
  }
  while (extra < m.extras.size()) out.push_back(m.extras[extra++].token);
  if (m.has_remarks) {
    out.push_back("RMK");
    if (!m.remarks.empty()) out.push_back(m.remarks);
  }
  return str::join(out, " ");
}

inline std::string canonicalize_metar_text(std::string_view raw) { return str::join(str::split_ws(raw), " "); }

// Ceiling is the lowest broken/overcast layer (or vertical visibility).
// Missing visibility is treated as unrestricted.
inline FlightCategory flight_category(const Metar& m) {
  const double vis = m.visibility_sm().value_or(99.0);
  const auto ceiling = m.ceiling_ft();
  const auto ceil_below = [&](int ft) { return ceiling && *ceiling < ft; };
  const auto ceil_at_most = [&](int ft) { return ceiling && *ceiling <= ft; };
  if (vis < 1.0 || ceil_below(500)) return FlightCategory::LIFR;
  if (vis < 3.0 || ceil_below(1000)) return FlightCategory::IFR;
  if (vis <= 5.0 || ceil_at_most(3000)) return FlightCategory::MVFR;
  return FlightCategory::VFR;
}

namespace metar_detail {

inline std::string_view phenomenon_name(std::string_view code) {
  static constexpr std::pair<std::string_view, std::string_view> kNames[] = {
      {"DZ", "drizzle"},     {"RA", "rain"},         {"SN", "snow"},        {"SG", "snow grains"},
      {"IC", "ice crystals"}, {"PL", "ice pellets"},  {"GR", "hail"},        {"GS", "small hail"},
      {"UP", "unknown precipitation"}, {"BR", "mist"}, {"FG", "fog"},       {"FU", "smoke"},
      {"VA", "volcanic ash"}, {"DU", "dust"},         {"SA", "sand"},        {"HZ", "haze"},
      {"PY", "spray"},       {"PO", "dust whirls"},  {"SQ", "squalls"},     {"FC", "funnel cloud"},
      {"SS", "sandstorm"},   {"DS", "duststorm"}};
  for (const auto& [c, n] : kNames)
    if (c == code) return n;
  return code;
}

inline std::string_view descriptor_name(std::string_view code) {
  static constexpr std::pair<std::string_view, std::string_view> kNames[] = {
      {"MI", "shallow"}, {"PR", "partial"},  {"BC", "patches of"}, {"DR", "low drifting"},
      {"BL", "blowing"}, {"SH", "showers"},  {"TS", "thunderstorm"}, {"FZ", "freezing"}};
  for (const auto& [c, n] : kNames)
    if (c == code) return n;
  return code;
}

inline bool is_obscuration(std::string_view code) {
  return code == "BR" || code == "FG" || code == "FU" || code == "VA" || code == "DU" || code == "SA" ||
         code == "HZ" || code == "PY";
}

inline std::string weather_phrase(const WeatherGroup& g) {
  std::vector<std::string> names;
  bool precip = false;
  for (std::size_t i = 0; i + 1 < g.phenomena.size(); i += 2) {
    auto code = std::string_view(g.phenomena).substr(i, 2);
    precip = precip || !is_obscuration(code);
    names.emplace_back(phenomenon_name(code));
  }
  std::string body = str::join(names, " and ");
  std::string out;
  if (g.intensity == "-" && (precip || names.empty())) out += "light ";
  if (g.intensity == "+" && (precip || names.empty())) out += "heavy ";
  if (g.descriptor == "SH") {
    out += body.empty() ? "showers" : body + " showers";
  } else if (!g.descriptor.empty()) {
    out += std::string(descriptor_name(g.descriptor));
    if (!body.empty()) out += " " + body;
  } else {
    out += body;
  }
  if (g.intensity == "VC") out += " in the vicinity";
  return out;
}

inline std::string visibility_phrase(const Visibility& v) {
  std::string num;
  if (v.denominator == 0) {
    num = std::to_string(v.whole);
  } else {
    std::string frac = std::to_string(v.numerator) + "/" + std::to_string(v.denominator);
    num = v.whole == 0 ? frac : std::to_string(v.whole) + " " + frac;
  }
  std::string prefix = v.less_than ? "less than " : (v.greater_than ? "more than " : "");
  return prefix + num + " SM visibility";
}

}  // namespace metar_detail

// One-line English decoding, e.g.
// "Marginal VFR — 5 SM visibility in mist, broken ceiling at 2,000 ft, wind 180° at 5 kt, 18°C / dewpoint 16°C"
inline std::string decode_metar(const Metar& m) {
  using namespace metar_detail;
  std::vector<std::string> parts;

  std::string vis = m.visibility ? visibility_phrase(*m.visibility) : "visibility not reported";
  if (!m.weather.empty()) {
    std::vector<std::string> wx;
    for (const auto& g : m.weather) wx.push_back(weather_phrase(g));
    vis += " in " + str::join(wx, " and ");
  }
  parts.push_back(vis);

  if (m.vertical_visibility_ft && m.ceiling_ft() == m.vertical_visibility_ft) {
    parts.push_back("indefinite ceiling at " + str::thousands(*m.vertical_visibility_ft) + " ft");
  } else if (auto ceiling = m.ceiling_ft()) {
    const auto it = std::find_if(m.clouds.begin(), m.clouds.end(),
                                 [&](const CloudLayer& l) { return l.is_ceiling() && l.base_ft_agl == ceiling; });
    parts.push_back(std::string(it->coverage == "OVC" ? "overcast" : "broken") + " ceiling at " +
                    str::thousands(*ceiling) + " ft");
  } else {
    const CloudLayer* lowest = nullptr;
    for (const auto& l : m.clouds)
      if (l.base_ft_agl && (!lowest || *l.base_ft_agl < *lowest->base_ft_agl)) lowest = &l;
    if (lowest) {
      parts.push_back(std::string(lowest->coverage == "FEW" ? "few" : "scattered") + " clouds at " +
                      str::thousands(*lowest->base_ft_agl) + " ft, no ceiling");
    } else {
      parts.push_back("sky clear");
    }
  }

  if (m.wind) {
    const auto& w = *m.wind;
    std::string s;
    if (w.calm()) {
      s = "wind calm";
    } else if (w.variable) {
      s = "wind variable at " + std::to_string(w.speed_kt) + " kt";
    } else {
      s = "wind " + str::printf("%03d", *w.direction_deg) + "\xC2\xB0 at " + std::to_string(w.speed_kt) + " kt";
    }
    if (w.gust_kt) s += " gusting " + std::to_string(*w.gust_kt) + " kt";
    parts.push_back(s);
  }

  if (m.temp_c) {
    std::string s = std::to_string(*m.temp_c) + "\xC2\xB0" "C";
    if (m.dewpoint_c) s += " / dewpoint " + std::to_string(*m.dewpoint_c) + "\xC2\xB0" "C";
    parts.push_back(s);
  }

  return std::string(category_name(flight_category(m))) + " \xE2\x80\x94 " + str::join(parts, ", ");
}

}  // namespace ctaf
