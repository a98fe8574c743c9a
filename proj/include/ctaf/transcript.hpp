#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ctaf/airspace.hpp"
#include "ctaf/common.hpp"

namespace ctaf {

// ---------------------------------------------------------------------------
// SRT
// ---------------------------------------------------------------------------

struct SrtCue {
  int index = 1;
  long long start_ms = 0;
  long long end_ms = 0;
  std::string text;

  long long duration_ms() const { return end_ms - start_ms; }
  friend bool operator==(const SrtCue&, const SrtCue&) = default;
};

struct Transcript {
  std::vector<SrtCue> cues;

  bool empty() const { return cues.empty(); }
  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// HH:MM:SS,mmm
inline std::string format_srt_time(long long ms) {
  const long long h = ms / 3'600'000;
  const long long m = ms / 60'000 % 60;
  const long long s = ms / 1000 % 60;
  return str::printf("%02lld:%02lld:%02lld,%03lld", h, m, s, ms % 1000);
}

// Accepts ',' or '.' before the milliseconds.
inline std::optional<long long> parse_srt_time(std::string_view t) {
  t = str::trim(t);
  const auto c1 = t.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  const auto c2 = t.find(':', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  const auto dot = t.find_first_of(",.", c2 + 1);
  if (dot == std::string_view::npos) return std::nullopt;
  const auto h = str::to_int<long long>(t.substr(0, c1));
  const auto m = str::to_int<long long>(t.substr(c1 + 1, c2 - c1 - 1));
  const auto s = str::to_int<long long>(t.substr(c2 + 1, dot - c2 - 1));
  const auto frac = t.substr(dot + 1);
  const auto ms = str::to_int<long long>(frac);
  if (!h || !m || !s || !ms || frac.size() != 3 || c2 - c1 - 1 != 2 || dot - c2 - 1 != 2) return std::nullopt;
  if (*h < 0 || *m < 0 || *m > 59 || *s < 0 || *s > 59) return std::nullopt;
  return ((*h * 60 + *m) * 60 + *s) * 1000 + *ms;
}

inline Transcript parse_srt(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  if (str::starts_with(text, "\xEF\xBB\xBF")) text.remove_prefix(3);
  for (char c : text)
    if (c != '\r') clean.push_back(c);

  std::vector<std::vector<std::string>> blocks;
  std::vector<std::string> current;
  for (auto& line : str::split(clean, '\n')) {
    if (str::trim(line).empty()) {
      if (!current.empty()) blocks.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(line);
    }
  }
  if (!current.empty()) blocks.push_back(std::move(current));

  Transcript out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& lines = blocks[b];
    const std::size_t block_no = b + 1;
    const auto index = str::to_int<int>(str::trim(lines[0]));
    if (!index || *index <= 0) throw ParseError("bad cue index in block " + std::to_string(block_no), lines[0], block_no);
    if (!out.cues.empty() && *index <= out.cues.back().index)
      throw ParseError("non-increasing cue index in block " + std::to_string(block_no), lines[0], block_no);
    if (lines.size() < 2) throw ParseError("missing timestamp line in block " + std::to_string(block_no), lines[0], block_no);
    const auto arrow = lines[1].find("-->");
    if (arrow == std::string::npos) throw ParseError("bad timestamp in block " + std::to_string(block_no), lines[1], block_no);
    const auto start = parse_srt_time(std::string_view(lines[1]).substr(0, arrow));
    const auto end = parse_srt_time(std::string_view(lines[1]).substr(arrow + 3));
    if (!start || !end) throw ParseError("bad timestamp in block " + std::to_string(block_no), lines[1], block_no);
    if (*end <= *start) throw ParseError("cue ends before it starts in block " + std::to_string(block_no), lines[1], block_no);
    if (!out.cues.empty() && *start < out.cues.back().end_ms)
      throw ParseError("cue overlaps previous cue in block " + std::to_string(block_no), lines[1], block_no);
    std::vector<std::string> body(lines.begin() + 2, lines.end());
    out.cues.push_back({*index, *start, *end, str::join(body, "\n")});
  }
  return out;
}

inline std::string emit_srt(const Transcript& t) {
  std::string out;
  for (std::size_t i = 0; i < t.cues.size(); ++i) {
    const auto& c = t.cues[i];
    if (i) out += '\n';
    out += std::to_string(c.index) + '\n';
    out += format_srt_time(c.start_ms) + " --> " + format_srt_time(c.end_ms) + '\n';
    out += c.text + '\n';
  }
  return out;
}

// Renumbers cues 1..n in order.
inline Transcript renumbered(Transcript t) {
  for (std::size_t i = 0; i < t.cues.size(); ++i) t.cues[i].index = static_cast<int>(i + 1);
  return t;
}

// ---------------------------------------------------------------------------
// Generator timing constraints
// ---------------------------------------------------------------------------

inline constexpr long long kMinUtteranceMs = 3000;
inline constexpr long long kMaxUtteranceMs = 6000;
inline constexpr long long kMinGapMs = 3000;
inline constexpr long long kMaxGapMs = 8000;
inline constexpr long long kMaxDurationMs = 90000;
inline constexpr std::size_t kMaxCues = 10;

enum class TimingViolationKind { utterance_length, gap, total_duration, max_lines, start_offset };

inline std::string_view to_string(TimingViolationKind k) {
  static constexpr std::array<std::string_view, 5> kNames{"utterance_length", "gap", "total_duration", "max_lines",
                                                          "start_offset"};
  return kNames[static_cast<int>(k)];
}

struct TimingViolation {
  TimingViolationKind kind;
  int cue_index = 0;  // 0 for transcript-level violations
  std::string detail;

  friend bool operator==(const TimingViolation&, const TimingViolation&) = default;
};

// Reported sorted by (kind, cue index) whatever order the checks ran in.
inline std::vector<TimingViolation> validate_timing(const Transcript& t) {
  std::vector<TimingViolation> out;
  if (t.cues.empty()) return out;
  const auto secs = [](long long ms) { return str::compact(ms / 1000.0, 3) + " s"; };
  if (t.cues.front().start_ms != 0)
    out.push_back({TimingViolationKind::start_offset, t.cues.front().index, "first cue starts at " + secs(t.cues.front().start_ms)});
  for (std::size_t i = 0; i < t.cues.size(); ++i) {
    const auto& c = t.cues[i];
    if (c.duration_ms() < kMinUtteranceMs || c.duration_ms() > kMaxUtteranceMs)
      out.push_back({TimingViolationKind::utterance_length, c.index, "utterance lasts " + secs(c.duration_ms())});
    if (i > 0) {
      const long long gap = c.start_ms - t.cues[i - 1].end_ms;
      if (gap < kMinGapMs || gap > kMaxGapMs) out.push_back({TimingViolationKind::gap, c.index, "gap of " + secs(gap)});
    }
  }
  if (t.cues.back().end_ms >= kMaxDurationMs)
    out.push_back({TimingViolationKind::total_duration, 0, "transcript ends at " + secs(t.cues.back().end_ms)});
  if (t.cues.size() > kMaxCues)
    out.push_back({TimingViolationKind::max_lines, 0, std::to_string(t.cues.size()) + " cues"});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.kind, a.cue_index) < std::tie(b.kind, b.cue_index);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Phonetics
// ---------------------------------------------------------------------------

namespace phonetic {

inline constexpr std::array<std::string_view, 26> kLetters{
    "Alpha", "Bravo",   "Charlie", "Delta",  "Echo",   "Foxtrot", "Golf",    "Hotel", "India",
    "Juliett", "Kilo",  "Lima",    "Mike",   "November", "Oscar", "Papa",    "Quebec", "Romeo",
    "Sierra", "Tango",  "Uniform", "Victor", "Whiskey", "X-ray",  "Yankee",  "Zulu"};

inline constexpr std::array<std::string_view, 10> kDigits{"Zero", "One", "Two",   "Three", "Four",
                                                          "Five", "Six", "Seven", "Eight", "Niner"};

inline std::string_view digit_word(char d) { return kDigits[d - '0']; }

// Lower-case spoken token to its character; accepts common variants.
inline std::optional<char> decode_word(std::string_view w) {
  const std::string lw = str::lower(w);
  for (std::size_t i = 0; i < kLetters.size(); ++i) {
    std::string name = str::lower(kLetters[i]);
    name.erase(std::remove(name.begin(), name.end(), '-'), name.end());
    if (lw == name) return static_cast<char>('A' + i);
  }
  if (lw == "alfa") return 'A';
  if (lw == "juliet") return 'J';
  if (lw == "whisky") return 'W';
  for (std::size_t i = 0; i < kDigits.size(); ++i)
    if (lw == str::lower(kDigits[i])) return static_cast<char>('0' + i);
  if (lw == "nine") return '9';
  if (lw == "tree") return '3';
  if (lw == "fife") return '5';
  return std::nullopt;
}

inline std::optional<char> decode_digit(std::string_view w) {
  auto c = decode_word(w);
  if (c && *c >= '0' && *c <= '9') return c;
  return std::nullopt;
}

// Lower-cases, folds "x-ray" to "xray", and splits on anything that is not a
// letter, digit or hyphen; remaining hyphens split compound words.
inline std::vector<std::string> words(std::string_view text) {
  std::string t = str::lower(text);
  for (std::size_t p = t.find("x-ray"); p != std::string::npos; p = t.find("x-ray", p)) t.replace(p, 5, "xray");
  std::vector<std::string> out;
  std::string cur;
  for (char c : t) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace phonetic

// N910YZ -> "November Niner One Zero Yankee Zulu". Only 9 is substituted.
inline std::string nato_spell(std::string_view callsign) {
  if (!is_valid_callsign(callsign)) throw Error("invalid callsign '" + std::string(callsign) + "'");
  std::vector<std::string_view> parts;
  for (char c : callsign) parts.push_back(c >= '0' && c <= '9' ? phonetic::digit_word(c) : phonetic::kLetters[c - 'A']);
  return str::join(parts, " ");
}

// First "November ..." run of phonetic words, decoded to an N-number.
inline std::optional<std::string> decode_callsign(std::string_view spoken) {
  const auto w = phonetic::words(spoken);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != "november") continue;
    std::string cs = "N";
    for (std::size_t j = i + 1; j < w.size() && cs.size() < 6; ++j) {
      auto c = phonetic::decode_word(w[j]);
      if (!c) break;
      cs.push_back(*c);
    }
    if (cs.size() > 1) return cs;
  }
  return std::nullopt;
}

// "three zero" -> "30"; "30" stays "30".
inline std::string spell_runway(std::string_view rwy) {
  std::vector<std::string> parts;
  for (char c : rwy) {
    if (c >= '0' && c <= '9') parts.push_back(str::lower(c == '9' ? "niner" : phonetic::digit_word(c)));
    else parts.emplace_back(1, c);
  }
  return str::join(parts, " ");
}

// ---------------------------------------------------------------------------
// Radio calls
// ---------------------------------------------------------------------------

enum class Intention { none, full_stop, touch_and_go, go_around, departure, other };

inline std::string_view to_string(Intention i) {
  static constexpr std::array<std::string_view, 6> kNames{"none", "full_stop", "touch_and_go", "go_around", "departure",
                                                          "other"};
  return kNames[static_cast<int>(i)];
}

struct RadioCall {
  std::optional<std::string> callsign;
  std::optional<PatternPhase> phase;
  std::string position_text;
  std::optional<std::string> runway;
  Intention intention = Intention::none;
  std::string intention_text;
  bool framed = false;
  bool mentions_nordo = false;
  std::string raw_text;

  bool attributed() const { return callsign.has_value(); }
};

namespace call_detail {

inline bool has_phrase(const std::vector<std::string>& w, std::initializer_list<std::string_view> phrase) {
  const std::size_t n = phrase.size();
  for (std::size_t i = 0; i + n <= w.size(); ++i) {
    std::size_t k = 0;
    for (auto p : phrase) {
      if (w[i + k] != p) break;
      ++k;
    }
    if (k == n) return true;
  }
  return false;
}

inline std::optional<PatternPhase> detect_phase(const std::vector<std::string>& w) {
  using P = PatternPhase;
  if (has_phrase(w, {"going", "around"}) || has_phrase(w, {"go", "around"})) return P::go_around;
  if (has_phrase(w, {"clear", "of"}) || has_phrase(w, {"clear", "runway"})) return P::clear_of_runway;
  if (has_phrase(w, {"straight", "in"})) return P::straight_in_final;
  if (has_phrase(w, {"short", "final"})) return P::short_final;
  if (has_phrase(w, {"final"})) return P::final;
  if (has_phrase(w, {"base"})) return P::base;
  if (has_phrase(w, {"downwind"})) return P::downwind;
  if (has_phrase(w, {"crosswind"})) return P::crosswind;
  if (has_phrase(w, {"taking", "runway"}) || has_phrase(w, {"lining", "up"}) || has_phrase(w, {"back", "taxiing"}) ||
      has_phrase(w, {"on", "the", "runway"}))
    return P::on_runway;
  if (has_phrase(w, {"departing"}) || has_phrase(w, {"departure"}) || has_phrase(w, {"upwind"})) return P::departure;
  return std::nullopt;
}

inline std::optional<std::string> detect_runway(const std::vector<std::string>& w) {
  const auto digits_from = [&](std::size_t j) {
    std::string rwy;
    for (; j < w.size() && rwy.size() < 2; ++j) {
      if (str::all_digits(w[j]) && w[j].size() <= 2 && rwy.empty()) return w[j];
      auto d = phonetic::decode_digit(w[j]);
      if (!d) break;
      rwy.push_back(*d);
    }
    return rwy;
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != "runway") continue;
    auto rwy = digits_from(i + 1);
    if (!rwy.empty()) return rwy;
  }
  // "short final three zero": a lone pair of digit words.
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (phonetic::decode_digit(w[i]) && phonetic::decode_digit(w[i + 1]) &&
        (i + 2 >= w.size() || !phonetic::decode_digit(w[i + 2])) && (i == 0 || !phonetic::decode_word(w[i - 1])))
      return digits_from(i);
  }
  return std::nullopt;
}

inline Intention detect_intention(const std::vector<std::string>& w) {
  if (has_phrase(w, {"full", "stop"})) return Intention::full_stop;
  if (has_phrase(w, {"touch", "and", "go"})) return Intention::touch_and_go;
  if (has_phrase(w, {"going", "around"}) || has_phrase(w, {"go", "around"})) return Intention::go_around;
  if (has_phrase(w, {"departing"}) || has_phrase(w, {"departure"})) return Intention::departure;
  return Intention::none;
}

inline bool detect_nordo(const std::vector<std::string>& w) {
  return has_phrase(w, {"no", "radio"}) || has_phrase(w, {"nordo"}) || has_phrase(w, {"non", "radio"}) ||
         has_phrase(w, {"not", "on", "frequency"}) || has_phrase(w, {"not", "talking"});
}

}  // namespace call_detail

// Parses one self-announcement. The "Half Moon Bay traffic ... Half Moon Bay"
// frame is optional. A call with no decodable N-number is left unattributed.
inline RadioCall parse_radio_call(std::string_view utterance) {
  RadioCall call;
  call.raw_text = std::string(utterance);
  std::vector<std::string> segments;
  for (auto& s : str::split(utterance, ',')) {
    std::string seg(str::trim(s));
    while (!seg.empty() && (seg.back() == '.' || seg.back() == '!' || seg.back() == '?')) seg.pop_back();
    seg = std::string(str::trim(seg));
    if (!seg.empty()) segments.push_back(seg);
  }
  if (!segments.empty() && str::ends_with(str::lower(segments.front()), "traffic")) {
    call.framed = true;
    segments.erase(segments.begin());
  }
  if (!segments.empty() && str::lower(segments.back()) == "half moon bay") segments.pop_back();

  std::vector<std::string> rest;
  for (const auto& seg : segments) {
    if (!call.callsign) {
      if (auto cs = decode_callsign(seg)) {
        call.callsign = cs;
        continue;
      }
    }
    rest.push_back(seg);
  }

  const auto w = phonetic::words(str::join(rest, " "));
  call.phase = call_detail::detect_phase(w);
  call.runway = call_detail::detect_runway(w);
  call.intention = call_detail::detect_intention(w);
  call.mentions_nordo = call_detail::detect_nordo(w);
  for (const auto& seg : rest) {
    if (call_detail::detect_phase(phonetic::words(seg))) {
      call.position_text = seg;
      break;
    }
  }
  if (call.intention != Intention::none) {
    for (const auto& seg : rest)
      if (call_detail::detect_intention(phonetic::words(seg)) == call.intention) call.intention_text = seg;
  } else if (call.framed && rest.size() >= 2) {
    call.intention = Intention::other;
    call.intention_text = rest.back();
  }
  return call;
}

// "Half Moon Bay traffic, <who>, <position>[, <intention>], Half Moon Bay."
inline std::string frame_call(std::string_view airfield_name, std::string_view who, std::string_view position,
                              std::string_view intention) {
  std::string out = std::string(airfield_name) + " traffic, " + std::string(who) + ", " + std::string(position);
  if (!intention.empty()) out += ", " + std::string(intention);
  return out + ", " + std::string(airfield_name) + ".";
}

}  // namespace ctaf
