#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ctaf/common.hpp"
#include "ctaf/scenario.hpp"

namespace ctaf {

// Interleaved 16-bit PCM.
struct Pcm {
  int sample_rate = 16000;
  int channels = 1;
  std::vector<std::int16_t> samples;

  double seconds() const {
    return channels > 0 && sample_rate > 0 ? static_cast<double>(samples.size()) / channels / sample_rate : 0.0;
  }
  friend bool operator==(const Pcm&, const Pcm&) = default;
};

namespace wav_detail {

inline std::uint32_t le32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}
inline std::uint16_t le16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) | static_cast<unsigned char>(b[at + 1]) << 8);
}
inline void put32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>(v >> 8));
}

}  // namespace wav_detail

inline std::string encode_wav(const Pcm& p) {
  using namespace wav_detail;
  const auto data_bytes = static_cast<std::uint32_t>(p.samples.size() * 2);
  std::string b = "RIFF";
  put32(b, 36 + data_bytes);
  b += "WAVEfmt ";
  put32(b, 16);
  put16(b, 1);
  put16(b, static_cast<std::uint16_t>(p.channels));
  put32(b, static_cast<std::uint32_t>(p.sample_rate));
  put32(b, static_cast<std::uint32_t>(p.sample_rate * p.channels * 2));
  put16(b, static_cast<std::uint16_t>(p.channels * 2));
  put16(b, 16);
  b += "data";
  put32(b, data_bytes);
  for (auto s : p.samples) put16(b, static_cast<std::uint16_t>(s));
  return b;
}

// Only uncompressed 16-bit PCM. Unknown chunks are skipped.
inline Pcm decode_wav(const std::string& b) {
  using namespace wav_detail;
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) throw ParseError("not a RIFF/WAVE file", "RIFF", 0);
  Pcm p;
  bool have_fmt = false, have_data = false;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::string id = b.substr(at, 4);
    const std::size_t len = le32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + len > b.size()) throw ParseError("truncated chunk " + id, id, at);
    if (id == "fmt ") {
      if (len < 16) throw ParseError("short fmt chunk", id, at);
      if (le16(b, body) != 1) throw ParseError("only PCM WAV is supported", id, at);
      p.channels = le16(b, body + 2);
      p.sample_rate = static_cast<int>(le32(b, body + 4));
      if (le16(b, body + 14) != 16) throw ParseError("only 16-bit WAV is supported", id, at);
      have_fmt = true;
    } else if (id == "data") {
      p.samples.resize(len / 2);
      for (std::size_t i = 0; i < p.samples.size(); ++i) p.samples[i] = static_cast<std::int16_t>(le16(b, body + 2 * i));
      have_data = true;
    }
    at = body + len + (len & 1);
  }
  if (!have_fmt || !have_data) throw ParseError("WAV missing fmt or data chunk", "", 0);
  if (p.channels < 1) throw ParseError("WAV has no channels", "fmt ", 0);
  return p;
}

inline Pcm read_wav(const fs::path& path) { return decode_wav(read_file(path)); }
inline void write_wav(const fs::path& path, const Pcm& p) { write_file(path, encode_wav(p)); }

inline double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  long double s = 0;
  for (double v : x) s += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(s / static_cast<long double>(x.size())));
}

inline double rms(const Pcm& p) {
  if (p.samples.empty()) return 0.0;
  long double s = 0;
  for (auto v : p.samples) s += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(s / static_cast<long double>(p.samples.size())));
}

// Sine at `amplitude` (full scale = 1.0).
inline Pcm tone(double freq_hz, double seconds, int sample_rate = 16000, double amplitude = 0.5) {
  Pcm p;
  p.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  p.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    p.samples[i] = static_cast<std::int16_t>(std::lround(amplitude * 32767.0 * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / sample_rate)));
  return p;
}

}  // namespace ctaf
