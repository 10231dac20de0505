#ifndef SPOOFAUDIT_WAV_HPP
#define SPOOFAUDIT_WAV_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"

namespace spoofaudit {

struct WavFormatError : ValidationError {
  using ValidationError::ValidationError;
};
// Well-formed RIFF but an encoding we refuse (non-PCM, stereo, not 16-bit).
struct WavUnsupportedError : ValidationError {
  using ValidationError::ValidationError;
};
struct WavIoError : Error {
  using Error::Error;
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t rd_u16(const unsigned char* p) { return p[0] | (p[1] << 8); }

inline void wr_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 24) & 0xff);
}
inline void wr_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
}

}  // namespace detail

// PCM 16-bit little-endian mono only. Stereo and float WAV are rejected, not
// downmixed.
inline AudioSignal load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw WavIoError("load_wav: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw WavFormatError("load_wav: not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* p = buf.data() + pos;
    std::uint32_t len = detail::rd_u32(p + 4);
    if (pos + 8 + len > buf.size())
      throw WavFormatError("load_wav: chunk length exceeds file size: " + path);
    if (std::memcmp(p, "fmt ", 4) == 0) {
      if (len < 16) throw WavFormatError("load_wav: short fmt chunk: " + path);
      format = detail::rd_u16(p + 8);
      channels = detail::rd_u16(p + 10);
      rate = detail::rd_u32(p + 12);
      bits = detail::rd_u16(p + 22);
      have_fmt = true;
    } else if (std::memcmp(p, "data", 4) == 0) {
      data = p + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) throw WavFormatError("load_wav: missing fmt chunk: " + path);
  if (data == nullptr) throw WavFormatError("load_wav: missing data chunk: " + path);
  if (format != 1)
    throw WavUnsupportedError("load_wav: non-PCM encoding " +
                              std::to_string(format) + ": " + path);
  if (channels != 1)
    throw WavUnsupportedError("load_wav: expected mono, got " +
                              std::to_string(channels) + " channels: " + path);
  if (bits != 16)
    throw WavUnsupportedError("load_wav: expected 16-bit, got " +
                              std::to_string(bits) + ": " + path);
  if (rate == 0) throw WavFormatError("load_wav: zero sample rate: " + path);
  if (data_len % 2 != 0)
    throw WavFormatError("load_wav: odd data chunk length: " + path);

  AudioSignal sig;
  sig.sample_rate = static_cast<int>(rate);
  sig.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    std::int16_t v = static_cast<std::int16_t>(
        detail::rd_u16(data + 2 * i));
    sig.samples[i] = v / 32768.0;
  }
  return sig;
}

inline void save_wav(const AudioSignal& sig, const std::string& path) {
  std::vector<unsigned char> out;
  std::uint32_t data_len = static_cast<std::uint32_t>(sig.size() * 2);
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::wr_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  detail::wr_u32(out, 16);
  detail::wr_u16(out, 1);  // PCM
  detail::wr_u16(out, 1);  // mono
  detail::wr_u32(out, static_cast<std::uint32_t>(sig.sample_rate));
  detail::wr_u32(out, static_cast<std::uint32_t>(sig.sample_rate) * 2);
  detail::wr_u16(out, 2);   // block align
  detail::wr_u16(out, 16);  // bits
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::wr_u32(out, data_len);
  for (double s : sig.samples) {
    double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
    long q = std::lround(c * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    detail::wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavIoError("save_wav: cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw WavIoError("save_wav: write failed: " + path);
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_WAV_HPP
