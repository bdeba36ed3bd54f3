#include "vocluster/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vocluster {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("wav: " + path + ": " + why);
}

std::uint32_t rd32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t rd16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44) fail(path, "truncated header");
  if (std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    fail(path, "not a RIFF/WAVE file");

  int fmt_tag = 0, channels = 0, bits = 0, rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t len = rd32(&buf[pos + 4]);
    if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
      if (pos + 8 + 16 > buf.size()) fail(path, "short fmt chunk");
      fmt_tag = rd16(&buf[pos + 8]);
      channels = rd16(&buf[pos + 10]);
      rate = static_cast<int>(rd32(&buf[pos + 12]));
      bits = rd16(&buf[pos + 22]);
    } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
      data_off = pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (fmt_tag == 0 || data_off == 0) fail(path, "missing fmt or data chunk");
  if (fmt_tag != 1 && fmt_tag != 3) fail(path, "unsupported codec (PCM required)");
  if (channels < 1 || channels > 2) fail(path, "unsupported channel count");
  if (rate <= 0) fail(path, "bad sample rate");
  if (data_off + data_len > buf.size()) data_len = buf.size() - data_off;

  const int bytes = bits / 8;
  if (fmt_tag == 1 && bits != 8 && bits != 16 && bits != 24 && bits != 32)
    fail(path, "unsupported integer width");
  if (fmt_tag == 3 && bits != 32) fail(path, "unsupported float width");
  if (bytes == 0) fail(path, "zero sample width");

  const std::size_t frames = data_len / (static_cast<std::size_t>(bytes) * channels);
  if (frames == 0) fail(path, "empty audio");

  WavData out;
  out.sample_rate = rate;
  out.channels.assign(channels, std::vector<double>(frames));
  const unsigned char* d = &buf[data_off];
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const unsigned char* s = d + (i * channels + c) * bytes;
      double v = 0.0;
      if (fmt_tag == 3) {
        float fv;
        std::memcpy(&fv, s, 4);
        v = fv;
      } else if (bits == 8) {
        v = (static_cast<int>(s[0]) - 128) / 128.0;  // 8-bit WAV is unsigned
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(s[0] | s[1] << 8) / 32768.0;
      } else if (bits == 24) {
        std::int32_t iv = s[0] | s[1] << 8 | s[2] << 16;
        if (iv & 0x800000) iv |= ~0xFFFFFF;
        v = iv / 8388608.0;
      } else {
        std::int32_t iv;
        std::memcpy(&iv, s, 4);
        v = iv / 2147483648.0;
      }
      out.channels[c][i] = v;
    }
  }
  return out;
}

namespace {

void put32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<char*>(b), 4);
}

void put16(std::ofstream& f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<char*>(b), 2);
}

std::int16_t quantize(double v) {
  double s = v * 32767.0;
  if (s > 32767.0) s = 32767.0;
  if (s < -32768.0) s = -32768.0;
  return static_cast<std::int16_t>(std::lround(s));
}

void write_header(std::ofstream& f, int rate, int channels, std::uint32_t data_bytes) {
  f.write("RIFF", 4);
  put32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put32(f, 16);
  put16(f, 1);
  put16(f, static_cast<std::uint16_t>(channels));
  put32(f, static_cast<std::uint32_t>(rate));
  put32(f, static_cast<std::uint32_t>(rate * channels * 2));
  put16(f, static_cast<std::uint16_t>(channels * 2));
  put16(f, 16);
  f.write("data", 4);
  put32(f, data_bytes);
}

}  // namespace

void write_wav16(const std::string& path, const std::vector<double>& mono, int sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot write");
  write_header(f, sample_rate, 1, static_cast<std::uint32_t>(mono.size() * 2));
  for (double v : mono) put16(f, static_cast<std::uint16_t>(quantize(v)));
}

void write_wav16_stereo(const std::string& path, const std::vector<double>& left,
                        const std::vector<double>& right, int sample_rate) {
  if (left.size() != right.size()) fail(path, "channel length mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot write");
  write_header(f, sample_rate, 2, static_cast<std::uint32_t>(left.size() * 4));
  for (std::size_t i = 0; i < left.size(); ++i) {
    put16(f, static_cast<std::uint16_t>(quantize(left[i])));
    put16(f, static_cast<std::uint16_t>(quantize(right[i])));
  }
}

}  // namespace vocluster
