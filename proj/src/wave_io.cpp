#include "cws/wave_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cws {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

FmtChunk parse_fmt(const unsigned char* p, std::uint32_t size) {
  if (size < 16) throw WavError(WavErrorCode::malformed_header, "fmt chunk shorter than 16 bytes");
  FmtChunk f;
  f.format = get_u16(p);
  f.channels = get_u16(p + 2);
  f.sample_rate = get_u32(p + 4);
  f.block_align = get_u16(p + 12);
  f.bits = get_u16(p + 14);
  if (f.format == kFormatExtensible) {
    if (size < 40) throw WavError(WavErrorCode::malformed_header, "extensible fmt chunk too short");
    // first two bytes of the subformat GUID carry the plain format tag
    f.format = get_u16(p + 24);
  }
  if (f.format != kFormatPcm && f.format != kFormatFloat) {
    throw WavError(WavErrorCode::unsupported_codec,
                   "unsupported audio format tag " + std::to_string(f.format));
  }
  const bool ok_bits = (f.format == kFormatPcm && (f.bits == 16 || f.bits == 24)) ||
                       (f.format == kFormatFloat && f.bits == 32);
  if (!ok_bits) {
    throw WavError(WavErrorCode::unsupported_codec,
                   "unsupported bit depth " + std::to_string(f.bits) + " for format tag " +
                       std::to_string(f.format));
  }
  if (f.channels != 1 && f.channels != 2) {
    throw WavError(WavErrorCode::unsupported_codec,
                   "unsupported channel count " + std::to_string(f.channels));
  }
  if (f.sample_rate == 0) throw WavError(WavErrorCode::malformed_header, "sample rate is zero");
  if (f.block_align != f.channels * (f.bits / 8)) {
    throw WavError(WavErrorCode::malformed_header, "block align does not match channels and bit depth");
  }
  return f;
}

}  // namespace

void Waveform::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("waveform sample rate must be positive");
  if (samples.size() != 1 && samples.size() != 2) {
    throw std::invalid_argument("waveform must have 1 or 2 channels");
  }
  const std::size_t n = samples.front().size();
  for (const auto& ch : samples) {
    if (ch.size() != n) throw std::invalid_argument("waveform channels differ in length");
    for (double v : ch) {
      if (!std::isfinite(v)) throw std::invalid_argument("waveform contains non-finite samples");
    }
  }
}

WavError::WavError(WavErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

const char* to_string(WavErrorCode code) {
  switch (code) {
    case WavErrorCode::io: return "io error";
    case WavErrorCode::not_riff: return "not a RIFF/WAVE file";
    case WavErrorCode::malformed_header: return "malformed header";
    case WavErrorCode::unsupported_codec: return "unsupported codec";
    case WavErrorCode::truncated_data: return "truncated data chunk";
    case WavErrorCode::invalid_samples: return "invalid samples";
  }
  return "unknown wav error";
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavErrorCode::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(WavErrorCode::not_riff, path.string());
  }

  FmtChunk fmt;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = get_u32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;

    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size > available) throw WavError(WavErrorCode::malformed_header, "fmt chunk exceeds file size");
      fmt = parse_fmt(bytes.data() + body, size);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw WavError(WavErrorCode::malformed_header, "data chunk before fmt chunk");
      if (size > available) {
        throw WavError(WavErrorCode::truncated_data,
                       "declared " + std::to_string(size) + " bytes, " + std::to_string(available) +
                           " present");
      }
      if (size % fmt.block_align != 0) {
        throw WavError(WavErrorCode::truncated_data, "data size is not a whole number of frames");
      }
      const std::size_t frames = size / fmt.block_align;
      Waveform w(fmt.channels, frames, static_cast<int>(fmt.sample_rate));
      const unsigned char* p = bytes.data() + body;
      const std::size_t width = fmt.bits / 8;
      for (std::size_t n = 0; n < frames; ++n) {
        for (std::size_t c = 0; c < fmt.channels; ++c, p += width) {
          double v = 0.0;
          if (fmt.format == kFormatFloat) {
            const std::uint32_t raw = get_u32(p);
            float f;
            std::memcpy(&f, &raw, sizeof f);
            if (!std::isfinite(f)) throw WavError(WavErrorCode::invalid_samples, "non-finite float sample");
            v = f;
          } else if (fmt.bits == 16) {
            v = static_cast<std::int16_t>(get_u16(p)) / 32768.0;
          } else {
            std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
            if (s & 0x800000) s -= 0x1000000;
            v = s / 8388608.0;
          }
          w.samples[c][n] = v;
        }
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw WavError(WavErrorCode::malformed_header, have_fmt ? "no data chunk" : "no fmt chunk");
}

void write_wav(const Waveform& w, const std::filesystem::path& path, WavFormat format) {
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw WavError(WavErrorCode::invalid_samples, e.what());
  }
  const std::uint16_t channels = static_cast<std::uint16_t>(w.channels());
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(w.length()) * block;
  if (data_bytes > 0xFFFFFFFFull - 36) throw WavError(WavErrorCode::io, "signal too long for RIFF");

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));

  constexpr double kMaxPcm = 1.0 - 1.0 / 32768.0;
  for (std::size_t n = 0; n < w.length(); ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = w.samples[c][n];
      if (format == WavFormat::pcm16) {
        const double clamped = std::clamp(v, -1.0, kMaxPcm);
        const auto q = static_cast<std::int16_t>(std::round(clamped * 32768.0));
        put_u16(out, static_cast<std::uint16_t>(q));
      } else {
        const float f = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put_u32(out, raw);
      }
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw WavError(WavErrorCode::io, "cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw WavError(WavErrorCode::io, "write failed for " + path.string());
}

}  // namespace cws
