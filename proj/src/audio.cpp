#include "rie/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"

namespace rie {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

bool supported_rate(int rate) {
  return rate == 16000 || rate == 22050 || rate == 44100 || rate == 48000;
}

std::uint16_t rd16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t rd32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path, std::optional<std::string> id) {
  const auto data = read_file_bytes(path);
  const std::uint8_t* p = data.data();
  const std::size_t n = data.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw UnsupportedFormat(path.string() + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* payload = nullptr;
  std::size_t payload_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = rd32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (size > n - body) {
      throw CorruptFile(path.string() + ": chunk '" +
                        std::string(reinterpret_cast<const char*>(p + pos), 4) +
                        "' is truncated");
    }
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw CorruptFile(path.string() + ": short fmt chunk");
      format = rd16(p + body);
      channels = rd16(p + body + 2);
      rate = rd32(p + body + 4);
      bits = rd16(p + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw CorruptFile(path.string() + ": short extensible fmt chunk");
        format = rd16(p + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      payload = p + body;
      payload_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (pos < n && pos + 8 > n && payload == nullptr) {
    throw CorruptFile(path.string() + ": trailing partial chunk header");
  }
  if (!have_fmt || payload == nullptr) {
    throw CorruptFile(path.string() + ": missing fmt or data chunk");
  }
  if (channels != 1) {
    throw UnsupportedFormat(path.string() + ": " + std::to_string(channels) +
                            " channels (mono required)");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw UnsupportedFormat(path.string() + ": codec " + std::to_string(format) + "/" +
                            std::to_string(bits) + " bit");
  }
  if (!supported_rate(static_cast<int>(rate))) {
    throw UnsupportedFormat(path.string() + ": sample rate " + std::to_string(rate));
  }
  const std::size_t width = pcm16 ? 2 : 4;
  if (payload_size % width != 0) {
    throw CorruptFile(path.string() + ": data size not a multiple of the sample width");
  }

  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(rate);
  buf.id = id ? *id : path.stem().string();
  const std::size_t count = payload_size / width;
  if (count == 0) throw CorruptFile(path.string() + ": empty data chunk");
  buf.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (pcm16) {
      const auto raw = static_cast<std::int16_t>(rd16(payload + 2 * i));
      buf.samples[i] = static_cast<double>(raw) / 32768.0;
    } else {
      float v;
      std::memcpy(&v, payload + 4 * i, 4);
      if (!std::isfinite(v)) throw CorruptFile(path.string() + ": non-finite sample");
      buf.samples[i] = std::clamp(static_cast<double>(v), -1.0, 1.0);
    }
  }
  return buf;
}

void write_wav(const AudioBuffer& buf, const std::filesystem::path& path,
               WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint32_t width = pcm16 ? 2 : 4;
  const auto data_size = static_cast<std::uint32_t>(buf.samples.size() * width);

  ByteWriter w;
  w.magic("RIFF");
  w.u32(36 + data_size);
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  const std::uint16_t header[2] = {pcm16 ? kFormatPcm : kFormatFloat, 1};
  w.u32(header[0] | (static_cast<std::uint32_t>(header[1]) << 16));
  w.u32(static_cast<std::uint32_t>(buf.sample_rate_hz));
  w.u32(static_cast<std::uint32_t>(buf.sample_rate_hz) * width);
  w.u32(width | ((width * 8u) << 16));  // block align, bits per sample
  w.magic("data");
  w.u32(data_size);
  for (double s : buf.samples) {
    if (pcm16) {
      const long q = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
      std::uint8_t raw[2];
      std::memcpy(raw, &v, 2);
      w.bytes(raw);
    } else {
      w.f32(static_cast<float>(s));
    }
  }
  write_file_atomic(path, w.buffer());
}

AudioBuffer resample_to_16k(const AudioBuffer& buf) {
  const int rate = buf.sample_rate_hz;
  if (rate < kCanonicalRate) {
    throw UpsampleRequested(buf.id + ": input rate " + std::to_string(rate) + " < 16000");
  }
  if (rate == kCanonicalRate) return buf;

  const int g = std::gcd(rate, kCanonicalRate);
  const long up = kCanonicalRate / g;    // L
  const long down = rate / g;            // M
  constexpr int kTaps = 64;
  constexpr int kHalf = kTaps / 2;
  constexpr double kBeta = 8.6;
  // Cutoff below the output Nyquist so the Kaiser transition band ends near 8 kHz.
  const double cutoff = 7000.0 / rate;  // cycles per input sample
  const double i0_beta = bessel_i0(kBeta);

  // One row of taps per output phase; phase p is offset p/L input samples.
  std::vector<double> bank(static_cast<std::size_t>(up) * kTaps);
  for (long ph = 0; ph < up; ++ph) {
    const double frac = static_cast<double>(ph) / up;
    double sum = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const double tau = static_cast<double>(j - kHalf + 1) - frac;  // x[i + j - 31] at time t
      const double x = 2.0 * cutoff * tau;
      const double sinc = std::abs(x) < 1e-12 ? 1.0
                                              : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double r = tau / kHalf;
      const double kaiser = std::abs(r) >= 1.0 ? 0.0 : bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      const double h = 2.0 * cutoff * sinc * kaiser;
      bank[static_cast<std::size_t>(ph * kTaps + j)] = h;
      sum += h;
    }
    for (int j = 0; j < kTaps; ++j) bank[static_cast<std::size_t>(ph * kTaps + j)] /= sum;
  }

  const auto n_in = static_cast<long>(buf.samples.size());
  const long n_out = std::lround(static_cast<double>(n_in) * kCanonicalRate / rate);
  AudioBuffer out;
  out.id = buf.id;
  out.sample_rate_hz = kCanonicalRate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long n = 0; n < n_out; ++n) {
    const long pos = n * down;
    const long base = pos / up;
    const long ph = pos % up;
    const double* h = &bank[static_cast<std::size_t>(ph * kTaps)];
    double acc = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const long idx = base + j - kHalf + 1;
      if (idx >= 0 && idx < n_in) acc += h[j] * buf.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(n)] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

std::vector<double> make_window(Window kind, Eigen::Index n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n <= 1) return w;
  switch (kind) {
    case Window::kRectangular:
      break;
    case Window::kHann:
      for (Eigen::Index i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n));
      }
      break;
    case Window::kGaussian: {
      const double half = 0.5 * static_cast<double>(n - 1);
      constexpr double sigma = 0.4;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = (static_cast<double>(i) - half) / (sigma * half);
        w[i] = std::exp(-0.5 * z * z);
      }
      break;
    }
  }
  return w;
}

Eigen::Index frame_count(Eigen::Index n_samples, Eigen::Index frame_len, Eigen::Index hop) {
  if (n_samples < frame_len) return 0;
  return (n_samples - frame_len) / hop + 1;
}

FrameSequence frame_signal(const AudioBuffer& buf, double frame_s, double hop_s, Window window) {
  if (!(hop_s > 0.0) || hop_s > frame_s) {
    throw Error("frame_signal: need 0 < hop <= frame");
  }
  const auto frame_len = static_cast<Eigen::Index>(std::lround(frame_s * buf.sample_rate_hz));
  const auto hop = std::max<Eigen::Index>(1, std::lround(hop_s * buf.sample_rate_hz));
  const auto n = static_cast<Eigen::Index>(buf.samples.size());
  if (frame_len < 1 || frame_len > n) {
    throw SignalTooShort(buf.id + ": " + std::to_string(n) + " samples < frame of " +
                         std::to_string(frame_len));
  }
  const Eigen::Index count = frame_count(n, frame_len, hop);
  const auto w = make_window(window, frame_len);

  FrameSequence fs;
  fs.frame_s = frame_s;
  fs.hop_s = hop_s;
  fs.sample_rate_hz = buf.sample_rate_hz;
  fs.hop_len = static_cast<int>(hop);
  fs.frames.resize(count, frame_len);
  for (Eigen::Index f = 0; f < count; ++f) {
    const double* src = buf.samples.data() + f * hop;
    for (Eigen::Index i = 0; i < frame_len; ++i) fs.frames(f, i) = src[i] * w[i];
  }
  return fs;
}

}  // namespace rie
