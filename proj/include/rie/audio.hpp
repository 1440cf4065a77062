#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rie {

inline constexpr int kCanonicalRate = 16000;

/// Mono PCM samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalRate;
  std::string id;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

enum class Window { kHann, kGaussian, kRectangular };

/// Windowed frames, one per row.
struct FrameSequence {
  Eigen::MatrixXd frames;  // n_frames x frame_len
  double frame_s = 0.0;
  double hop_s = 0.0;
  int sample_rate_hz = kCanonicalRate;
  int hop_len = 0;

  Eigen::Index count() const { return frames.rows(); }
  Eigen::Index frame_len() const { return frames.cols(); }
  /// Sample index of the centre of frame `i`.
  double centre(Eigen::Index i) const {
    return static_cast<double>(i) * hop_len + 0.5 * static_cast<double>(frame_len());
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a mono RIFF/WAVE file (PCM16 or IEEE float32). PCM16 is scaled by
/// 1/32768. The id defaults to the file stem.
AudioBuffer load_wav(const std::filesystem::path& path,
                     std::optional<std::string> id = std::nullopt);

void write_wav(const AudioBuffer& buf, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::kFloat32);

/// Anti-aliased rational decimation to 16 kHz (Kaiser-windowed sinc,
/// beta 8.6, 64 taps per phase). 16 kHz input is returned unchanged.
AudioBuffer resample_to_16k(const AudioBuffer& buf);

std::vector<double> make_window(Window kind, Eigen::Index n);

/// Number of full frames of `frame_len` samples at `hop` spacing.
Eigen::Index frame_count(Eigen::Index n_samples, Eigen::Index frame_len, Eigen::Index hop);

FrameSequence frame_signal(const AudioBuffer& buf, double frame_s, double hop_s,
                           Window window = Window::kHann);

}  // namespace rie
