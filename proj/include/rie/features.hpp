#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rie/audio.hpp"
#include "rie/exec.hpp"

namespace rie {

/// Value carried by frames that have no valid measurement (unvoiced F0,
/// no formant found). Always paired with voiced[i] == 0.
inline constexpr double kSentinel = std::numeric_limits<double>::quiet_NaN();

/// Per-frame descriptor plus the frame mask used by the functionals.
struct LldTrack {
  std::vector<double> values;
  std::vector<std::uint8_t> voiced;

  std::size_t size() const { return values.size(); }
};

struct F0Config {
  double fmin_hz = 60.0;
  double fmax_hz = 500.0;
  double voicing_threshold = 0.45;  // normalized autocorrelation peak
  double frame_s = 0.040;
  double hop_s = 0.010;
  int median_window = 5;
};

/// Pitch in semitones re 27.5 Hz from the normalized autocorrelation
/// (NCCF) peak. Voicing and values are median-smoothed.
LldTrack track_f0(const AudioBuffer& buf, const F0Config& cfg = {});

inline double hz_to_semitones(double hz) { return 12.0 * std::log2(hz / 27.5); }

/// Mel-cepstral coefficients 1..n_coeffs (coefficient 0 dropped) from
/// 26 triangular mel filters over 20-8000 Hz.
std::vector<LldTrack> compute_mfcc(const FrameSequence& frames, int n_coeffs = 4);

/// The per-frame MFCC kernel on a one-sided power spectrum of `n_fft` points.
std::vector<double> mfcc_from_power(std::span<const double> power, int sample_rate,
                                    int n_fft, int n_coeffs = 4);

struct SpectralTracks {
  LldTrack alpha_ratio;     // dB
  LldTrack hammarberg;      // dB
  LldTrack spectral_flux;   // dimensionless
};

SpectralTracks spectral_measures(const FrameSequence& frames);

struct Formant {
  double freq_hz;
  double bandwidth_hz;
};

/// All LPC resonances of one frame (autocorrelation method, Levinson-Durbin,
/// roots of the predictor polynomial), sorted by frequency. `pre_emphasis`
/// is off by default: a 0.97 first-order pre-emphasis shifts the resonance
/// of a white-excited AR(2) process at 500 Hz up by about 13%.
std::vector<Formant> lpc_formants(std::span<const double> frame, int sample_rate,
                                  int order = 12, double pre_emphasis = 0.0);

/// Lowest resonance in [150, 1500] Hz with bandwidth below 1000 Hz.
std::optional<Formant> first_formant(std::span<const double> frame, int sample_rate);

/// F1 bandwidth per frame. Frames excluded by `voiced` (empty = all frames)
/// or without a formant carry the sentinel.
LldTrack estimate_f1_bandwidth(const FrameSequence& frames,
                               std::span<const std::uint8_t> voiced = {});

/// A-weighted frame RMS in dB, floored at -120 dB.
LldTrack compute_loudness(const FrameSequence& frames);

struct Functionals {
  double mean = 0.0;
  double stddev_norm = 0.0;
  double p20 = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
  bool no_voiced = false;
};

/// Statistics over the voiced, finite frames of a track.
Functionals functionals(const LldTrack& track);

/// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

/// Utterance-level feature vector in canonical name order.
struct FeatureVector {
  std::string id;
  std::vector<std::string> names;
  std::vector<double> values;
  bool unvoiced = false;  // no voiced frame: all functionals are zero

  double at(std::string_view name) const;
  std::size_t size() const { return values.size(); }
};

/// phi(b) - phi(a), same names as its inputs.
struct DiffFeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  double at(std::string_view name) const;
};

/// The 26 candidate-pool feature names in canonical order.
const std::vector<std::string>& feature_names();

/// The ten descriptors fed to the concatenated-feature net.
const std::vector<std::string>& featnet_feature_names();

/// Every per-frame descriptor of one utterance on the 10 ms grid.
struct LldBundle {
  LldTrack f0;  // on the F0 framing
  std::vector<LldTrack> mfcc;
  SpectralTracks spectral;
  LldTrack f1_bandwidth;
  LldTrack loudness;
  std::vector<std::uint8_t> lld_voiced;  // F0 voicing mapped onto the LLD frames
  Eigen::Index lld_frames = 0;
};

LldBundle extract_llds(const AudioBuffer& buf);

FeatureVector extract_features(const AudioBuffer& buf);

/// Batch extraction. The parallel path runs one utterance per OpenMP task
/// and is bit-identical to the serial path.
std::vector<FeatureVector> extract_features_batch(std::span<const AudioBuffer> bufs,
                                                  Exec exec = Exec::kParallel);

DiffFeatureVector diff_features(const FeatureVector& fa, const FeatureVector& fb);

/// CSV with header `id,<names...>`, 9 significant digits.
void write_features_csv(const std::filesystem::path& path,
                        std::span<const FeatureVector> rows);
std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path);

}  // namespace rie
