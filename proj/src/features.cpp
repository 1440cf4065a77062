#include "rie/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"
#include "rie/fft.hpp"

namespace rie {

namespace {

constexpr double kLldFrameS = 0.025;
constexpr double kLldHopS = 0.010;
constexpr int kLldFft = 512;
constexpr int kMelFilters = 26;
constexpr double kMelLowHz = 20.0;
constexpr double kMelHighHz = 8000.0;
constexpr double kLogFloor = 1e-10;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double bin_hz(int k, int sample_rate, int n_fft) {
  return static_cast<double>(k) * sample_rate / n_fft;
}

int fft_size_for(Eigen::Index n) {
  int s = 1;
  while (s < n) s <<= 1;
  return s;
}

std::vector<double> row_of(const FrameSequence& fs, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(fs.frame_len()));
  for (Eigen::Index j = 0; j < fs.frame_len(); ++j) r[j] = fs.frames(i, j);
  return r;
}

LldTrack make_track(Eigen::Index n) {
  LldTrack t;
  t.values.assign(static_cast<std::size_t>(n), 0.0);
  t.voiced.assign(static_cast<std::size_t>(n), 1);
  return t;
}

double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Per-frame NCCF pitch estimate before smoothing.
struct RawPitch {
  bool voiced = false;
  double semitones = 0.0;
};

RawPitch pitch_of_frame(std::span<const double> frame, int sample_rate, const F0Config& cfg,
                        const RealFft& fft) {
  const auto n = static_cast<int>(frame.size());
  std::vector<double> x(frame.begin(), frame.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  for (double& v : x) v -= mean;

  const int min_lag = std::max(2, static_cast<int>(std::floor(sample_rate / cfg.fmax_hz)));
  const int max_lag = std::min(n - 2, static_cast<int>(std::ceil(sample_rate / cfg.fmin_hz)));
  if (max_lag <= min_lag + 1) return {};

  // Linear autocorrelation through a zero-padded power spectrum.
  std::vector<std::complex<double>> spec;
  fft.forward(x, spec);
  for (auto& c : spec) c = std::norm(c);
  std::vector<double> acf;
  fft.inverse(spec, acf);

  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
  const double total = prefix[n];
  if (total <= 0.0) return {};

  const int lo = min_lag - 1;
  const int hi = max_lag + 1;
  std::vector<double> nccf(static_cast<std::size_t>(hi) + 1, 0.0);
  for (int lag = lo; lag <= hi; ++lag) {
    const double e_head = prefix[n - lag];
    const double e_tail = total - prefix[lag];
    const double denom = std::sqrt(e_head * e_tail);
    nccf[lag] = denom > 1e-300 ? acf[lag] / fft.size() / denom : 0.0;
  }

  double best = -1.0;
  std::vector<int> peaks;
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    if (nccf[lag] >= nccf[lag - 1] && nccf[lag] > nccf[lag + 1]) {
      peaks.push_back(lag);
      best = std::max(best, nccf[lag]);
    }
  }
  if (peaks.empty() || best < cfg.voicing_threshold) return {};

  // Shortest lag whose peak is close to the best one avoids sub-octave picks.
  int chosen = peaks.back();
  for (int lag : peaks) {
    if (nccf[lag] >= 0.9 * best) {
      chosen = lag;
      break;
    }
  }
  const double a = nccf[chosen - 1], b = nccf[chosen], c = nccf[chosen + 1];
  const double curvature = a - 2.0 * b + c;
  double offset = curvature < 0.0 ? 0.5 * (a - c) / curvature : 0.0;
  offset = std::clamp(offset, -0.5, 0.5);
  const double period = chosen + offset;
  return {true, hz_to_semitones(sample_rate / period)};
}

// Triangular mel filterbank weights: kMelFilters rows x (n_fft/2+1) bins.
const std::vector<std::vector<double>>& mel_bank(int sample_rate, int n_fft) {
  thread_local int cached_rate = 0;
  thread_local int cached_fft = 0;
  thread_local std::vector<std::vector<double>> bank;
  if (cached_rate == sample_rate && cached_fft == n_fft) return bank;
  const int bins = n_fft / 2 + 1;
  const double lo = hz_to_mel(kMelLowHz);
  const double hi = hz_to_mel(std::min(kMelHighHz, 0.5 * sample_rate));
  std::vector<double> edges(kMelFilters + 2);
  for (int i = 0; i < kMelFilters + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (kMelFilters + 1));
  }
  bank.assign(kMelFilters, std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int m = 0; m < kMelFilters; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = bin_hz(k, sample_rate, n_fft);
      if (f > left && f < right) {
        bank[m][k] = f <= centre ? (f - left) / (centre - left) : (right - f) / (right - centre);
      }
    }
  }
  cached_rate = sample_rate;
  cached_fft = n_fft;
  return bank;
}

double a_weight(double f) {
  if (f <= 0.0) return 0.0;
  const double f2 = f * f;
  const double num = 12194.0 * 12194.0 * f2 * f2;
  const double den = (f2 + 20.6 * 20.6) *
                     std::sqrt((f2 + 107.7 * 107.7) * (f2 + 737.9 * 737.9)) *
                     (f2 + 12194.0 * 12194.0);
  return num / den * std::pow(10.0, 2.0 / 20.0);
}

std::vector<std::uint8_t> map_voicing(const LldTrack& f0, const FrameSequence& f0_frames,
                                      const FrameSequence& lld) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(lld.count()), 0);
  const auto n_f0 = static_cast<Eigen::Index>(f0.size());
  if (n_f0 == 0) return out;
  for (Eigen::Index i = 0; i < lld.count(); ++i) {
    const double c = lld.centre(i);
    auto j = static_cast<Eigen::Index>(
        std::lround((c - 0.5 * f0_frames.frame_len()) / f0_frames.hop_len));
    j = std::clamp<Eigen::Index>(j, 0, n_f0 - 1);
    out[i] = f0.voiced[j];
  }
  return out;
}

void mask_track(LldTrack& t, const std::vector<std::uint8_t>& voiced) {
  for (std::size_t i = 0; i < t.size(); ++i) t.voiced[i] = t.voiced[i] && voiced[i];
}

std::size_t index_of(const std::vector<std::string>& names, std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw NameSetMismatch("no feature named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

LldTrack track_f0(const AudioBuffer& buf, const F0Config& cfg) {
  const auto frames = frame_signal(buf, cfg.frame_s, cfg.hop_s, Window::kRectangular);
  const Eigen::Index n = frames.count();
  const int max_lag = static_cast<int>(std::ceil(buf.sample_rate_hz / cfg.fmin_hz)) + 2;
  const RealFft fft(fft_size_for(frames.frame_len() + max_lag));

  std::vector<RawPitch> raw(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    raw[i] = pitch_of_frame(row_of(frames, i), buf.sample_rate_hz, cfg, fft);
  }

  LldTrack out;
  out.values.assign(static_cast<std::size_t>(n), kSentinel);
  out.voiced.assign(static_cast<std::size_t>(n), 0);
  const Eigen::Index half = cfg.median_window / 2;
  std::vector<double> window;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
    window.clear();
    for (Eigen::Index j = lo; j <= hi; ++j) {
      if (raw[j].voiced) window.push_back(raw[j].semitones);
    }
    const auto span = static_cast<std::size_t>(hi - lo + 1);
    if (2 * window.size() > span) {
      out.voiced[i] = 1;
      out.values[i] = median_of(window);
    }
  }
  return out;
}

std::vector<double> mfcc_from_power(std::span<const double> power, int sample_rate, int n_fft,
                                    int n_coeffs) {
  const auto& bank = mel_bank(sample_rate, n_fft);
  std::vector<double> log_mel(kMelFilters);
  for (int m = 0; m < kMelFilters; ++m) {
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
    log_mel[m] = std::log(std::max(e, kLogFloor));
  }
  std::vector<double> c(static_cast<std::size_t>(n_coeffs));
  const double scale = std::sqrt(2.0 / kMelFilters);
  for (int k = 1; k <= n_coeffs; ++k) {
    double acc = 0.0;
    for (int m = 0; m < kMelFilters; ++m) {
      acc += log_mel[m] * std::cos(std::numbers::pi * k * (m + 0.5) / kMelFilters);
    }
    c[k - 1] = scale * acc;
  }
  return c;
}

std::vector<LldTrack> compute_mfcc(const FrameSequence& frames, int n_coeffs) {
  const RealFft fft(std::max(kLldFft, fft_size_for(frames.frame_len())));
  std::vector<LldTrack> out(static_cast<std::size_t>(n_coeffs), make_track(frames.count()));
  for (Eigen::Index i = 0; i < frames.count(); ++i) {
    const auto p = fft.power(row_of(frames, i));
    const auto c = mfcc_from_power(p, frames.sample_rate_hz, fft.size(), n_coeffs);
    for (int k = 0; k < n_coeffs; ++k) out[k].values[i] = c[k];
  }
  return out;
}

SpectralTracks spectral_measures(const FrameSequence& frames) {
  const RealFft fft(std::max(kLldFft, fft_size_for(frames.frame_len())));
  const int sr = frames.sample_rate_hz;
  SpectralTracks out{make_track(frames.count()), make_track(frames.count()),
                     make_track(frames.count())};
  std::vector<double> prev_norm;
  for (Eigen::Index i = 0; i < frames.count(); ++i) {
    const auto p = fft.power(row_of(frames, i));
    double low = 0.0, high = 0.0, peak_low = 0.0, peak_high = 0.0, sq = 0.0;
    std::vector<double> mag(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = bin_hz(static_cast<int>(k), sr, fft.size());
      mag[k] = std::sqrt(p[k]);
      sq += p[k];
      if (f >= 50.0 && f < 1000.0) low += p[k];
      if (f >= 1000.0 && f <= 5000.0) high += p[k];
      if (f <= 2000.0) peak_low = std::max(peak_low, mag[k]);
      if (f > 2000.0 && f <= 5000.0) peak_high = std::max(peak_high, mag[k]);
    }
    out.alpha_ratio.values[i] =
        10.0 * (std::log10(std::max(high, kLogFloor)) - std::log10(std::max(low, kLogFloor)));
    out.hammarberg.values[i] = 20.0 * (std::log10(std::max(peak_low, kLogFloor)) -
                                       std::log10(std::max(peak_high, kLogFloor)));
    const double norm = std::sqrt(sq);
    std::vector<double> cur(mag.size(), 0.0);
    if (norm > 0.0) {
      for (std::size_t k = 0; k < mag.size(); ++k) cur[k] = mag[k] / norm;
    }
    double flux = 0.0;
    if (!prev_norm.empty()) {
      for (std::size_t k = 0; k < cur.size(); ++k) {
        const double d = cur[k] - prev_norm[k];
        flux += d * d;
      }
    }
    out.spectral_flux.values[i] = flux;
    prev_norm = std::move(cur);
  }
  return out;
}

std::vector<Formant> lpc_formants(std::span<const double> frame, int sample_rate, int order,
                                  double pre_emphasis) {
  const auto n = static_cast<int>(frame.size());
  if (n <= order) return {};
  std::vector<double> y(frame.begin(), frame.end());
  if (pre_emphasis != 0.0) {
    for (int i = n - 1; i > 0; --i) y[i] -= pre_emphasis * y[i - 1];
  }

  std::vector<double> r(static_cast<std::size_t>(order) + 1, 0.0);
  for (int lag = 0; lag <= order; ++lag) {
    for (int i = lag; i < n; ++i) r[lag] += y[i] * y[i - lag];
  }
  if (r[0] <= 1e-20) return {};

  // Levinson-Durbin: A(z) = 1 + sum a_k z^-k.
  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0), tmp;
  a[0] = 1.0;
  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    tmp = a;
    for (int j = 1; j < i; ++j) a[j] = tmp[j] + k * tmp[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (err <= 0.0) return {};
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(order, order);
  for (int j = 0; j < order; ++j) companion(0, j) = -a[j + 1];
  for (int i = 1; i < order; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return {};

  std::vector<Formant> out;
  for (Eigen::Index i = 0; i < order; ++i) {
    const std::complex<double> z = solver.eigenvalues()[i];
    if (z.imag() <= 0.0) continue;
    const double radius = std::abs(z);
    if (radius <= 0.0 || radius >= 1.0) continue;
    out.push_back({std::arg(z) * sample_rate / (2.0 * std::numbers::pi),
                   -static_cast<double>(sample_rate) / std::numbers::pi * std::log(radius)});
  }
  std::sort(out.begin(), out.end(),
            [](const Formant& x, const Formant& y) { return x.freq_hz < y.freq_hz; });
  return out;
}

std::optional<Formant> first_formant(std::span<const double> frame, int sample_rate) {
  for (const auto& f : lpc_formants(frame, sample_rate)) {
    if (f.freq_hz >= 150.0 && f.freq_hz <= 1500.0 && f.bandwidth_hz < 1000.0) return f;
  }
  return std::nullopt;
}

LldTrack estimate_f1_bandwidth(const FrameSequence& frames, std::span<const std::uint8_t> voiced) {
  LldTrack out;
  out.values.assign(static_cast<std::size_t>(frames.count()), kSentinel);
  out.voiced.assign(static_cast<std::size_t>(frames.count()), 0);
  for (Eigen::Index i = 0; i < frames.count(); ++i) {
    if (!voiced.empty() && !voiced[i]) continue;
    if (auto f1 = first_formant(row_of(frames, i), frames.sample_rate_hz)) {
      out.values[i] = f1->bandwidth_hz;
      out.voiced[i] = 1;
    }
  }
  return out;
}

LldTrack compute_loudness(const FrameSequence& frames) {
  const RealFft fft(std::max(kLldFft, fft_size_for(frames.frame_len())));
  const int sr = frames.sample_rate_hz;
  // A-weighted mean power per sample of the windowed frame (Parseval).
  std::vector<double> weight(static_cast<std::size_t>(fft.bins()));
  for (int k = 0; k < fft.bins(); ++k) {
    const double a = a_weight(bin_hz(k, sr, fft.size()));
    const double fold = (k == 0 || 2 * k == fft.size()) ? 1.0 : 2.0;
    weight[k] = fold * a * a;
  }
  LldTrack out = make_track(frames.count());
  for (Eigen::Index i = 0; i < frames.count(); ++i) {
    const auto row = row_of(frames, i);
    const auto p = fft.power(row);
    double e = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) e += weight[k] * p[k];
    const double ms = e / fft.size() / static_cast<double>(frames.frame_len());
    out.values[i] = std::max(-120.0, 10.0 * std::log10(std::max(ms, 1e-12)));
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Functionals functionals(const LldTrack& track) {
  std::vector<double> v;
  v.reserve(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (track.voiced[i] && std::isfinite(track.values[i])) v.push_back(track.values[i]);
  }
  Functionals f;
  if (v.empty()) {
    f.no_voiced = true;
    return f;
  }
  const double n = static_cast<double>(v.size());
  f.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - f.mean) * (x - f.mean);
  const double sd = std::sqrt(ss / n);
  f.stddev_norm = f.mean != 0.0 ? sd / std::abs(f.mean) : 0.0;
  std::sort(v.begin(), v.end());
  f.p20 = percentile(v, 0.2);
  f.p50 = percentile(v, 0.5);
  f.p80 = percentile(v, 0.8);
  return f;
}

double FeatureVector::at(std::string_view name) const { return values[index_of(names, name)]; }

double DiffFeatureVector::at(std::string_view name) const {
  return values[index_of(names, name)];
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    auto mean_sd = [&](const std::string& d) {
      n.push_back(d + "_mean");
      n.push_back(d + "_stddevNorm");
    };
    auto full = [&](const std::string& d) {
      mean_sd(d);
      n.push_back(d + "_p20");
      n.push_back(d + "_p50");
      n.push_back(d + "_p80");
    };
    full("F0");
    for (int k = 1; k <= 4; ++k) mean_sd("mfcc" + std::to_string(k));
    mean_sd("alphaRatio");
    mean_sd("hammarbergIndex");
    mean_sd("F1bandwidth");
    mean_sd("spectralFlux");
    full("loudness");
    return n;
  }();
  return names;
}

const std::vector<std::string>& featnet_feature_names() {
  static const std::vector<std::string> names = {
      "F0_mean",         "F0_p20",          "F0_p50",           "F0_p80",
      "mfcc1_mean",      "mfcc2_mean",      "alphaRatio_mean",  "hammarbergIndex_mean",
      "F1bandwidth_mean", "spectralFlux_mean"};
  return names;
}

LldBundle extract_llds(const AudioBuffer& buf) {
  if (buf.sample_rate_hz != kCanonicalRate) {
    throw UnsupportedFormat(buf.id + ": feature extraction needs 16 kHz input");
  }
  LldBundle b;
  const F0Config f0_cfg;
  b.f0 = track_f0(buf, f0_cfg);
  const auto f0_frames_shape = [&] {
    FrameSequence s;
    s.sample_rate_hz = buf.sample_rate_hz;
    s.hop_len = static_cast<int>(std::lround(f0_cfg.hop_s * buf.sample_rate_hz));
    s.frames.resize(0, std::lround(f0_cfg.frame_s * buf.sample_rate_hz));
    return s;
  }();
  const auto lld = frame_signal(buf, kLldFrameS, kLldHopS, Window::kHann);
  b.lld_frames = lld.count();
  b.lld_voiced = map_voicing(b.f0, f0_frames_shape, lld);

  b.mfcc = compute_mfcc(lld, 4);
  b.spectral = spectral_measures(lld);
  b.f1_bandwidth = estimate_f1_bandwidth(lld, b.lld_voiced);
  b.loudness = compute_loudness(lld);
  for (auto& t : b.mfcc) mask_track(t, b.lld_voiced);
  mask_track(b.spectral.alpha_ratio, b.lld_voiced);
  mask_track(b.spectral.hammarberg, b.lld_voiced);
  mask_track(b.spectral.spectral_flux, b.lld_voiced);
  mask_track(b.loudness, b.lld_voiced);
  return b;
}

FeatureVector extract_features(const AudioBuffer& buf) {
  const LldBundle b = extract_llds(buf);
  FeatureVector fv;
  fv.id = buf.id;
  fv.names = feature_names();
  fv.values.reserve(fv.names.size());

  const Functionals f0 = functionals(b.f0);
  fv.unvoiced = f0.no_voiced;
  auto push_mean_sd = [&](const Functionals& f) {
    fv.values.push_back(f.mean);
    fv.values.push_back(f.stddev_norm);
  };
  auto push_full = [&](const Functionals& f) {
    push_mean_sd(f);
    fv.values.push_back(f.p20);
    fv.values.push_back(f.p50);
    fv.values.push_back(f.p80);
  };
  push_full(f0);
  for (const auto& t : b.mfcc) push_mean_sd(functionals(t));
  push_mean_sd(functionals(b.spectral.alpha_ratio));
  push_mean_sd(functionals(b.spectral.hammarberg));
  push_mean_sd(functionals(b.f1_bandwidth));
  push_mean_sd(functionals(b.spectral.spectral_flux));
  push_full(functionals(b.loudness));
  if (fv.unvoiced) std::fill(fv.values.begin(), fv.values.end(), 0.0);
  return fv;
}

std::vector<FeatureVector> extract_features_batch(std::span<const AudioBuffer> bufs, Exec exec) {
  std::vector<FeatureVector> out(bufs.size());
  const auto n = static_cast<long>(bufs.size());
  if (exec == Exec::kSerial) {
    for (long i = 0; i < n; ++i) out[i] = extract_features(bufs[i]);
    return out;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(exec))
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = extract_features(bufs[i]);
    } catch (...) {
#pragma omp critical(rie_extract_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

DiffFeatureVector diff_features(const FeatureVector& fa, const FeatureVector& fb) {
  if (fa.names != fb.names) {
    throw NameSetMismatch("feature name sets differ between '" + fa.id + "' and '" + fb.id + "'");
  }
  DiffFeatureVector d;
  d.names = fa.names;
  d.values.resize(fa.values.size());
  for (std::size_t i = 0; i < fa.values.size(); ++i) d.values[i] = fb.values[i] - fa.values[i];
  return d;
}

void write_features_csv(const std::filesystem::path& path, std::span<const FeatureVector> rows) {
  std::ostringstream os;
  os << "id";
  for (const auto& n : feature_names()) os << ',' << n;
  os << '\n';
  char num[64];
  for (const auto& r : rows) {
    if (r.names != feature_names()) throw NameSetMismatch(r.id + ": non-canonical feature set");
    os << r.id;
    for (double v : r.values) {
      std::snprintf(num, sizeof num, "%.9g", v);
      os << ',' << num;
    }
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty features file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "id") throw SchemaError(path.string() + ": first column must be id");
  std::vector<std::string> names(header.begin() + 1, header.end());
  if (names != feature_names()) throw NameSetMismatch(path.string() + ": unexpected feature columns");

  std::vector<FeatureVector> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    FeatureVector fv;
    fv.names = names;
    std::getline(ss, fv.id, ',');
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || !std::isfinite(v)) {
        throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      fv.values.push_back(v);
    }
    if (fv.values.size() != names.size()) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

}  // namespace rie
