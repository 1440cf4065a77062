#include "rie/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"
#include "rie/features.hpp"
#include "rie/fft.hpp"

namespace rie {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kRate = kCanonicalRate;

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "%s=%g outside [%g, %g]", name, v, lo, hi);
    throw Error(msg);
  }
}

// Rows A..I over {f0_base, f0_slope, tilt, rate, breathiness, tension}.
constexpr double kWeights[kAxes][6] = {
    {-1.0, 0.0, 0.0, 0.0, 0.0, 0.0},     // A
    {0.0, 0.0, 0.35, 0.0, 0.85, 0.0},    // B
    {0.0, 0.45, 0.0, 0.8, 0.0, 0.0},     // C
    {0.0, 0.0, 0.6, 0.0, -0.4, 0.0},     // D (= loudness proxy)
    {-0.7, 0.0, 0.0, 0.0, 0.45, 0.0},    // E
    {0.7, 0.0, 0.0, 0.0, 0.0, 0.3},      // F
    {0.0, 0.4, 0.0, -0.8, 0.0, 0.0},     // G
    {0.6, 0.0, 0.55, 0.0, 0.0, 0.0},     // H
    {0.0, 0.0, -0.6, -0.55, 0.0, 0.0},   // I
};
constexpr double kLabelGain = 1.5;

constexpr double kFormants[3] = {550.0, 1650.0, 2750.0};
constexpr double kBandwidths[3] = {60.0, 90.0, 120.0};
constexpr double kSwing[3] = {0.3, 0.2, 0.08};
constexpr double kSwingPhase[3] = {0.0, 2.0, 4.0};

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

void scale_to_unit_rms(std::vector<double>& x) {
  double r = rms(x);
  if (r > 0.0) {
    for (double& v : x) v /= r;
  }
}

// Source spectrum shaped by (f/100)^(tilt/6.02) above 100 Hz.
void apply_tilt(std::vector<double>& x, double tilt_db_per_oct) {
  int n = 1;
  while (n < static_cast<int>(x.size())) n <<= 1;
  RealFft fft(n);
  std::vector<std::complex<double>> spec;
  fft.forward(x, spec);
  double exponent = tilt_db_per_oct / (20.0 * std::log10(2.0));
  for (int k = 0; k < fft.bins(); ++k) {
    double f = static_cast<double>(k) * kRate / n;
    if (f > 100.0) spec[k] *= std::pow(f / 100.0, exponent);
  }
  std::vector<double> y;
  fft.inverse(spec, y);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] / n;
}

struct Resonator {
  double a = 1.0, b = 0.0, c = 0.0;
  double y1 = 0.0, y2 = 0.0;

  void set(double freq, double bw) {
    double t = 1.0 / kRate;
    c = -std::exp(-2.0 * kPi * bw * t);
    b = 2.0 * std::exp(-kPi * bw * t) * std::cos(2.0 * kPi * freq * t);
    a = 1.0 - b - c;
  }
  double step(double x) {
    double y = a * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void StyleParams::validate() const {
  check_range("f0_base", f0_base, 120.0, 350.0);
  check_range("f0_slope", f0_slope, -12.0, 12.0);
  check_range("tilt_db_per_oct", tilt_db_per_oct, -18.0, 0.0);
  check_range("rate", rate, 2.0, 8.0);
  check_range("breathiness", breathiness, 0.0, 0.5);
  check_range("tension", tension, 0.5, 2.0);
}

StyleParams sample_style(Rng& rng) {
  StyleParams p;
  p.f0_base = rng.uniform(120.0, 350.0);
  p.f0_slope = rng.uniform(-12.0, 12.0);
  p.tilt_db_per_oct = rng.uniform(-18.0, 0.0);
  p.rate = rng.uniform(2.0, 8.0);
  p.breathiness = rng.uniform(0.0, 0.5);
  p.tension = std::exp2(rng.uniform(-1.0, 1.0));
  return p;
}

std::array<double, 6> standardized(const StyleParams& p) {
  return {(p.f0_base - 235.0) / 115.0,  p.f0_slope / 12.0,
          (p.tilt_db_per_oct + 9.0) / 9.0, (p.rate - 5.0) / 3.0,
          (p.breathiness - 0.25) / 0.25, std::log2(p.tension)};
}

double loudness_proxy(const StyleParams& p) {
  auto u = standardized(p);
  return 0.6 * u[2] - 0.4 * u[4];
}

ImpressionVector impression_score(const StyleParams& p) {
  auto u = standardized(p);
  ImpressionVector s{};
  for (std::size_t d = 0; d < kAxes; ++d) {
    for (int j = 0; j < 6; ++j) s[d] += kWeights[d][j] * u[j];
  }
  return s;
}

ImpressionVector noiseless_label(const StyleParams& a, const StyleParams& b) {
  auto sa = impression_score(a);
  auto sb = impression_score(b);
  ImpressionVector out{};
  for (std::size_t d = 0; d < kAxes; ++d) {
    out[d] = 3.0 * std::tanh(kLabelGain * (sb[d] - sa[d]) / 3.0);
  }
  return out;
}

ImpressionVector noisy_label(const StyleParams& a, const StyleParams& b, Rng& rng) {
  auto out = noiseless_label(a, b);
  for (double& v : out) v = std::clamp(v + kLabelNoiseSigma * rng.normal(), -3.0, 3.0);
  return out;
}

AudioBuffer synthesize(const StyleParams& params, double duration_s, std::uint64_t seed) {
  params.validate();
  check_range("duration_s", duration_s, 1.0, 5.0);
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::lround(duration_s * kRate));
  const double mid = duration_s / 2.0;

  std::vector<double> pulses(n + 1, 0.0);
  double phase = rng.uniform();
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / kRate;
    double f0 = std::clamp(params.f0_base * std::exp2(params.f0_slope * (t - mid) / 12.0), 70.0,
                           480.0);
    phase += f0 / kRate;
    if (phase >= 1.0) {
      phase -= 1.0;
      // Split the pulse between neighbouring samples at its fractional position.
      double frac = phase / (f0 / kRate);
      double amp = 1.0 / std::sqrt(f0);
      pulses[i] += amp * (1.0 - frac);
      if (i > 0) pulses[i - 1] += amp * frac;
    }
  }
  pulses.resize(n);
  apply_tilt(pulses, params.tilt_db_per_oct);
  scale_to_unit_rms(pulses);

  std::vector<double> noise(n);
  // Aspiration noise, tilted upward by a first difference.
  double prev = 0.0;
  for (double& v : noise) {
    double w = rng.normal();
    v = w - 0.9 * prev;
    prev = w;
  }
  scale_to_unit_rms(noise);

  // Formants swing around their centres once per syllable, and the
  // syllable envelope flattens as the rate rises (less time to close).
  std::array<Resonator, 3> res;
  const double floor = 0.05 + 0.55 * (params.rate - 2.0) / 6.0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double syl = static_cast<double>(i) / kRate * params.rate;
    if (i % 16 == 0) {
      for (int j = 0; j < 3; ++j) {
        double swing = kSwing[j] * std::sin(2.0 * kPi * syl + kSwingPhase[j]);
        res[j].set(kFormants[j] * (1.0 + swing), kBandwidths[j] * params.tension);
      }
    }
    double s = std::sin(kPi * syl);
    double env = floor + (1.0 - floor) * s * s;
    double x = env * (pulses[i] + 1.5 * params.breathiness * noise[i]);
    for (auto& r : res) x = r.step(x);
    out[i] = x;
  }

  double target = std::pow(10.0, (-24.0 + 6.0 * loudness_proxy(params)) / 20.0);
  double r = rms(out);
  for (double& v : out) v = std::clamp(v * target / r, -1.0, 1.0);

  AudioBuffer buf;
  buf.samples = std::move(out);
  buf.sample_rate_hz = kRate;
  return buf;
}

EmbeddingSequence surrogate_embeddings(const AudioBuffer& buf, std::uint64_t map_seed,
                                       const SurrogateConfig& cfg) {
  constexpr int kDesc = 4;
  LldBundle lld = extract_llds(buf);
  const auto frames = static_cast<std::size_t>(lld.lld_frames);

  // F0 frames start 7.5 ms later than the 25 ms LLD frames; nearest centre.
  std::vector<double> f0(frames, kSentinel);
  for (std::size_t i = 0; i < frames; ++i) {
    auto j = static_cast<std::ptrdiff_t>(std::lround((0.0125 + 0.01 * i - 0.02) / 0.01));
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(lld.f0.size()) - 1);
    if (lld.f0.voiced[j] && std::isfinite(lld.f0.values[j])) f0[i] = lld.f0.values[j];
  }
  // Linear interpolation across unvoiced gaps, held at the ends.
  std::ptrdiff_t last = -1;
  for (std::size_t i = 0; i < frames; ++i) {
    if (std::isnan(f0[i])) continue;
    if (last < 0) {
      for (std::size_t k = 0; k < i; ++k) f0[k] = f0[i];
    } else {
      for (auto k = static_cast<std::size_t>(last) + 1; k < i; ++k) {
        double w = static_cast<double>(k - last) / static_cast<double>(i - last);
        f0[k] = (1.0 - w) * f0[last] + w * f0[i];
      }
    }
    last = static_cast<std::ptrdiff_t>(i);
  }
  if (last < 0) {
    std::fill(f0.begin(), f0.end(), 36.0);
  } else {
    for (std::size_t k = static_cast<std::size_t>(last) + 1; k < frames; ++k) f0[k] = f0[last];
  }

  const std::size_t pool = static_cast<std::size_t>(std::max(1, cfg.pool_frames));
  const std::size_t t_out = std::max<std::size_t>(1, frames / pool);
  std::vector<std::array<double, kDesc>> desc(t_out);
  for (std::size_t t = 0; t < t_out; ++t) {
    std::size_t lo = t * pool;
    std::size_t hi = std::min(frames, lo + pool);
    std::array<double, kDesc> acc{};
    for (std::size_t i = lo; i < hi; ++i) {
      acc[0] += f0[i];
      acc[1] += lld.loudness.values[i];
      acc[2] += lld.spectral.alpha_ratio.values[i];
      acc[3] += lld.spectral.spectral_flux.values[i];
    }
    double cnt = static_cast<double>(hi - lo);
    desc[t] = {(acc[0] / cnt - 34.0) / 7.0, (acc[1] / cnt + 40.0) / 8.0,
               (acc[2] / cnt + 15.0) / 8.0, (acc[3] / cnt - 0.06) / 0.06};
  }

  EmbeddingSequence seq;
  seq.utt_id = buf.id;
  seq.layers = cfg.layers;
  seq.frames = static_cast<std::uint32_t>(t_out);
  seq.dim = cfg.dim;
  seq.data.assign(static_cast<std::size_t>(cfg.layers) * t_out * cfg.dim, 0.0f);
  for (std::uint32_t l = 0; l < cfg.layers; ++l) {
    Rng rng(derive_seed(map_seed, l));
    std::vector<double> m(static_cast<std::size_t>(cfg.dim) * 2 * kDesc);
    for (double& v : m) v = rng.normal() / std::sqrt(2.0 * kDesc);
    for (std::uint32_t t = 0; t < seq.frames; ++t) {
      std::array<double, 2 * kDesc> v{};
      for (int j = 0; j < kDesc; ++j) {
        v[j] = desc[t][j];
        v[kDesc + j] = t > 0 ? desc[t][j] - desc[t - 1][j] : 0.0;
      }
      for (std::uint32_t d = 0; d < cfg.dim; ++d) {
        double s = 0.0;
        for (int j = 0; j < 2 * kDesc; ++j) s += m[d * 2 * kDesc + j] * v[j];
        seq.at(l, t, d) = static_cast<float>(s);
      }
    }
  }
  return seq;
}

CorpusSummary generate_corpus(std::size_t n_pairs, std::uint64_t seed,
                              const std::filesystem::path& out_dir, Exec exec) {
  if (n_pairs < 1) throw Error("n_pairs must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "emb", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t n_utts = std::max<std::size_t>(2, (3 * n_pairs + 1) / 2);
  const std::size_t n_groups = std::clamp<std::size_t>(n_utts / 2, 1, 8);

  struct Utt {
    std::string id;
    std::size_t group;
    StyleParams params;
  };
  std::vector<Utt> utts(n_utts);
  std::vector<std::vector<std::size_t>> members(n_groups);
  for (std::size_t i = 0; i < n_utts; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "u%04zu", i);
    Rng rng(derive_seed(seed, std::string_view(id)));
    utts[i] = {id, i % n_groups, sample_style(rng)};
    members[i % n_groups].push_back(i);
  }

  Rng pair_rng(derive_seed(seed, std::string_view("pairs")));
  std::set<std::pair<std::size_t, std::size_t>> seen;
  CorpusSummary summary;
  std::size_t attempts = 0;
  while (summary.pairs.size() < n_pairs) {
    if (++attempts > 100 * n_pairs + 1000) throw Error("cannot draw enough distinct pairs");
    const auto& g = members[pair_rng.index(n_groups)];
    if (g.size() < 2) continue;
    std::size_t a = g[pair_rng.index(g.size())];
    std::size_t b = g[pair_rng.index(g.size())];
    if (a == b || seen.count({std::min(a, b), std::max(a, b)})) continue;
    seen.insert({std::min(a, b), std::max(a, b)});
    char pid[16];
    std::snprintf(pid, sizeof pid, "p%04zu", summary.pairs.size());
    std::size_t grp = utts[a].group;
    SynthPair sp;
    sp.pair = {pid, utts[a].id, utts[b].id, "spk" + std::to_string(grp / 4),
               "txt" + std::to_string(grp % 4)};
    sp.params_a = utts[a].params;
    sp.params_b = utts[b].params;
    summary.pairs.push_back(sp);
  }

  std::set<std::size_t> used_set;
  for (const auto& [a, b] : seen) {
    used_set.insert(a);
    used_set.insert(b);
  }
  std::vector<std::size_t> used(used_set.begin(), used_set.end());
  for (std::size_t i : used) summary.utterances.push_back(utts[i].id);

  const std::uint64_t map_seed = derive_seed(seed, std::string_view("surrogate"));
  std::vector<std::exception_ptr> errors(used.size());
  const auto count = static_cast<std::ptrdiff_t>(used.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(exec))
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    try {
      const Utt& u = utts[used[k]];
      int syllables = 5 + static_cast<int>(u.group % 4);
      double dur = std::clamp(syllables / u.params.rate, 1.0, 3.0);
      AudioBuffer buf = synthesize(u.params, dur, derive_seed(seed, u.id + "/audio"));
      buf.id = u.id;
      write_wav(buf, out_dir / "wav" / (u.id + ".wav"), WavEncoding::kFloat32);
      // Embeddings are computed from the stored float32 samples.
      for (double& v : buf.samples) v = static_cast<double>(static_cast<float>(v));
      write_embeddings(surrogate_embeddings(buf, map_seed), out_dir / "emb" / (u.id + ".rie1"));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::map<std::string, ImpressionVector> labels;
  std::vector<RatingRecord> ratings;
  for (auto& sp : summary.pairs) {
    Rng rng(derive_seed(seed, sp.pair.pair_id));
    sp.label = noisy_label(sp.params_a, sp.params_b, rng);
    labels[sp.pair.pair_id] = sp.label;
    for (int r = 0; r < 10; ++r) {
      RatingRecord rec;
      rec.pair_id = sp.pair.pair_id;
      rec.order = r % 2 == 0 ? Order::kAB : Order::kBA;
      rec.rater = "r" + std::to_string(r);
      for (std::size_t d = 0; d < kAxes; ++d) {
        double v = sp.label[d] + 0.5 * rng.normal();
        if (rec.order == Order::kBA) v = -v;
        rec.scores[d] = static_cast<int>(std::clamp(std::lround(4.0 + v), 1L, 7L));
      }
      ratings.push_back(rec);
    }
  }

  std::vector<UtterancePair> manifest;
  for (const auto& sp : summary.pairs) manifest.push_back(sp.pair);
  write_manifest(out_dir / "pairs.jsonl", manifest);
  write_labels_csv(out_dir / "labels.csv", labels);
  write_ratings_csv(out_dir / "ratings.csv", ratings);

  std::ostringstream os;
  os << "utt_id,f0_base,f0_slope,tilt_db_per_oct,rate,breathiness,tension\n";
  for (std::size_t i : used) {
    const auto& p = utts[i].params;
    os << utts[i].id << ',' << fmt(p.f0_base) << ',' << fmt(p.f0_slope) << ','
       << fmt(p.tilt_db_per_oct) << ',' << fmt(p.rate) << ',' << fmt(p.breathiness) << ','
       << fmt(p.tension) << '\n';
  }
  write_file_atomic(out_dir / "styles.csv", os.str());
  return summary;
}

}  // namespace rie
