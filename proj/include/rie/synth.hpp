#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rie/audio.hpp"
#include "rie/corpus.hpp"
#include "rie/exec.hpp"
#include "rie/rng.hpp"

namespace rie {

/// Control space of the synthetic speaking styles.
struct StyleParams {
  double f0_base = 220.0;         // Hz, [120, 350]
  double f0_slope = 0.0;          // semitones/s, [-12, 12]
  double tilt_db_per_oct = -9.0;  // [-18, 0]
  double rate = 5.0;              // syllables/s, [2, 8]
  double breathiness = 0.0;       // noise mix, [0, 0.5]
  double tension = 1.0;           // formant bandwidth scaler, [0.5, 2]

  /// Throws rie::Error when a field is outside its range.
  void validate() const;
};

/// Uniform draw over the whole parameter box.
StyleParams sample_style(Rng& rng);

/// Source-filter synthesis: impulse train on the F0 contour (centred on the
/// utterance midpoint) mixed with noise, spectral tilt, three cascaded
/// formant resonators (centred on 550/1650/2750 Hz, swinging once per
/// syllable, bandwidths scaled by tension) and a syllable-rate amplitude
/// envelope whose depth shrinks as the rate rises.
/// Deterministic per (params, duration, seed).
AudioBuffer synthesize(const StyleParams& params, double duration_s, std::uint64_t seed);

/// Vocal-effort proxy in [-1, 1] that sets the output level; rises with a
/// flatter tilt and falls with breathiness.
double loudness_proxy(const StyleParams& p);

/// Parameters mapped to [-1, 1] per field:
/// {f0_base, f0_slope, tilt, rate, breathiness, tension}.
std::array<double, 6> standardized(const StyleParams& p);

/// Per-utterance linear impression score. Orientation per axis (positive
/// means "toward the second descriptor"):
///   A High-Low      decreases with f0_base
///   B Clear-Hoarse  increases with breathiness and tilt
///   C Calm-Restless increases with rate and f0_slope
///   D Powerful-Weak increases with the loudness proxy
///   E Youthful-Elderly decreases with f0_base, increases with breathiness
///   F Thick-Thin    increases with f0_base and tension
///   G Tense-Relaxed decreases with rate, increases with f0_slope
///   H Dark-Bright   increases with f0_base and tilt (alpha ratio)
///   I Cold-Warm     decreases with tilt and rate
ImpressionVector impression_score(const StyleParams& p);

/// Noiseless pair label: 3*tanh(k*(score(b) - score(a))/3), antisymmetric.
ImpressionVector noiseless_label(const StyleParams& a, const StyleParams& b);

inline constexpr double kLabelNoiseSigma = 0.15;

/// noiseless_label plus N(0, 0.15^2) per axis, clamped to [-3, 3].
ImpressionVector noisy_label(const StyleParams& a, const StyleParams& b, Rng& rng);

struct SynthPair {
  UtterancePair pair;
  StyleParams params_a;
  StyleParams params_b;
  ImpressionVector label{};
};

struct SurrogateConfig {
  std::uint32_t layers = 3;
  std::uint32_t dim = 64;
  int pool_frames = 8;  // 10 ms descriptor frames per embedding frame
};

/// Surrogate SSL hidden states: per-frame descriptors (F0 semitones,
/// log-energy, alpha ratio, spectral flux) plus their deltas, mapped by a
/// fixed seeded random matrix per layer.
EmbeddingSequence surrogate_embeddings(const AudioBuffer& buf, std::uint64_t map_seed,
                                       const SurrogateConfig& cfg = {});

struct CorpusSummary {
  std::vector<SynthPair> pairs;
  std::vector<std::string> utterances;  // ids of written utterances
};

/// Writes pairs.jsonl, labels.csv, ratings.csv, styles.csv, wav/<utt>.wav
/// and emb/<utt>.rie1 under out_dir. Same seed gives a byte-identical tree
/// for either execution policy.
CorpusSummary generate_corpus(std::size_t n_pairs, std::uint64_t seed,
                              const std::filesystem::path& out_dir,
                              Exec exec = Exec::kParallel);

}  // namespace rie
