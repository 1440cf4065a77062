#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rie {

inline constexpr std::size_t kAxes = 9;

/// One antonymic impression axis. A rating of 1 leans to `low_label`,
/// 7 to `high_label`; centered values are positive toward `high_label`.
struct AxisInfo {
  char id;
  std::string_view low_label;
  std::string_view high_label;
  std::string_view low_label_ja;
  std::string_view high_label_ja;
};

/// Axes A..I in canonical order.
const std::array<AxisInfo, kAxes>& axes();

/// Signed, centered impression change of utterance b relative to a, each
/// component in [-3, 3].
using ImpressionVector = std::array<double, kAxes>;

struct UtterancePair {
  std::string pair_id;
  std::string utt_a;
  std::string utt_b;
  std::string speaker;
  std::string text_id;
};

/// Reads a JSONL manifest, one pair object per line.
std::vector<UtterancePair> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const UtterancePair> pairs);

enum class Order { kAB, kBA };

struct RatingRecord {
  std::string pair_id;
  Order order = Order::kAB;
  std::string rater;
  std::array<int, kAxes> scores{};  // Likert 1..7
};

/// CSV columns: pair_id, order, rater, dimA..dimI.
std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path);
void write_ratings_csv(const std::filesystem::path& path, std::span<const RatingRecord> records);

/// Per pair and axis, the mean of (s - 4) over AB records and (4 - s) over
/// BA records, clamped to [-3, 3].
std::map<std::string, ImpressionVector> aggregate_ratings(std::span<const RatingRecord> records,
                                                          std::size_t min_raters = 10);

/// labels.csv: pair_id, dimA..dimI.
std::map<std::string, ImpressionVector> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path,
                      const std::map<std::string, ImpressionVector>& labels);

/// Layers x frames x dim hidden states of one utterance, layer-major then
/// frame-major.
struct EmbeddingSequence {
  std::string utt_id;
  std::uint32_t layers = 0;
  std::uint32_t frames = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;

  float at(std::uint32_t l, std::uint32_t t, std::uint32_t d) const {
    return data[(static_cast<std::size_t>(l) * frames + t) * dim + d];
  }
  float& at(std::uint32_t l, std::uint32_t t, std::uint32_t d) {
    return data[(static_cast<std::size_t>(l) * frames + t) * dim + d];
  }
};

inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// "RIE1" | u32 version | u32 L | u32 T | u32 D | L*T*D float32, all LE.
void write_embeddings(const EmbeddingSequence& seq, const std::filesystem::path& path);
EmbeddingSequence read_embeddings(const std::filesystem::path& path,
                                  std::optional<std::string> utt_id = std::nullopt);

}  // namespace rie
