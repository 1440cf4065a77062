#include "rie/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "csv_util.hpp"
#include "rie/binary_io.hpp"
#include "rie/error.hpp"

namespace rie {

using nlohmann::json;

const std::array<AxisInfo, kAxes>& axes() {
  static const std::array<AxisInfo, kAxes> table = {{
      {'A', "High", "Low", "高い", "低い"},
      {'B', "Clear", "Hoarse", "澄んだ", "かすれた"},
      {'C', "Calm", "Restless", "落ち着いた", "落ち着きのない"},
      {'D', "Powerful", "Weak", "力強い", "弱々しい"},
      {'E', "Youthful", "Elderly", "若々しい", "年老いた"},
      {'F', "Thick", "Thin", "太い", "細い"},
      {'G', "Tense", "Relaxed", "緊張した", "リラックスした"},
      {'H', "Dark", "Bright", "暗い", "明るい"},
      {'I', "Cold", "Warm", "冷たい", "温かい"},
  }};
  return table;
}

std::vector<UtterancePair> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<UtterancePair> pairs;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    auto field = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
        throw SchemaError(where + ": missing or empty string field '" + key + "'");
      }
      return j[key].get<std::string>();
    };
    UtterancePair p{field("pair_id"), field("utt_a"), field("utt_b"), field("speaker"),
                    field("text_id")};
    if (p.utt_a == p.utt_b) throw SchemaError(where + ": utt_a equals utt_b");
    if (!seen.insert(p.pair_id).second) {
      throw DuplicatePairId(where + ": duplicate pair_id '" + p.pair_id + "'");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_manifest(const std::filesystem::path& path, std::span<const UtterancePair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    json j = {{"pair_id", p.pair_id},
              {"utt_a", p.utt_a},
              {"utt_b", p.utt_b},
              {"speaker", p.speaker},
              {"text_id", p.text_id}};
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty ratings file");
  const auto header = detail::split_csv(line);
  std::vector<std::string> expected = {"pair_id", "order", "rater"};
  for (const auto& a : axes()) expected.push_back(std::string("dim") + a.id);
  if (header != expected) throw SchemaError(path.string() + ": unexpected ratings header");

  std::vector<RatingRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = detail::split_csv(line);
    if (cells.size() != expected.size()) throw SchemaError(where + ": wrong column count");
    RatingRecord r;
    r.pair_id = cells[0];
    if (cells[1] == "AB") {
      r.order = Order::kAB;
    } else if (cells[1] == "BA") {
      r.order = Order::kBA;
    } else {
      throw SchemaError(where + ": order must be AB or BA");
    }
    r.rater = cells[2];
    for (std::size_t d = 0; d < kAxes; ++d) {
      const int s = detail::parse_int(cells[3 + d], where);
      if (s < 1 || s > 7) throw SchemaError(where + ": Likert score out of 1..7");
      r.scores[d] = s;
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_ratings_csv(const std::filesystem::path& path, std::span<const RatingRecord> records) {
  std::ostringstream os;
  os << "pair_id,order,rater";
  for (const auto& a : axes()) os << ",dim" << a.id;
  os << '\n';
  for (const auto& r : records) {
    os << r.pair_id << ',' << (r.order == Order::kAB ? "AB" : "BA") << ',' << r.rater;
    for (int s : r.scores) os << ',' << s;
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

std::map<std::string, ImpressionVector> aggregate_ratings(std::span<const RatingRecord> records,
                                                          std::size_t min_raters) {
  struct Acc {
    std::array<double, kAxes> sum{};
    std::size_t count = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.pair_id];
    for (std::size_t d = 0; d < kAxes; ++d) {
      if (r.scores[d] < 1 || r.scores[d] > 7) {
        throw SchemaError(r.pair_id + ": Likert score out of 1..7");
      }
      a.sum[d] += r.order == Order::kAB ? r.scores[d] - 4 : 4 - r.scores[d];
    }
    ++a.count;
  }
  std::map<std::string, ImpressionVector> out;
  for (const auto& [id, a] : acc) {
    if (a.count < min_raters) {
      throw InsufficientRaters(id + ": " + std::to_string(a.count) + " ratings, need " +
                               std::to_string(min_raters));
    }
    ImpressionVector v;
    for (std::size_t d = 0; d < kAxes; ++d) {
      v[d] = std::clamp(a.sum[d] / static_cast<double>(a.count), -3.0, 3.0);
    }
    out.emplace(id, v);
  }
  return out;
}

std::map<std::string, ImpressionVector> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty labels file");
  std::vector<std::string> expected = {"pair_id"};
  for (const auto& a : axes()) expected.push_back(std::string("dim") + a.id);
  if (detail::split_csv(line) != expected) {
    throw SchemaError(path.string() + ": unexpected labels header");
  }
  std::map<std::string, ImpressionVector> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = detail::split_csv(line);
    if (cells.size() != expected.size()) throw SchemaError(where + ": wrong column count");
    ImpressionVector v;
    for (std::size_t d = 0; d < kAxes; ++d) {
      v[d] = detail::parse_double(cells[1 + d], where);
      if (v[d] < -3.0 || v[d] > 3.0) throw SchemaError(where + ": label outside [-3, 3]");
    }
    if (!out.emplace(cells[0], v).second) {
      throw DuplicatePairId(where + ": duplicate pair_id '" + cells[0] + "'");
    }
  }
  return out;
}

void write_labels_csv(const std::filesystem::path& path,
                      const std::map<std::string, ImpressionVector>& labels) {
  std::ostringstream os;
  os << "pair_id";
  for (const auto& a : axes()) os << ",dim" << a.id;
  os << '\n';
  char num[64];
  for (const auto& [id, v] : labels) {
    os << id;
    for (double x : v) {
      std::snprintf(num, sizeof num, "%.17g", x);
      os << ',' << num;
    }
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

void write_embeddings(const EmbeddingSequence& seq, const std::filesystem::path& path) {
  const std::size_t expected = static_cast<std::size_t>(seq.layers) * seq.frames * seq.dim;
  if (seq.layers == 0 || seq.frames == 0 || seq.dim == 0 || seq.data.size() != expected) {
    throw SchemaError(seq.utt_id + ": embedding shape does not match its data");
  }
  ByteWriter w;
  w.magic("RIE1");
  w.u32(kEmbeddingVersion);
  w.u32(seq.layers);
  w.u32(seq.frames);
  w.u32(seq.dim);
  for (float v : seq.data) {
    if (!std::isfinite(v)) throw NonFiniteValue(seq.utt_id + ": non-finite embedding value");
    w.f32(v);
  }
  write_file_atomic(path, w.buffer());
}

EmbeddingSequence read_embeddings(const std::filesystem::path& path,
                                  std::optional<std::string> utt_id) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  if (!r.magic_is("RIE1")) throw BadMagic(path.string() + ": not an RIE1 embedding file");
  const auto version = r.u32();
  if (version != kEmbeddingVersion) {
    throw VersionMismatch(path.string() + ": version " + std::to_string(version));
  }
  EmbeddingSequence seq;
  seq.utt_id = utt_id ? *utt_id : path.stem().string();
  seq.layers = r.u32();
  seq.frames = r.u32();
  seq.dim = r.u32();
  if (seq.layers == 0 || seq.frames == 0 || seq.dim == 0) {
    throw SchemaError(path.string() + ": zero-sized embedding dimension");
  }
  const std::uint64_t count = static_cast<std::uint64_t>(seq.layers) * seq.frames * seq.dim;
  if (count > r.remaining() / 4) {
    throw TruncatedFile(path.string() + ": header declares " + std::to_string(count) +
                        " values, payload holds " + std::to_string(r.remaining() / 4));
  }
  if (count * 4 != r.remaining()) {
    throw CorruptFile(path.string() + ": trailing bytes after payload");
  }
  seq.data.resize(count);
  for (auto& v : seq.data) {
    v = r.f32();
    if (!std::isfinite(v)) throw NonFiniteValue(path.string() + ": non-finite value");
  }
  return seq;
}

}  // namespace rie
