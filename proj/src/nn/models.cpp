#include "rie/nn/models.hpp"

#include <map>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"
#include "rie/regress/model.hpp"

namespace rie::nn {

namespace {

std::vector<Eigen::Index> featnet_sizes(const FeatNetConfig& cfg) {
  if (cfg.hidden.size() != 3) throw DimensionMismatch("featnet needs exactly three hidden layers");
  if (cfg.input_dim < 2 || cfg.input_dim % 2 != 0) {
    throw DimensionMismatch("featnet input_dim must be even");
  }
  std::vector<Eigen::Index> s{cfg.input_dim};
  s.insert(s.end(), cfg.hidden.begin(), cfg.hidden.end());
  s.push_back(cfg.output);
  return s;
}

std::vector<Eigen::Index> head_sizes(const SslHeadConfig& cfg) {
  std::vector<Eigen::Index> s{2 * cfg.utterance_dim()};
  s.insert(s.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
  s.push_back(cfg.output);
  return s;
}

}  // namespace

FeatNet::FeatNet(FeatNetConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), mlp_("featnet", featnet_sizes(cfg_)) {
  Rng rng(seed);
  mlp_.init(rng);
}

Eigen::MatrixXd FeatNet::forward(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
  if (xa.rows() != xb.rows() || xa.cols() != xb.cols() || 2 * xa.cols() != cfg_.input_dim) {
    throw DimensionMismatch("featnet expects two n x " + std::to_string(cfg_.input_dim / 2) +
                            " inputs");
  }
  Eigen::MatrixXd x(xa.rows(), cfg_.input_dim);
  x << xa, xb;
  return mlp_.forward(x);
}

Eigen::MatrixXd FeatNet::forward(const Eigen::MatrixXd& x_concat) { return mlp_.forward(x_concat); }

Eigen::MatrixXd FeatNet::backward(const Eigen::MatrixXd& dy) { return mlp_.backward(dy); }

std::vector<Eigen::MatrixXd> pad_layers(std::span<const EmbeddingSequence* const> utts,
                                        std::vector<int>& lengths, int& tmax) {
  if (utts.empty()) throw DimensionMismatch("empty utterance batch");
  const auto layers = utts[0]->layers;
  const auto dim = utts[0]->dim;
  lengths.clear();
  tmax = 0;
  for (const auto* u : utts) {
    if (u->layers != layers) throw LayerCountMismatch("utterances disagree on layer count");
    if (u->dim != dim) throw DimensionMismatch("utterances disagree on frame dimension");
    if (u->frames < 1) throw DimensionMismatch("utterance " + u->utt_id + " has no frames");
    lengths.push_back(static_cast<int>(u->frames));
    tmax = std::max(tmax, static_cast<int>(u->frames));
  }
  const auto n = static_cast<Eigen::Index>(utts.size());
  std::vector<Eigen::MatrixXd> out(layers, Eigen::MatrixXd::Zero(n * tmax, dim));
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto& e = *utts[u];
    for (std::uint32_t l = 0; l < layers; ++l) {
      for (std::uint32_t t = 0; t < e.frames; ++t) {
        const float* src = &e.data[(static_cast<std::size_t>(l) * e.frames + t) * dim];
        auto row = out[l].row(static_cast<Eigen::Index>(t) * n + u);
        for (std::uint32_t d = 0; d < dim; ++d) row(d) = src[d];
      }
    }
  }
  return out;
}

SslHead::SslHead(SslHeadConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      weighted_("ssl.layers", cfg_.n_layers),
      lstm_("ssl.lstm", cfg_.frame_dim, cfg_.lstm_hidden),
      attn_("ssl.attn", cfg_.utterance_dim(), cfg_.attention_dim),
      mlp_("ssl.mlp", head_sizes(cfg_)) {
  if (cfg_.n_layers < 1) throw LayerCountMismatch("SSL head needs at least one layer");
  Rng rng(seed);
  lstm_.init(rng);
  attn_.init(rng);
  mlp_.init(rng);
}

Eigen::MatrixXd SslHead::encode(std::span<const EmbeddingSequence* const> utts) {
  for (const auto* u : utts) {
    if (u->layers != cfg_.n_layers) {
      throw LayerCountMismatch("utterance " + u->utt_id + " has " + std::to_string(u->layers) +
                               " layers, model expects " + std::to_string(cfg_.n_layers));
    }
    if (u->dim != cfg_.frame_dim) {
      throw DimensionMismatch("utterance " + u->utt_id + " has frame dim " +
                              std::to_string(u->dim));
    }
  }
  SeqBatch batch;
  auto layers = pad_layers(utts, batch.lengths, batch.tmax);
  batch.x = weighted_.forward(layers);
  Eigen::MatrixXd h = lstm_.forward(batch);
  return attn_.forward(h, batch.lengths, batch.tmax);
}

void SslHead::encode_backward(const Eigen::MatrixXd& dpsi) {
  weighted_.backward(lstm_.backward(attn_.backward(dpsi)));
}

Eigen::MatrixXd SslHead::forward_pairs(std::span<const EmbeddingSequence* const> utts,
                                       const std::vector<std::pair<int, int>>& rows) {
  Eigen::MatrixXd psi = encode(utts);
  const Eigen::Index d = cfg_.utterance_dim();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 2 * d);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    x.row(k).head(d) = psi.row(rows[k].first);
    x.row(k).tail(d) = psi.row(rows[k].second);
  }
  rows_ = rows;
  n_utts_ = psi.rows();
  return mlp_.forward(x);
}

void SslHead::backward_pairs(const Eigen::MatrixXd& dy) {
  Eigen::MatrixXd dx = mlp_.backward(dy);
  const Eigen::Index d = cfg_.utterance_dim();
  Eigen::MatrixXd dpsi = Eigen::MatrixXd::Zero(n_utts_, d);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    dpsi.row(rows_[k].first) += dx.row(k).head(d);
    dpsi.row(rows_[k].second) += dx.row(k).tail(d);
  }
  encode_backward(dpsi);
}

Eigen::MatrixXd SslHead::forward(std::span<const EmbeddingSequence* const> a,
                                 std::span<const EmbeddingSequence* const> b) {
  if (a.size() != b.size()) throw DimensionMismatch("pair lists differ in length");
  std::vector<const EmbeddingSequence*> utts;
  std::map<const EmbeddingSequence*, int> slot;
  auto index_of = [&](const EmbeddingSequence* e) {
    auto [it, inserted] = slot.emplace(e, static_cast<int>(utts.size()));
    if (inserted) utts.push_back(e);
    return it->second;
  };
  std::vector<std::pair<int, int>> rows;
  for (std::size_t i = 0; i < a.size(); ++i) rows.emplace_back(index_of(a[i]), index_of(b[i]));
  return forward_pairs(utts, rows);
}

ParamList SslHead::params() {
  ParamList out = weighted_.params();
  for (auto* p : lstm_.params()) out.push_back(p);
  for (auto* p : attn_.params()) out.push_back(p);
  for (auto* p : mlp_.params()) out.push_back(p);
  return out;
}

namespace {

void put_sizes(ByteWriter& w, const std::vector<Eigen::Index>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (auto x : v) w.u32(static_cast<std::uint32_t>(x));
}

std::vector<Eigen::Index> get_sizes(ByteReader& r) {
  std::uint32_t n = r.u32();
  if (n > 64) throw CorruptFile("implausible layer count in checkpoint");
  std::vector<Eigen::Index> v(n);
  for (auto& x : v) x = r.u32();
  return v;
}

void put_params(ByteWriter& w, const ParamList& params) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.str(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rows()));
    w.u32(static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) w.f64(p->value.data()[i]);
  }
}

void get_params(ByteReader& r, const ParamList& params) {
  if (r.u32() != params.size()) throw CorruptFile("checkpoint parameter count mismatch");
  for (auto* p : params) {
    std::string name = r.str();
    std::uint32_t rows = r.u32(), cols = r.u32();
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw CorruptFile("checkpoint tensor " + name + " does not match " + p->name);
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.f64();
  }
}

void put_header(ByteWriter& w, ModelKind kind) {
  w.magic("RIEM");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(kind));
  w.u32(kAxes);
}

void check_header(ByteReader& r, ModelKind kind) {
  if (!r.magic_is("RIEM")) throw BadMagic("not a RIEM checkpoint");
  std::uint32_t version = r.u32();
  if (version != kModelVersion) throw VersionMismatch("RIEM version " + std::to_string(version));
  std::uint32_t k = r.u32();
  if (k != static_cast<std::uint32_t>(kind)) {
    throw CorruptFile("checkpoint holds kind " + std::to_string(k) + ", expected " +
                      std::string(to_string(kind)));
  }
  r.u32();  // dimension tag
}

}  // namespace

void save_featnet(const std::filesystem::path& path, FeatNet& net,
                  const std::vector<std::string>& feature_names, const Eigen::VectorXd& mean,
                  const Eigen::VectorXd& scale) {
  ByteWriter w;
  put_header(w, ModelKind::kFeatNet);
  w.u32(static_cast<std::uint32_t>(feature_names.size()));
  for (const auto& n : feature_names) w.str(n);
  w.f64s(std::span(mean.data(), static_cast<std::size_t>(mean.size())));
  w.f64s(std::span(scale.data(), static_cast<std::size_t>(scale.size())));
  const auto& cfg = net.config();
  w.u32(static_cast<std::uint32_t>(cfg.input_dim));
  put_sizes(w, cfg.hidden);
  w.u32(static_cast<std::uint32_t>(cfg.output));
  put_params(w, net.params());
  write_file_atomic(path, w.buffer());
}

FeatNetCheckpoint load_featnet(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  check_header(r, ModelKind::kFeatNet);
  std::uint32_t n = r.u32();
  if (n > r.remaining()) throw TruncatedFile("feature table exceeds file");
  std::vector<std::string> names(n);
  for (auto& s : names) s = r.str();
  auto mean = r.f64s();
  auto scale = r.f64s();
  FeatNetConfig cfg;
  cfg.input_dim = r.u32();
  cfg.hidden = get_sizes(r);
  cfg.output = r.u32();
  FeatNetCheckpoint ck{FeatNet(cfg), std::move(names),
                       Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                       Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()))};
  get_params(r, ck.net.params());
  if (r.remaining() != 0) throw CorruptFile("trailing bytes after checkpoint");
  return ck;
}

void save_sslhead(const std::filesystem::path& path, SslHead& net) {
  ByteWriter w;
  put_header(w, ModelKind::kSslHead);
  const auto& cfg = net.config();
  w.u32(cfg.n_layers);
  w.u32(static_cast<std::uint32_t>(cfg.frame_dim));
  w.u32(static_cast<std::uint32_t>(cfg.lstm_hidden));
  w.u32(static_cast<std::uint32_t>(cfg.attention_dim));
  put_sizes(w, cfg.mlp_hidden);
  w.u32(static_cast<std::uint32_t>(cfg.output));
  put_params(w, net.params());
  write_file_atomic(path, w.buffer());
}

SslHead load_sslhead(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  check_header(r, ModelKind::kSslHead);
  SslHeadConfig cfg;
  cfg.n_layers = r.u32();
  cfg.frame_dim = r.u32();
  cfg.lstm_hidden = r.u32();
  cfg.attention_dim = r.u32();
  cfg.mlp_hidden = get_sizes(r);
  cfg.output = r.u32();
  SslHead net(cfg);
  get_params(r, net.params());
  if (r.remaining() != 0) throw CorruptFile("trailing bytes after checkpoint");
  return net;
}

}  // namespace rie::nn
