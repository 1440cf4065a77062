#include <cmath>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"
#include "rie/regress/model.hpp"

namespace rie {

namespace {

Eigen::MatrixXd align(const ClassicalModel& model, const Eigen::MatrixXd& x,
                      const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(x.cols()) != names.size()) {
    throw FeatureMismatch("column count does not match feature names");
  }
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(model.feature_names.size()));
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    std::size_t k = 0;
    while (k < names.size() && names[k] != model.feature_names[j]) ++k;
    if (k == names.size()) throw FeatureMismatch("missing feature " + model.feature_names[j]);
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(k));
  }
  if (!out.allFinite()) throw FeatureMismatch("non-finite feature value");
  return out;
}

}  // namespace

Eigen::MatrixXd predict_all(const ClassicalModel& model, const Eigen::MatrixXd& x,
                            const std::vector<std::string>& names) {
  Eigen::MatrixXd z = model.standardizer.apply(align(model, x, names));
  switch (model.kind) {
    case ModelKind::kLinear:
    case ModelKind::kRidge:
    case ModelKind::kPls2:
      return (z * model.coef).rowwise() + model.intercepts.transpose();
    case ModelKind::kRf:
    case ModelKind::kGbdt: {
      Eigen::MatrixXd out(z.rows(), 1);
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double s = 0.0;
        for (const auto& t : model.trees) s += t.predict(z.row(i));
        out(i, 0) = model.base + model.scale * s;
      }
      return out;
    }
    case ModelKind::kSvr: {
      Eigen::MatrixXd out(z.rows(), 1);
      if (model.dual_coef.size() == 0) {
        out.setConstant(model.bias);
      } else {
        out.col(0) = (rbf_kernel(z, model.support_vectors, model.gamma) * model.dual_coef)
                         .array() + model.bias;
      }
      return out;
    }
    default:
      break;
  }
  throw Error("not a classical model");
}

Eigen::VectorXd predict(const ClassicalModel& model, const Eigen::MatrixXd& x,
                        const std::vector<std::string>& names, std::size_t output) {
  if (output >= model.outputs()) throw Error("model output index out of range");
  return predict_all(model, x, names).col(static_cast<Eigen::Index>(output));
}

namespace {

void put_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
  }
}

Eigen::MatrixXd get_matrix(ByteReader& r) {
  std::uint32_t rows = r.u32(), cols = r.u32();
  if (static_cast<std::uint64_t>(rows) * cols * 8 > r.remaining()) {
    throw TruncatedFile("matrix payload exceeds file");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = r.f64();
  }
  return m;
}

void put_vector(ByteWriter& w, const Eigen::VectorXd& v) {
  w.f64s(std::span(v.data(), static_cast<std::size_t>(v.size())));
}

Eigen::VectorXd get_vector(ByteReader& r) {
  auto v = r.f64s();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ClassicalModel& m) {
  ByteWriter w;
  w.magic("RIEM");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(m.kind));
  w.u32(m.dimension);
  w.u32(static_cast<std::uint32_t>(m.feature_names.size()));
  for (const auto& n : m.feature_names) w.str(n);
  put_vector(w, m.standardizer.mean);
  put_vector(w, m.standardizer.scale);
  switch (m.kind) {
    case ModelKind::kLinear:
    case ModelKind::kRidge:
    case ModelKind::kPls2:
      put_matrix(w, m.coef);
      put_vector(w, m.intercepts);
      break;
    case ModelKind::kRf:
    case ModelKind::kGbdt:
      w.f64(m.base);
      w.f64(m.scale);
      w.u32(static_cast<std::uint32_t>(m.trees.size()));
      for (const auto& t : m.trees) {
        w.u32(static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& nd : t.nodes) {
          w.u32(static_cast<std::uint32_t>(nd.feature));
          w.f64(nd.threshold);
          w.f64(nd.value);
          w.u32(static_cast<std::uint32_t>(nd.left));
          w.u32(static_cast<std::uint32_t>(nd.right));
        }
      }
      break;
    case ModelKind::kSvr:
      w.f64(m.gamma);
      w.f64(m.bias);
      put_matrix(w, m.support_vectors);
      put_vector(w, m.dual_coef);
      break;
    default:
      throw Error("not a classical model");
  }
  return w.take();
}

ClassicalModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.magic_is("RIEM")) throw BadMagic("not a RIEM model file");
  std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw VersionMismatch("RIEM version " + std::to_string(version) + ", expected " +
                          std::to_string(kModelVersion));
  }
  ClassicalModel m;
  std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(ModelKind::kSvr)) {
    throw CorruptFile("model kind " + std::to_string(kind) + " is not a classical model");
  }
  m.kind = static_cast<ModelKind>(kind);
  m.dimension = r.u32();
  std::uint32_t n_names = r.u32();
  if (n_names > r.remaining()) throw TruncatedFile("feature table exceeds file");
  for (std::uint32_t i = 0; i < n_names; ++i) m.feature_names.push_back(r.str());
  m.standardizer.mean = get_vector(r);
  m.standardizer.scale = get_vector(r);
  const auto p = static_cast<Eigen::Index>(n_names);
  if (m.standardizer.mean.size() != p || m.standardizer.scale.size() != p) {
    throw CorruptFile("standardizer size does not match feature table");
  }
  switch (m.kind) {
    case ModelKind::kLinear:
    case ModelKind::kRidge:
    case ModelKind::kPls2:
      m.coef = get_matrix(r);
      m.intercepts = get_vector(r);
      if (m.coef.rows() != p || m.intercepts.size() != m.coef.cols()) {
        throw CorruptFile("coefficient shape mismatch");
      }
      break;
    case ModelKind::kRf:
    case ModelKind::kGbdt: {
      m.base = r.f64();
      m.scale = r.f64();
      std::uint32_t n_trees = r.u32();
      if (n_trees > r.remaining()) throw TruncatedFile("tree table exceeds file");
      m.trees.resize(n_trees);
      for (auto& t : m.trees) {
        std::uint32_t n_nodes = r.u32();
        if (static_cast<std::uint64_t>(n_nodes) * 28 > r.remaining()) {
          throw TruncatedFile("tree nodes exceed file");
        }
        t.nodes.resize(n_nodes);
        for (auto& nd : t.nodes) {
          nd.feature = static_cast<std::int32_t>(r.u32());
          nd.threshold = r.f64();
          nd.value = r.f64();
          nd.left = static_cast<std::int32_t>(r.u32());
          nd.right = static_cast<std::int32_t>(r.u32());
          bool leaf = nd.feature < 0;
          if (!leaf && (nd.feature >= p || nd.left <= 0 || nd.right <= 0 ||
                        nd.left >= static_cast<std::int32_t>(n_nodes) ||
                        nd.right >= static_cast<std::int32_t>(n_nodes))) {
            throw CorruptFile("tree node out of range");
          }
        }
        if (t.nodes.empty()) throw CorruptFile("empty tree");
      }
      break;
    }
    case ModelKind::kSvr:
      m.gamma = r.f64();
      m.bias = r.f64();
      m.support_vectors = get_matrix(r);
      m.dual_coef = get_vector(r);
      if (m.support_vectors.rows() != m.dual_coef.size() ||
          (m.support_vectors.rows() > 0 && m.support_vectors.cols() != p)) {
        throw CorruptFile("support vector shape mismatch");
      }
      break;
    default:
      break;
  }
  if (r.remaining() != 0) throw CorruptFile("trailing bytes after model payload");
  return m;
}

void save_model(const ClassicalModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

ClassicalModel load_model(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return deserialize_model(bytes);
}

}  // namespace rie
