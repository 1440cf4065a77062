#include "config.hpp"

#include <fstream>

#include "rie/error.hpp"
#include "rie/hash.hpp"

namespace rie::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const json& default_config() {
  static const json kDefaults = json::parse(R"({
    "schema_version": 1,
    "seed": 0,
    "corpus": {
      "manifest": "",
      "labels": "",
      "features": "",
      "embeddings": "",
      "wav_dir": ""
    },
    "methods": ["ridge"],
    "selection": {"k": 8},
    "folds": {"k": 10},
    "models": {
      "ridge": {"alpha": 0.5},
      "pls2": {"components": 5, "shared": false},
      "rf": {"n_trees": 300, "max_depth": 0, "min_leaf": 1, "max_features": 0},
      "gbdt": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
      "svr": {"c": 10.0, "epsilon": 0.1, "gamma": 0.0},
      "featnet": {"hidden": [64, 64, 64], "lr": 0.001, "batch_size": 8,
                  "max_epochs": 500, "patience": 20, "val_fraction": 0.1},
      "sslhead": {"lstm_hidden": 64, "attention_dim": 64, "mlp_hidden": [128, 64],
                  "lr": 0.002, "weight_decay": 0.01, "batch_size": 8,
                  "max_epochs": 500, "patience": 20, "val_fraction": 0.1}
    },
    "report": {"formats": ["csv", "md"]},
    "provider": {
      "kind": "openai",
      "base_url": "https://api.openai.com",
      "model": "gpt-4o-audio-preview",
      "api_key_env": "RIE_API_KEY",
      "language": "ja",
      "concurrency": 2,
      "rate_per_s": 0.0,
      "max_retries": 3,
      "timeout_s": 120.0,
      "shots": 0,
      "fold": 0
    },
    "out_dir": "run"
  })");
  return kDefaults;
}

namespace {

std::string type_name(const json& v) {
  if (v.is_number_unsigned()) return "non-negative integer";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

bool same_type(const json& want, const json& got) {
  if (want.is_number_unsigned()) return got.is_number_unsigned();
  if (want.is_number_integer()) return got.is_number_integer();
  if (want.is_number()) return got.is_number();
  return want.type() == got.type();
}

void merge(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw UsageError("unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge(slot, value, path);
      continue;
    }
    if (!same_type(slot, value)) {
      throw UsageError("config key '" + path + "' must be " + type_name(slot) + ", got " +
                       type_name(value));
    }
    if (slot.is_array() && !slot.empty()) {
      for (const auto& item : value) {
        if (!same_type(slot.front(), item)) {
          throw UsageError("config key '" + path + "' must hold " + type_name(slot.front()) +
                           " items");
        }
      }
    }
    if (value.is_string() && value.get<std::string>().find("${") != std::string::npos) {
      // secrets come only from the variable named by provider.api_key_env
      throw UsageError("config key '" + path + "': environment interpolation is not allowed");
    }
    slot = value;
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

}  // namespace

RunConfig resolve_config(const json& user, const fs::path& base_dir) {
  require(user.is_object(), "config must be a JSON object");
  require(user.contains("schema_version"), "config lacks schema_version");
  require(user["schema_version"] == kSchemaVersion,
          "unsupported schema_version " + user["schema_version"].dump() + " (expected " +
              std::to_string(kSchemaVersion) + ")");
  RunConfig c;
  c.resolved = default_config();
  merge(c.resolved, user, "");
  // where outputs go does not change what is computed
  json hashed = c.resolved;
  hashed.erase("out_dir");
  c.hash = sha256_hex(hashed.dump());
  c.base_dir = base_dir;

  const json& r = c.resolved;
  c.seed = r["seed"].get<std::uint64_t>();
  const json& corpus = r["corpus"];
  require(!corpus["manifest"].get<std::string>().empty(), "corpus.manifest is required");
  c.manifest = resolve(base_dir, corpus["manifest"]);
  const fs::path corpus_dir = c.manifest.parent_path();
  auto or_default = [&](const char* key, const char* fallback) {
    const auto v = corpus[key].get<std::string>();
    return v.empty() ? corpus_dir / fallback : resolve(base_dir, v);
  };
  c.labels = or_default("labels", "labels.csv");
  c.features = or_default("features", "features.csv");
  c.embeddings = or_default("embeddings", "emb");
  c.wav_dir = or_default("wav_dir", "wav");
  c.out_dir = resolve(base_dir, r["out_dir"]);

  c.methods = r["methods"].get<std::vector<std::string>>();
  require(!c.methods.empty(), "methods must not be empty");
  for (const auto& m : c.methods) {
    try {
      model_kind_from_string(m);
    } catch (const Error&) {
      throw UsageError("unknown method '" + m + "'");
    }
  }
  c.folds = r["folds"]["k"].get<int>();
  require(c.folds >= 2, "folds.k must be at least 2");
  require(r["selection"]["k"].get<int>() >= 1, "selection.k must be at least 1");
  for (const auto& f : r["report"]["formats"]) {
    if (f == "csv") c.formats.push_back(eval::ReportFormat::kCsv);
    else if (f == "md") c.formats.push_back(eval::ReportFormat::kMarkdown);
    else throw UsageError("unknown report format " + f.dump() + " (expected csv or md)");
  }

  const json& p = r["provider"];
  auto& j = c.judge;
  try {
    j.provider.kind = mllm::provider_from_string(p["kind"].get<std::string>());
    j.language = mllm::language_from_string(p["language"].get<std::string>());
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(std::string("provider: ") + e.what());
  }
  j.provider.base_url = p["base_url"];
  j.provider.model = p["model"];
  j.provider.api_key_env = p["api_key_env"];
  j.provider.rate_per_s = p["rate_per_s"];
  j.provider.max_retries = p["max_retries"];
  j.provider.timeout_s = p["timeout_s"];
  j.concurrency = p["concurrency"];
  j.wav_dir = c.wav_dir;
  require(j.concurrency >= 1, "provider.concurrency must be at least 1");
  c.shots = p["shots"].get<std::size_t>();
  require(c.shots <= mllm::kMaxShots, "provider.shots must be at most 8");
  c.judge_fold = p["fold"];
  require(c.judge_fold >= 0 && c.judge_fold < c.folds, "provider.fold must be a valid fold index");
  return c;
}

RunConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  json user = json::parse(in, nullptr, false);
  if (user.is_discarded()) throw UsageError("config " + path.string() + " is not valid JSON");
  if (seed && user.is_object()) user["seed"] = *seed;
  return resolve_config(user, fs::absolute(path).parent_path());
}

eval::MethodSpec RunConfig::method(const std::string& name) const {
  const auto kind = model_kind_from_string(name);
  auto m = eval::default_method(kind, seed);
  const json& models = resolved["models"];
  m.select_k = resolved["selection"]["k"].get<std::size_t>();
  m.ridge_alpha = models["ridge"]["alpha"];
  m.pls_components = models["pls2"]["components"];
  m.pls_shared = models["pls2"]["shared"];
  const json& rf = models["rf"];
  m.rf.n_trees = rf["n_trees"];
  m.rf.tree.max_depth = rf["max_depth"];
  m.rf.tree.min_leaf = rf["min_leaf"];
  m.rf.tree.max_features = rf["max_features"];
  const json& gb = models["gbdt"];
  m.gbdt.n_estimators = gb["n_estimators"];
  m.gbdt.max_depth = gb["max_depth"];
  m.gbdt.learning_rate = gb["learning_rate"];
  const json& svr = models["svr"];
  m.svr.c = svr["c"];
  m.svr.epsilon = svr["epsilon"];
  m.svr.gamma = svr["gamma"];

  auto train = [&](const json& t) {
    m.train.optimizer.lr = t["lr"];
    m.train.batch_size = t["batch_size"];
    m.train.max_epochs = t["max_epochs"];
    m.train.patience = t["patience"];
    m.train.val_fraction = t["val_fraction"];
  };
  if (kind == ModelKind::kFeatNet) {
    const json& f = models["featnet"];
    train(f);
    m.featnet_hidden = f["hidden"].get<std::vector<Eigen::Index>>();
  }
  if (kind == ModelKind::kSslHead) {
    const json& s = models["sslhead"];
    train(s);
    m.train.optimizer.weight_decay = s["weight_decay"];
    m.ssl.lstm_hidden = s["lstm_hidden"];
    m.ssl.attention_dim = s["attention_dim"];
    m.ssl.mlp_hidden = s["mlp_hidden"].get<std::vector<Eigen::Index>>();
  }
  return m;
}

}  // namespace rie::cli
