#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "config.hpp"
#include "rie/audio.hpp"
#include "rie/corpus.hpp"
#include "rie/error.hpp"
#include "rie/eval/cv.hpp"
#include "rie/eval/report.hpp"
#include "rie/features.hpp"
#include "rie/hash.hpp"
#include "rie/mllm/client.hpp"
#include "rie/nn/models.hpp"
#include "rie/nn/train.hpp"
#include "rie/regress/model.hpp"
#include "rie/regress/selection.hpp"
#include "rie/rng.hpp"
#include "rie/synth.hpp"
#include "rie/version.hpp"
#include "run_dir.hpp"

namespace rie::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string toolkit() { return "rie " + std::string(kVersion); }

/// Hash of a command's resolved arguments, for commands without a config file.
std::string args_hash(const json& args) { return sha256_hex(args.dump()); }

void apply_jobs(const Globals& g) { set_thread_limit(g.jobs > 1 ? g.jobs : 0); }

fs::path need_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError(what + " path is required");
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
  return p;
}

std::vector<std::string> utterances(const std::vector<UtterancePair>& pairs) {
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    ids.insert(p.utt_a);
    ids.insert(p.utt_b);
  }
  return {ids.begin(), ids.end()};
}

std::map<std::string, FeatureVector> feature_map(const fs::path& path) {
  std::map<std::string, FeatureVector> out;
  for (auto& f : read_features_csv(need_file(path, "features"))) {
    std::string id = f.id;
    out.emplace(std::move(id), std::move(f));
  }
  return out;
}

std::map<std::string, EmbeddingSequence> embedding_map(const fs::path& dir,
                                                       const std::vector<UtterancePair>& pairs) {
  need_file(dir, "embedding directory");
  std::map<std::string, EmbeddingSequence> out;
  for (const auto& u : utterances(pairs)) out.emplace(u, read_embeddings(dir / (u + ".rie1"), u));
  return out;
}

json cell_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json table_json(const eval::ResultTable& table) {
  json methods = json::array();
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    json rows = json::array();
    for (std::size_t a = 0; a < kAxes; ++a) {
      const auto& c = table.at(a, m);
      rows.push_back({{"axis", std::string(1, axes()[a].id)},
                      {"pearson", cell_json(c.pearson)},
                      {"ccc", cell_json(c.ccc)}});
    }
    methods.push_back({{"name", table.methods[m]}, {"scores", rows}});
  }
  return methods;
}

eval::ResultTable table_from_json(const json& methods) {
  eval::ResultTable table;
  for (const auto& m : methods) {
    eval::AxisScores s{};
    for (std::size_t a = 0; a < kAxes; ++a) {
      const auto& row = m.at("scores").at(a);
      if (!row.at("pearson").is_null()) s[a].pearson = row["pearson"].get<double>();
      if (!row.at("ccc").is_null()) s[a].ccc = row["ccc"].get<double>();
    }
    table.add(m.at("name").get<std::string>(), s);
  }
  return table;
}

std::string predictions_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& pred) {
  std::string out = "pair_id";
  for (const auto& ax : axes()) out += std::string(",") + ax.id;
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (Eigen::Index a = 0; a < pred.cols(); ++a) {
      std::snprintf(buf, sizeof buf, ",%.9g", pred(static_cast<Eigen::Index>(i), a));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string extension(eval::ReportFormat f) { return f == eval::ReportFormat::kCsv ? "csv" : "md"; }

void write_reports(RunWriter& w, const std::string& stem, const eval::ResultTable& table,
                   const std::vector<eval::ReportFormat>& formats, eval::RunMeta meta) {
  meta.timestamp = utc_timestamp();
  for (auto f : formats) {
    w.write_text(fs::path("reports") / (stem + "." + extension(f)), eval::render_report(table, f, meta));
  }
}

std::string loss_curve_csv(const nn::TrainResult& r) {
  std::ostringstream os;
  os << "epoch,train_mse,val_mse\n";
  char buf[96];
  for (const auto& e : r.curve) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.train_mse, e.val_mse);
    os << buf;
  }
  return os.str();
}

json selection_json(const SelectionReport& s) {
  json ranked = json::array();
  for (const auto& [name, r] : s.ranked) ranked.push_back({{"feature", name}, {"r", r}});
  return {{"axis", std::string(1, axes()[s.dimension].id)}, {"selected", s.selected}, {"ranked", ranked}};
}

}  // namespace

int cmd_synth(const Globals& g, const SynthArgs& a) {
  if (a.n_pairs == 0) throw UsageError("--n-pairs must be positive");
  apply_jobs(g);
  const std::uint64_t seed = g.seed.value_or(0);
  if (fs::exists(a.out / "pairs.jsonl")) throw IoError("corpus already exists in " + a.out.string());
  const json args{{"command", "synth"}, {"n_pairs", a.n_pairs}, {"seed", seed}};
  RunWriter w(a.out, {"synth", args_hash(args), seed});
  auto summary = generate_corpus(a.n_pairs, seed, w.staging_root(), g.exec());
  w.commit();
  std::cout << "wrote " << summary.pairs.size() << " pairs, " << summary.utterances.size()
            << " utterances to " << a.out.string() << "\n";
  return 0;
}

int cmd_extract(const Globals& g, const ExtractArgs& a) {
  apply_jobs(g);
  const auto pairs = load_manifest(need_file(a.manifest, "manifest"));
  const fs::path wav_dir = a.wav_dir.empty() ? a.manifest.parent_path() / "wav" : a.wav_dir;
  const auto ids = utterances(pairs);
  std::vector<AudioBuffer> bufs;
  bufs.reserve(ids.size());
  for (const auto& id : ids) bufs.push_back(resample_to_16k(load_wav(need_file(wav_dir / (id + ".wav"), "wav"), id)));
  auto feats = extract_features_batch(bufs, g.exec());
  for (std::size_t i = 0; i < ids.size(); ++i) feats[i].id = ids[i];

  const json args{{"command", "extract"}, {"manifest", sha256_file(a.manifest)}};
  RunWriter w(a.out, {"extract", args_hash(args), g.seed.value_or(0)});
  write_features_csv(w.stage("features.csv"), feats);
  w.commit();
  std::cout << "extracted " << feats.size() << " utterances to " << (a.out / "features.csv").string() << "\n";
  return 0;
}

int cmd_select(const Globals& g, const SelectArgs& a) {
  if (a.k == 0) throw UsageError("--k must be positive");
  const auto pairs = load_manifest(need_file(a.manifest, "manifest"));
  const auto labels = read_labels_csv(need_file(a.labels, "labels"));
  const auto data = eval::build_cv_data(pairs, labels, feature_map(a.features));

  const json args{{"command", "select"}, {"k", a.k}, {"manifest", sha256_file(a.manifest)},
                  {"labels", sha256_file(a.labels)}, {"features", sha256_file(a.features)}};
  const std::string hash = args_hash(args);
  json out{{"toolkit", toolkit()}, {"config_hash", hash}, {"k", a.k}, {"n_pairs", data.pair_ids.size()},
           {"axes", json::array()}};
  std::string csv = "axis,rank,feature,r,selected\n";
  char buf[160];
  for (std::size_t d = 0; d < kAxes; ++d) {
    Eigen::VectorXd y = data.labels.col(static_cast<Eigen::Index>(d));
    const auto s = rank_features(data.diff, data.diff_names, y, a.k, d);
    out["axes"].push_back(selection_json(s));
    for (std::size_t r = 0; r < s.ranked.size(); ++r) {
      const bool chosen = r < s.selected.size();
      std::snprintf(buf, sizeof buf, "%c,%zu,%s,%.6f,%d\n", axes()[d].id, r + 1,
                    s.ranked[r].first.c_str(), s.ranked[r].second, chosen ? 1 : 0);
      csv += buf;
    }
  }
  RunWriter w(a.out, {"select", hash, g.seed.value_or(0)});
  w.write_text("selection.json", out.dump(2) + "\n");
  w.write_text("selection.csv", csv);
  w.commit();
  std::cout << "selection for " << data.pair_ids.size() << " pairs written to " << a.out.string() << "\n";
  return 0;
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  apply_jobs(g);
  ModelKind kind;
  try {
    kind = model_kind_from_string(a.method);
  } catch (const Error&) {
    throw UsageError("unknown method '" + a.method + "'");
  }
  const std::uint64_t seed = g.seed.value_or(0);
  const auto pairs = load_manifest(need_file(a.manifest, "manifest"));
  const auto labels = read_labels_csv(need_file(a.labels, "labels"));
  std::map<std::string, EmbeddingSequence> emb;
  if (kind == ModelKind::kSslHead) {
    emb = embedding_map(a.embeddings.empty() ? a.manifest.parent_path() / "emb" : a.embeddings, pairs);
  }
  const auto data = eval::build_cv_data(pairs, labels, feature_map(a.features),
                                        kind == ModelKind::kSslHead ? &emb : nullptr);
  const auto spec = eval::default_method(kind, seed);

  const json args{{"command", "train"}, {"method", a.method}, {"seed", seed},
                  {"manifest", sha256_file(a.manifest)}, {"labels", sha256_file(a.labels)}};
  const std::string hash = args_hash(args);
  RunWriter w(a.out, {"train", hash, seed});
  json summary{{"toolkit", toolkit()}, {"config_hash", hash}, {"seed", seed}, {"method", a.method},
               {"n_pairs", data.pair_ids.size()}};

  if (kind == ModelKind::kFeatNet) {
    Eigen::MatrixXd stacked(2 * data.feat_a.rows(), data.feat_a.cols());
    stacked << data.feat_a, data.feat_b;
    const auto st = Standardizer::fit(stacked);
    const Eigen::MatrixXd xa = st.apply(data.feat_a), xb = st.apply(data.feat_b);
    nn::FeatNetConfig cfg;
    cfg.input_dim = 2 * data.feat_a.cols();
    cfg.hidden = spec.featnet_hidden;
    nn::FeatNet net(cfg, derive_seed(seed, "featnet"));
    auto task = nn::featnet_task(net, xa, xb, data.labels);
    auto tcfg = spec.train;
    tcfg.seed = derive_seed(seed, "train");
    const auto result = nn::train(task, tcfg);
    nn::save_featnet(w.stage("models/featnet.riem"), net, data.utt_names, st.mean, st.scale);
    w.write_text("loss_curve.csv", loss_curve_csv(result));
    summary["best_epoch"] = result.best_epoch;
  } else if (kind == ModelKind::kSslHead) {
    nn::SslHeadConfig cfg = spec.ssl;
    cfg.n_layers = data.emb_a.front()->layers;
    cfg.frame_dim = data.emb_a.front()->dim;
    nn::SslHead net(cfg, derive_seed(seed, "sslhead"));
    auto task = nn::sslhead_task(net, data.emb_a, data.emb_b, data.labels);
    auto tcfg = spec.train;
    tcfg.seed = derive_seed(seed, "train");
    const auto result = nn::train(task, tcfg);
    nn::save_sslhead(w.stage("models/sslhead.riem"), net);
    w.write_text("loss_curve.csv", loss_curve_csv(result));
    summary["best_epoch"] = result.best_epoch;
  } else {
    const auto fit = eval::fit_classical(spec, data.diff, data.diff_names, data.labels);
    summary["selections"] = json::array();
    for (const auto& s : fit.selections) summary["selections"].push_back(selection_json(s));
    for (const auto& m : fit.models) {
      const std::string name = fit.models.size() == 1 ? a.method + "_shared"
                                                      : a.method + "_" + std::string(1, axes()[m.dimension].id);
      save_model(m, w.stage(fs::path("models") / (name + ".riem")));
    }
  }
  w.write_text("train.json", summary.dump(2) + "\n");
  w.commit();
  std::cout << "trained " << a.method << " on " << data.pair_ids.size() << " pairs, written to "
            << a.out.string() << "\n";
  return 0;
}

int cmd_cv(const Globals& g, const CvArgs& a) {
  if (g.config.empty()) throw UsageError("cv needs --config");
  auto cfg = load_config(g.config, g.seed);
  if (!a.out.empty()) cfg.out_dir = a.out;
  apply_jobs(g);

  const auto pairs = load_manifest(need_file(cfg.manifest, "manifest"));
  const auto labels = read_labels_csv(need_file(cfg.labels, "labels"));
  const bool want_ssl = std::count(cfg.methods.begin(), cfg.methods.end(), "sslhead") > 0;
  std::map<std::string, EmbeddingSequence> emb;
  if (want_ssl) emb = embedding_map(cfg.embeddings, pairs);
  const auto data = eval::build_cv_data(pairs, labels, feature_map(cfg.features), want_ssl ? &emb : nullptr);
  const auto plan = eval::make_folds(data.pair_ids, cfg.folds, cfg.seed);

  RunWriter w(cfg.out_dir, {"cv", cfg.hash, cfg.seed});
  w.write_text("config.resolved.json", cfg.resolved.dump(2) + "\n");
  std::string folds = "pair_id,fold\n";
  for (const auto& id : data.pair_ids) folds += id + "," + std::to_string(plan.fold_of(id)) + "\n";
  w.write_text("folds.csv", folds);

  eval::ResultTable table;
  json detail = json::object();
  for (const auto& name : cfg.methods) {
    const auto spec = cfg.method(name);
    std::cerr << "cv: " << name << "\n";
    const auto res = eval::cross_validate(spec, data, plan, g.exec());
    table.add(name, res.scores);
    w.write_text(fs::path("predictions") / (name + ".csv"), predictions_csv(data.pair_ids, res.predictions));
    json folds_json = json::array();
    for (const auto& f : res.folds) {
      json fj{{"fold", f.fold}};
      if (!f.selections.empty()) {
        fj["selections"] = json::array();
        for (const auto& s : f.selections) fj["selections"].push_back({{"axis", std::string(1, axes()[s.dimension].id)}, {"selected", s.selected}});
      }
      if (f.training) {
        fj["best_epoch"] = f.training->best_epoch;
        fj["epochs"] = f.training->curve.size();
        w.write_text(fs::path("curves") / (name + "_fold" + std::to_string(f.fold) + ".csv"),
                     loss_curve_csv(*f.training));
      }
      folds_json.push_back(fj);
    }
    detail[name] = folds_json;
  }

  const json results{{"toolkit", toolkit()},
                     {"config_hash", cfg.hash},
                     {"seed", cfg.seed},
                     {"corpus", cfg.resolved["corpus"]["manifest"]},
                     {"n_pairs", data.pair_ids.size()},
                     {"folds", cfg.folds},
                     {"methods", table_json(table)},
                     {"fold_detail", detail}};
  w.write_text("results.json", results.dump(2) + "\n");
  const eval::RunMeta meta{cfg.seed, cfg.hash, cfg.resolved["corpus"]["manifest"].get<std::string>(), toolkit(), {}};
  write_reports(w, "cv", table, cfg.formats, meta);
  w.commit();
  std::cout << eval::render_report(table, eval::ReportFormat::kMarkdown, meta);
  return 0;
}

int cmd_judge(const Globals& g, const JudgeArgs& a) {
  if (g.config.empty()) throw UsageError("judge needs --config");
  auto cfg = load_config(g.config, g.seed);
  if (!a.out.empty()) cfg.out_dir = a.out;
  const int fold = a.fold.value_or(cfg.judge_fold);
  if (fold < 0 || fold >= cfg.folds) throw UsageError("--fold must be in [0, folds.k)");

  const auto pairs = load_manifest(need_file(cfg.manifest, "manifest"));
  const auto labels = read_labels_csv(need_file(cfg.labels, "labels"));
  std::vector<std::string> ids;
  for (const auto& p : pairs) {
    if (labels.count(p.pair_id)) ids.push_back(p.pair_id);
  }
  const auto plan = eval::make_folds(ids, cfg.folds, cfg.seed);

  auto opts = cfg.judge;
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    if (opts.shots.size() >= cfg.shots) break;
    if (plan.fold_of(id) != fold) opts.shots.push_back({id, labels.at(id)});
  }

  RunWriter w(cfg.out_dir, {"judge", cfg.hash, cfg.seed});
  opts.audit_path = w.stage("audit.jsonl");
  const auto out = mllm::judge_fold(pairs, labels, plan, fold, opts);

  std::string lines;
  for (const auto& r : out.responses) {
    json j{{"pair_id", r.pair_id},
           {"scores", std::vector<double>(r.scores.begin(), r.scores.end())},
           {"rationale", r.rationale},
           {"requests", r.requests},
           {"repaired", r.repaired}};
    lines += j.dump() + "\n";
  }
  w.write_text("judgements.jsonl", lines);
  w.write_text(fs::path("predictions") / "mllm.csv", predictions_csv(out.pair_ids, out.predictions));

  eval::ResultTable table;
  const std::string method = "mllm-" + std::string(mllm::to_string(opts.provider.kind));
  table.add(method, out.scores);
  const json results{{"toolkit", toolkit()},
                     {"config_hash", cfg.hash},
                     {"seed", cfg.seed},
                     {"corpus", cfg.resolved["corpus"]["manifest"]},
                     {"fold", fold},
                     {"n_pairs", out.pair_ids.size()},
                     {"methods", table_json(table)}};
  w.write_text("results_judge.json", results.dump(2) + "\n");
  const eval::RunMeta meta{cfg.seed, cfg.hash, cfg.resolved["corpus"]["manifest"].get<std::string>(), toolkit(), {}};
  write_reports(w, "judge", table, cfg.formats, meta);
  w.commit();
  std::cout << eval::render_report(table, eval::ReportFormat::kMarkdown, meta);
  return 0;
}

int cmd_report(const Globals&, const ReportArgs& a) {
  eval::ReportFormat format;
  if (a.format == "csv") format = eval::ReportFormat::kCsv;
  else if (a.format == "md") format = eval::ReportFormat::kMarkdown;
  else throw UsageError("--format must be csv or md");
  if (a.source != "cv" && a.source != "judge") throw UsageError("--source must be cv or judge");
  const fs::path path = a.run_dir / (a.source == "cv" ? "results.json" : "results_judge.json");
  std::ifstream in(need_file(path, "results"));
  const json r = json::parse(in, nullptr, false);
  if (r.is_discarded() || !r.contains("methods")) throw SchemaError("malformed " + path.string());
  const auto table = table_from_json(r["methods"]);
  eval::RunMeta meta{r.value("seed", std::uint64_t{0}), r.value("config_hash", ""), r.value("corpus", ""),
                     r.value("toolkit", ""), utc_timestamp()};
  const std::string text = eval::render_report(table, format, meta);
  if (a.out.empty()) {
    std::cout << text;
    return 0;
  }
  RunWriter w(a.run_dir, {"report", meta.config_hash, meta.seed});
  w.write_text(fs::path("reports") / a.out, text);
  w.commit();
  return 0;
}

}  // namespace rie::cli
