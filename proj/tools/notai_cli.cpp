// notai: batch and operator entry points.
//
// stdout carries only the command's payload; diagnostics go to stderr.
// Exit codes: 0 ok, 2 usage, 3 data error, 4 backend error.

#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "notai/attribution.hpp"
#include "notai/csv.hpp"
#include "notai/datasetops.hpp"
#include "notai/error.hpp"
#include "notai/gateway.hpp"
#include "notai/hashing.hpp"
#include "notai/http_logit_source.hpp"
#include "notai/ngram_lm.hpp"

namespace {

using namespace notai;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitBackend = 4;

struct Globals {
  std::string model_path;
  std::uint64_t seed = 42;
  int jobs = 0;
  std::string format = "json";
  std::string lexicon_dir;
  std::string logit_backend;
  std::string log_level = "warn";
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BackendProtocol:
    case ErrorCode::MalformedExplanation: return kExitBackend;
    default: return kExitData;
  }
}

Lexicons load_lexicons(const Globals& g) {
  return g.lexicon_dir.empty() ? Lexicons::load_default() : Lexicons::load_dir(g.lexicon_dir);
}

std::shared_ptr<const LogitSource> make_logit_source(const std::string& spec) {
  if (spec.empty()) return nullptr;
  if (spec.rfind("ngram:", 0) == 0) {
    return std::make_shared<NgramLanguageModel>(NgramLanguageModel::load(spec.substr(6)));
  }
  if (spec.rfind("http:", 0) == 0 || spec.rfind("https:", 0) == 0) {
    // Accepts both http:URL and a bare URL.
    HttpLogitSource::Config c;
    const std::string rest = spec.substr(5);
    c.endpoint = rest.find("://") != std::string::npos ? rest : spec;
    return std::make_shared<HttpLogitSource>(c);
  }
  throw Error(ErrorCode::InvalidArgument, "--logit-backend must be ngram:PATH or http:URL");
}

std::shared_ptr<const NeuralScorer> make_neural_scorer() {
  if (auto cfg = RemoteNeuralScorer::config_from_env()) return std::make_shared<RemoteNeuralScorer>(*cfg);
  return nullptr;
}

ReadOptions read_options(const std::vector<std::string>& filters) {
  ReadOptions opts;
  for (const auto& f : filters) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--filter expects COLUMN=VALUE");
    opts.filters.emplace_back(f.substr(0, eq), f.substr(eq + 1));
  }
  return opts;
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},             {"fp", m.fp},               {"tn", m.tn},         {"fn", m.fn}};
}

void emit_metrics(const Globals& g, const std::vector<AblationRow>& rows) {
  if (g.format == "csv") {
    write_metrics_csv(std::cout, rows);
    return;
  }
  for (const auto& r : rows) {
    auto j = metrics_json(r.metrics);
    j["family"] = r.family;
    std::cout << j.dump() << '\n';
  }
}

struct FeatureOptions {
  bool recompute = false;
};

LabeledMatrix load_matrix(const Globals& g, const Dataset& ds, const FeatureOptions& fo, std::string* lexicon_hash,
                          std::vector<std::string>* backend_ids) {
  const Lexicons lex = load_lexicons(g);
  const auto logits = make_logit_source(g.logit_backend);
  const auto neural = make_neural_scorer();
  FeatureSources src;
  src.lexicons = &lex;
  src.logits = logits.get();
  src.neural = neural.get();
  src.recompute = fo.recompute;
  if (lexicon_hash) *lexicon_hash = lex.hash();
  if (backend_ids) {
    if (logits) backend_ids->push_back(logits->identity());
    if (neural) backend_ids->push_back(neural->identity());
  }
  return labeled_matrix(ds, build_features(ds, src));
}

// --- commands ---------------------------------------------------------------

struct AnalyzeOptions {
  std::vector<std::string> inputs;
  std::vector<std::string> disabled;
  bool no_explain = false;
  bool per_file = false;
};

int cmd_analyze(const Globals& g, const AnalyzeOptions& o) {
  if (g.model_path.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  GatewayBackends backends;
  backends.logits = make_logit_source(g.logit_backend);
  backends.neural = make_neural_scorer();
  backends.explainer = ExplainerConfig::from_env();
  const Gateway gateway(load_model(g.model_path), load_lexicons(g), backends);

  AnalyzeRequest base;
  base.explain = !o.no_explain;
  for (const auto& d : o.disabled) base.disabled.insert(parse_feature(d));

  std::vector<std::string> docs;
  auto take = [&](std::istream& in) {
    if (o.per_file) {
      docs.push_back(read_all(in));
      return;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) docs.push_back(line);
    }
  };
  if (o.inputs.empty() || (o.inputs.size() == 1 && o.inputs[0] == "-")) {
    take(std::cin);
  } else {
    for (const auto& path : o.inputs) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
      take(in);
    }
  }
  if (docs.empty()) throw Error(ErrorCode::EmptyDocument, "no input text");

  if (g.format == "csv") {
    std::vector<std::string> header = {"label", "probability_ai", "margin", "base_value"};
    for (auto name : kFeatureNames) header.push_back("phi_" + std::string(name));
    write_csv_row(std::cout, header);
  }
  int status = kExitOk;
  for (const auto& text : docs) {
    AnalyzeRequest req = base;
    req.text = text;
    try {
      const auto bundle = gateway.analyze(req);
      if (g.format == "csv") {
        std::vector<std::string> row = {std::string(label_name(bundle.label)), format_number(bundle.probability_ai),
                                        format_number(bundle.margin), format_number(bundle.base_value)};
        for (const auto& f : bundle.features) row.push_back(format_number(f.phi));
        write_csv_row(std::cout, row);
      } else {
        std::cout << bundle.to_json().dump() << '\n';
      }
    } catch (const Error& e) {
      spdlog::error("{}: {}", error_code_name(e.code()), e.what());
      status = exit_code_for(e.code());
    }
  }
  return status;
}

struct TrainOptions {
  std::string data;
  std::string out;
  std::vector<std::string> filters;
  std::vector<std::string> features;
  FeatureOptions fo;
  TrainConfig cfg;
};

int cmd_train(const Globals& g, TrainOptions o) {
  o.cfg.seed = g.seed;
  o.cfg.validate();
  const Dataset ds = read_dataset_file(o.data, read_options(o.filters));
  ModelProvenance prov;
  const auto all = load_matrix(g, ds, o.fo, &prov.lexicon_hash, &prov.backend_ids);

  std::vector<Label> labels;
  for (const auto& r : ds.records) labels.push_back(r.label);
  SplitSpec spec;
  spec.seed = g.seed;
  const auto idx = split_indices(labels, spec);
  const auto train_m = all.select(idx.train);
  const auto val_m = all.select(idx.val);
  const auto test_m = all.select(idx.test);

  FeatureSet allowed = FeatureSet::all();
  if (!o.features.empty()) allowed = make_family("custom", o.features).features;
  auto model = train_family(train_m, val_m, allowed, o.cfg);
  model.provenance.lexicon_hash = prov.lexicon_hash;
  model.provenance.backend_ids = prov.backend_ids;
  save_model(model, o.out);
  spdlog::info("wrote {} ({} trees, sha256 {})", o.out, model.trees.size(), model_hash(model));

  std::vector<AblationRow> rows;
  if (!val_m.rows.empty()) rows.push_back({"validation", evaluate_model(model, val_m)});
  rows.push_back({"test", evaluate_model(model, test_m)});
  emit_metrics(g, rows);
  return kExitOk;
}

struct EvaluateOptions {
  std::string data;
  std::string heatmap;
  std::vector<std::string> filters;
  FeatureOptions fo;
};

int cmd_evaluate(const Globals& g, const EvaluateOptions& o) {
  if (g.model_path.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  const auto model = load_model(g.model_path);
  const Dataset ds = read_dataset_file(o.data, read_options(o.filters));
  const auto m = load_matrix(g, ds, o.fo, nullptr, nullptr);
  emit_metrics(g, {{"all", evaluate_model(model, m)}});
  if (!o.heatmap.empty()) {
    std::vector<Label> pred;
    for (const auto& r : m.rows) pred.push_back(model.predict_proba(r) >= 0.5 ? Label::Ai : Label::Human);
    std::ofstream out(o.heatmap);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + o.heatmap);
    write_f1_matrix_csv(out, per_cell_f1(ds, pred));
  }
  return kExitOk;
}

int cmd_balance(const Globals& g, const std::string& data, const std::string& out_path,
                const std::vector<std::string>& filters) {
  const auto result = balance(read_dataset_file(data, read_options(filters)), g.seed);
  if (out_path.empty() || out_path == "-") {
    write_dataset(std::cout, result.dataset);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + out_path);
    write_dataset(out, result.dataset);
  }
  return kExitOk;
}

int cmd_split(const Globals& g, const std::string& data, const std::string& out_dir,
              const std::vector<std::string>& filters) {
  SplitSpec spec;
  spec.seed = g.seed;
  const auto parts = split(read_dataset_file(data, read_options(filters)), spec);
  std::filesystem::create_directories(out_dir);
  const std::pair<const char*, const Dataset*> files[] = {
      {"train.csv", &parts.train}, {"val.csv", &parts.val}, {"test.csv", &parts.test}};
  for (const auto& [name, part] : files) {
    std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write into " + out_dir);
    write_dataset(out, *part);
  }
  if (g.format == "csv") {
    std::cout << "split,rows\ntrain," << parts.train.size() << "\nval," << parts.val.size() << "\ntest,"
              << parts.test.size() << '\n';
  } else {
    nlohmann::ordered_json j{{"train", parts.train.size()}, {"val", parts.val.size()}, {"test", parts.test.size()}};
    std::cout << j.dump() << '\n';
  }
  return kExitOk;
}

int cmd_ablation(const Globals& g, const std::string& data, const std::vector<std::string>& filters,
                 const FeatureOptions& fo, TrainConfig cfg) {
  cfg.seed = g.seed;
  cfg.validate();
  const Dataset ds = read_dataset_file(data, read_options(filters));
  const auto all = load_matrix(g, ds, fo, nullptr, nullptr);
  std::vector<Label> labels;
  for (const auto& r : ds.records) labels.push_back(r.label);
  SplitSpec spec;
  spec.seed = g.seed;
  const auto idx = split_indices(labels, spec);
  const auto families = default_families();
  emit_metrics(g, ablation_table(all.select(idx.train), all.select(idx.val), all.select(idx.test), families, cfg));
  return kExitOk;
}

int cmd_shap_global(const Globals& g, const std::string& data, const std::vector<std::string>& filters,
                    const FeatureOptions& fo) {
  if (g.model_path.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  const auto model = load_model(g.model_path);
  const auto m = load_matrix(g, read_dataset_file(data, read_options(filters)), fo, nullptr, nullptr);
  const auto imp = global_importance(model, m.rows);
  if (g.format == "json") {
    for (auto f : imp.ranking()) {
      nlohmann::ordered_json j{{"feature", std::string(feature_name(f))},
                               {"mean_abs_phi", imp.mean_abs_phi[index_of(f)]}};
      std::cout << j.dump() << '\n';
    }
  } else {
    write_importance_csv(std::cout, imp);
  }
  return kExitOk;
}

int cmd_shap_dependence(const Globals& g, const std::string& data, const std::string& feature,
                        const std::vector<std::string>& filters, const FeatureOptions& fo) {
  if (g.model_path.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  const Feature f = parse_feature(feature);
  const auto model = load_model(g.model_path);
  const auto m = load_matrix(g, read_dataset_file(data, read_options(filters)), fo, nullptr, nullptr);
  const auto series = dependence_series(model, m.rows, f);
  if (g.format == "json") {
    for (const auto& p : series.points) {
      nlohmann::ordered_json j{{"feature", feature}, {"value", p.value}, {"phi", p.phi}};
      if (std::isnan(p.value)) j["value"] = nullptr;
      std::cout << j.dump() << '\n';
    }
  } else {
    write_dependence_csv(std::cout, series);
  }
  return kExitOk;
}

int cmd_fit_lm(const Globals& g, const std::string& corpus_path, const std::string& out, int order, double alpha) {
  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + corpus_path);
  std::vector<Document> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) corpus.push_back(Document::from_text(line));
  }
  const auto lm = NgramLanguageModel::fit(corpus, order, alpha);
  lm.save(out);
  if (g.format == "csv") {
    std::cout << "identity,vocab_size,order,alpha\n"
              << lm.identity() << ',' << lm.vocab_size() << ',' << lm.order() << ',' << format_number(lm.alpha())
              << '\n';
  } else {
    nlohmann::ordered_json j{
        {"identity", lm.identity()}, {"vocab_size", lm.vocab_size()}, {"order", lm.order()}, {"alpha", lm.alpha()}};
    std::cout << j.dump() << '\n';
  }
  return kExitOk;
}

Server* g_server = nullptr;

extern "C" void handle_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Globals& g, const std::string& host, int port, const std::string& static_dir,
              const std::string& fallback_lm) {
  if (g.model_path.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  GatewayBackends backends;
  backends.logits = make_logit_source(g.logit_backend);
  if (!fallback_lm.empty()) backends.fallback_logits = make_logit_source("ngram:" + fallback_lm);
  backends.neural = make_neural_scorer();
  backends.explainer = ExplainerConfig::from_env();
  const Gateway gateway(load_model(g.model_path), load_lexicons(g), backends);
  Server server(gateway, {host, port, static_dir});
  server.bind();
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  server.run();
  g_server = nullptr;
  return kExitOk;
}

void add_train_config(CLI::App* cmd, TrainConfig& cfg) {
  cmd->add_option("--rounds", cfg.num_rounds, "Boosting rounds")->capture_default_str();
  cmd->add_option("--max-depth", cfg.max_depth, "Maximum tree depth")->capture_default_str();
  cmd->add_option("--learning-rate", cfg.learning_rate, "Shrinkage")->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "L2 leaf regularization")->capture_default_str();
  cmd->add_option("--gamma", cfg.gamma, "Minimum split gain")->capture_default_str();
  cmd->add_option("--min-child-weight", cfg.min_child_weight, "Minimum hessian per child")->capture_default_str();
  cmd->add_option("--early-stopping", cfg.early_stopping_rounds, "Rounds without validation gain (0 disables)")
      ->capture_default_str();
  cmd->add_option("--subsample", cfg.subsample, "Row fraction per round")->capture_default_str();
  cmd->add_option("--colsample", cfg.colsample, "Feature fraction per tree")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("notai"));

  CLI::App app{"Explainable machine-generated text detector"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--model", g.model_path, "Model file");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--lexicons", g.lexicon_dir, "Directory with stopwords.txt and cliches.txt");
  app.add_option("--logit-backend", g.logit_backend, "ngram:PATH or http:URL");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  std::vector<std::string> filters;
  FeatureOptions fo;
  auto add_data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--filter", filters, "Keep rows where COLUMN=VALUE");
    cmd->add_flag("--recompute", fo.recompute, "Ignore precomputed feature columns");
  };

  AnalyzeOptions ao;
  auto* analyze = app.add_subcommand("analyze", "Analyze texts, one evidence bundle per line or file");
  analyze->add_option("inputs", ao.inputs, "Input files ('-' or none for stdin)");
  analyze->add_option("--disable", ao.disabled, "Feature to disable (repeatable)")->delimiter(',')->allow_extra_args(false);
  analyze->add_flag("--no-explain", ao.no_explain, "Omit the rationale");
  analyze->add_flag("--per-file", ao.per_file, "Treat each file as one document");

  TrainOptions to;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a labeled dataset");
  train_cmd->add_option("--data", to.data, "Dataset CSV")->required();
  train_cmd->add_option("--out", to.out, "Model output path")->required();
  train_cmd->add_option("--features", to.features, "Restrict splits to these features")->delimiter(',');
  add_train_config(train_cmd, to.cfg);
  add_data_flags(train_cmd);

  EvaluateOptions eo;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a dataset with a model");
  evaluate_cmd->add_option("--data", eo.data, "Dataset CSV")->required();
  evaluate_cmd->add_option("--heatmap", eo.heatmap, "Write generator x topic F1 matrix CSV");
  add_data_flags(evaluate_cmd);

  std::string data, out;
  auto* balance_cmd = app.add_subcommand("balance", "Downsample AI rows to a 1:1 class ratio");
  balance_cmd->add_option("--data", data, "Dataset CSV")->required();
  balance_cmd->add_option("--out", out, "Output CSV (stdout when omitted)");
  balance_cmd->add_option("--filter", filters, "Keep rows where COLUMN=VALUE");

  auto* split_cmd = app.add_subcommand("split", "Stratified 85/5/10 split");
  split_cmd->add_option("--data", data, "Dataset CSV")->required();
  split_cmd->add_option("--out-dir", out, "Directory for train/val/test CSVs")->required();
  split_cmd->add_option("--filter", filters, "Keep rows where COLUMN=VALUE");

  TrainConfig ablation_cfg;
  auto* ablation_cmd = app.add_subcommand("ablation", "Per-family metrics table");
  ablation_cmd->add_option("--data", data, "Dataset CSV")->required();
  add_train_config(ablation_cmd, ablation_cfg);
  add_data_flags(ablation_cmd);

  auto* shap_global = app.add_subcommand("shap-global", "Mean |phi| per feature");
  shap_global->add_option("--data", data, "Dataset CSV")->required();
  add_data_flags(shap_global);

  std::string feature;
  auto* shap_dep = app.add_subcommand("shap-dependence", "Feature value vs phi for every row");
  shap_dep->add_option("--data", data, "Dataset CSV")->required();
  shap_dep->add_option("--feature", feature, "Feature name")->required();
  add_data_flags(shap_dep);

  std::string corpus;
  int order = 3;
  double alpha = 0.1;
  auto* fit_lm = app.add_subcommand("fit-lm", "Fit the n-gram proxy language model");
  fit_lm->add_option("--corpus", corpus, "Text file, one document per line")->required();
  fit_lm->add_option("--out", out, "Model output path")->required();
  fit_lm->add_option("--order", order, "N-gram order")->capture_default_str();
  fit_lm->add_option("--alpha", alpha, "Add-alpha smoothing")->capture_default_str();

  std::string host = "127.0.0.1", static_dir, fallback_lm;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--static-dir", static_dir, "Web UI bundle served at /");
  serve->add_option("--fallback-lm", fallback_lm, "N-gram model used when the logit backend fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));
  if (g.jobs > 0) omp_set_num_threads(g.jobs);

  try {
    if (*analyze) return cmd_analyze(g, ao);
    to.filters = eo.filters = filters;
    to.fo = eo.fo = fo;
    if (*train_cmd) return cmd_train(g, to);
    if (*evaluate_cmd) return cmd_evaluate(g, eo);
    if (*balance_cmd) return cmd_balance(g, data, out, filters);
    if (*split_cmd) return cmd_split(g, data, out, filters);
    if (*ablation_cmd) return cmd_ablation(g, data, filters, fo, ablation_cfg);
    if (*shap_global) return cmd_shap_global(g, data, filters, fo);
    if (*shap_dep) return cmd_shap_dependence(g, data, feature, filters, fo);
    if (*fit_lm) return cmd_fit_lm(g, corpus, out, order, alpha);
    if (*serve) return cmd_serve(g, host, port, static_dir, fallback_lm);
  } catch (const Error& e) {
    spdlog::error("{}: {}", error_code_name(e.code()), e.what());
    if (e.code() == ErrorCode::InvalidArgument && std::string_view(e.what()).find("--") != std::string_view::npos) {
      return kExitUsage;
    }
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}
