#include "notai/datasetops.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "notai/csv.hpp"
#include "notai/error.hpp"
#include "notai/random.hpp"

namespace notai {

namespace {

std::optional<double> parse_cell_number(const std::string& cell, std::size_t line, const std::string& column) {
  std::string_view s(cell);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty() || s == "nan" || s == "NaN" || s == "NA") return std::nullopt;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "line " + std::to_string(line) + ": column '" + column + "' is not a number: '" + cell + "'");
  }
  return v;
}

bool is_human_generator(std::string_view g) {
  std::string lower;
  for (char c : g) lower.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  return lower == "human";
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

// --- IO -----------------------------------------------------------------

Dataset read_dataset(std::istream& in, const ReadOptions& opts) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw Error(ErrorCode::MissingColumn, "dataset has no header");

  int col_id = -1, col_text = -1, col_label = -1, col_gen = -1, col_topic = -1;
  std::array<int, kFeatureCount> col_feature{};
  col_feature.fill(-1);
  std::vector<std::pair<int, std::string>> extra_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    const int c = static_cast<int>(i);
    if (h == "id") col_id = c;
    else if (h == "text") col_text = c;
    else if (h == "label") col_label = c;
    else if ((h == "generator" || h == "model") && col_gen < 0) col_gen = c;
    else if ((h == "domain_topic" || h == "domain") && col_topic < 0) col_topic = c;
    else if (auto f = feature_from_name(h)) col_feature[index_of(*f)] = c;
    else extra_cols.emplace_back(c, h);
  }
  if (col_text < 0) throw Error(ErrorCode::MissingColumn, "dataset has no 'text' column");
  if (col_label < 0 && col_gen < 0) {
    throw Error(ErrorCode::MissingColumn, "dataset needs a 'label' or 'generator' column");
  }

  std::vector<std::pair<int, std::string>> filter_cols;
  for (const auto& [name, value] : opts.filters) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "filter column '" + name + "' not found");
    filter_cols.emplace_back(static_cast<int>(it - header.begin()), value);
  }

  Dataset ds;
  ds.has_generator = col_gen >= 0;
  ds.has_topic = col_topic >= 0;
  for (const auto& [c, name] : extra_cols) ds.extra_columns.push_back(name);

  std::vector<std::string> row;
  std::size_t row_number = 0;
  while (reader.next(row)) {
    const std::size_t line = reader.line();
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": expected " +
                                                  std::to_string(header.size()) + " fields, found " +
                                                  std::to_string(row.size()));
    }
    ++row_number;
    bool keep = true;
    for (const auto& [c, value] : filter_cols) keep = keep && row[static_cast<std::size_t>(c)] == value;
    if (!keep) continue;

    DatasetRecord r;
    r.id = col_id >= 0 ? row[static_cast<std::size_t>(col_id)] : std::to_string(row_number - 1);
    r.text = row[static_cast<std::size_t>(col_text)];
    if (r.text.empty()) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": empty text");
    if (col_gen >= 0) r.generator = row[static_cast<std::size_t>(col_gen)];
    if (col_label >= 0) {
      try {
        r.label = parse_label(row[static_cast<std::size_t>(col_label)]);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": " + e.what());
      }
      if (col_gen < 0) {
        r.generator = r.label == Label::Human ? "human" : "ai";
      } else if ((r.label == Label::Human) != is_human_generator(r.generator)) {
        throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": label '" +
                                                    std::string(label_name(r.label)) +
                                                    "' disagrees with generator '" + r.generator + "'");
      }
    } else {
      r.label = is_human_generator(r.generator) ? Label::Human : Label::Ai;
    }
    if (r.label == Label::Human) r.generator = "human";
    if (col_topic >= 0) r.domain_topic = row[static_cast<std::size_t>(col_topic)];
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (col_feature[f] >= 0) {
        r.features[f] = parse_cell_number(row[static_cast<std::size_t>(col_feature[f])], line,
                                          std::string(kFeatureNames[f]));
      }
    }
    for (const auto& [c, name] : extra_cols) r.extra.emplace_back(name, row[static_cast<std::size_t>(c)]);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

Dataset read_dataset_file(const std::filesystem::path& path, const ReadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_dataset(in, opts);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  std::array<bool, kFeatureCount> present{};
  for (const auto& r : ds.records) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) present[f] = present[f] || r.features[f].has_value();
  }
  std::vector<std::string> header = {"id", "text", "label", "generator"};
  if (ds.has_topic) header.push_back("domain_topic");
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (present[f]) header.emplace_back(kFeatureNames[f]);
  }
  for (const auto& c : ds.extra_columns) header.push_back(c);
  write_csv_row(out, header);

  std::vector<std::string> row;
  for (const auto& r : ds.records) {
    row = {r.id, r.text, std::string(label_name(r.label)), r.generator};
    if (ds.has_topic) row.push_back(r.domain_topic);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (present[f]) row.push_back(r.features[f] ? format_number(*r.features[f]) : std::string());
    }
    for (const auto& c : ds.extra_columns) {
      const std::string* v = r.extra_value(c);
      row.push_back(v ? *v : std::string());
    }
    write_csv_row(out, row);
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.extra_columns = ds.extra_columns;
  out.has_generator = ds.has_generator;
  out.has_topic = ds.has_topic;
  out.records.reserve(indices.size());
  for (auto i : indices) out.records.push_back(ds.records.at(i));
  return out;
}

// --- balance --------------------------------------------------------------

std::vector<std::size_t> generator_quotas(std::size_t target, std::span<const std::size_t> available) {
  const std::size_t g = available.size();
  std::vector<std::size_t> quota(g, 0);
  std::vector<bool> fixed(g, false);
  std::size_t remaining = target;
  for (;;) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < g; ++i) {
      if (!fixed[i]) open.push_back(i);
    }
    if (open.empty()) break;
    const std::size_t base = remaining / open.size();
    std::size_t extra = remaining % open.size();
    for (auto i : open) {
      quota[i] = base + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
    }
    bool shortfall = false;
    for (auto i : open) {
      if (available[i] < quota[i]) {
        quota[i] = available[i];
        fixed[i] = true;
        remaining -= available[i];
        shortfall = true;
      }
    }
    if (!shortfall) break;
  }
  return quota;
}

BalanceResult balance(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> human;
  std::map<std::string, std::vector<std::size_t>> by_generator;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.records[i].label == Label::Human) human.push_back(i);
    else by_generator[ds.records[i].generator].push_back(i);
  }
  if (human.empty() || by_generator.empty()) {
    throw Error(ErrorCode::SingleClass, "balancing needs at least one human and one AI row");
  }

  std::vector<std::size_t> available;
  for (const auto& [g, rows] : by_generator) available.push_back(rows.size());
  const auto quota = generator_quotas(human.size(), available);

  BalanceResult result;
  std::vector<std::size_t> keep = human;
  std::size_t total_ai = 0;
  std::size_t gi = 0;
  for (const auto& [g, rows] : by_generator) {
    const std::size_t k = quota[gi];
    total_ai += k;
    if (k == rows.size()) {
      keep.insert(keep.end(), rows.begin(), rows.end());
    } else {
      // Partial Fisher-Yates over positions, then restore file order.
      SplitMix64 rng(stream_seed(seed, gi));
      std::vector<std::size_t> pos(rows.size());
      std::iota(pos.begin(), pos.end(), 0);
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.bounded(pos.size() - i));
        std::swap(pos[i], pos[j]);
      }
      pos.resize(k);
      std::sort(pos.begin(), pos.end());
      for (auto p : pos) keep.push_back(rows[p]);
    }
    ++gi;
  }
  if (total_ai < human.size()) {
    result.insufficient_ai = true;
    spdlog::warn("only {} AI rows for {} human rows; keeping all AI rows", total_ai, human.size());
  }
  result.dataset = subset(ds, keep);
  return result;
}

// --- split ----------------------------------------------------------------

void SplitSpec::validate() const {
  const bool ok = train >= 0 && val >= 0 && test >= 0 && std::abs(train + val + test - 1.0) < 1e-9;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "split fractions must be non-negative and sum to 1");
}

SplitIndices split_indices(std::span<const Label> labels, const SplitSpec& spec) {
  spec.validate();
  if (labels.size() < 20) {
    throw Error(ErrorCode::TooSmall, "split needs at least 20 rows, got " + std::to_string(labels.size()));
  }
  SplitIndices out;
  const std::array<double, 3> frac = {spec.train, spec.val, spec.test};
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (static_cast<int>(labels[i]) == cls) rows.push_back(i);
    }
    SplitMix64 rng(stream_seed(spec.seed, static_cast<std::uint64_t>(cls)));
    shuffle(rows, rng);

    // Largest remainder; ties go to the earlier part (train, val, test).
    const double n = static_cast<double>(rows.size());
    std::array<std::size_t, 3> count{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double exact = n * frac[static_cast<std::size_t>(p)];
      count[static_cast<std::size_t>(p)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      rem[static_cast<std::size_t>(p)] = exact - static_cast<double>(count[static_cast<std::size_t>(p)]);
      assigned += count[static_cast<std::size_t>(p)];
    }
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < rows.size(); ++k, ++assigned) ++count[order[k % 3]];

    auto it = rows.begin();
    auto take = [&](std::vector<std::size_t>& dst, std::size_t c) {
      dst.insert(dst.end(), it, it + static_cast<std::ptrdiff_t>(c));
      it += static_cast<std::ptrdiff_t>(c);
    };
    take(out.train, count[0]);
    take(out.val, count[1]);
    take(out.test, count[2]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  std::vector<Label> labels;
  labels.reserve(ds.size());
  for (const auto& r : ds.records) labels.push_back(r.label);
  const auto idx = split_indices(labels, spec);
  return {subset(ds, idx.train), subset(ds, idx.val), subset(ds, idx.test)};
}

// --- metrics --------------------------------------------------------------

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  m.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace

Metrics evaluate(std::span<const std::pair<Label, Label>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& [truth, pred] : pairs) {
    if (truth == Label::Ai) (pred == Label::Ai ? tp : fn)++;
    else (pred == Label::Ai ? fp : tn)++;
  }
  return from_counts(tp, fp, tn, fn);
}

Metrics evaluate(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::DimensionMismatch, "label count mismatch");
  std::vector<std::pair<Label, Label>> pairs;
  pairs.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pairs.emplace_back(truth[i] ? Label::Ai : Label::Human, predicted[i] ? Label::Ai : Label::Human);
  }
  return evaluate(pairs);
}

F1Matrix per_cell_f1(const Dataset& ds, std::span<const Label> predictions) {
  if (!ds.has_topic) throw Error(ErrorCode::MissingColumn, "per-cell F1 needs a domain_topic column");
  if (!ds.has_generator) throw Error(ErrorCode::MissingColumn, "per-cell F1 needs a generator column");
  if (predictions.size() != ds.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one prediction per row is required");
  }
  std::vector<std::string> gens, topics;
  for (const auto& r : ds.records) {
    if (r.label == Label::Ai) gens.push_back(r.generator);
    topics.push_back(r.domain_topic);
  }
  F1Matrix m;
  m.generators = sorted_unique(std::move(gens));
  m.topics = sorted_unique(std::move(topics));
  m.f1.assign(m.generators.size(), std::vector<std::optional<double>>(m.topics.size()));

  auto topic_of = [&](const std::string& t) {
    return static_cast<std::size_t>(std::lower_bound(m.topics.begin(), m.topics.end(), t) - m.topics.begin());
  };
  // Human confusion per topic, AI confusion per cell.
  std::vector<std::size_t> human_fp(m.topics.size(), 0), human_tn(m.topics.size(), 0);
  std::vector<std::vector<std::size_t>> tp(m.generators.size(), std::vector<std::size_t>(m.topics.size(), 0));
  auto fn = tp;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records[i];
    const auto t = topic_of(r.domain_topic);
    const bool pred_ai = predictions[i] == Label::Ai;
    if (r.label == Label::Human) {
      (pred_ai ? human_fp[t] : human_tn[t])++;
    } else {
      const auto g = static_cast<std::size_t>(
          std::lower_bound(m.generators.begin(), m.generators.end(), r.generator) - m.generators.begin());
      (pred_ai ? tp[g][t] : fn[g][t])++;
    }
  }
  for (std::size_t g = 0; g < m.generators.size(); ++g) {
    for (std::size_t t = 0; t < m.topics.size(); ++t) {
      if (tp[g][t] + fn[g][t] == 0) continue;
      m.f1[g][t] = from_counts(tp[g][t], human_fp[t], human_tn[t], fn[g][t]).f1;
    }
  }
  return m;
}

void write_f1_matrix_csv(std::ostream& out, const F1Matrix& m) {
  std::vector<std::string> row = {"generator"};
  row.insert(row.end(), m.topics.begin(), m.topics.end());
  write_csv_row(out, row);
  for (std::size_t g = 0; g < m.generators.size(); ++g) {
    row = {m.generators[g]};
    for (const auto& cell : m.f1[g]) row.push_back(cell ? format_number(*cell) : std::string());
    write_csv_row(out, row);
  }
}

// --- features -------------------------------------------------------------

std::vector<FeatureVector> build_features(const Dataset& ds, const FeatureSources& src) {
  const std::size_t n = ds.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<FeatureVector> out(n);
  for (auto& v : out) v.values().fill(nan);

  auto precomputed = [&](std::size_t i, std::size_t f) -> std::optional<double> {
    if (src.recompute) return std::nullopt;
    return ds.records[i].features[f];
  };

  // Stylometrics for rows missing any stylometric column.
  std::vector<std::size_t> need_style;
  for (std::size_t i = 0; i < n; ++i) {
    bool missing = false;
    for (auto f : kStylometricFeatures) missing = missing || !precomputed(i, index_of(f));
    if (missing) need_style.push_back(i);
  }
  if (!need_style.empty()) {
    if (!src.lexicons) throw Error(ErrorCode::InvalidArgument, "stylometric features need lexicons");
    std::vector<std::string> texts;
    texts.reserve(need_style.size());
    for (auto i : need_style) texts.push_back(ds.records[i].text);
    const auto style = kernels::batch_stylometrics(texts, *src.lexicons, src.exec);
    for (std::size_t k = 0; k < need_style.size(); ++k) out[need_style[k]] = style[k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (auto f : kStylometricFeatures) {
      if (auto v = precomputed(i, index_of(f))) out[i][f] = *v;
    }
    out[i][Feature::curvature] = nan;
    out[i][Feature::bert_ai_score] = nan;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (precomputed(i, index_of(Feature::bert_ai_score))) {
      out[i][Feature::bert_ai_score] = score_precomputed(ds.records[i]).value;
    }
    if (auto v = precomputed(i, index_of(Feature::curvature))) out[i][Feature::curvature] = *v;
  }

  const auto rows = static_cast<std::ptrdiff_t>(n);
  auto model_features = [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    const bool need_curv = src.logits && std::isnan(out[i][Feature::curvature]);
    const bool need_bert = src.neural && std::isnan(out[i][Feature::bert_ai_score]);
    if (!need_curv && !need_bert) return;
    const Document doc = Document::from_text(ds.records[i].text);
    if (need_curv) {
      try {
        out[i][Feature::curvature] = cpc_score(src.logits->distributions(doc)).score;
      } catch (const Error&) {
      }
    }
    if (need_bert) {
      try {
        out[i][Feature::bert_ai_score] = src.neural->score(doc).value;
      } catch (const Error&) {
      }
    }
  };
  if (src.logits || src.neural) {
    if (src.exec == kernels::Exec::Serial) {
      for (std::ptrdiff_t i = 0; i < rows; ++i) model_features(i);
    } else {
#pragma omp parallel for schedule(dynamic, 8)
      for (std::ptrdiff_t i = 0; i < rows; ++i) model_features(i);
    }
  }
  return out;
}

LabeledMatrix LabeledMatrix::select(std::span<const std::size_t> indices) const {
  LabeledMatrix m;
  m.rows.reserve(indices.size());
  m.labels.reserve(indices.size());
  for (auto i : indices) {
    m.rows.push_back(rows.at(i));
    m.labels.push_back(labels.at(i));
  }
  return m;
}

LabeledMatrix labeled_matrix(const Dataset& ds, std::vector<FeatureVector> rows) {
  if (rows.size() != ds.size()) throw Error(ErrorCode::DimensionMismatch, "one feature row per record");
  LabeledMatrix m;
  m.rows = std::move(rows);
  m.labels.reserve(ds.size());
  for (const auto& r : ds.records) m.labels.push_back(static_cast<int>(r.label));
  return m;
}

// --- ablation -------------------------------------------------------------

FeatureFamily make_family(std::string name, std::span<const std::string> feature_names) {
  FeatureFamily fam{std::move(name), {}};
  for (const auto& f : feature_names) fam.features.insert(parse_feature(f));
  if (fam.features.empty()) throw Error(ErrorCode::InvalidArgument, "feature family '" + fam.name + "' is empty");
  return fam;
}

std::vector<FeatureFamily> default_families() {
  FeatureFamily style{"Stylometric only", {}};
  for (auto f : kStylometricFeatures) style.features.insert(f);
  FeatureFamily neural{"ModernBERT only", {}};
  neural.features.insert(Feature::bert_ai_score);
  FeatureFamily curv{"Curvature only", {}};
  curv.features.insert(Feature::curvature);
  return {style, neural, curv};
}

TreeEnsemble train_family(const LabeledMatrix& train_set, const LabeledMatrix& val, const FeatureSet& features,
                          const TrainConfig& cfg) {
  std::optional<ValidationSet> v;
  if (!val.rows.empty()) v = ValidationSet{val.rows, val.labels};
  auto model = train(train_set.rows, train_set.labels, v, cfg, features);
  model.feature_medians = feature_medians(train_set.rows);
  return model;
}

Metrics evaluate_model(const TreeEnsemble& model, const LabeledMatrix& data, double threshold) {
  std::vector<int> pred;
  pred.reserve(data.rows.size());
  for (const auto& r : data.rows) pred.push_back(model.predict_proba(r) >= threshold ? 1 : 0);
  return evaluate(data.labels, pred);
}

std::vector<AblationRow> ablation_table(const LabeledMatrix& train_set, const LabeledMatrix& val,
                                        const LabeledMatrix& test, std::span<const FeatureFamily> families,
                                        const TrainConfig& cfg) {
  if (families.empty()) throw Error(ErrorCode::InvalidArgument, "ablation needs at least one family");
  std::vector<AblationRow> out;
  for (const auto& fam : families) {
    const auto model = train_family(train_set, val, fam.features, cfg);
    out.push_back({fam.name, evaluate_model(model, test)});
  }
  const auto full = train_family(train_set, val, FeatureSet::all(), cfg);
  out.push_back({"Ensemble", evaluate_model(full, test)});
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const AblationRow> rows) {
  const std::vector<std::string> header = {"family", "accuracy", "precision", "recall", "f1",
                                           "tp",     "fp",       "tn",        "fn"};
  write_csv_row(out, header);
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    const std::vector<std::string> row = {r.family,
                                          format_number(m.accuracy),
                                          format_number(m.precision),
                                          format_number(m.recall),
                                          format_number(m.f1),
                                          std::to_string(m.tp),
                                          std::to_string(m.fp),
                                          std::to_string(m.tn),
                                          std::to_string(m.fn)};
    write_csv_row(out, row);
  }
}

}  // namespace notai
