#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "notai/boostedtree.hpp"
#include "notai/curvature.hpp"
#include "notai/dataset_record.hpp"
#include "notai/features.hpp"
#include "notai/kernels.hpp"
#include "notai/lexicons.hpp"
#include "notai/neuralscore.hpp"

namespace notai {

struct Dataset {
  std::vector<DatasetRecord> records;
  std::vector<std::string> extra_columns;  // header order
  bool has_generator = false;
  bool has_topic = false;

  std::size_t size() const noexcept { return records.size(); }
};

struct ReadOptions {
  // Keep only rows whose column equals the value, e.g. {"attack", "none"}.
  std::vector<std::pair<std::string, std::string>> filters;
};

// Columns: text (required), label, generator|model, id, domain_topic|domain,
// the 17 feature names, anything else kept verbatim. Either label or
// generator must be present. Throws Error{MissingColumn} and
// Error{InvalidArgument} (with line numbers) for bad rows.
Dataset read_dataset(std::istream& in, const ReadOptions& opts = {});
Dataset read_dataset_file(const std::filesystem::path& path, const ReadOptions& opts = {});
void write_dataset(std::ostream& out, const Dataset& ds);

struct BalanceResult {
  Dataset dataset;
  bool insufficient_ai = false;
};

// Keeps every human row and draws the same number of AI rows, spread across
// generators (lexicographic order) by water-filling. Throws Error{SingleClass}.
BalanceResult balance(const Dataset& ds, std::uint64_t seed = 42);

// AI rows to take from each generator, in the order given.
std::vector<std::size_t> generator_quotas(std::size_t target, std::span<const std::size_t> available);

struct SplitSpec {
  double train = 0.85;
  double val = 0.05;
  double test = 0.10;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;  // ascending
};

// Label-stratified with largest-remainder rounding per class. Throws
// Error{TooSmall} under 20 rows.
SplitIndices split_indices(std::span<const Label> labels, const SplitSpec& spec);

struct SplitResult {
  Dataset train, val, test;
};
SplitResult split(const Dataset& ds, const SplitSpec& spec);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Positive class is ai; 0/0 counts as 0. Throws Error{EmptyDataset}.
Metrics evaluate(std::span<const std::pair<Label, Label>> truth_and_prediction);
Metrics evaluate(std::span<const int> truth, std::span<const int> predicted);

struct F1Matrix {
  std::vector<std::string> generators;  // rows
  std::vector<std::string> topics;      // columns
  std::vector<std::vector<std::optional<double>>> f1;
};

// Cell (g, t): AI rows of generator g in topic t plus the human rows of topic
// t. Cells without AI rows are absent. Throws Error{MissingColumn} and
// Error{DimensionMismatch}.
F1Matrix per_cell_f1(const Dataset& ds, std::span<const Label> predictions);
void write_f1_matrix_csv(std::ostream& out, const F1Matrix& m);

// --- features ---------------------------------------------------------------

struct FeatureSources {
  const Lexicons* lexicons = nullptr;
  const LogitSource* logits = nullptr;     // curvature is NaN without one
  const NeuralScorer* neural = nullptr;    // bert_ai_score is NaN without one
  bool recompute = false;                  // ignore precomputed columns
  kernels::Exec exec = kernels::Exec::Parallel;
};

// Precomputed columns win unless recompute is set. Values that cannot be
// computed are NaN.
std::vector<FeatureVector> build_features(const Dataset& ds, const FeatureSources& sources);

struct LabeledMatrix {
  std::vector<FeatureVector> rows;
  std::vector<int> labels;

  LabeledMatrix select(std::span<const std::size_t> indices) const;
};

LabeledMatrix labeled_matrix(const Dataset& ds, std::vector<FeatureVector> rows);

// --- ablation ---------------------------------------------------------------

struct FeatureFamily {
  std::string name;
  FeatureSet features;
};

// Throws Error{UnknownFeature}.
FeatureFamily make_family(std::string name, std::span<const std::string> feature_names);

// Stylometric only, ModernBERT only, Curvature only.
std::vector<FeatureFamily> default_families();

struct AblationRow {
  std::string family;
  Metrics metrics;
};

// One model per family plus "Ensemble" on all 17 features, all scored on the
// same test rows. `val` drives early stopping when non-empty.
std::vector<AblationRow> ablation_table(const LabeledMatrix& train, const LabeledMatrix& val,
                                        const LabeledMatrix& test, std::span<const FeatureFamily> families,
                                        const TrainConfig& cfg);

TreeEnsemble train_family(const LabeledMatrix& train, const LabeledMatrix& val, const FeatureSet& features,
                          const TrainConfig& cfg);
Metrics evaluate_model(const TreeEnsemble& model, const LabeledMatrix& data, double threshold = 0.5);

void write_metrics_csv(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace notai
