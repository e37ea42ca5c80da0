#include <fstream>
#include <iterator>

#include "json.hpp"
#include "notai/boostedtree.hpp"
#include "notai/error.hpp"
#include "notai/hashing.hpp"

namespace notai {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kModelVersion = 1;
constexpr std::string_view kHashPrefix = "#sha256=";

ojson node_to_json(const Tree& tree, int index) {
  const auto& n = tree.nodes[static_cast<std::size_t>(index)];
  ojson j;
  if (n.is_leaf()) {
    j["leaf"] = n.weight;
    j["cover"] = n.cover;
    return j;
  }
  j["feature"] = std::string(kFeatureNames[static_cast<std::size_t>(n.feature)]);
  j["threshold"] = n.threshold;
  j["default_left"] = n.default_left;
  j["cover"] = n.cover;
  j["left"] = node_to_json(tree, n.left);
  j["right"] = node_to_json(tree, n.right);
  return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree, int depth) {
  if (depth > 64) throw Error(ErrorCode::CorruptModel, "tree nesting too deep");
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode n;
  n.cover = j.at("cover").get<double>();
  if (j.contains("leaf")) {
    n.weight = j.at("leaf").get<double>();
    tree.nodes[static_cast<std::size_t>(index)] = n;
    return index;
  }
  const auto name = j.at("feature").get<std::string>();
  const auto f = feature_from_name(name);
  if (!f) throw Error(ErrorCode::SchemaMismatch, "model splits on unknown feature '" + name + "'");
  n.feature = static_cast<int>(index_of(*f));
  n.threshold = j.at("threshold").get<double>();
  n.default_left = j.at("default_left").get<bool>();
  n.left = node_from_json(j.at("left"), tree, depth + 1);
  n.right = node_from_json(j.at("right"), tree, depth + 1);
  tree.nodes[static_cast<std::size_t>(index)] = n;
  return index;
}

ojson config_to_json(const TrainConfig& c) {
  ojson j;
  j["num_rounds"] = c.num_rounds;
  j["max_depth"] = c.max_depth;
  j["min_child_weight"] = c.min_child_weight;
  j["lambda"] = c.lambda;
  j["gamma"] = c.gamma;
  j["learning_rate"] = c.learning_rate;
  j["early_stopping_rounds"] = c.early_stopping_rounds;
  j["seed"] = c.seed;
  j["subsample"] = c.subsample;
  j["colsample"] = c.colsample;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.num_rounds = j.at("num_rounds").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.min_child_weight = j.at("min_child_weight").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.early_stopping_rounds = j.at("early_stopping_rounds").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.subsample = j.value("subsample", 1.0);
  c.colsample = j.value("colsample", 1.0);
  return c;
}

std::string model_json(const TreeEnsemble& model) {
  ojson j;
  j["format"] = "boosted-trees";
  j["version"] = kModelVersion;
  j["feature_names"] = ojson::array();
  for (auto name : kFeatureNames) j["feature_names"].push_back(std::string(name));
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["feature_medians"] = model.feature_medians;
  j["trees"] = ojson::array();
  for (const auto& t : model.trees) j["trees"].push_back(node_to_json(t, 0));
  ojson prov;
  prov["lexicon_hash"] = model.provenance.lexicon_hash;
  prov["backend_ids"] = model.provenance.backend_ids;
  prov["data_hash"] = model.provenance.data_hash;
  prov["train_config"] =
      model.provenance.train_config ? config_to_json(*model.provenance.train_config) : ojson(nullptr);
  j["provenance"] = std::move(prov);
  return j.dump(1) + "\n";
}

}  // namespace

std::string serialize_model(const TreeEnsemble& model) {
  std::string body = model_json(model);
  const std::string digest = sha256_hex(body);
  return body + std::string(kHashPrefix) + digest + "\n";
}

std::string model_hash(const TreeEnsemble& model) { return sha256_hex(model_json(model)); }

TreeEnsemble parse_model(const std::string& contents) {
  std::string_view view(contents);
  while (!view.empty() && (view.back() == '\n' || view.back() == '\r')) view.remove_suffix(1);
  const auto marker = view.rfind(std::string("\n") + std::string(kHashPrefix));
  if (marker == std::string_view::npos) {
    throw Error(ErrorCode::CorruptModel, "model file has no trailing content hash");
  }
  const std::string_view body = view.substr(0, marker + 1);
  const std::string_view digest = view.substr(marker + 1 + kHashPrefix.size());
  if (sha256_hex(body) != digest) {
    throw Error(ErrorCode::CorruptModel, "model content hash mismatch");
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptModel, std::string("model JSON unreadable: ") + e.what());
  }

  TreeEnsemble model;
  try {
    if (!j.contains("version") || j.at("version").get<int>() != kModelVersion) {
      throw Error(ErrorCode::VersionMismatch, "unsupported model version");
    }
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (names.size() != kFeatureCount) {
      throw Error(ErrorCode::SchemaMismatch, "model has " + std::to_string(names.size()) + " features");
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (names[i] != kFeatureNames[i]) {
        throw Error(ErrorCode::SchemaMismatch, "model feature '" + names[i] + "' does not match '" +
                                                   std::string(kFeatureNames[i]) + "'");
      }
    }
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    const auto med = j.at("feature_medians").get<std::vector<double>>();
    if (med.size() != kFeatureCount) throw Error(ErrorCode::SchemaMismatch, "bad feature_medians");
    std::copy(med.begin(), med.end(), model.feature_medians.begin());
    for (const auto& tj : j.at("trees")) {
      Tree t;
      node_from_json(tj, t, 0);
      model.trees.push_back(std::move(t));
    }
    const auto& prov = j.at("provenance");
    model.provenance.lexicon_hash = prov.value("lexicon_hash", "");
    model.provenance.backend_ids = prov.value("backend_ids", std::vector<std::string>{});
    model.provenance.data_hash = prov.value("data_hash", "");
    if (prov.contains("train_config") && !prov["train_config"].is_null()) {
      model.provenance.train_config = config_from_json(prov["train_config"]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptModel, std::string("model JSON malformed: ") + e.what());
  }
  model.validate();
  return model;
}

void save_model(const TreeEnsemble& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

TreeEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open model " + path.string());
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model(contents);
}

}  // namespace notai
