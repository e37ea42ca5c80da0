#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "notai/csv.hpp"
#include "notai/datasetops.hpp"
#include "notai/error.hpp"
#include "support.hpp"

using namespace notai;
using namespace notai::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

Dataset parse(const std::string& csv) {
  std::istringstream in(csv);
  return read_dataset(in);
}

Dataset with_generators(std::size_t humans, const std::map<std::string, std::size_t>& gens) {
  Dataset ds;
  ds.has_generator = true;
  for (std::size_t i = 0; i < humans; ++i) {
    DatasetRecord r;
    r.id = "h" + std::to_string(i);
    r.text = "human text";
    ds.records.push_back(r);
  }
  for (const auto& [g, n] : gens) {
    for (std::size_t i = 0; i < n; ++i) {
      DatasetRecord r;
      r.id = g + std::to_string(i);
      r.text = "ai text";
      r.label = Label::Ai;
      r.generator = g;
      ds.records.push_back(r);
    }
  }
  return ds;
}

std::map<std::string, std::size_t> generator_counts(const Dataset& ds) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : ds.records) ++out[r.generator];
  return out;
}

}  // namespace

TEST_CASE("csv reader") {
  std::istringstream in("\xEF\xBB\xBFid,text\r\n1,\"a, \"\"quoted\"\"\nline\"\r\n2,plain\n");
  CsvReader r(in);
  std::vector<std::string> row;
  REQUIRE(r.next(row));
  CHECK(row == std::vector<std::string>{"id", "text"});
  REQUIRE(r.next(row));
  CHECK(row[1] == "a, \"quoted\"\nline");
  REQUIRE(r.next(row));
  CHECK(row[1] == "plain");
  CHECK_FALSE(r.next(row));

  std::istringstream bad("a,\"open\n");
  CsvReader rb(bad);
  CHECK(code_of([&] { rb.next(row); }) == ErrorCode::InvalidArgument);
  CHECK(csv_escape("x,y") == "\"x,y\"");
  CHECK(csv_escape("plain") == "plain");
}

TEST_CASE("label parsing") {
  CHECK(parse_label(" AI ") == Label::Ai);
  CHECK(parse_label("1") == Label::Ai);
  CHECK(parse_label("Human") == Label::Human);
  CHECK(parse_label("0") == Label::Human);
  CHECK(code_of([] { parse_label("maybe"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("reading datasets") {
  const auto ds = parse(
      "id,text,label,model,domain,curvature,notes\n"
      "a,Hello there.,human,human,news,0.5,x\n"
      "b,Generated words.,ai,gpt,news,,y\n");
  REQUIRE(ds.size() == 2);
  CHECK(ds.has_generator);
  CHECK(ds.has_topic);
  CHECK(ds.records[1].generator == "gpt");
  CHECK(ds.records[0].features[index_of(Feature::curvature)] == 0.5);
  CHECK_FALSE(ds.records[1].features[index_of(Feature::curvature)].has_value());
  CHECK(*ds.records[0].extra_value("notes") == "x");

  const auto no_gen = parse("text,label\nsome text,ai\nother text,human\n");
  CHECK(no_gen.records[0].generator == "ai");
  CHECK(no_gen.records[1].generator == "human");

  const auto gen_only = parse("text,generator\nsome text,gpt\nother text,human\n");
  CHECK(gen_only.records[0].label == Label::Ai);

  CHECK(code_of([] { parse("id,label\n1,ai\n"); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { parse("text\nhello\n"); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { parse("text,label,generator\nhello,human,gpt\n"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse("text,label\n,ai\n"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse("text,label\nhello,sometimes\n"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("write then read preserves records") {
  const auto ds = parse(
      "id,text,label,generator,domain_topic,stopword_ratio,extra\n"
      "1,\"Comma, inside.\",ai,g1,t1,0.1,e1\n"
      "2,Plain text.,human,human,t2,0.30000000000000004,e2\n");
  std::ostringstream out;
  write_dataset(out, ds);
  const auto back = parse(out.str());
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.records[i].id == ds.records[i].id);
    CHECK(back.records[i].text == ds.records[i].text);
    CHECK(back.records[i].label == ds.records[i].label);
    CHECK(back.records[i].generator == ds.records[i].generator);
    CHECK(back.records[i].domain_topic == ds.records[i].domain_topic);
    CHECK(back.records[i].features == ds.records[i].features);
    CHECK(back.records[i].extra == ds.records[i].extra);
  }
}

TEST_CASE("generator quotas") {
  CHECK(generator_quotas(100, std::vector<std::size_t>{500, 300}) == std::vector<std::size_t>{50, 50});
  CHECK(generator_quotas(100, std::vector<std::size_t>{500, 30}) == std::vector<std::size_t>{70, 30});
  CHECK(generator_quotas(10, std::vector<std::size_t>{9, 9, 9}) == std::vector<std::size_t>{4, 3, 3});
  CHECK(generator_quotas(100, std::vector<std::size_t>{20, 30}) == std::vector<std::size_t>{20, 30});
}

TEST_CASE("balancing") {
  SUBCASE("equal allocation") {
    const auto r = balance(with_generators(100, {{"A", 500}, {"B", 300}}));
    const auto c = generator_counts(r.dataset);
    CHECK(c.at("human") == 100);
    CHECK(c.at("A") == 50);
    CHECK(c.at("B") == 50);
    CHECK_FALSE(r.insufficient_ai);
  }
  SUBCASE("shortfall redistribution") {
    const auto c = generator_counts(balance(with_generators(100, {{"A", 500}, {"B", 30}})).dataset);
    CHECK(c.at("A") == 70);
    CHECK(c.at("B") == 30);
  }
  SUBCASE("insufficient ai keeps every ai row") {
    const auto r = balance(with_generators(100, {{"A", 20}}));
    CHECK(r.insufficient_ai);
    CHECK(r.dataset.size() == 120);
  }
  SUBCASE("idempotent and seed dependent") {
    const auto ds = with_generators(50, {{"A", 200}, {"B", 90}, {"C", 10}});
    const auto once = balance(ds, 42).dataset;
    const auto twice = balance(once, 42).dataset;
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once.records[i].id == twice.records[i].id);
    const auto other = balance(ds, 43).dataset;
    bool differs = false;
    for (std::size_t i = 0; i < once.size(); ++i) differs = differs || once.records[i].id != other.records[i].id;
    CHECK(differs);
  }
  SUBCASE("single class") {
    CHECK(code_of([] { balance(with_generators(10, {})); }) == ErrorCode::SingleClass);
  }
}

TEST_CASE("stratified split") {
  SplitMix64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + static_cast<std::size_t>(rng.bounded(500));
    std::vector<Label> labels(n);
    for (auto& l : labels) l = rng.uniform() < 0.3 ? Label::Ai : Label::Human;
    SplitSpec spec;
    spec.seed = rng.next();
    const auto s = split_indices(labels, spec);
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      CHECK(std::is_sorted(part->begin(), part->end()));
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    // Each class lands within one row of its exact share.
    for (Label cls : {Label::Ai, Label::Human}) {
      const auto total = static_cast<double>(std::count(labels.begin(), labels.end(), cls));
      const auto in = [&](const std::vector<std::size_t>& part) {
        return static_cast<double>(std::count_if(part.begin(), part.end(), [&](std::size_t i) { return labels[i] == cls; }));
      };
      CHECK(std::abs(in(s.train) - 0.85 * total) < 1.0);
      CHECK(std::abs(in(s.val) - 0.05 * total) < 1.0);
      CHECK(std::abs(in(s.test) - 0.10 * total) < 1.0);
    }
  }
  std::vector<Label> few(19, Label::Ai);
  CHECK(code_of([&] { split_indices(few, SplitSpec{}); }) == ErrorCode::TooSmall);
  SplitSpec bad;
  bad.train = 0.9;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("metrics") {
  const std::vector<int> truth = {1, 1, 1, 0, 0, 0, 0, 1};
  const std::vector<int> pred = {1, 1, 0, 0, 0, 1, 0, 1};
  const auto m = evaluate(truth, pred);
  CHECK(m.tp == 3);
  CHECK(m.fn == 1);
  CHECK(m.fp == 1);
  CHECK(m.tn == 3);
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.75));
  CHECK(m.f1 == doctest::Approx(0.75));
  const auto none = evaluate(std::vector<int>{0, 0}, std::vector<int>{0, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(none.accuracy == 1.0);
  CHECK(code_of([] { evaluate(std::vector<int>{}, std::vector<int>{}); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("per-cell f1") {
  const auto ds = parse(
      "text,label,generator,domain_topic\n"
      "a,human,human,news\nb,human,human,news\nc,ai,g1,news\nd,ai,g1,news\ne,ai,g2,books\nf,human,human,books\n");
  const std::vector<Label> pred = {Label::Human, Label::Ai, Label::Ai, Label::Ai, Label::Human, Label::Human};
  const auto m = per_cell_f1(ds, pred);
  CHECK(m.generators == std::vector<std::string>{"g1", "g2"});
  CHECK(m.topics == std::vector<std::string>{"books", "news"});
  // g1/news: tp 2, fp 1 -> f1 0.8.
  CHECK(*m.f1[0][1] == doctest::Approx(0.8));
  CHECK_FALSE(m.f1[0][0].has_value());
  CHECK(*m.f1[1][0] == 0.0);
  CHECK_FALSE(m.f1[1][1].has_value());
  CHECK(code_of([&] { per_cell_f1(ds, std::span<const Label>(pred).first(3)); }) == ErrorCode::DimensionMismatch);
  const auto no_topic = parse("text,label\na,human\nb,ai\n");
  CHECK(code_of([&] { per_cell_f1(no_topic, std::span<const Label>(pred).first(2)); }) == ErrorCode::MissingColumn);
}

TEST_CASE("families") {
  const std::vector<std::string> names = {"curvature", "comma_count"};
  const auto f = make_family("mix", names);
  CHECK(f.features.size() == 2);
  const std::vector<std::string> bad = {"curvature", "vibes"};
  CHECK(code_of([&] { make_family("bad", bad); }) == ErrorCode::UnknownFeature);
  const auto defaults = default_families();
  REQUIRE(defaults.size() == 3);
  CHECK(defaults[0].features.size() == 15);
  CHECK(defaults[1].features.size() == 1);
  CHECK(defaults[2].features.size() == 1);
}

TEST_CASE("features and ablation on a small corpus") {
  const auto corpus = synthetic_corpus(400, 62);
  const auto lex = Lexicons::load_default();
  FeatureSources src;
  src.lexicons = &lex;
  src.logits = corpus.lm.get();
  const auto rows = build_features(corpus.dataset, src);
  REQUIRE(rows.size() == 400);
  for (const auto& x : rows) {
    CHECK(std::isfinite(x[Feature::curvature]));
    CHECK(x[Feature::bert_ai_score] >= 0.0);
  }
  FeatureSources no_lm = src;
  no_lm.logits = nullptr;
  CHECK(std::isnan(build_features(corpus.dataset, no_lm)[0][Feature::curvature]));

  const auto m = labeled_matrix(corpus.dataset, rows);
  std::vector<std::size_t> train_idx(300), test_idx(100);
  std::iota(train_idx.begin(), train_idx.end(), 0);
  std::iota(test_idx.begin(), test_idx.end(), 300);
  const auto train_m = m.select(train_idx);
  const auto test_m = m.select(test_idx);
  TrainConfig cfg;
  cfg.num_rounds = 40;
  const auto families = default_families();
  const auto table = ablation_table(train_m, LabeledMatrix{}, test_m, families, cfg);
  REQUIRE(table.size() == 4);
  CHECK(table[3].family == "Ensemble");

  // A one-family table equals training and scoring that family directly.
  const auto single = ablation_table(train_m, LabeledMatrix{}, test_m, std::span(families).first(1), cfg);
  const auto direct = evaluate_model(train_family(train_m, LabeledMatrix{}, families[0].features, cfg), test_m);
  CHECK(single[0].metrics.f1 == direct.f1);
  CHECK(single[0].metrics.tp == direct.tp);

  std::ostringstream out;
  write_metrics_csv(out, table);
  CHECK(out.str().rfind("family,accuracy,precision,recall,f1,tp,fp,tn,fn\n", 0) == 0);
}
