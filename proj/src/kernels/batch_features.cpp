#include <cmath>
#include <limits>

#include "notai/error.hpp"
#include "notai/kernels.hpp"
#include "notai/textstats.hpp"

namespace notai::kernels {

namespace {

bool extract_one(const std::string& text, const Lexicons& lex, FeatureVector& out) {
  try {
    out = extract_stylometrics(text, lex);
    return true;
  } catch (const Error&) {
    out.values().fill(std::numeric_limits<double>::quiet_NaN());
    return false;
  }
}

}  // namespace

std::vector<FeatureVector> batch_stylometrics(std::span<const std::string> texts, const Lexicons& lex,
                                              Exec exec, std::vector<std::size_t>* failed) {
  std::vector<FeatureVector> out(texts.size());
  std::vector<char> ok(texts.size(), 1);
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      ok[u] = extract_one(texts[u], lex, out[u]);
    }
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      ok[u] = extract_one(texts[u], lex, out[u]);
    }
  }
  if (failed) {
    for (std::size_t i = 0; i < ok.size(); ++i) {
      if (!ok[i]) failed->push_back(i);
    }
  }
  return out;
}

}  // namespace notai::kernels
