#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "notai/features.hpp"

namespace notai {

enum class Label { Human = 0, Ai = 1 };

std::string_view label_name(Label l) noexcept;
// Accepts human/ai (any case) and 0/1. Throws Error{InvalidArgument}.
Label parse_label(std::string_view s);

struct DatasetRecord {
  std::string id;
  std::string text;
  Label label = Label::Human;
  std::string generator = "human";
  std::string domain_topic;
  // Precomputed feature columns, when the file carries them.
  std::array<std::optional<double>, kFeatureCount> features{};
  // Columns not in the schema, kept so files round-trip.
  std::vector<std::pair<std::string, std::string>> extra;

  bool has_all_features() const noexcept;
  const std::string* extra_value(std::string_view column) const noexcept;
};

}  // namespace notai
