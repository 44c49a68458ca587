#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "sgf/common/time.hpp"

namespace sgf {

enum class Label { present, absent, skip, invalid };

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view text);

// present/absent are votes; skip defers and invalid flags an unusable image.
constexpr bool is_vote(Label l) { return l == Label::present || l == Label::absent; }

struct AnnotationRecord {
  std::string annotation_id;
  std::string image_id;
  std::string annotator;
  Label label = Label::skip;
  std::optional<std::string> comment;
  Instant created_at{};
};

// Throws ValidationError when invalid lacks a comment or ids are empty.
void validate(const AnnotationRecord& r);

nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

}  // namespace sgf
