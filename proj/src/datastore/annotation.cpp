#include "sgf/datastore/annotation.hpp"

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"

namespace sgf {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::present: return "present";
    case Label::absent: return "absent";
    case Label::skip: return "skip";
    case Label::invalid: return "invalid";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "present") return Label::present;
  if (text == "absent") return Label::absent;
  if (text == "skip") return Label::skip;
  if (text == "invalid") return Label::invalid;
  return std::nullopt;
}

void validate(const AnnotationRecord& r) {
  if (r.image_id.empty()) throw ValidationError("annotation: empty image_id");
  if (r.annotator.empty()) throw ValidationError("annotation: empty annotator");
  if (r.label == Label::invalid && (!r.comment || r.comment->find_first_not_of(" \t\r\n") == std::string::npos))
    throw ValidationError("annotation: an invalid label requires a comment");
}

nlohmann::json to_json(const AnnotationRecord& r) {
  nlohmann::json j{{"annotation_id", r.annotation_id},
                   {"image_id", r.image_id},
                   {"annotator", r.annotator},
                   {"label", to_string(r.label)},
                   {"created_at", format_instant(r.created_at)}};
  j["comment"] = r.comment ? nlohmann::json(*r.comment) : nlohmann::json(nullptr);
  return j;
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  AnnotationRecord r;
  try {
    r.annotation_id = j.at("annotation_id").get<std::string>();
    r.image_id = j.at("image_id").get<std::string>();
    r.annotator = j.at("annotator").get<std::string>();
    const auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw FormatError("annotation: unknown label");
    r.label = *label;
    if (j.contains("comment") && j["comment"].is_string()) r.comment = j["comment"].get<std::string>();
    const auto stamp = parse_instant(j.at("created_at").get<std::string>());
    if (!stamp) throw FormatError("annotation: bad created_at");
    r.created_at = *stamp;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("annotation: ") + ex.what());
  }
  return r;
}

}  // namespace sgf
