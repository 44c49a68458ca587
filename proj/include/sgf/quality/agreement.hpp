#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "sgf/datastore/annotation.hpp"

namespace sgf {

// Cohen's kappa of two aligned binary label sequences. nullopt when chance
// agreement is 1 (both raters used one and the same class). Throws
// ArgumentError on empty or unequal inputs.
std::optional<double> cohens_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

enum class DisagreementKind { mistake, ambiguous };

struct DisagreementTag {
  std::string image_id;
  DisagreementKind kind = DisagreementKind::ambiguous;
  std::string judged_by;
};

// CSV image_id,kind,judged_by
std::vector<DisagreementTag> read_tags_csv(std::istream& in);
std::vector<DisagreementTag> read_tags_csv(const std::filesystem::path& path);

struct AgreementReport {
  std::vector<std::string> annotators;  // sorted; indexes the matrices
  Eigen::MatrixXd pairwise_kappa;       // NaN where undefined
  Eigen::MatrixXi pairwise_common_count;
  // Mean over multiply-annotated images of each image's agreeing-pair share.
  std::optional<double> mean_agreement_rate;
  // Agreeing pairs over all annotation pairs, pooled across images.
  std::optional<double> pooled_agreement_rate;
  std::map<std::string, double> per_user_disagreement;
  std::map<std::string, double> per_user_mistake_rate;
  // Number of votes on an image -> share of such images with full agreement.
  std::map<std::size_t, double> agreement_by_count;
  std::map<std::size_t, std::size_t> images_by_count;
  std::size_t mistake_tags = 0;
  std::size_t ambiguous_tags = 0;
};

// Votes are present/absent labels; an annotator's later vote on the same
// image replaces the earlier one. A mistake tag is charged to the voters who
// disagree with the image's majority, or to every voter on a tie.
AgreementReport agreement_report(const std::vector<AnnotationRecord>& annotations,
                                 const std::vector<DisagreementTag>& tags);

nlohmann::json to_json(const AgreementReport& report);

}  // namespace sgf
