#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/datastore/consensus.hpp"
#include "sgf/ingest/manifest.hpp"

namespace sgf {

enum class SplitRole { train, validation, test };

std::string_view to_string(SplitRole r);

// Transect roles for one experiment. When validation_transects is empty the
// validation split is a seeded random fraction of the training images.
struct ExperimentSpec {
  std::string id;
  std::string train_name;
  std::string test_name;  // empty: the experiment has no test split
  std::vector<std::string> train_transects;
  std::vector<std::string> test_transects;
  std::vector<std::string> validation_transects;
};

struct ExperimentPlan {
  std::string plan_id;
  std::vector<ExperimentSpec> experiments;
};

// Train LYT-5, LYT-10, LYT-12, LYT-14; test LYT-20.
ExperimentPlan initial_plan();
// Train every transect except LYT-9; test LYT-9.
ExperimentPlan final_plan();
// One fold per transect; the held-out transect is that fold's validation set.
ExperimentPlan leave_one_transect_out_plan(
    const std::vector<std::string>& transects = {"LYT-10", "LYT-12", "LYT-20"});
// "initial", "final" or "cross-val".
ExperimentPlan builtin_plan(std::string_view name);

nlohmann::json to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);

struct DatasetSplit {
  std::string name;
  SplitRole role = SplitRole::train;
  std::string plan_id;
  std::string experiment_id;
  std::vector<std::string> transect_ids;  // sorted
  std::vector<std::string> image_ids;     // manifest order
  std::vector<int> labels;                // consensus label per image, 1 = present
  double class_balance = 0.0;             // fraction labelled present
  std::uint64_t seed = 0;
};

struct CompiledExperiment {
  std::string id;
  DatasetSplit train;
  DatasetSplit validation;
  std::optional<DatasetSplit> test;

  std::vector<const DatasetSplit*> splits() const;
};

struct SplitOptions {
  double validation_fraction = 0.2;
};

// Builds every experiment of the plan from consensus-labelled manifest
// images. Throws ArgumentError when the plan names a transect that is not in
// the manifest or gives one transect two roles.
std::vector<CompiledExperiment> compile_splits(const std::vector<ManifestEntry>& manifest,
                                               const std::vector<ConsensusLabel>& consensus,
                                               const ExperimentPlan& plan, std::uint64_t seed,
                                               const SplitOptions& options = {});

// Throws ValidationError if train-role and test-role transects intersect, an
// image repeats within or across splits, or an image comes from an unlisted
// transect.
void verify_experiment(const CompiledExperiment& experiment,
                       const std::vector<ManifestEntry>& manifest);

nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j);
void write_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit read_split(const std::filesystem::path& path);

}  // namespace sgf
