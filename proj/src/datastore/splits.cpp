#include "sgf/datastore/splits.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"

namespace sgf {

using nlohmann::json;

std::string_view to_string(SplitRole r) {
  switch (r) {
    case SplitRole::train: return "train";
    case SplitRole::validation: return "validation";
    case SplitRole::test: return "test";
  }
  return "?";
}

ExperimentPlan initial_plan() {
  return {"initial",
          {{"initial", "initial_train", "initial_test", {"LYT-5", "LYT-10", "LYT-12", "LYT-14"},
            {"LYT-20"}, {}}}};
}

ExperimentPlan final_plan() {
  return {"final",
          {{"final", "final_train", "final_test",
            {"LYT-5", "LYT-10", "LYT-12", "LYT-14", "LYT-20"}, {"LYT-9"}, {}}}};
}

ExperimentPlan leave_one_transect_out_plan(const std::vector<std::string>& transects) {
  if (transects.size() < 2) throw ArgumentError("leave-one-transect-out needs >= 2 transects");
  ExperimentPlan plan{"cross-val", {}};
  for (std::size_t k = 0; k < transects.size(); ++k) {
    ExperimentSpec e;
    e.id = "fold" + std::to_string(k + 1);
    e.train_name = "cross_val_fold(" + std::to_string(k + 1) + ")";
    for (std::size_t i = 0; i < transects.size(); ++i)
      if (i != k) e.train_transects.push_back(transects[i]);
    e.validation_transects = {transects[k]};
    plan.experiments.push_back(std::move(e));
  }
  return plan;
}

ExperimentPlan builtin_plan(std::string_view name) {
  if (name == "initial") return initial_plan();
  if (name == "final") return final_plan();
  if (name == "cross-val" || name == "cross_val") return leave_one_transect_out_plan();
  throw ArgumentError("unknown plan '" + std::string(name) + "'");
}

json to_json(const ExperimentPlan& plan) {
  json exps = json::array();
  for (const auto& e : plan.experiments)
    exps.push_back({{"id", e.id},
                    {"train_name", e.train_name},
                    {"test_name", e.test_name},
                    {"train_transects", e.train_transects},
                    {"test_transects", e.test_transects},
                    {"validation_transects", e.validation_transects}});
  return {{"plan_id", plan.plan_id}, {"experiments", exps}};
}

ExperimentPlan plan_from_json(const json& j) {
  try {
    ExperimentPlan p;
    p.plan_id = j.at("plan_id").get<std::string>();
    for (const auto& e : j.at("experiments")) {
      ExperimentSpec s;
      s.id = e.at("id").get<std::string>();
      s.train_name = e.value("train_name", s.id + "_train");
      s.test_name = e.value("test_name", "");
      s.train_transects = e.at("train_transects").get<std::vector<std::string>>();
      s.test_transects = e.value("test_transects", std::vector<std::string>{});
      s.validation_transects = e.value("validation_transects", std::vector<std::string>{});
      p.experiments.push_back(std::move(s));
    }
    return p;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("experiment plan: ") + ex.what());
  }
}

std::vector<const DatasetSplit*> CompiledExperiment::splits() const {
  std::vector<const DatasetSplit*> out{&train, &validation};
  if (test) out.push_back(&*test);
  return out;
}

namespace {

struct LabelledImage {
  const ManifestEntry* entry;
  bool present;
};

DatasetSplit make_split(std::string name, SplitRole role, const ExperimentPlan& plan,
                        const ExperimentSpec& e, std::vector<std::string> transects,
                        const std::vector<LabelledImage>& images, std::uint64_t seed) {
  DatasetSplit s;
  s.name = std::move(name);
  s.role = role;
  s.plan_id = plan.plan_id;
  s.experiment_id = e.id;
  std::sort(transects.begin(), transects.end());
  s.transect_ids = std::move(transects);
  s.seed = seed;
  std::size_t present = 0;
  for (const auto& im : images) {
    s.image_ids.push_back(im.entry->image_id);
    s.labels.push_back(im.present ? 1 : 0);
    present += im.present;
  }
  s.class_balance = images.empty() ? 0.0 : double(present) / double(images.size());
  return s;
}

}  // namespace

std::vector<CompiledExperiment> compile_splits(const std::vector<ManifestEntry>& manifest,
                                               const std::vector<ConsensusLabel>& consensus,
                                               const ExperimentPlan& plan, std::uint64_t seed,
                                               const SplitOptions& options) {
  if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0))
    throw ArgumentError("validation_fraction must be in [0, 1)");

  std::set<std::string> known;
  for (const auto& m : manifest) known.insert(m.transect_id);

  std::unordered_map<std::string, bool> label_of;
  for (const auto& c : consensus) label_of[c.image_id] = c.label == Label::present;

  // Labelled images of the given transects, manifest order, each image once.
  auto gather = [&](const std::vector<std::string>& transects) {
    const std::unordered_set<std::string> wanted(transects.begin(), transects.end());
    std::unordered_set<std::string> ids;
    std::vector<LabelledImage> out;
    for (const auto& m : manifest) {
      if (!wanted.contains(m.transect_id)) continue;
      auto it = label_of.find(m.image_id);
      if (it != label_of.end() && ids.insert(m.image_id).second) out.push_back({&m, it->second});
    }
    return out;
  };

  std::vector<CompiledExperiment> out;
  for (std::size_t ei = 0; ei < plan.experiments.size(); ++ei) {
    const auto& e = plan.experiments[ei];
    std::set<std::string> roles;
    for (const auto* group : {&e.train_transects, &e.test_transects, &e.validation_transects})
      for (const auto& t : *group) {
        if (!known.contains(t))
          throw ArgumentError("plan '" + plan.plan_id + "' references unknown transect " + t);
        if (!roles.insert(t).second)
          throw ArgumentError("plan '" + plan.plan_id + "' gives transect " + t +
                              " more than one role in " + e.id);
      }
    if (e.train_transects.empty()) throw ArgumentError("experiment " + e.id + " has no training transects");

    CompiledExperiment ce;
    ce.id = e.id;
    auto pool = gather(e.train_transects);
    std::vector<LabelledImage> val;
    if (!e.validation_transects.empty()) {
      val = gather(e.validation_transects);
    } else {
      const auto n_val =
          static_cast<std::size_t>(std::llround(options.validation_fraction * double(pool.size())));
      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(seed + ei);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<bool> is_val(pool.size(), false);
      for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
      std::vector<LabelledImage> train;
      for (std::size_t i = 0; i < pool.size(); ++i) (is_val[i] ? val : train).push_back(pool[i]);
      pool = std::move(train);
    }
    ce.train = make_split(e.train_name, SplitRole::train, plan, e, e.train_transects, pool, seed);
    ce.validation = make_split(
        "validation", SplitRole::validation, plan, e,
        e.validation_transects.empty() ? e.train_transects : e.validation_transects, val, seed);
    if (!e.test_transects.empty())
      ce.test = make_split(e.test_name.empty() ? e.id + "_test" : e.test_name, SplitRole::test, plan,
                           e, e.test_transects, gather(e.test_transects), seed);
    verify_experiment(ce, manifest);
    out.push_back(std::move(ce));
  }
  return out;
}

void verify_experiment(const CompiledExperiment& ce, const std::vector<ManifestEntry>& manifest) {
  std::unordered_map<std::string, std::string> transect_of;
  for (const auto& m : manifest) transect_of.emplace(m.image_id, m.transect_id);

  if (ce.test) {
    for (const auto& t : ce.train.transect_ids)
      if (std::binary_search(ce.test->transect_ids.begin(), ce.test->transect_ids.end(), t))
        throw ValidationError("experiment " + ce.id + ": transect " + t + " in train and test");
    for (const auto& t : ce.validation.transect_ids)
      if (std::binary_search(ce.test->transect_ids.begin(), ce.test->transect_ids.end(), t))
        throw ValidationError("experiment " + ce.id + ": transect " + t + " in validation and test");
  }
  std::unordered_set<std::string> used;
  for (const auto* s : ce.splits()) {
    for (const auto& id : s->image_ids) {
      if (!used.insert(id).second)
        throw ValidationError("experiment " + ce.id + ": image " + id + " appears twice");
      auto it = transect_of.find(id);
      if (it == transect_of.end() ||
          !std::binary_search(s->transect_ids.begin(), s->transect_ids.end(), it->second))
        throw ValidationError("split " + s->name + ": image " + id + " outside listed transects");
    }
  }
}

json to_json(const DatasetSplit& s) {
  return {{"name", s.name},
          {"role", to_string(s.role)},
          {"plan_id", s.plan_id},
          {"experiment_id", s.experiment_id},
          {"transect_ids", s.transect_ids},
          {"image_ids", s.image_ids},
          {"labels", s.labels},
          {"class_balance", s.class_balance},
          {"seed", s.seed}};
}

DatasetSplit split_from_json(const json& j) {
  try {
    DatasetSplit s;
    s.name = j.at("name").get<std::string>();
    const auto role = j.value("role", "train");
    s.role = role == "test" ? SplitRole::test
             : role == "validation" ? SplitRole::validation
                                    : SplitRole::train;
    s.plan_id = j.at("plan_id").get<std::string>();
    s.experiment_id = j.value("experiment_id", "");
    s.transect_ids = j.at("transect_ids").get<std::vector<std::string>>();
    std::sort(s.transect_ids.begin(), s.transect_ids.end());
    s.image_ids = j.at("image_ids").get<std::vector<std::string>>();
    s.labels = j.value("labels", std::vector<int>{});
    if (!s.labels.empty() && s.labels.size() != s.image_ids.size())
      throw FormatError("split file: labels and image_ids differ in length");
    s.class_balance = j.at("class_balance").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("split file: ") + ex.what());
  }
}

void write_split(const std::filesystem::path& path, const DatasetSplit& split) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split: " + path.string());
  out << to_json(split).dump(2) << '\n';
}

DatasetSplit read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingPrerequisiteError("split file not found: " + path.string() + " (run `sgf split`)");
  try {
    return split_from_json(json::parse(in));
  } catch (const json::parse_error& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
}

}  // namespace sgf
