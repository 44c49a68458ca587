#include "sgf/harness/model_spec.hpp"

#include <array>
#include <utility>

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"

namespace sgf {
namespace {

struct CatalogRow {
  BackboneId id;
  std::string_view name;
  BackboneInfo info;
};

// Frozen counts are the reference ImageNet networks minus their final
// classifier layer.
const std::array<CatalogRow, 11> kCatalog{{
    {BackboneId::resnet18, "resnet18", {512, 224, 11'176'512, 512, 512}},
    {BackboneId::resnet34, "resnet34", {512, 224, 21'284'672, 512, 512}},
    {BackboneId::resnet50, "resnet50", {2048, 224, 23'508'032, 512, 512}},
    {BackboneId::resnet101, "resnet101", {2048, 224, 42'500'160, 512, 512}},
    {BackboneId::resnet152, "resnet152", {2048, 224, 58'143'808, 512, 512}},
    {BackboneId::inception_v3, "inception_v3", {2048, 299, 25'112'264, 512, 256}},
    {BackboneId::densenet121, "densenet121", {1024, 224, 6'953'856, 512, 256}},
    {BackboneId::densenet169, "densenet169", {1664, 224, 12'484'480, 512, 256}},
    {BackboneId::densenet201, "densenet201", {1920, 224, 18'092'928, 512, 256}},
    {BackboneId::vit_l_32, "vit_l_32", {1024, 224, 305'510'400, 512, 256}},
    {BackboneId::texture_bank, "texture_bank", {32, 64, 1'216, 64, 32}},
}};

const CatalogRow& row(BackboneId id) {
  for (const auto& r : kCatalog)
    if (r.id == id) return r;
  throw ArgumentError("unknown backbone");
}

}  // namespace

std::string_view to_string(BackboneId id) { return row(id).name; }

BackboneId parse_backbone_id(std::string_view name) {
  for (const auto& r : kCatalog)
    if (r.name == name) return r.id;
  throw ArgumentError("unknown backbone: " + std::string(name));
}

const std::vector<BackboneId>& all_backbones() {
  static const std::vector<BackboneId> ids = [] {
    std::vector<BackboneId> v;
    for (const auto& r : kCatalog) v.push_back(r.id);
    return v;
  }();
  return ids;
}

const BackboneInfo& backbone_info(BackboneId id) { return row(id).info; }

void ModelSpec::validate() const {
  if (head_layer1 < 1 || head_layer2 < 1) throw ValidationError("head layer sizes must be positive");
  if (input_size < 1) throw ValidationError("input_size must be positive");
}

ModelSpec default_model_spec(BackboneId id) {
  const auto& info = backbone_info(id);
  ModelSpec s;
  s.backbone_id = id;
  s.head_layer1 = info.head_layer1;
  s.head_layer2 = info.head_layer2;
  s.input_size = info.input_size;
  return s;
}

std::size_t head_parameter_count(int in, int l1, int l2) {
  const auto a = static_cast<std::size_t>(in), b = static_cast<std::size_t>(l1),
             c = static_cast<std::size_t>(l2);
  return a * b + b + b * c + c + c + 1;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  enhancement.validate();
}

nlohmann::json to_json(const EnhancerSpec& s) {
  nlohmann::json j{{"kind", std::string(to_string(s.kind))},
                   {"expected_latency_s_per_image", s.expected_latency_s_per_image}};
  j["model_path"] = s.model_path ? nlohmann::json(s.model_path->string()) : nlohmann::json(nullptr);
  return j;
}

EnhancerSpec enhancer_spec_from_json(const nlohmann::json& j) {
  EnhancerSpec s;
  s.kind = parse_enhancer_kind(j.value("kind", std::string("identity")));
  if (j.contains("model_path") && !j["model_path"].is_null())
    s.model_path = j["model_path"].get<std::string>();
  s.expected_latency_s_per_image = j.value("expected_latency_s_per_image", 0.0);
  return s;
}

nlohmann::json to_json(const ModelSpec& s) {
  nlohmann::json j{{"backbone_id", std::string(to_string(s.backbone_id))},
                   {"head_layer1", s.head_layer1},
                   {"head_layer2", s.head_layer2},
                   {"input_size", s.input_size},
                   {"pretrained_source", s.pretrained_source}};
  j["weights_path"] = s.weights_path ? nlohmann::json(s.weights_path->string()) : nlohmann::json(nullptr);
  return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s = default_model_spec(parse_backbone_id(j.at("backbone_id").get<std::string>()));
  s.head_layer1 = j.value("head_layer1", s.head_layer1);
  s.head_layer2 = j.value("head_layer2", s.head_layer2);
  s.input_size = j.value("input_size", s.input_size);
  s.pretrained_source = j.value("pretrained_source", s.pretrained_source);
  if (j.contains("weights_path") && !j["weights_path"].is_null())
    s.weights_path = j["weights_path"].get<std::string>();
  s.validate();
  return s;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"early_stop_patience", c.early_stop_patience},
          {"seed", c.seed},
          {"optimizer", {{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
          {"loss", "binary_cross_entropy_with_logits"},
          {"enhancement", to_json(c.enhancement)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.seed = j.value("seed", c.seed);
  if (j.contains("enhancement")) c.enhancement = enhancer_spec_from_json(j["enhancement"]);
  c.validate();
  return c;
}

}  // namespace sgf
