#include "sgf/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sgf/common/error.hpp"

namespace sgf {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'S', 'G', 'F', 'H', 'E', 'A', 'D', '\0'};

static_assert(std::endian::native == std::endian::little, "weights file assumes little-endian");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated weights file: " + path.string());
  return v;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingPrerequisiteError("missing checkpoint file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

void write_head_weights(const fs::path& path, int in, int l1, int l2, const Eigen::VectorXd& params) {
  if (static_cast<std::size_t>(params.size()) != Head::size(in, l1, l2))
    throw ArgumentError("parameter count does not match head dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kHeadWeightsVersion);
  put<std::int32_t>(out, in);
  put<std::int32_t>(out, l1);
  put<std::int32_t>(out, l2);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw IoError("cannot write " + path.string());
}

Eigen::VectorXd read_head_weights(const fs::path& path, int& in, int& l1, int& l2) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingPrerequisiteError("missing checkpoint file: " + path.string());
  char magic[sizeof kMagic];
  if (!f.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("not a head weights file: " + path.string());
  if (const auto v = get<std::uint32_t>(f, path); v != kHeadWeightsVersion)
    throw FormatError("unsupported head weights version " + std::to_string(v));
  in = get<std::int32_t>(f, path);
  l1 = get<std::int32_t>(f, path);
  l2 = get<std::int32_t>(f, path);
  const auto count = get<std::uint64_t>(f, path);
  if (in < 1 || l1 < 1 || l2 < 1 || count != Head::size(in, l1, l2))
    throw FormatError("inconsistent head dimensions in " + path.string());
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  if (!f.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(count * sizeof(double))))
    throw FormatError("truncated weights file: " + path.string());
  return params;
}

Checkpoint make_checkpoint(const Classifier& model, const TrainConfig& config,
                           std::string train_split_name, std::vector<std::string> train_transects,
                           int best_epoch) {
  Checkpoint c;
  c.model_spec = model.spec();
  c.feature_dim = model.head().in();
  c.head_weights = model.head().parameters();
  c.train_config = config;
  c.train_split_name = std::move(train_split_name);
  c.train_transects = std::move(train_transects);
  c.backbone_checksum = model.backbone().checksum();
  c.best_epoch = best_epoch;
  c.created_at = now_utc();
  return c;
}

void save_checkpoint(const Checkpoint& c, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json spec{{"model_spec", to_json(c.model_spec)},
                      {"feature_dim", c.feature_dim},
                      {"train_split_name", c.train_split_name},
                      {"train_transects", c.train_transects},
                      {"backbone_checksum", c.backbone_checksum},
                      {"best_epoch", c.best_epoch},
                      {"created_at", format_instant(c.created_at)}};
  write_json(dir / "spec.json", spec);
  write_json(dir / "train_config.json", to_json(c.train_config));
  write_head_weights(dir / "head_weights.bin", c.feature_dim, c.model_spec.head_layer1,
                     c.model_spec.head_layer2, c.head_weights);
  write_json(dir / "metrics.json",
             c.metrics_at_best ? metrics::to_json(*c.metrics_at_best) : nlohmann::json::object());
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingPrerequisiteError("checkpoint not found: " + dir.string());
  Checkpoint c;
  const auto spec = read_json(dir / "spec.json");
  try {
    c.model_spec = model_spec_from_json(spec.at("model_spec"));
    c.feature_dim = spec.at("feature_dim").get<int>();
    c.train_split_name = spec.value("train_split_name", std::string());
    c.train_transects = spec.value("train_transects", std::vector<std::string>{});
    c.backbone_checksum = spec.value("backbone_checksum", std::string());
    c.best_epoch = spec.value("best_epoch", 0);
    if (auto t = parse_instant(spec.value("created_at", std::string()))) c.created_at = *t;
    c.train_config = train_config_from_json(read_json(dir / "train_config.json"));
    const auto m = read_json(dir / "metrics.json");
    if (!m.empty()) c.metrics_at_best = metrics::eval_report_from_json(m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt checkpoint " + dir.string() + ": " + e.what());
  }
  int in = 0, l1 = 0, l2 = 0;
  c.head_weights = read_head_weights(dir / "head_weights.bin", in, l1, l2);
  if (in != c.feature_dim || l1 != c.model_spec.head_layer1 || l2 != c.model_spec.head_layer2)
    throw FormatError("head weights do not match spec.json in " + dir.string());
  return c;
}

Classifier restore_model(const Checkpoint& c, const fs::path& weights_dir) {
  auto backbone = load_backbone(c.model_spec, weights_dir);
  if (!c.backbone_checksum.empty() && backbone->checksum() != c.backbone_checksum)
    throw LoadError("backbone weights differ from the ones used for training");
  Head head(backbone->feature_dim(), c.model_spec.head_layer1, c.model_spec.head_layer2);
  if (head.parameter_count() != c.head_weights.size())
    throw LoadError("backbone feature width does not match the checkpoint");
  head.parameters() = c.head_weights;
  return Classifier(c.model_spec, std::move(backbone), std::move(head));
}

PredictResult predict(const Classifier& model, const TrainConfig& trained_with,
                      std::span<const PredictInput> inputs, const EnhancerSpec& enhancement) {
  PredictResult r;
  if (enhancement.enabled() != trained_with.enhancement.enabled())
    r.warnings.push_back(std::string("enhancement ") + (enhancement.enabled() ? "enabled" : "disabled") +
                         " but the checkpoint was trained with it " +
                         (trained_with.enhancement.enabled() ? "enabled" : "disabled"));
  if (inputs.empty()) return r;
  auto enhancer = enhancement.enabled() ? make_enhancer(enhancement) : nullptr;

  r.items.reserve(inputs.size());
  for (const auto& in : inputs) {
    PredictItem item{in.image_id, std::nullopt, {}};
    try {
      cv::Mat px = in.pixels;
      if (px.empty() && in.path) {
        px = cv::imread(in.path->string(), cv::IMREAD_COLOR);
        if (px.empty()) throw DecodeError("cannot decode " + in.path->string());
      }
      if (px.empty()) throw DecodeError("no pixels");
      if (enhancer) px = enhancer->apply(px);
      item.probability = model.probability(px);
    } catch (const std::exception& e) {
      item.error = e.what();
    }
    r.items.push_back(std::move(item));
  }
  return r;
}

PredictResult predict(const Classifier& model, const TrainConfig& trained_with,
                      std::span<const FrameRecord> frames, const EnhancerSpec& enhancement) {
  std::vector<PredictInput> inputs;
  inputs.reserve(frames.size());
  for (const auto& f : frames) inputs.push_back({f.image_id, f.pixels, std::nullopt});
  return predict(model, trained_with, inputs, enhancement);
}

}  // namespace sgf
