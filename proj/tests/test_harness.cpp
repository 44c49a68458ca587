#include <doctest.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sgf/common/error.hpp"
#include "sgf/harness/checkpoint.hpp"
#include "sgf/harness/model.hpp"
#include "sgf/harness/trainer.hpp"
#include "sgf/metrics/metrics.hpp"
#include "support/synthetic.hpp"

using namespace sgf;

namespace {

std::vector<LabelledImage> texture_set(int n, std::uint64_t seed0) {
  std::vector<LabelledImage> out;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    out.push_back({"img" + std::to_string(seed0 + i), testing::texture_image(label, seed0 + i), label});
  }
  return out;
}

ModelSpec texture_spec() { return default_model_spec(BackboneId::texture_bank); }

// Linearly separable features with a margin.
FeatureSet blobs(int n, int dim, std::uint64_t seed, bool flip = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  FeatureSet s;
  s.features.resize(dim, n);
  s.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    for (int d = 0; d < dim; ++d) s.features(d, i) = (y ? 1.0 : -1.0) * (d % 2 ? 1.0 : 0.5) + g(rng);
    s.labels(i) = flip ? 1 - y : y;
    s.image_ids.push_back("b" + std::to_string(i));
  }
  return s;
}

// Head over the texture backbone's 32 features.
constexpr int kDim = 32;
Classifier small_model(int l1, int l2, std::uint64_t seed) {
  Head head(kDim, l1, l2);
  head.initialize(seed);
  auto spec = texture_spec();
  spec.head_layer1 = l1;
  spec.head_layer2 = l2;
  return Classifier(spec, std::make_shared<TextureBankBackbone>(), head);
}

}  // namespace

TEST_CASE("catalog defaults follow the published head widths and training settings") {
  for (auto id : all_backbones()) {
    const auto spec = default_model_spec(id);
    const auto name = std::string(to_string(id));
    CHECK(parse_backbone_id(name) == id);
    if (name.rfind("resnet", 0) == 0) {
      CHECK(spec.head_layer1 == 512);
      CHECK(spec.head_layer2 == 512);
    } else if (id != BackboneId::texture_bank) {
      CHECK(spec.head_layer1 == 512);
      CHECK(spec.head_layer2 == 256);
    }
    CHECK(spec.input_size == (id == BackboneId::inception_v3 ? 299 : id == BackboneId::texture_bank ? 64 : 224));
  }
  CHECK_THROWS_AS(parse_backbone_id("alexnet"), ArgumentError);
  const TrainConfig c;
  CHECK(c.learning_rate == 4.7e-5);
  CHECK(c.max_epochs == 33);
  CHECK(c.batch_size == 22);
  CHECK(c.early_stop_patience == 5);
}

TEST_CASE("frozen parameter counts agree with the published figures") {
  // Published: ResNet 11.4M, InceptionNetV3 25.1M, DenseNet 18.1M, ViT 306M.
  const auto near = [](std::size_t got, double published) {
    return std::abs(double(got) - published) / published < 0.025;
  };
  CHECK(near(backbone_info(BackboneId::resnet18).frozen_params, 11.4e6));
  CHECK(near(backbone_info(BackboneId::inception_v3).frozen_params, 25.1e6));
  CHECK(near(backbone_info(BackboneId::densenet201).frozen_params, 18.1e6));
  CHECK(near(backbone_info(BackboneId::vit_l_32).frozen_params, 306e6));
}

TEST_CASE("head parameter count and trainable << frozen") {
  // (in*l1 + l1) + (l1*l2 + l2) + (l2 + 1), counted layer by layer.
  const auto oracle = [](std::size_t in, std::size_t l1, std::size_t l2) {
    return (in + 1) * l1 + (l1 + 1) * l2 + (l2 + 1);
  };
  for (auto id : all_backbones()) {
    const auto& info = backbone_info(id);
    const auto n = head_parameter_count(info.feature_dim, info.head_layer1, info.head_layer2);
    CHECK(n == oracle(info.feature_dim, info.head_layer1, info.head_layer2));
    CHECK(Head(info.feature_dim, info.head_layer1, info.head_layer2).parameter_count() == Eigen::Index(n));
    if (id != BackboneId::texture_bank) CHECK(n * 10 < info.frozen_params);
  }
}

TEST_CASE("seeded head initialization is reproducible") {
  Head a(32, 16, 8), b(32, 16, 8), c(32, 16, 8);
  a.initialize(7);
  b.initialize(7);
  c.initialize(8);
  CHECK(a.parameters() == b.parameters());
  CHECK(a.parameters() != c.parameters());
  CHECK(a.parameters().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  CHECK(build_model(texture_spec(), 3, "/nonexistent").head().parameters() ==
        build_model(texture_spec(), 3, "/nonexistent").head().parameters());
}

TEST_CASE("analytic head gradient matches central differences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Head head(6, 5, 4);
    head.initialize(100 + trial);
    Eigen::MatrixXd X(6, 7);
    Eigen::VectorXd y(7);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = double(i % 2);
    Eigen::VectorXd grad;
    head.loss_and_gradient(X, y, &grad);
    Eigen::VectorXd numeric(grad.size());
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      const double keep = head.parameters()(k);
      head.parameters()(k) = keep + h;
      const double up = head.loss_and_gradient(X, y, nullptr);
      head.parameters()(k) = keep - h;
      const double down = head.loss_and_gradient(X, y, nullptr);
      head.parameters()(k) = keep;
      numeric(k) = (up - down) / (2 * h);
    }
    const double rel = (grad - numeric).norm() / std::max(1e-12, grad.norm() + numeric.norm());
    CHECK(rel < 1e-3);
    for (Eigen::Index k = 0; k < grad.size(); ++k)
      CHECK(std::abs(grad(k) - numeric(k)) <= 1e-3 * std::max(1e-4, std::abs(numeric(k))) + 1e-8);
  }
}

TEST_CASE("binarize") {
  const std::vector<double> a{0.2, 0.8}, at{0.5, 0.5}, edge{0.49999, 0.5};
  CHECK(binarize(a) == std::vector<int>{0, 1});
  CHECK(binarize(at) == std::vector<int>{1, 1});
  CHECK(binarize(edge) == std::vector<int>{0, 1});
  CHECK_THROWS_AS(binarize(a, 0.0), ArgumentError);
  CHECK_THROWS_AS(binarize(a, 1.0), ArgumentError);
}

TEST_CASE("training runs every epoch while validation loss keeps improving") {
  const auto tr = blobs(60, kDim, 1), va = blobs(20, kDim, 2);
  auto model = small_model(6, 4, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e-5;
  std::stringstream log;
  const auto r = train(model, tr, va, cfg, &log);
  REQUIRE(r.history.size() == 33);
  for (std::size_t i = 1; i < r.history.size(); ++i) REQUIRE(r.history[i].val_loss < r.history[i - 1].val_loss);
  CHECK_FALSE(r.early_stopped);
  CHECK(r.best_epoch == 33);
  // One JSON line per epoch with the documented keys.
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch").get<int>() == ++lines);
    CHECK(j.contains("train_loss"));
    CHECK(j.contains("val_loss"));
    CHECK(j.contains("val_accuracy"));
  }
  CHECK(lines == 33);
}

TEST_CASE("early stopping restores the best epoch") {
  // Validation labels are inverted, so validation loss rises as training fits.
  const auto tr = blobs(60, kDim, 3), va = blobs(20, kDim, 4, true);
  auto model = small_model(6, 4, 2);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.early_stop_patience = 2;
  const auto r = train(model, tr, va, cfg);
  CHECK(r.early_stopped);
  CHECK(r.history.size() == std::size_t(r.best_epoch + 2));
  CHECK(model.head().parameters() == r.best_parameters);
  CHECK(r.best_val_loss == r.history[std::size_t(r.best_epoch - 1)].val_loss);
}

TEST_CASE("training is reproducible for a fixed seed") {
  const auto tr = blobs(50, kDim, 5), va = blobs(20, kDim, 6);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 6;
  cfg.seed = 11;
  auto a = small_model(8, 4, 9), b = small_model(8, 4, 9);
  const auto ra = train(a, tr, va, cfg), rb = train(b, tr, va, cfg);
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) CHECK(ra.history[i].val_loss == rb.history[i].val_loss);
  CHECK(a.head().parameters() == b.head().parameters());
}

TEST_CASE("training preconditions and divergence") {
  auto model = small_model(4, 4, 1);
  auto single = blobs(10, kDim, 1);
  single.labels.setOnes();
  CHECK_THROWS_AS(train(model, single, blobs(10, kDim, 2), TrainConfig{}), ConfigError);

  auto bad = blobs(10, kDim, 1);
  bad.features(0, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train(model, bad, blobs(10, kDim, 2), TrainConfig{}), TrainingError);

  TrainConfig zero;
  zero.batch_size = 0;
  CHECK_THROWS_AS(train(model, blobs(10, kDim, 1), blobs(10, kDim, 2), zero), ConfigError);
}

TEST_CASE("two-texture smoke training separates the classes and leaves the backbone untouched") {
  const auto start = std::chrono::steady_clock::now();
  auto model = build_model(texture_spec(), 1, "/nonexistent");
  const auto checksum = model.backbone().checksum();
  const auto images = texture_set(200, 1000);
  const std::span<const LabelledImage> all(images);
  const auto tr = embed(model.backbone(), all.subspan(0, 160));
  const auto va = embed(model.backbone(), all.subspan(160));
  TrainConfig cfg;
  cfg.max_epochs = 10;
  const auto r = train(model, tr, va, cfg);
  double best_auroc = 0;
  for (const auto& e : r.history) best_auroc = std::max(best_auroc, e.val_auroc.value_or(0.0));
  MESSAGE("smoke: best validation AUROC " << best_auroc << " over " << r.history.size() << " epochs");
  CHECK(best_auroc >= 0.95);
  CHECK(model.backbone().checksum() == checksum);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::minutes(10));
}

TEST_CASE("texture backbone is deterministic and input-size independent") {
  const TextureBankBackbone a, b, other(64, 1);
  CHECK(a.checksum() == b.checksum());
  CHECK(a.checksum() != other.checksum());
  CHECK(a.parameter_count() == 16 * 5 * 5 * 3 + 16);
  const cv::Mat img = testing::texture_image(1, 4, {kFrameWidth, kFrameHeight});
  const auto f = a.features(img);
  CHECK(f.size() == 32);
  CHECK(f == b.features(img));
  CHECK(f.allFinite());
}

TEST_CASE("ONNX backbone loads an exported network") {
  OnnxBackbone net(testing::data_file("tiny_backbone.onnx"), 32);
  CHECK(net.feature_dim() == 8);
  CHECK(net.parameter_count() == 3 * 8 * 9 + 8);
  const cv::Mat img = testing::texture_image(0, 2);
  const auto f = net.features(img);
  CHECK(f.size() == 8);
  CHECK((f.array() >= 0).all());  // ReLU then average pooling
  CHECK(f == net.features(img));
  const auto sum = net.checksum();
  net.features(testing::texture_image(1, 3));
  CHECK(net.checksum() == sum);

  testing::TempDir dir("onnx");
  CHECK_THROWS_AS(OnnxBackbone(dir / "none.onnx", 32), LoadError);
  std::ofstream(dir / "junk.onnx") << "garbage";
  CHECK_THROWS_AS(OnnxBackbone(dir / "junk.onnx", 32), LoadError);

  // A resnet18 spec whose weights file is absent.
  CHECK_THROWS_AS(build_model(default_model_spec(BackboneId::resnet18), 0, dir.path()), LoadError);
  // An explicit network path whose width disagrees with the catalog.
  auto spec = default_model_spec(BackboneId::resnet18);
  spec.weights_path = testing::data_file("tiny_backbone.onnx");
  CHECK_THROWS_AS(build_model(spec, 0, dir.path()), LoadError);
}

TEST_CASE("checkpoint round trip reproduces predictions bit for bit") {
  auto model = build_model(texture_spec(), 21, "/nonexistent");
  const auto images = texture_set(22, 50);
  const auto fs = embed(model.backbone(), images);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.learning_rate = 1e-3;
  const auto r = train(model, fs, fs, cfg);
  const Eigen::VectorXd before = model.probabilities(fs.features);

  testing::TempDir dir("ckpt");
  auto ckpt = make_checkpoint(model, cfg, "initial_train", {"LYT-5", "LYT-10"}, r.best_epoch);
  ckpt.metrics_at_best = metrics::EvalReport{0.9, 0.95, 0.05, 22, 0.5, 15};
  save_checkpoint(ckpt, dir.path());
  for (auto f : {"spec.json", "train_config.json", "head_weights.bin", "metrics.json"})
    CHECK(std::filesystem::exists(dir / f));

  const auto loaded = load_checkpoint(dir.path());
  CHECK(loaded.train_transects == std::vector<std::string>{"LYT-5", "LYT-10"});
  CHECK(loaded.train_config.learning_rate == cfg.learning_rate);
  CHECK(loaded.metrics_at_best->auroc == 0.95);
  CHECK(loaded.head_weights == model.head().parameters());
  const auto restored = restore_model(loaded, "/nonexistent");
  const Eigen::VectorXd after = restored.probabilities(fs.features);
  CHECK(after == before);
  for (Eigen::Index i = 0; i < after.size(); ++i) {
    CHECK(after(i) >= 0.0);
    CHECK(after(i) <= 1.0);
  }

  auto tampered = loaded;
  tampered.backbone_checksum = "0000";
  CHECK_THROWS_AS(restore_model(tampered, "/nonexistent"), LoadError);

  std::filesystem::remove(dir / "head_weights.bin");
  CHECK_THROWS_AS(load_checkpoint(dir.path()), MissingPrerequisiteError);
  std::ofstream(dir / "head_weights.bin") << "SGFHEAD";
  CHECK_THROWS_AS(load_checkpoint(dir.path()), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent"), MissingPrerequisiteError);
}

TEST_CASE("head weight file layout") {
  testing::TempDir dir("hw");
  Head h(3, 2, 2);
  h.initialize(1);
  write_head_weights(dir / "w.bin", 3, 2, 2, h.parameters());
  std::ifstream in(dir / "w.bin", std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 7) == "SGFHEAD");
  CHECK(magic[7] == '\0');
  CHECK(std::filesystem::file_size(dir / "w.bin") == 8 + 4 + 12 + 8 + 8 * std::size_t(h.parameter_count()));
  int a = 0, b = 0, c = 0;
  CHECK(read_head_weights(dir / "w.bin", a, b, c) == h.parameters());
  CHECK((a == 3 && b == 2 && c == 2));
}

TEST_CASE("predict: empty, deterministic, per-item errors, enhancement warning") {
  auto model = build_model(texture_spec(), 2, "/nonexistent");
  const TrainConfig trained;
  CHECK(predict(model, trained, std::span<const FrameRecord>{}, EnhancerSpec{}).items.empty());

  FrameRecord f;
  f.image_id = "LYT-9_0";
  f.pixels = testing::texture_image(1, 8, {kFrameWidth, kFrameHeight});
  const std::vector<FrameRecord> twice{f, f};
  const auto r = predict(model, trained, twice, EnhancerSpec{});
  REQUIRE(r.items.size() == 2);
  CHECK(r.items[0].probability == r.items[1].probability);
  CHECK(r.warnings.empty());

  testing::TempDir dir("pred");
  cv::imwrite((dir / "ok.png").string(), f.pixels);
  std::ofstream(dir / "broken.png") << "not an image";
  const std::vector<PredictInput> inputs{{"ok", {}, dir / "ok.png"},
                                         {"broken", {}, dir / "broken.png"},
                                         {"missing", {}, dir / "missing.png"},
                                         {"mem", f.pixels, std::nullopt}};
  const auto p = predict(model, trained, inputs, EnhancerSpec{});
  REQUIRE(p.items.size() == 4);
  CHECK(p.items[0].probability.has_value());
  CHECK_FALSE(p.items[1].probability.has_value());
  CHECK_FALSE(p.items[1].error.empty());
  CHECK_FALSE(p.items[2].probability.has_value());
  CHECK(*p.items[3].probability == *p.items[0].probability);

  const EnhancerSpec on{EnhancerKind::external_model, testing::data_file("channel_swap_enhancer.onnx")};
  const auto w = predict(model, trained, twice, on);
  CHECK(w.warnings.size() == 1);
  CHECK(w.items.size() == 2);
  CHECK(w.items[0].probability.has_value());
}
