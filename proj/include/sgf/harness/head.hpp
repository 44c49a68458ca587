#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sgf/common/error.hpp"

namespace sgf {

// in -> fc(l1) -> ReLU -> fc(l2) -> ReLU -> fc(1) logit.
// Parameters live in one flat vector laid out as
// W1 (l1 x in), b1, W2 (l2 x l1), b2, w3 (l2), b3, matrices column-major.
// Inputs are column-per-sample: X is in x n.
template <typename Scalar>
class MlpHead {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  MlpHead() = default;
  MlpHead(int in, int l1, int l2) : in_(in), l1_(l1), l2_(l2) {
    if (in < 1 || l1 < 1 || l2 < 1) throw ArgumentError("head dimensions must be positive");
    params_ = Vector::Zero(static_cast<Eigen::Index>(size(in, l1, l2)));
  }

  static std::size_t size(int in, int l1, int l2) {
    return std::size_t(l1) * in + l1 + std::size_t(l2) * l1 + l2 + l2 + 1;
  }

  int in() const noexcept { return in_; }
  int layer1() const noexcept { return l1_; }
  int layer2() const noexcept { return l2_; }
  Eigen::Index parameter_count() const noexcept { return params_.size(); }
  Vector& parameters() noexcept { return params_; }
  const Vector& parameters() const noexcept { return params_; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::Index at = 0;
    auto fill = [&](Eigen::Index count, int fan_in) {
      std::uniform_real_distribution<double> u(-1.0 / std::sqrt(double(fan_in)),
                                               1.0 / std::sqrt(double(fan_in)));
      for (Eigen::Index i = 0; i < count; ++i) params_(at++) = static_cast<Scalar>(u(rng));
    };
    fill(Eigen::Index(l1_) * in_ + l1_, in_);
    fill(Eigen::Index(l2_) * l1_ + l2_, l1_);
    fill(Eigen::Index(l2_) + 1, l2_);
  }

  RowVector logits(const Matrix& X) const {
    Matrix h1, h2;
    return forward(X, h1, h2);
  }

  // Mean binary cross-entropy on logits; y holds 0/1 targets. Writes the
  // gradient with respect to parameters() when grad is non-null.
  Scalar loss_and_gradient(const Matrix& X, const Vector& y, Vector* grad) const {
    if (X.rows() != in_) throw ArgumentError("feature width does not match the head");
    if (X.cols() != y.size() || X.cols() == 0) throw ArgumentError("batch size mismatch");
    Matrix h1, h2;
    const RowVector z = forward(X, h1, h2);
    const Scalar n = static_cast<Scalar>(X.cols());
    Scalar loss = 0;
    RowVector dz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const Scalar zi = z(i), yi = y(i);
      loss += std::max(zi, Scalar(0)) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
      dz(i) = (sigmoid(zi) - yi) / n;
    }
    loss /= n;
    if (!grad) return loss;

    grad->resize(params_.size());
    auto [gW1, gb1, gW2, gb2, gw3, gb3] = views(*grad);
    gw3 = h2 * dz.transpose();
    gb3(0) = dz.sum();
    Matrix d2 = (w3() * dz).cwiseProduct((h2.array() > 0).template cast<Scalar>().matrix());
    gW2 = d2 * h1.transpose();
    gb2 = d2.rowwise().sum();
    Matrix d1 = (W2().transpose() * d2).cwiseProduct((h1.array() > 0).template cast<Scalar>().matrix());
    gW1 = d1 * X.transpose();
    gb1 = d1.rowwise().sum();
    return loss;
  }

  static Scalar sigmoid(Scalar z) {
    return z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
  }

 private:
  using MatMap = Eigen::Map<Matrix>;
  using VecMap = Eigen::Map<Vector>;
  using CMatMap = Eigen::Map<const Matrix>;
  using CVecMap = Eigen::Map<const Vector>;

  struct Views {
    MatMap W1;
    VecMap b1;
    MatMap W2;
    VecMap b2;
    VecMap w3;
    VecMap b3;
  };

  Views views(Vector& v) const {
    Scalar* p = v.data();
    Scalar* w1 = p;
    Scalar* b1 = w1 + Eigen::Index(l1_) * in_;
    Scalar* w2 = b1 + l1_;
    Scalar* b2 = w2 + Eigen::Index(l2_) * l1_;
    Scalar* w3 = b2 + l2_;
    Scalar* b3 = w3 + l2_;
    return {MatMap(w1, l1_, in_), VecMap(b1, l1_), MatMap(w2, l2_, l1_),
            VecMap(b2, l2_),      VecMap(w3, l2_), VecMap(b3, 1)};
  }

  const Scalar* base() const { return params_.data(); }
  CMatMap W1() const { return CMatMap(base(), l1_, in_); }
  CVecMap b1() const { return CVecMap(base() + Eigen::Index(l1_) * in_, l1_); }
  CMatMap W2() const { return CMatMap(base() + Eigen::Index(l1_) * in_ + l1_, l2_, l1_); }
  CVecMap b2() const { return CVecMap(base() + Eigen::Index(l1_) * in_ + l1_ + Eigen::Index(l2_) * l1_, l2_); }
  CVecMap w3() const { return CVecMap(b2().data() + l2_, l2_); }
  Scalar b3() const { return *(w3().data() + l2_); }

  RowVector forward(const Matrix& X, Matrix& h1, Matrix& h2) const {
    if (X.rows() != in_) throw ArgumentError("feature width does not match the head");
    h1 = ((W1() * X).colwise() + b1()).cwiseMax(Scalar(0));
    h2 = ((W2() * h1).colwise() + b2()).cwiseMax(Scalar(0));
    return (w3().transpose() * h2).array() + b3();
  }

  int in_ = 0, l1_ = 0, l2_ = 0;
  Vector params_;
};

// Adaptive-moment optimizer over a flat parameter vector.
template <typename Scalar>
class Adam {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit Adam(Eigen::Index n, Scalar lr, Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
                Scalar eps = Scalar(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

  void step(Vector& params, const Vector& grad) {
    ++t_;
    m_ = beta1_ * m_ + (Scalar(1) - beta1_) * grad;
    v_ = beta2_ * v_ + (Scalar(1) - beta2_) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - std::pow(beta1_, Scalar(t_));
    const Scalar c2 = Scalar(1) - std::pow(beta2_, Scalar(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  long steps() const noexcept { return t_; }

 private:
  Scalar lr_, beta1_, beta2_, eps_;
  Vector m_, v_;
  long t_ = 0;
};

}  // namespace sgf
