#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "sgf/common/error.hpp"

namespace sgf::metrics {

namespace detail {

template <typename A, typename B>
void require_same_nonempty(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b,
                           const char* what) {
  if (a.size() != b.size()) throw ArgumentError(std::string(what) + ": length mismatch");
  if (a.size() == 0) throw ArgumentError(std::string(what) + ": empty input");
}

}  // namespace detail

// Share of positions where label and prediction agree.
template <typename L, typename P>
double accuracy(const Eigen::DenseBase<L>& labels, const Eigen::DenseBase<P>& predictions) {
  detail::require_same_nonempty(labels, predictions, "accuracy");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    hits += (labels.derived().coeff(i) != 0) == (predictions.derived().coeff(i) != 0);
  return double(hits) / double(labels.size());
}

// 1-based ranks, ties sharing the mean of the ranks they span.
template <typename Derived>
Eigen::ArrayXd average_ranks(const Eigen::DenseBase<Derived>& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values.derived().coeff(a) < values.derived().coeff(b);
  });
  Eigen::ArrayXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && values.derived().coeff(order[j + 1]) == values.derived().coeff(order[i])) ++j;
    const double shared = 0.5 * double(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[k]) = shared;
    i = j + 1;
  }
  return ranks;
}

// Probability that a random positive outscores a random negative, ties
// counting one half (Mann-Whitney U / (n_pos * n_neg)). Throws
// UndefinedMetricError when only one class is present.
template <typename L, typename S>
double auroc(const Eigen::DenseBase<L>& labels, const Eigen::DenseBase<S>& scores) {
  detail::require_same_nonempty(labels, scores, "auroc");
  const Eigen::ArrayXd ranks = average_ranks(scores);
  double n_pos = 0, rank_sum = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels.derived().coeff(i) != 0) {
      n_pos += 1;
      rank_sum += ranks(i);
    }
  const double n_neg = double(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("auroc: labels contain a single class");
  return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

// Expected calibration error of the positive-class probability over `bins`
// equal-width bins on [0, 1]: sum over non-empty bins of
// (bin size / N) * |mean probability - positive rate|. A probability of
// exactly 1 falls into the last bin.
template <typename L, typename P>
double calibration_error(const Eigen::DenseBase<L>& labels, const Eigen::DenseBase<P>& probabilities,
                         int bins = 15) {
  detail::require_same_nonempty(labels, probabilities, "calibration_error");
  if (bins < 1) throw ArgumentError("calibration_error: bins must be >= 1");
  Eigen::ArrayXd conf_sum = Eigen::ArrayXd::Zero(bins), pos = Eigen::ArrayXd::Zero(bins),
                 count = Eigen::ArrayXd::Zero(bins);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double p = static_cast<double>(probabilities.derived().coeff(i));
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("calibration_error: probability outside [0, 1]");
    const int b = std::min(bins - 1, static_cast<int>(std::floor(p * bins)));
    conf_sum(b) += p;
    pos(b) += labels.derived().coeff(i) != 0;
    count(b) += 1;
  }
  const double n = double(labels.size());
  double ce = 0.0;
  for (int b = 0; b < bins; ++b)
    if (count(b) > 0) ce += count(b) / n * std::abs(conf_sum(b) / count(b) - pos(b) / count(b));
  return ce;
}

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, Student t approximation with n-2 dof
  std::size_t n = 0;
};

// Two-sided p-value of a rank correlation `rho` over n points.
double spearman_p_value(double rho, std::size_t n);

// Throws ArgumentError for fewer than 3 points or unequal lengths and
// UndefinedMetricError for a constant series.
SpearmanResult spearman(const Eigen::Ref<const Eigen::ArrayXd>& a,
                        const Eigen::Ref<const Eigen::ArrayXd>& b);

struct EvalReport {
  double accuracy = 0.0;
  double auroc = 0.0;
  double calibration_error = 0.0;
  std::size_t n_samples = 0;
  double threshold = 0.5;
  int bins = 15;
};

EvalReport evaluate(const Eigen::Ref<const Eigen::ArrayXi>& labels,
                    const Eigen::Ref<const Eigen::ArrayXd>& probabilities, double threshold = 0.5,
                    int bins = 15);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace sgf::metrics
