#include "sgf/metrics/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

namespace sgf::metrics {

double spearman_p_value(double rho, std::size_t n) {
  if (n < 3) throw ArgumentError("spearman: need at least 3 points");
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = double(n) - 2.0;
  const double t = rho * std::sqrt(dof / ((1.0 - rho) * (1.0 + rho)));
  boost::math::students_t dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

SpearmanResult spearman(const Eigen::Ref<const Eigen::ArrayXd>& a,
                        const Eigen::Ref<const Eigen::ArrayXd>& b) {
  if (a.size() != b.size()) throw ArgumentError("spearman: length mismatch");
  if (a.size() < 3) throw ArgumentError("spearman: need at least 3 points");
  const Eigen::ArrayXd ra = average_ranks(a), rb = average_ranks(b);
  const Eigen::ArrayXd da = ra - ra.mean(), db = rb - rb.mean();
  const double sa = da.square().sum(), sb = db.square().sum();
  if (sa == 0.0 || sb == 0.0) throw UndefinedMetricError("spearman: constant series");

  SpearmanResult r;
  r.n = static_cast<std::size_t>(a.size());
  r.rho = std::clamp((da * db).sum() / std::sqrt(sa * sb), -1.0, 1.0);
  r.p_value = spearman_p_value(r.rho, r.n);
  return r;
}

EvalReport evaluate(const Eigen::Ref<const Eigen::ArrayXi>& labels,
                    const Eigen::Ref<const Eigen::ArrayXd>& probabilities, double threshold,
                    int bins) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ArgumentError("threshold must be in (0, 1)");
  const Eigen::ArrayXi predicted = (probabilities >= threshold).cast<int>();
  EvalReport r;
  r.accuracy = accuracy(labels, predicted);
  r.auroc = auroc(labels, probabilities);
  r.calibration_error = calibration_error(labels, probabilities, bins);
  r.n_samples = static_cast<std::size_t>(labels.size());
  r.threshold = threshold;
  r.bins = bins;
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"accuracy", r.accuracy},   {"auroc", r.auroc},         {"calibration_error", r.calibration_error},
          {"n_samples", r.n_samples}, {"threshold", r.threshold}, {"bins", r.bins}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.auroc = j.at("auroc").get<double>();
  r.calibration_error = j.at("calibration_error").get<double>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.threshold = j.value("threshold", 0.5);
  r.bins = j.value("bins", 15);
  return r;
}

}  // namespace sgf::metrics
