#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"
#include "sgf/quality/agreement.hpp"

using namespace sgf;

namespace {

// Independent kappa from the 2x2 contingency table.
std::optional<double> kappa_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  double t[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < a.size(); ++i) t[a[i]][b[i]] += 1;
  const double n = double(a.size());
  const double po = (t[0][0] + t[1][1]) / n;
  const double a1 = (t[1][0] + t[1][1]) / n, b1 = (t[0][1] + t[1][1]) / n;
  const double pe = a1 * b1 + (1 - a1) * (1 - b1);
  if (pe == 1.0) return std::nullopt;
  return (po - pe) / (1 - pe);
}

AnnotationRecord vote(const std::string& user, const std::string& image, Label l) {
  AnnotationRecord r;
  r.annotator = user;
  r.image_id = image;
  r.label = l;
  if (l == Label::invalid) r.comment = "x";
  return r;
}

std::vector<AnnotationRecord> random_log(std::mt19937& rng, int n, int users, int images) {
  const Label labels[] = {Label::present, Label::absent, Label::present, Label::absent, Label::skip,
                          Label::invalid};
  std::vector<AnnotationRecord> out;
  for (int i = 0; i < n; ++i)
    out.push_back(vote("u" + std::to_string(rng() % users), "i" + std::to_string(rng() % images),
                       labels[rng() % 6]));
  return out;
}

}  // namespace

TEST_CASE("kappa examples") {
  const std::vector<int> a{1, 1, 0, 0}, b{1, 0, 0, 0};
  CHECK(*cohens_kappa(a, b) == doctest::Approx(0.5));
  CHECK(*cohens_kappa(a, a) == 1.0);
  const std::vector<int> ones{1, 1};
  CHECK_FALSE(cohens_kappa(ones, ones).has_value());
  const std::vector<int> empty, three{1, 0, 1};
  CHECK_THROWS_AS(cohens_kappa(empty, empty), ArgumentError);
  CHECK_THROWS_AS(cohens_kappa(a, three), ArgumentError);
}

TEST_CASE("kappa matches the contingency oracle, is swap invariant and self-consistent") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> a(n), b(n), sa(n), sb(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = int(rng() % 2);
      b[i] = rng() % 3 ? a[i] : int(rng() % 2);
      sa[i] = 1 - a[i];
      sb[i] = 1 - b[i];
    }
    const auto k = cohens_kappa(a, b), oracle = kappa_oracle(a, b), swapped = cohens_kappa(sa, sb);
    REQUIRE(k.has_value() == oracle.has_value());
    REQUIRE(k.has_value() == swapped.has_value());
    if (k) {
      CHECK(*k == doctest::Approx(*oracle).epsilon(1e-12));
      CHECK(*k == doctest::Approx(*swapped).epsilon(1e-12));
      CHECK(*k >= -1.0);
      CHECK(*k <= 1.0);
    }
    const bool both_classes = std::set<int>(a.begin(), a.end()).size() == 2;
    if (both_classes) CHECK(*cohens_kappa(a, a) == 1.0);
  }
}

TEST_CASE("report examples") {
  std::vector<AnnotationRecord> log;
  for (int i = 0; i < 6; ++i) {
    const Label l = i % 2 ? Label::present : Label::absent;
    log.push_back(vote("ana", "img" + std::to_string(i), l));
    log.push_back(vote("ben", "img" + std::to_string(i), l));
  }
  const auto r = agreement_report(log, {});
  REQUIRE(r.annotators == std::vector<std::string>{"ana", "ben"});
  CHECK(*r.mean_agreement_rate == 1.0);
  CHECK(r.pairwise_kappa(0, 1) == 1.0);
  CHECK(r.pairwise_common_count(0, 1) == 6);
  CHECK(r.agreement_by_count.at(2) == 1.0);
  CHECK(r.per_user_disagreement.at("ana") == 0.0);

  const auto j = to_json(r);
  CHECK(j.at("pairwise_kappa").at("ana").at("ben").get<double>() == 1.0);
}

TEST_CASE("mistake tags charge the minority voters") {
  const std::vector<AnnotationRecord> log = {
      vote("a", "x", Label::present), vote("b", "x", Label::present), vote("c", "x", Label::absent),
      vote("a", "y", Label::present), vote("b", "y", Label::absent),
      vote("a", "z", Label::absent)};
  std::stringstream tags("image_id,kind,judged_by\nx,mistake,expert\ny,mistake,expert\nz,ambiguous,expert\n");
  const auto r = agreement_report(log, read_tags_csv(tags));
  CHECK(r.mistake_tags == 2);
  CHECK(r.ambiguous_tags == 1);
  CHECK(r.per_user_mistake_rate.at("a") == doctest::Approx(1.0 / 3.0));  // tie on y
  CHECK(r.per_user_mistake_rate.at("b") == doctest::Approx(1.0 / 2.0));
  CHECK(r.per_user_mistake_rate.at("c") == doctest::Approx(1.0));
  // x: 1 of 3 pairs agree; y: 0 of 1.
  CHECK(*r.mean_agreement_rate == doctest::Approx((1.0 / 3.0 + 0.0) / 2.0));
  CHECK(*r.pooled_agreement_rate == doctest::Approx(1.0 / 4.0));
  std::stringstream bad("image_id,kind,judged_by\nx,wrong,e\n");
  CHECK_THROWS_AS(read_tags_csv(bad), FormatError);
}

TEST_CASE("report matches a brute-force re-scan over random logs") {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const auto log = random_log(rng, 150, 5, 30);
    const auto r = agreement_report(log, {});

    // Oracle: latest vote per (image, user).
    std::map<std::string, std::map<std::string, int>> votes;
    for (const auto& a : log)
      if (is_vote(a.label)) votes[a.image_id][a.annotator] = a.label == Label::present;
    std::map<std::size_t, std::pair<int, int>> by_count;  // n -> (agreeing, total)
    for (const auto& [img, users] : votes) {
      std::set<int> distinct;
      for (const auto& [u, v] : users) distinct.insert(v);
      auto& slot = by_count[users.size()];
      slot.first += distinct.size() == 1;
      slot.second += 1;
    }
    REQUIRE(r.agreement_by_count.size() == by_count.size());
    for (const auto& [n, c] : by_count) CHECK(r.agreement_by_count.at(n) == doctest::Approx(double(c.first) / c.second));

    const auto m = Eigen::Index(r.annotators.size());
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        CHECK(r.pairwise_common_count(i, j) == r.pairwise_common_count(j, i));
        const double kij = r.pairwise_kappa(i, j), kji = r.pairwise_kappa(j, i);
        CHECK(std::isnan(kij) == std::isnan(kji));
        if (!std::isnan(kij)) {
          CHECK(kij == doctest::Approx(kji).epsilon(1e-12));
          if (i != j) {
            std::vector<int> la, lb;
            for (const auto& [img, users] : votes) {
              auto a = users.find(r.annotators[i]), b = users.find(r.annotators[j]);
              if (a != users.end() && b != users.end()) {
                la.push_back(a->second);
                lb.push_back(b->second);
              }
            }
            CHECK(kij == doctest::Approx(*kappa_oracle(la, lb)).epsilon(1e-12));
          }
        }
      }
    for (const auto& [u, rate] : r.per_user_disagreement) {
      CHECK(rate >= 0.0);
      CHECK(rate <= 1.0);
    }
    if (r.mean_agreement_rate) {
      CHECK(*r.mean_agreement_rate >= 0.0);
      CHECK(*r.mean_agreement_rate <= 1.0);
    }
  }
}
