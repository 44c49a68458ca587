#include "sgf/quality/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sgf/common/csv.hpp"
#include "sgf/common/error.hpp"

namespace sgf {

std::optional<double> cohens_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ArgumentError("cohens_kappa: length mismatch");
  if (a.empty()) throw ArgumentError("cohens_kappa: empty input");
  const double n = static_cast<double>(a.size());
  double agree = 0, a_pos = 0, b_pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    agree += x == y;
    a_pos += x;
    b_pos += y;
  }
  const double p_o = agree / n;
  const double p_e = (a_pos / n) * (b_pos / n) + (1 - a_pos / n) * (1 - b_pos / n);
  if (p_e >= 1.0) return std::nullopt;
  return (p_o - p_e) / (1.0 - p_e);
}

std::vector<DisagreementTag> read_tags_csv(std::istream& in) {
  const auto t = csv::Table::parse(in);
  const auto c_img = t.column("image_id"), c_kind = t.column("kind"), c_by = t.column("judged_by");
  std::vector<DisagreementTag> out;
  for (const auto& row : t.rows()) {
    if (row.size() < t.header().size()) throw FormatError("tags csv: short row");
    DisagreementTag tag{row[c_img], DisagreementKind::ambiguous, row[c_by]};
    if (row[c_kind] == "mistake") tag.kind = DisagreementKind::mistake;
    else if (row[c_kind] != "ambiguous") throw FormatError("tags csv: unknown kind '" + row[c_kind] + "'");
    out.push_back(std::move(tag));
  }
  return out;
}

std::vector<DisagreementTag> read_tags_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tags file: " + path.string());
  return read_tags_csv(in);
}

AgreementReport agreement_report(const std::vector<AnnotationRecord>& annotations,
                                 const std::vector<DisagreementTag>& tags) {
  // image -> annotator -> latest vote, images in first-vote order
  std::vector<std::string> image_order;
  std::unordered_map<std::string, std::map<std::string, int>> votes;
  for (const auto& a : annotations) {
    if (!is_vote(a.label)) continue;
    auto [it, inserted] = votes.try_emplace(a.image_id);
    if (inserted) image_order.push_back(a.image_id);
    it->second[a.annotator] = a.label == Label::present ? 1 : 0;
  }

  AgreementReport r;
  std::map<std::string, std::size_t> user_votes, user_multi, user_disagree, user_mistakes;
  for (const auto& [image, by_user] : votes)
    for (const auto& [user, v] : by_user) ++user_votes[user];
  for (const auto& [user, n] : user_votes) r.annotators.push_back(user);

  const auto m = static_cast<Eigen::Index>(r.annotators.size());
  std::unordered_map<std::string, Eigen::Index> slot;
  for (Eigen::Index i = 0; i < m; ++i) slot[r.annotators[i]] = i;

  // Pairwise label lists over common images.
  std::vector<std::vector<std::pair<std::vector<int>, std::vector<int>>>> common(
      m, std::vector<std::pair<std::vector<int>, std::vector<int>>>(m));
  std::map<std::size_t, std::size_t> agreeing_by_count;
  double image_rate_sum = 0;
  std::size_t multi_images = 0, pairs_total = 0, pairs_agree = 0;

  for (const auto& image : image_order) {
    const auto& by_user = votes.at(image);
    const std::size_t n = by_user.size();
    std::size_t pos = 0;
    for (const auto& [user, v] : by_user) pos += v;
    const bool full = pos == 0 || pos == n;
    ++r.images_by_count[n];
    agreeing_by_count[n] += full;

    std::vector<std::pair<Eigen::Index, int>> entries;
    for (const auto& [user, v] : by_user) entries.emplace_back(slot.at(user), v);
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        auto [a, va] = entries[i];
        auto [b, vb] = entries[j];
        common[a][b].first.push_back(va);
        common[a][b].second.push_back(vb);
        common[b][a].first.push_back(vb);
        common[b][a].second.push_back(va);
      }

    if (n >= 2) {
      const std::size_t pairs = n * (n - 1) / 2;
      const std::size_t neg = n - pos;
      const std::size_t agree = (pos ? pos * (pos - 1) / 2 : 0) + (neg ? neg * (neg - 1) / 2 : 0);
      ++multi_images;
      image_rate_sum += double(agree) / double(pairs);
      pairs_total += pairs;
      pairs_agree += agree;
      for (const auto& [user, v] : by_user) {
        ++user_multi[user];
        const std::size_t same = v ? pos : n - pos;
        if (same < n) ++user_disagree[user];
      }
    }
  }

  r.pairwise_kappa = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
  r.pairwise_common_count = Eigen::MatrixXi::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    r.pairwise_kappa(i, i) = 1.0;
    r.pairwise_common_count(i, i) = static_cast<int>(user_votes[r.annotators[i]]);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) continue;
      const auto& [la, lb] = common[i][j];
      r.pairwise_common_count(i, j) = static_cast<int>(la.size());
      if (!la.empty())
        if (auto k = cohens_kappa(la, lb)) r.pairwise_kappa(i, j) = *k;
    }
  }

  if (multi_images) {
    r.mean_agreement_rate = image_rate_sum / double(multi_images);
    r.pooled_agreement_rate = double(pairs_agree) / double(pairs_total);
  }
  for (const auto& [n, count] : r.images_by_count)
    r.agreement_by_count[n] = double(agreeing_by_count[n]) / double(count);
  for (const auto& user : r.annotators)
    r.per_user_disagreement[user] =
        user_multi[user] ? double(user_disagree[user]) / double(user_multi[user]) : 0.0;

  for (const auto& tag : tags) {
    if (tag.kind == DisagreementKind::ambiguous) {
      ++r.ambiguous_tags;
      continue;
    }
    ++r.mistake_tags;
    auto it = votes.find(tag.image_id);
    if (it == votes.end()) continue;
    std::size_t pos = 0;
    for (const auto& [user, v] : it->second) pos += v;
    const std::size_t n = it->second.size();
    for (const auto& [user, v] : it->second) {
      const std::size_t same = v ? pos : n - pos;
      if (2 * same <= n) ++user_mistakes[user];  // minority, or tie
    }
  }
  for (const auto& user : r.annotators)
    r.per_user_mistake_rate[user] = double(user_mistakes[user]) / double(user_votes[user]);
  return r;
}

nlohmann::json to_json(const AgreementReport& r) {
  using nlohmann::json;
  json kappa = json::object(), counts = json::object();
  for (std::size_t i = 0; i < r.annotators.size(); ++i) {
    json krow = json::object(), crow = json::object();
    for (std::size_t j = 0; j < r.annotators.size(); ++j) {
      const double k = r.pairwise_kappa(i, j);
      krow[r.annotators[j]] = std::isnan(k) ? json(nullptr) : json(k);
      crow[r.annotators[j]] = r.pairwise_common_count(i, j);
    }
    kappa[r.annotators[i]] = krow;
    counts[r.annotators[i]] = crow;
  }
  json by_count = json::object(), images = json::object();
  for (const auto& [n, p] : r.agreement_by_count) by_count[std::to_string(n)] = p;
  for (const auto& [n, c] : r.images_by_count) images[std::to_string(n)] = c;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"annotators", r.annotators},
          {"pairwise_kappa", kappa},
          {"pairwise_common_count", counts},
          {"mean_agreement_rate", opt(r.mean_agreement_rate)},
          {"pooled_agreement_rate", opt(r.pooled_agreement_rate)},
          {"per_user_disagreement", r.per_user_disagreement},
          {"per_user_mistake_rate", r.per_user_mistake_rate},
          {"agreement_by_count", by_count},
          {"images_by_count", images},
          {"mistake_tags", r.mistake_tags},
          {"ambiguous_tags", r.ambiguous_tags}};
}

}  // namespace sgf
