#include "sgf/datastore/consensus.hpp"

#include <unordered_map>

namespace sgf {

std::vector<ConsensusLabel> compute_consensus(const std::vector<AnnotationRecord>& annotations) {
  struct Tally {
    std::size_t present = 0;
    std::size_t absent = 0;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Tally> tallies;
  for (const auto& a : annotations) {
    if (!is_vote(a.label)) continue;
    auto [it, inserted] = tallies.try_emplace(a.image_id);
    if (inserted) order.push_back(a.image_id);
    (a.label == Label::present ? it->second.present : it->second.absent) += 1;
  }

  std::vector<ConsensusLabel> out;
  for (const auto& id : order) {
    const auto& t = tallies.at(id);
    if (t.present > 0 && t.absent > 0) continue;
    out.push_back({id, t.present > 0 ? Label::present : Label::absent, t.present + t.absent, true});
  }
  return out;
}

}  // namespace sgf
