#pragma once

#include <string>
#include <vector>

#include "sgf/datastore/annotation.hpp"

namespace sgf {

struct ConsensusLabel {
  std::string image_id;
  Label label = Label::present;  // present or absent
  std::size_t n_annotations = 0;  // votes behind the label
  bool unanimous = true;
};

// One label per image whose present/absent votes all agree; images with any
// present-vs-absent conflict are left out. Skip and invalid are not votes.
// Output is ordered by first vote.
std::vector<ConsensusLabel> compute_consensus(const std::vector<AnnotationRecord>& annotations);

}  // namespace sgf
