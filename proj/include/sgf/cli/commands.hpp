#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace sgf::cli {

// Artifact locations under data_root.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.jsonl"; }
  std::filesystem::path enhanced_manifest() const { return root / "enhanced_manifest.jsonl"; }
  std::filesystem::path frames(const std::string& transect) const { return root / "frames" / transect; }
  std::filesystem::path enhanced() const { return root / "enhanced"; }
  std::filesystem::path annotation_log() const { return root / "annotations" / "events.jsonl"; }
  std::filesystem::path splits(const std::string& plan) const { return root / "splits" / plan; }
  std::filesystem::path split_file(const std::string& plan, const std::string& experiment,
                                   const std::string& name) const {
    return splits(plan) / experiment / (name + ".json");
  }
  std::filesystem::path checkpoint(const std::string& name) const { return root / "checkpoints" / name; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path predictions(const std::string& transect) const {
    return root / "predictions" / (transect + ".jsonl");
  }
  std::filesystem::path coverage() const { return root / "coverage"; }
  std::filesystem::path geo() const { return root / "geo"; }
  std::filesystem::path stats() const { return root / "stats"; }
  std::filesystem::path runs() const { return root / "runs"; }
};

// 0 success, 2 validation error, 3 missing prerequisite, 4 runtime failure.
int exit_code_for(const std::exception& e);

// Parses argv and runs one command. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgf::cli
