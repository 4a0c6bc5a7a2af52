#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace toxscreen {

// One abnormality score per slide; larger means more abnormal.
struct ScoreTable {
  std::vector<std::string> slide_ids;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
};

// "slide_id,score" CSV with optional '#' header lines. Scores are written in
// shortest round-trip form, so read(write(t)) reproduces every double.
std::string format_scores_csv(const ScoreTable& table, const std::vector<std::string>& header_lines = {});
void write_scores(const std::filesystem::path& path, const ScoreTable& table,
                  const std::vector<std::string>& header_lines = {});
// Validates unique ids and finite scores.
ScoreTable read_scores(const std::filesystem::path& path);

}  // namespace toxscreen
