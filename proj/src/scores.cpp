#include "toxscreen/scores.hpp"

#include <cmath>
#include <unordered_set>

#include "toxscreen/error.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {

std::string format_scores_csv(const ScoreTable& table, const std::vector<std::string>& header_lines) {
  std::string text;
  for (const auto& line : header_lines) text += "# " + line + "\n";
  text += "slide_id,score\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    text += csv_escape(table.slide_ids[i]) + "," + format_real(table.scores[i]) + "\n";
  }
  return text;
}

void write_scores(const std::filesystem::path& path, const ScoreTable& table,
                  const std::vector<std::string>& header_lines) {
  write_file(path, format_scores_csv(table, header_lines));
}

ScoreTable read_scores(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  require_columns(csv, {"slide_id", "score"}, path.string());
  ScoreTable table;
  std::unordered_set<std::string> seen;
  for (const auto& row : csv.rows) {
    if (!seen.insert(row[0]).second) fail(ErrorKind::validation, path.string() + ": duplicate slide '" + row[0] + "'");
    const double s = parse_real(row[1], "score");
    if (!std::isfinite(s)) fail(ErrorKind::data, path.string() + ": non-finite score for '" + row[0] + "'");
    table.slide_ids.push_back(row[0]);
    table.scores.push_back(s);
  }
  return table;
}

}  // namespace toxscreen
