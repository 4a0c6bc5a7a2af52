#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <span>
#include <filesystem>
#include <string>
#include <vector>

#include "toxscreen/corpus.hpp"
#include "toxscreen/rng.hpp"

namespace toxscreen::testkit {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("toxscreen_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline FloatMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  FloatMatrix m(rows, cols);
  for (float& v : m.values) v = static_cast<float>(scale * rng.normal());
  return m;
}

// One record per slide: compound c gets `normal[c]` normal and `abnormal[c]` abnormal slides.
inline std::vector<SlideRecord> make_records(const std::vector<int>& normal, const std::vector<int>& abnormal) {
  std::vector<SlideRecord> out;
  for (std::size_t c = 0; c < normal.size(); ++c) {
    const std::string cid = "C" + std::to_string(c);
    for (int i = 0; i < normal[c] + abnormal[c]; ++i) {
      SlideRecord r;
      r.slide_id = cid + "-S" + std::to_string(i);
      r.animal_id = cid + "-A" + std::to_string(i);
      r.compound_id = cid;
      r.label = i < abnormal[c] ? Label::abnormal : Label::normal;
      if (r.abnormal()) r.findings = {"Necrosis"};
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Brute-force squared distance in the library's documented summation order:
// four interleaved double partial sums, combined pairwise, then the tail.
inline double canonical_squared_distance(std::span<const float> a, std::span<const float> b) {
  double s[4] = {0, 0, 0, 0};
  const std::size_t main = a.size() / 4 * 4;
  for (std::size_t i = 0; i < main; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s[i % 4] += d * d;
  }
  double total = (s[0] + s[2]) + (s[1] + s[3]);
  for (std::size_t i = main; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  return total;
}

// Nearest-reference distance by exhaustive double loop.
inline double brute_force_nearest(const FloatMatrix& refs, std::span<const float> q) {
  double best = -1;
  for (std::size_t r = 0; r < refs.rows; ++r) {
    const double d = canonical_squared_distance(refs.row(r), q);
    if (best < 0 || d < best) best = d;
  }
  return std::sqrt(best);
}

inline int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace toxscreen::testkit
