#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace atx {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;

/// Pipeline stage a failure is attributed to. Used for CLI exit codes and diagnostics.
enum class Stage { Input, Graph, Matching, Maps, Assembly, Refine, Plan, Metrics, Synth };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Input: return "input";
    case Stage::Graph: return "graph";
    case Stage::Matching: return "matching";
    case Stage::Maps: return "maps";
    case Stage::Assembly: return "assembly";
    case Stage::Refine: return "refine";
    case Stage::Plan: return "plan";
    case Stage::Metrics: return "metrics";
    case Stage::Synth: return "synth";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& what)
      : std::runtime_error(std::string(stage_name(stage)) + ": " + what), stage_(stage), message_(what) {}
  Stage stage() const noexcept { return stage_; }
  /// The message without the stage prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Stage stage_;
  std::string message_;
};

// splitmix64 finalizer; also the counter-based seed splitter.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a list of counters.
inline std::uint64_t split_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
  std::uint64_t s = mix64(seed);
  for (auto c : counters) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(std::max(workers, 1), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Pairwise (tree) summation; fixed reduction order independent of threading.
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Vec2 xz(const Vec3& p) { return {p.x(), p.z()}; }

}  // namespace atx
