#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "atx/common.hpp"

namespace atx {

/// Instance-labeled point cloud. instance_id -1 marks open (navigable) space.
/// Features are stored one column per point (D x N) and kept at unit norm.
struct Scene {
  Points points;
  std::vector<std::int32_t> instance_id;
  Eigen::MatrixXf features;
  double voxel_size = 0.0;

  std::size_t size() const { return points.size(); }
  int dim() const { return static_cast<int>(features.rows()); }
  bool is_open(std::size_t i) const { return instance_id[i] < 0; }
};

/// Ordered polyline with optional waypoint indices (first 0, last M-1).
struct Trajectory {
  Points points;
  std::vector<std::uint64_t> waypoints;

  std::size_t size() const { return points.size(); }
  bool has_waypoints() const { return !waypoints.empty(); }
};

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
  // Little-endian on the wire; swap on big-endian hosts.
  const auto* b = static_cast<const unsigned char*>(p);
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(b), n);
  } else {
    for (std::size_t i = n; i-- > 0;) out.push_back(static_cast<char>(b[i]));
  }
}

template <class T>
void put(std::string& out, T v) {
  put_bytes(out, &v, sizeof(T));
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  template <class T>
  T get(const char* what) {
    if (data_.size() - pos_ < sizeof(T)) throw Error(Stage::Input, path_ + ": truncated while reading " + what);
    T v;
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(&v, data_.data() + pos_, sizeof(T));
    } else {
      unsigned char b[sizeof(T)];
      for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(data_[pos_ + sizeof(T) - 1 - i]);
      std::memcpy(&v, b, sizeof(T));
    }
    pos_ += sizeof(T);
    return v;
  }

  void expect_magic(const char (&magic)[5]) {
    if (data_.size() < 4 || data_.compare(0, 4, magic) != 0)
      throw Error(Stage::Input, path_ + ": bad magic, expected \"" + std::string(magic) + "\"");
    pos_ = 4;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& path() const { return path_; }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Stage::Input, "cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Stage::Input, "cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(Stage::Input, "write failed for " + path);
}

}  // namespace detail

/// Rescales a feature column to unit norm. Columns already at unit norm to
/// single precision are left untouched, which makes the pass idempotent.
inline void normalize_feature(Eigen::Ref<Eigen::VectorXf> f) {
  const double n = f.cast<double>().norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(Stage::Input, "zero-norm or non-finite feature vector");
  if (std::abs(n - 1.0) <= 1e-6) return;
  f = (f.cast<double>() / n).cast<float>();
}

/// Enforces the Scene invariants: equal lengths, N >= 1, single-precision
/// positions, unit features.
inline void canonicalize(Scene& s) {
  const std::size_t n = s.points.size();
  if (n == 0) throw Error(Stage::Input, "scene has no points");
  if (s.instance_id.size() != n || static_cast<std::size_t>(s.features.cols()) != n)
    throw Error(Stage::Input, "scene arrays have mismatched lengths");
  if (s.features.rows() < 1) throw Error(Stage::Input, "feature dimension must be >= 1");
  for (auto& p : s.points) p = p.cast<float>().cast<double>();
  for (Eigen::Index i = 0; i < s.features.cols(); ++i) normalize_feature(s.features.col(i));
}

inline std::string encode_scene(const Scene& s) {
  std::string out;
  out.reserve(24 + s.size() * (16 + 4 * s.features.rows()));
  out.append("ATTS", 4);
  detail::put<std::uint32_t>(out, 1);
  detail::put<std::uint64_t>(out, s.size());
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.features.rows()));
  for (const auto& p : s.points)
    for (int a = 0; a < 3; ++a) detail::put<float>(out, static_cast<float>(p[a]));
  for (auto id : s.instance_id) detail::put<std::int32_t>(out, id);
  for (Eigen::Index i = 0; i < s.features.cols(); ++i)
    for (Eigen::Index d = 0; d < s.features.rows(); ++d) detail::put<float>(out, s.features(d, i));
  return out;
}

inline Scene decode_scene(std::string bytes, const std::string& path = "<memory>") {
  detail::Reader r(std::move(bytes), path);
  r.expect_magic("ATTS");
  if (auto v = r.get<std::uint32_t>("version"); v != 1)
    throw Error(Stage::Input, path + ": unsupported ATTS version " + std::to_string(v));
  const auto n = r.get<std::uint64_t>("point count");
  const auto d = r.get<std::uint32_t>("feature dimension");
  if (n == 0) throw Error(Stage::Input, path + ": scene has no points");
  if (d == 0) throw Error(Stage::Input, path + ": feature dimension is 0");
  const std::uint64_t need = n * (12 + 4 + 4ULL * d);
  if (r.remaining() < need) throw Error(Stage::Input, path + ": truncated arrays");
  if (r.remaining() > need) throw Error(Stage::Input, path + ": trailing bytes after arrays");
  Scene s;
  s.points.resize(n);
  for (auto& p : s.points) {
    const float x = r.get<float>("position"), y = r.get<float>("position"), z = r.get<float>("position");
    p = Vec3(x, y, z);
  }
  s.instance_id.resize(n);
  for (auto& id : s.instance_id) id = r.get<std::int32_t>("instance id");
  s.features.resize(d, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < s.features.cols(); ++i)
    for (Eigen::Index k = 0; k < s.features.rows(); ++k) s.features(k, i) = r.get<float>("feature");
  try {
    canonicalize(s);
  } catch (const Error& e) {
    throw Error(Stage::Input, path + ": " + e.message());
  }
  return s;
}

inline Scene load_scene(const std::string& path) { return decode_scene(detail::read_file(path), path); }
inline void save_scene(const std::string& path, const Scene& s) { detail::write_file(path, encode_scene(s)); }

inline void validate(const Trajectory& t) {
  if (t.points.size() < 2) throw Error(Stage::Input, "trajectory needs at least 2 points");
  for (std::size_t i = 0; i + 1 < t.points.size(); ++i)
    if (t.points[i] == t.points[i + 1])
      throw Error(Stage::Input, "trajectory has identical consecutive points at index " + std::to_string(i));
  if (t.waypoints.empty()) return;
  if (t.waypoints.front() != 0 || t.waypoints.back() != t.points.size() - 1)
    throw Error(Stage::Input, "waypoint indices must start at 0 and end at M-1");
  for (std::size_t i = 0; i + 1 < t.waypoints.size(); ++i)
    if (t.waypoints[i] >= t.waypoints[i + 1]) throw Error(Stage::Input, "waypoint indices must be strictly increasing");
}

inline std::string encode_trajectory(const Trajectory& t) {
  std::string out;
  out.append("ATTT", 4);
  detail::put<std::uint32_t>(out, 1);
  detail::put<std::uint64_t>(out, t.points.size());
  for (const auto& p : t.points)
    for (int a = 0; a < 3; ++a) detail::put<float>(out, static_cast<float>(p[a]));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.waypoints.size()));
  for (auto w : t.waypoints) detail::put<std::uint64_t>(out, w);
  return out;
}

inline Trajectory decode_trajectory(std::string bytes, const std::string& path = "<memory>") {
  detail::Reader r(std::move(bytes), path);
  r.expect_magic("ATTT");
  if (auto v = r.get<std::uint32_t>("version"); v != 1)
    throw Error(Stage::Input, path + ": unsupported ATTT version " + std::to_string(v));
  const auto m = r.get<std::uint64_t>("point count");
  if (r.remaining() < m * 12) throw Error(Stage::Input, path + ": truncated positions");
  Trajectory t;
  t.points.resize(m);
  for (auto& p : t.points) {
    const float x = r.get<float>("position"), y = r.get<float>("position"), z = r.get<float>("position");
    p = Vec3(x, y, z);
  }
  const auto w = r.get<std::uint32_t>("waypoint count");
  if (r.remaining() != std::uint64_t{w} * 8) throw Error(Stage::Input, path + ": waypoint array size mismatch");
  t.waypoints.resize(w);
  for (auto& i : t.waypoints) i = r.get<std::uint64_t>("waypoint index");
  try {
    validate(t);
  } catch (const Error& e) {
    throw Error(Stage::Input, path + ": " + e.message());
  }
  return t;
}

inline Trajectory load_trajectory(const std::string& path) {
  return decode_trajectory(detail::read_file(path), path);
}
inline void save_trajectory(const std::string& path, const Trajectory& t) {
  detail::write_file(path, encode_trajectory(t));
}

/// Rounds trajectory positions to single precision (the on-disk precision).
inline Trajectory quantized(Trajectory t) {
  for (auto& p : t.points) p = p.cast<float>().cast<double>();
  return t;
}

/// One point per occupied voxel: centroid position, majority label (ties to
/// the smallest id), renormalized mean feature. Output follows first-occurrence
/// order of the voxels.
inline Scene voxel_downsample(const Scene& s, double voxel) {
  if (!(voxel > 0)) throw Error(Stage::Input, "voxel size must be > 0");
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(mix64(static_cast<std::uint64_t>(k.x) ^ mix64(static_cast<std::uint64_t>(k.y) ^
                                                                                     mix64(static_cast<std::uint64_t>(k.z)))));
    }
  };
  std::unordered_map<Key, std::size_t, KeyHash> slot;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3& p = s.points[i];
    Key k{static_cast<std::int64_t>(std::floor(p.x() / voxel)), static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    auto [it, fresh] = slot.try_emplace(k, members.size());
    if (fresh) members.emplace_back();
    members[it->second].push_back(i);
  }

  Scene out;
  out.voxel_size = voxel;
  out.points.reserve(members.size());
  out.instance_id.reserve(members.size());
  out.features.resize(s.features.rows(), static_cast<Eigen::Index>(members.size()));
  for (std::size_t v = 0; v < members.size(); ++v) {
    const auto& m = members[v];
    Vec3 c = Vec3::Zero();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(s.features.rows());
    std::map<std::int32_t, int> votes;
    for (auto i : m) {
      c += s.points[i];
      f += s.features.col(static_cast<Eigen::Index>(i)).cast<double>();
      ++votes[s.instance_id[i]];
    }
    // std::map iterates ascending, so strict > keeps the smallest id on ties.
    std::int32_t label = votes.begin()->first;
    int best = 0;
    for (auto [id, n] : votes)
      if (n > best) best = n, label = id;
    out.points.push_back(c / static_cast<double>(m.size()));
    out.instance_id.push_back(label);
    const double fn = f.norm();
    if (fn > 0) out.features.col(static_cast<Eigen::Index>(v)) = (f / fn).cast<float>();
    else out.features.col(static_cast<Eigen::Index>(v)) = s.features.col(static_cast<Eigen::Index>(m.front()));
  }
  canonicalize(out);
  return out;
}

/// Open-space points, in scene order. Throws if the scene has none.
inline Points navigable_points(const Scene& s) {
  Points out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.is_open(i)) out.push_back(s.points[i]);
  if (out.empty()) throw Error(Stage::Input, "scene has no navigable (instance -1) points");
  return out;
}

}  // namespace atx
