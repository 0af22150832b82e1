#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "flowhawk/errors.hpp"

namespace flowhawk {

/// Local-outlier-factor scores over Euclidean distances.
///  - k-distance: distance to the k-th nearest neighbor;
///  - the neighborhood contains every point within k-distance, so it can
///    exceed k under distance ties;
///  - reachability distance RD(o,p) = max(kd(p), d(o,p));
///  - LRD(o) = |N(o)| / sum_p RD(o,p), capped when the mean RD is zero;
///  - LOF(o) = mean_p LRD(p) / LRD(o).
template <typename Scalar>
struct LofResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> k_distance;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lrd;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores;
  std::vector<std::vector<Eigen::Index>> neighbors;
};

inline constexpr double kLofDensityCap = 1e12;

template <typename Scalar>
LofResult<Scalar> lof_scores(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& points,
                             Eigen::Index k) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw ConfigError("lof_scores: k must be >= 1");
  if (n <= k) throw ConfigError("lof_scores: need more points than neighbors (n > k)");

  LofResult<Scalar> res;
  res.k_distance.resize(n);
  res.lrd.resize(n);
  res.scores.resize(n);
  res.neighbors.assign(static_cast<size_t>(n), {});

  // O(n^2) neighbor scan with O(n) per-point memory; distances are recomputed
  // in the second pass rather than materializing the full matrix.
  std::vector<Scalar> dist(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      dist[static_cast<size_t>(j)] = (points.row(i) - points.row(j)).norm();
    std::vector<Scalar> sorted;
    sorted.reserve(static_cast<size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sorted.push_back(dist[static_cast<size_t>(j)]);
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    res.k_distance(i) = sorted[static_cast<size_t>(k - 1)];
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && dist[static_cast<size_t>(j)] <= res.k_distance(i))
        res.neighbors[static_cast<size_t>(i)].push_back(j);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar sum = Scalar(0);
    for (Eigen::Index j : res.neighbors[static_cast<size_t>(i)])
      sum += std::max(res.k_distance(j), (points.row(i) - points.row(j)).norm());
    const Scalar count = static_cast<Scalar>(res.neighbors[static_cast<size_t>(i)].size());
    res.lrd(i) = sum > Scalar(0) ? count / sum : static_cast<Scalar>(kLofDensityCap);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar sum = Scalar(0);
    for (Eigen::Index j : res.neighbors[static_cast<size_t>(i)]) sum += res.lrd(j);
    const Scalar count = static_cast<Scalar>(res.neighbors[static_cast<size_t>(i)].size());
    res.scores(i) = sum / (count * res.lrd(i));
  }
  return res;
}

}  // namespace flowhawk
