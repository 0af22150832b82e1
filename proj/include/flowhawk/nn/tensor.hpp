#pragma once

#include <Eigen/Dense>
#include <vector>

#include "flowhawk/errors.hpp"

namespace flowhawk::nn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;

/// Rank-3 activation tensor with layout (batch, timesteps, channels).
/// Stored as one (batch x channels) matrix per timestep, which keeps every
/// layer a sequence of plain Eigen matrix expressions.
template <typename Scalar>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index batch, Index timesteps, Index channels)
      : steps_(static_cast<size_t>(timesteps), Mat<Scalar>::Zero(batch, channels)) {}

  // One feature row becomes one sequence: (n x f) -> (n, f, 1).
  static Tensor3 from_feature_rows(const Mat<Scalar>& rows) {
    Tensor3 t(rows.rows(), rows.cols(), 1);
    for (Index f = 0; f < rows.cols(); ++f) t.step(f).col(0) = rows.col(f);
    return t;
  }

  Index batch() const { return steps_.empty() ? 0 : steps_.front().rows(); }
  Index timesteps() const { return static_cast<Index>(steps_.size()); }
  Index channels() const { return steps_.empty() ? 0 : steps_.front().cols(); }

  Mat<Scalar>& step(Index t) { return steps_[static_cast<size_t>(t)]; }
  const Mat<Scalar>& step(Index t) const { return steps_[static_cast<size_t>(t)]; }

  void set_zero() {
    for (auto& s : steps_) s.setZero();
  }

  bool all_finite() const {
    for (const auto& s : steps_)
      if (!s.allFinite()) return false;
    return true;
  }

  Tensor3 zeros_like() const {
    Tensor3 t;
    t.steps_.assign(steps_.size(), Mat<Scalar>::Zero(batch(), channels()));
    return t;
  }

 private:
  std::vector<Mat<Scalar>> steps_;
};

template <typename Scalar>
Tensor3<Scalar> operator+(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b) {
  if (a.timesteps() != b.timesteps() || a.channels() != b.channels() || a.batch() != b.batch())
    throw ShapeError("tensor add: shapes differ");
  Tensor3<Scalar> out(a.batch(), a.timesteps(), a.channels());
  for (Index t = 0; t < a.timesteps(); ++t) out.step(t) = a.step(t) + b.step(t);
  return out;
}

template <typename Scalar>
Tensor3<Scalar> concat_channels(const std::vector<const Tensor3<Scalar>*>& pieces) {
  Index ch = 0;
  for (const auto* p : pieces) {
    if (p->timesteps() != pieces.front()->timesteps() || p->batch() != pieces.front()->batch())
      throw ShapeError("concat_channels: batch/timesteps differ");
    ch += p->channels();
  }
  Tensor3<Scalar> out(pieces.front()->batch(), pieces.front()->timesteps(), ch);
  for (Index t = 0; t < out.timesteps(); ++t) {
    Index at = 0;
    for (const auto* p : pieces) {
      out.step(t).middleCols(at, p->channels()) = p->step(t);
      at += p->channels();
    }
  }
  return out;
}

template <typename Scalar>
Tensor3<Scalar> concat_timesteps(const std::vector<const Tensor3<Scalar>*>& pieces) {
  Index steps = 0;
  for (const auto* p : pieces) {
    if (p->channels() != pieces.front()->channels() || p->batch() != pieces.front()->batch())
      throw ShapeError("concat_timesteps: batch/channels differ");
    steps += p->timesteps();
  }
  Tensor3<Scalar> out(pieces.front()->batch(), steps, pieces.front()->channels());
  Index at = 0;
  for (const auto* p : pieces)
    for (Index t = 0; t < p->timesteps(); ++t) out.step(at++) = p->step(t);
  return out;
}

}  // namespace flowhawk::nn
