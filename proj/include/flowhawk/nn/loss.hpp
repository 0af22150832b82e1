#pragma once

#include <cmath>
#include <vector>

#include "flowhawk/errors.hpp"
#include "flowhawk/nn/tensor.hpp"

namespace flowhawk::nn {

template <typename Scalar>
struct LossResult {
  Scalar value;
  Mat<Scalar> dlogits;  // (softmax - one_hot) / batch, valid when fused with softmax
};

/// Mean over the batch of -log p[label]. `probs` must be row-stochastic.
template <typename Scalar>
LossResult<Scalar> sparse_cross_entropy(const Mat<Scalar>& probs, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != probs.rows())
    throw ShapeError("sparse_cross_entropy: label count != batch");
  const Scalar tiny = static_cast<Scalar>(1e-300);
  LossResult<Scalar> res;
  res.value = Scalar(0);
  res.dlogits = probs;
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(probs.rows());
  for (Index r = 0; r < probs.rows(); ++r) {
    const int y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= probs.cols()) throw DataError("sparse_cross_entropy: label out of range");
    res.value -= std::log(std::max(probs(r, y), tiny));
    res.dlogits(r, y) -= Scalar(1);
  }
  res.value *= inv_b;
  res.dlogits *= inv_b;
  return res;
}

}  // namespace flowhawk::nn
