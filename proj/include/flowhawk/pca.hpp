#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "flowhawk/errors.hpp"

namespace flowhawk {

/// Principal components of centered data: rows of `components` are the top
/// right-singular directions, orthonormal, sign-fixed so the largest-magnitude
/// coefficient of each row is positive.
template <typename Scalar>
struct PcaModel {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> components;  // k x f
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> means;                    // 1 x f
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> explained_variance;       // k, descending
  bool rank_deficient = false;  // requested more components than the data rank
};

template <typename Scalar>
PcaModel<Scalar> pca_fit(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& data,
                         Eigen::Index n_components) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (n_components < 1) throw ConfigError("pca_fit: n_components must be >= 1");
  if (data.rows() < n_components || data.cols() < n_components)
    throw DataError("pca_fit: need at least n_components rows and columns");

  PcaModel<Scalar> model;
  model.means = data.colwise().mean();
  Matrix centered = data.rowwise() - model.means.row(0);

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar tol = std::max<Scalar>(Scalar(data.rows()), Scalar(data.cols())) * sv(0) *
                     Eigen::NumTraits<Scalar>::epsilon();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  const Eigen::Index keep = std::min(n_components, std::max<Eigen::Index>(rank, 1));
  model.rank_deficient = keep < n_components;

  model.components = svd.matrixV().leftCols(keep).transpose();
  model.explained_variance.resize(keep);
  const Scalar denom = static_cast<Scalar>(data.rows() - 1);
  for (Eigen::Index i = 0; i < keep; ++i)
    model.explained_variance(i) = sv(i) * sv(i) / denom;

  // deterministic sign: flip each component so its largest-|coefficient| entry
  // is positive (first such index on ties)
  for (Eigen::Index i = 0; i < keep; ++i) {
    Eigen::Index at = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&at);
    if (model.components(i, at) < Scalar(0)) model.components.row(i) *= Scalar(-1);
  }
  return model;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pca_transform(
    const PcaModel<Scalar>& model,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& data) {
  if (data.cols() != model.means.cols())
    throw ShapeError("pca_transform: feature count differs from the fitted model");
  return (data.rowwise() - model.means.row(0)) * model.components.transpose();
}

}  // namespace flowhawk
