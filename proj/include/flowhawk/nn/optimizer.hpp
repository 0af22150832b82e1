#pragma once

#include <vector>

#include "flowhawk/errors.hpp"
#include "flowhawk/nn/layers.hpp"

namespace flowhawk::nn {

/// RMSprop:  acc <- rho*acc + (1-rho)*g^2,  p <- p - lr * g / (sqrt(acc) + eps)
template <typename Scalar>
class RmsProp {
 public:
  explicit RmsProp(Scalar lr = Scalar(0.001), Scalar rho = Scalar(0.9),
                   Scalar eps = Scalar(1e-7))
      : lr_(lr), rho_(rho), eps_(eps) {}

  void step(const std::vector<ParamRef<Scalar>>& params) {
    if (acc_.empty()) {
      acc_.reserve(params.size());
      for (const auto& p : params)
        acc_.push_back(Mat<Scalar>::Zero(p.value->rows(), p.value->cols()));
    }
    if (acc_.size() != params.size()) throw ShapeError("rmsprop: parameter set changed");
    for (size_t i = 0; i < params.size(); ++i) {
      const Mat<Scalar>& g = *params[i].grad;
      Mat<Scalar>& acc = acc_[i];
      acc = rho_ * acc + (Scalar(1) - rho_) * g.cwiseProduct(g);
      params[i].value->noalias() -=
          lr_ * g.cwiseQuotient((acc.array().sqrt() + eps_).matrix());
    }
  }

  Scalar learning_rate() const { return lr_; }

 private:
  Scalar lr_, rho_, eps_;
  std::vector<Mat<Scalar>> acc_;
};

template <typename Scalar>
void zero_grads(const std::vector<ParamRef<Scalar>>& params) {
  for (const auto& p : params)
    if (p.grad) p.grad->setZero();
}

}  // namespace flowhawk::nn
