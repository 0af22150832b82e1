#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "flowhawk/errors.hpp"
#include "flowhawk/nn/init.hpp"
#include "flowhawk/nn/tensor.hpp"

namespace flowhawk::nn {

enum class RunMode { kTrain, kInfer };

/// Named view onto one parameter (or state) matrix and its gradient buffer.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Mat<Scalar>* value = nullptr;
  Mat<Scalar>* grad = nullptr;  // null for non-trainable state (BN running stats)
};

using Shape2 = std::pair<Index, Index>;  // (timesteps, channels)

template <typename Scalar>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  virtual Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) = 0;
  // Consumes the cache left by the last forward; returns d(loss)/d(input) and
  // accumulates parameter gradients.
  virtual Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) = 0;
  virtual Shape2 out_shape(Shape2 in) const = 0;

  virtual void collect_params(std::vector<ParamRef<Scalar>>& /*out*/) {}
  // Non-trainable tensors that still belong in a saved model.
  virtual void collect_state(std::vector<ParamRef<Scalar>>& /*out*/) {}
  virtual void reseed(uint64_t /*seed*/) {}

  const std::string& name() const { return name_; }

 protected:
  std::string name_;
};

// ---------------------------------------------------------------------------
// Depthwise-separable 1-D convolution: per-channel kernel along the timestep
// axis (same padding), then a pointwise channel mix, then ReLU.
template <typename Scalar>
class SeparableConv1D final : public Layer<Scalar> {
 public:
  SeparableConv1D(std::string name, Index in_channels, Index out_channels, Index kernel)
      : Layer<Scalar>(std::move(name)),
        in_channels_(in_channels),
        out_channels_(out_channels),
        kernel_(kernel) {
    if (kernel_ % 2 == 0 || kernel_ < 1) throw ShapeError(this->name_ + ": kernel size must be odd");
    depthwise_ = Mat<Scalar>::Zero(kernel_, in_channels_);
    pointwise_ = Mat<Scalar>::Zero(in_channels_, out_channels_);
    bias_ = Mat<Scalar>::Zero(1, out_channels_);
    d_depthwise_ = depthwise_;
    d_pointwise_ = pointwise_;
    d_bias_ = bias_;
  }

  void init(std::mt19937_64& rng) {
    init_fan_in(depthwise_, kernel_, rng);
    init_fan_in(pointwise_, in_channels_, rng);
  }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode) override {
    if (x.channels() != in_channels_)
      throw ShapeError(this->name_ + ": expected " + std::to_string(in_channels_) +
                       " channels, got " + std::to_string(x.channels()));
    const Index T = x.timesteps();
    const Index half = kernel_ / 2;
    x_ = x;
    mid_ = Tensor3<Scalar>(x.batch(), T, in_channels_);
    pre_ = Tensor3<Scalar>(x.batch(), T, out_channels_);
    Tensor3<Scalar> y(x.batch(), T, out_channels_);
    for (Index t = 0; t < T; ++t) {
      Mat<Scalar>& m = mid_.step(t);
      for (Index u = 0; u < kernel_; ++u) {
        const Index s = t + u - half;
        if (s < 0 || s >= T) continue;
        m += x.step(s) * depthwise_.row(u).asDiagonal();
      }
      pre_.step(t) = (m * pointwise_).rowwise() + bias_.row(0);
      y.step(t) = pre_.step(t).cwiseMax(Scalar(0));
    }
    return y;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    const Index T = x_.timesteps();
    const Index half = kernel_ / 2;
    Tensor3<Scalar> dmid(x_.batch(), T, in_channels_);
    Tensor3<Scalar> dx = x_.zeros_like();
    for (Index t = 0; t < T; ++t) {
      Mat<Scalar> dpre =
          dy.step(t).cwiseProduct((pre_.step(t).array() > Scalar(0)).template cast<Scalar>().matrix());
      d_bias_.row(0) += dpre.colwise().sum();
      d_pointwise_ += mid_.step(t).transpose() * dpre;
      dmid.step(t) = dpre * pointwise_.transpose();
    }
    for (Index t = 0; t < T; ++t) {
      for (Index u = 0; u < kernel_; ++u) {
        const Index s = t + u - half;
        if (s < 0 || s >= T) continue;
        d_depthwise_.row(u) += x_.step(s).cwiseProduct(dmid.step(t)).colwise().sum();
        dx.step(s) += dmid.step(t) * depthwise_.row(u).asDiagonal();
      }
    }
    return dx;
  }

  Shape2 out_shape(Shape2 in) const override { return {in.first, out_channels_}; }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    out.push_back({this->name_ + "/depthwise", &depthwise_, &d_depthwise_});
    out.push_back({this->name_ + "/pointwise", &pointwise_, &d_pointwise_});
    out.push_back({this->name_ + "/bias", &bias_, &d_bias_});
  }

 private:
  Index in_channels_, out_channels_, kernel_;
  Mat<Scalar> depthwise_, pointwise_, bias_;
  Mat<Scalar> d_depthwise_, d_pointwise_, d_bias_;
  Tensor3<Scalar> x_, mid_, pre_;
};

// ---------------------------------------------------------------------------
// Per-channel batch normalization over (batch x timesteps).
template <typename Scalar>
class BatchNorm1D final : public Layer<Scalar> {
 public:
  BatchNorm1D(std::string name, Index channels, Scalar momentum = Scalar(0.9),
              Scalar eps = Scalar(1e-5))
      : Layer<Scalar>(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps) {
    gamma_ = Mat<Scalar>::Ones(1, channels_);
    beta_ = Mat<Scalar>::Zero(1, channels_);
    running_mean_ = Mat<Scalar>::Zero(1, channels_);
    running_var_ = Mat<Scalar>::Ones(1, channels_);
    d_gamma_ = Mat<Scalar>::Zero(1, channels_);
    d_beta_ = Mat<Scalar>::Zero(1, channels_);
  }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) override {
    if (x.channels() != channels_) throw ShapeError(this->name_ + ": channel mismatch");
    const Index T = x.timesteps();
    train_mode_ = (mode == RunMode::kTrain);
    Mat<Scalar> mean(1, channels_), var(1, channels_);
    if (train_mode_) {
      const Scalar n = static_cast<Scalar>(x.batch() * T);
      mean.setZero();
      for (Index t = 0; t < T; ++t) mean += x.step(t).colwise().sum();
      mean /= n;
      var.setZero();
      for (Index t = 0; t < T; ++t)
        var += (x.step(t).rowwise() - mean.row(0)).array().square().matrix().colwise().sum();
      var /= n;
      running_mean_ = momentum_ * running_mean_ + (Scalar(1) - momentum_) * mean;
      running_var_ = momentum_ * running_var_ + (Scalar(1) - momentum_) * var;
      batch_n_ = n;
    } else {
      mean = running_mean_;
      var = running_var_;
    }
    inv_std_ = (var.array() + eps_).sqrt().inverse().matrix();
    xhat_ = Tensor3<Scalar>(x.batch(), T, channels_);
    Tensor3<Scalar> y(x.batch(), T, channels_);
    for (Index t = 0; t < T; ++t) {
      xhat_.step(t) = (x.step(t).rowwise() - mean.row(0)) * inv_std_.row(0).asDiagonal();
      y.step(t) = (xhat_.step(t) * gamma_.row(0).asDiagonal()).rowwise() + beta_.row(0);
    }
    return y;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    const Index T = xhat_.timesteps();
    Tensor3<Scalar> dx = xhat_.zeros_like();
    if (!train_mode_) {
      for (Index t = 0; t < T; ++t) {
        d_gamma_.row(0) += dy.step(t).cwiseProduct(xhat_.step(t)).colwise().sum();
        d_beta_.row(0) += dy.step(t).colwise().sum();
        dx.step(t) = dy.step(t) * (gamma_.cwiseProduct(inv_std_)).row(0).asDiagonal();
      }
      return dx;
    }
    Mat<Scalar> sum_dxhat = Mat<Scalar>::Zero(1, channels_);
    Mat<Scalar> sum_dxhat_xhat = Mat<Scalar>::Zero(1, channels_);
    for (Index t = 0; t < T; ++t) {
      Mat<Scalar> dxhat = dy.step(t) * gamma_.row(0).asDiagonal();
      sum_dxhat += dxhat.colwise().sum();
      sum_dxhat_xhat += dxhat.cwiseProduct(xhat_.step(t)).colwise().sum();
      d_gamma_.row(0) += dy.step(t).cwiseProduct(xhat_.step(t)).colwise().sum();
      d_beta_.row(0) += dy.step(t).colwise().sum();
    }
    const Scalar n = batch_n_;
    for (Index t = 0; t < T; ++t) {
      Mat<Scalar> dxhat = dy.step(t) * gamma_.row(0).asDiagonal();
      Mat<Scalar> term = dxhat * n;
      term.rowwise() -= sum_dxhat.row(0);
      term -= xhat_.step(t).cwiseProduct(sum_dxhat_xhat.replicate(term.rows(), 1));
      dx.step(t) = (term * inv_std_.row(0).asDiagonal()) / n;
    }
    return dx;
  }

  Shape2 out_shape(Shape2 in) const override { return in; }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    out.push_back({this->name_ + "/gamma", &gamma_, &d_gamma_});
    out.push_back({this->name_ + "/beta", &beta_, &d_beta_});
  }
  void collect_state(std::vector<ParamRef<Scalar>>& out) override {
    out.push_back({this->name_ + "/running_mean", &running_mean_, nullptr});
    out.push_back({this->name_ + "/running_var", &running_var_, nullptr});
  }

 private:
  Index channels_;
  Scalar momentum_, eps_;
  Mat<Scalar> gamma_, beta_, running_mean_, running_var_, d_gamma_, d_beta_;
  Mat<Scalar> inv_std_;
  Tensor3<Scalar> xhat_;
  Scalar batch_n_ = 1;
  bool train_mode_ = false;
};

// ---------------------------------------------------------------------------
enum class PadMode { kSame, kValid };

template <typename Scalar>
class MaxPool1D final : public Layer<Scalar> {
 public:
  MaxPool1D(std::string name, Index pool, Index stride, PadMode pad = PadMode::kSame)
      : Layer<Scalar>(std::move(name)), pool_(pool), stride_(stride), pad_(pad) {
    if (pool_ < 1 || stride_ < 1) throw ShapeError(this->name_ + ": pool/stride must be positive");
  }

  Shape2 out_shape(Shape2 in) const override { return {out_len(in.first), in.second}; }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode) override {
    const Index T = x.timesteps();
    const Index To = out_len(T);
    const Index pad_left = pad_ == PadMode::kSame
                               ? std::max<Index>((To - 1) * stride_ + pool_ - T, 0) / 2
                               : 0;
    in_steps_ = T;
    in_batch_ = x.batch();
    in_channels_ = x.channels();
    Tensor3<Scalar> y(x.batch(), To, x.channels());
    argmax_.assign(static_cast<size_t>(To),
                   Eigen::MatrixX<int>::Zero(x.batch(), x.channels()));
    for (Index o = 0; o < To; ++o) {
      bool first = true;
      for (Index u = 0; u < pool_; ++u) {
        const Index s = o * stride_ + u - pad_left;
        if (s < 0 || s >= T) continue;
        if (first) {
          y.step(o) = x.step(s);
          argmax_[static_cast<size_t>(o)].setConstant(static_cast<int>(s));
          first = false;
        } else {
          auto& am = argmax_[static_cast<size_t>(o)];
          for (Index c = 0; c < x.channels(); ++c)
            for (Index b = 0; b < x.batch(); ++b)
              if (x.step(s)(b, c) > y.step(o)(b, c)) {
                y.step(o)(b, c) = x.step(s)(b, c);
                am(b, c) = static_cast<int>(s);
              }
        }
      }
      if (first) throw ShapeError(this->name_ + ": empty pooling window");
    }
    return y;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    Tensor3<Scalar> dx(in_batch_, in_steps_, in_channels_);
    for (Index o = 0; o < dy.timesteps(); ++o) {
      const auto& am = argmax_[static_cast<size_t>(o)];
      for (Index c = 0; c < in_channels_; ++c)
        for (Index b = 0; b < in_batch_; ++b) dx.step(am(b, c))(b, c) += dy.step(o)(b, c);
    }
    return dx;
  }

 private:
  Index out_len(Index T) const {
    if (pad_ == PadMode::kSame) return (T + stride_ - 1) / stride_;
    if (T < pool_) throw ShapeError(this->name_ + ": input shorter than pool window");
    return (T - pool_) / stride_ + 1;
  }

  Index pool_, stride_;
  PadMode pad_;
  Index in_steps_ = 0, in_batch_ = 0, in_channels_ = 0;
  std::vector<Eigen::MatrixX<int>> argmax_;
};

// ---------------------------------------------------------------------------
// Pools the timestep axis to an arbitrary target length (near-equal windows,
// max within each). Used as the shape adjuster for timestep-wise dense wiring.
template <typename Scalar>
class AdaptiveMaxPool1D final : public Layer<Scalar> {
 public:
  AdaptiveMaxPool1D(std::string name, Index target_len)
      : Layer<Scalar>(std::move(name)), target_(target_len) {
    if (target_ < 1) throw ShapeError(this->name_ + ": target length must be positive");
  }

  Shape2 out_shape(Shape2 in) const override { return {target_, in.second}; }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode) override {
    const Index T = x.timesteps();
    in_steps_ = T;
    in_batch_ = x.batch();
    in_channels_ = x.channels();
    Tensor3<Scalar> y(x.batch(), target_, x.channels());
    argmax_.assign(static_cast<size_t>(target_),
                   Eigen::MatrixX<int>::Zero(x.batch(), x.channels()));
    for (Index o = 0; o < target_; ++o) {
      const Index s0 = (o * T) / target_;
      const Index s1 = std::max(s0 + 1, ((o + 1) * T + target_ - 1) / target_);
      y.step(o) = x.step(s0);
      auto& am = argmax_[static_cast<size_t>(o)];
      am.setConstant(static_cast<int>(s0));
      for (Index s = s0 + 1; s < s1 && s < T; ++s)
        for (Index c = 0; c < x.channels(); ++c)
          for (Index b = 0; b < x.batch(); ++b)
            if (x.step(s)(b, c) > y.step(o)(b, c)) {
              y.step(o)(b, c) = x.step(s)(b, c);
              am(b, c) = static_cast<int>(s);
            }
    }
    return y;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    Tensor3<Scalar> dx(in_batch_, in_steps_, in_channels_);
    for (Index o = 0; o < target_; ++o) {
      const auto& am = argmax_[static_cast<size_t>(o)];
      for (Index c = 0; c < in_channels_; ++c)
        for (Index b = 0; b < in_batch_; ++b) dx.step(am(b, c))(b, c) += dy.step(o)(b, c);
    }
    return dx;
  }

 private:
  Index target_;
  Index in_steps_ = 0, in_batch_ = 0, in_channels_ = 0;
  std::vector<Eigen::MatrixX<int>> argmax_;
};

// ---------------------------------------------------------------------------
// GRU, full output sequence. Gates use sigmoid, candidate uses tanh:
//   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br)
//   c = tanh(x Wc + (r.h) Uc + bc),  h' = z.h + (1-z).c
template <typename Scalar>
class Gru final : public Layer<Scalar> {
 public:
  Gru(std::string name, Index in_channels, Index units)
      : Layer<Scalar>(std::move(name)), in_(in_channels), units_(units) {
    auto zero_in = [&] { return Mat<Scalar>::Zero(in_, units_); };
    auto zero_rec = [&] { return Mat<Scalar>::Zero(units_, units_); };
    wz_ = zero_in(); wr_ = zero_in(); wc_ = zero_in();
    uz_ = zero_rec(); ur_ = zero_rec(); uc_ = zero_rec();
    bz_ = Mat<Scalar>::Zero(1, units_); br_ = bz_; bc_ = bz_;
    dwz_ = wz_; dwr_ = wr_; dwc_ = wc_;
    duz_ = uz_; dur_ = ur_; duc_ = uc_;
    dbz_ = bz_; dbr_ = br_; dbc_ = bc_;
  }

  void init(std::mt19937_64& rng) {
    init_recurrent(wz_, in_, rng); init_recurrent(wr_, in_, rng); init_recurrent(wc_, in_, rng);
    init_recurrent(uz_, units_, rng); init_recurrent(ur_, units_, rng); init_recurrent(uc_, units_, rng);
  }

  Shape2 out_shape(Shape2 in) const override { return {in.first, units_}; }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode) override {
    if (x.channels() != in_) throw ShapeError(this->name_ + ": channel mismatch");
    const Index T = x.timesteps();
    const Index B = x.batch();
    x_ = x;
    z_ = Tensor3<Scalar>(B, T, units_);
    r_ = Tensor3<Scalar>(B, T, units_);
    c_ = Tensor3<Scalar>(B, T, units_);
    h_ = Tensor3<Scalar>(B, T, units_);
    Mat<Scalar> h_prev = Mat<Scalar>::Zero(B, units_);
    for (Index t = 0; t < T; ++t) {
      z_.step(t) = sigmoid(((x.step(t) * wz_ + h_prev * uz_).rowwise() + bz_.row(0)).eval());
      r_.step(t) = sigmoid(((x.step(t) * wr_ + h_prev * ur_).rowwise() + br_.row(0)).eval());
      c_.step(t) = ((x.step(t) * wc_ + r_.step(t).cwiseProduct(h_prev) * uc_).rowwise() + bc_.row(0))
                       .array()
                       .tanh()
                       .matrix();
      h_.step(t) = z_.step(t).cwiseProduct(h_prev) +
                   (Mat<Scalar>::Ones(B, units_) - z_.step(t)).cwiseProduct(c_.step(t));
      h_prev = h_.step(t);
    }
    return h_;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    const Index T = x_.timesteps();
    const Index B = x_.batch();
    Tensor3<Scalar> dx = x_.zeros_like();
    Mat<Scalar> dh_next = Mat<Scalar>::Zero(B, units_);
    for (Index t = T - 1; t >= 0; --t) {
      const Mat<Scalar> h_prev = t > 0 ? h_.step(t - 1) : Mat<Scalar>::Zero(B, units_);
      Mat<Scalar> dh = dy.step(t) + dh_next;
      const Mat<Scalar>& z = z_.step(t);
      const Mat<Scalar>& r = r_.step(t);
      const Mat<Scalar>& c = c_.step(t);
      Mat<Scalar> dc = dh.cwiseProduct(Mat<Scalar>::Ones(B, units_) - z)
                           .cwiseProduct(Mat<Scalar>::Ones(B, units_) - c.cwiseProduct(c));
      Mat<Scalar> dz = dh.cwiseProduct(h_prev - c).cwiseProduct(z).cwiseProduct(
          Mat<Scalar>::Ones(B, units_) - z);
      Mat<Scalar> drh = dc * uc_.transpose();
      Mat<Scalar> dr =
          drh.cwiseProduct(h_prev).cwiseProduct(r).cwiseProduct(Mat<Scalar>::Ones(B, units_) - r);

      dwc_ += x_.step(t).transpose() * dc;
      duc_ += (r.cwiseProduct(h_prev)).transpose() * dc;
      dbc_.row(0) += dc.colwise().sum();
      dwz_ += x_.step(t).transpose() * dz;
      duz_ += h_prev.transpose() * dz;
      dbz_.row(0) += dz.colwise().sum();
      dwr_ += x_.step(t).transpose() * dr;
      dur_ += h_prev.transpose() * dr;
      dbr_.row(0) += dr.colwise().sum();

      dx.step(t) = dz * wz_.transpose() + dr * wr_.transpose() + dc * wc_.transpose();
      dh_next = dh.cwiseProduct(z) + drh.cwiseProduct(r) + dz * uz_.transpose() + dr * ur_.transpose();
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    out.push_back({this->name_ + "/wz", &wz_, &dwz_});
    out.push_back({this->name_ + "/wr", &wr_, &dwr_});
    out.push_back({this->name_ + "/wc", &wc_, &dwc_});
    out.push_back({this->name_ + "/uz", &uz_, &duz_});
    out.push_back({this->name_ + "/ur", &ur_, &dur_});
    out.push_back({this->name_ + "/uc", &uc_, &duc_});
    out.push_back({this->name_ + "/bz", &bz_, &dbz_});
    out.push_back({this->name_ + "/br", &br_, &dbr_});
    out.push_back({this->name_ + "/bc", &bc_, &dbc_});
  }

 private:
  static Mat<Scalar> sigmoid(const Mat<Scalar>& m) {
    return ((-m.array()).exp() + Scalar(1)).inverse().matrix();
  }

  Index in_, units_;
  Mat<Scalar> wz_, wr_, wc_, uz_, ur_, uc_, bz_, br_, bc_;
  Mat<Scalar> dwz_, dwr_, dwc_, duz_, dur_, duc_, dbz_, dbr_, dbc_;
  Tensor3<Scalar> x_, z_, r_, c_, h_;
};

// ---------------------------------------------------------------------------
// Inverted-scaling dropout; identity at inference.
template <typename Scalar>
class Dropout final : public Layer<Scalar> {
 public:
  Dropout(std::string name, double rate) : Layer<Scalar>(std::move(name)), rate_(rate) {
    if (rate_ < 0.0 || rate_ >= 1.0) throw ConfigError(this->name_ + ": rate must be in [0,1)");
  }

  void reseed(uint64_t seed) override { rng_.seed(seed); }

  Shape2 out_shape(Shape2 in) const override { return in; }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) override {
    if (mode == RunMode::kInfer || rate_ == 0.0) {
      active_ = false;
      return x;
    }
    active_ = true;
    const Scalar keep = static_cast<Scalar>(1.0 - rate_);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    mask_ = Tensor3<Scalar>(x.batch(), x.timesteps(), x.channels());
    Tensor3<Scalar> y(x.batch(), x.timesteps(), x.channels());
    for (Index t = 0; t < x.timesteps(); ++t) {
      for (Index c = 0; c < x.channels(); ++c)
        for (Index b = 0; b < x.batch(); ++b)
          mask_.step(t)(b, c) = dist(rng_) < rate_ ? Scalar(0) : Scalar(1) / keep;
      y.step(t) = x.step(t).cwiseProduct(mask_.step(t));
    }
    return y;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    if (!active_) return dy;
    Tensor3<Scalar> dx(dy.batch(), dy.timesteps(), dy.channels());
    for (Index t = 0; t < dy.timesteps(); ++t) dx.step(t) = dy.step(t).cwiseProduct(mask_.step(t));
    return dx;
  }

 private:
  double rate_;
  std::mt19937_64 rng_{0xf10c};
  Tensor3<Scalar> mask_;
  bool active_ = false;
};

// ---------------------------------------------------------------------------
// Width-preserving per-timestep affine map with identity activation.
template <typename Scalar>
class LinearBridge final : public Layer<Scalar> {
 public:
  LinearBridge(std::string name, Index channels)
      : Layer<Scalar>(std::move(name)), channels_(channels) {
    w_ = Mat<Scalar>::Zero(channels_, channels_);
    b_ = Mat<Scalar>::Zero(1, channels_);
    dw_ = w_;
    db_ = b_;
  }

  void init(std::mt19937_64& rng) { init_fan_in(w_, channels_, rng); }

  Shape2 out_shape(Shape2 in) const override { return in; }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode) override {
    if (x.channels() != channels_) throw ShapeError(this->name_ + ": channel mismatch");
    x_ = x;
    Tensor3<Scalar> y(x.batch(), x.timesteps(), channels_);
    for (Index t = 0; t < x.timesteps(); ++t)
      y.step(t) = (x.step(t) * w_).rowwise() + b_.row(0);
    return y;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    Tensor3<Scalar> dx = x_.zeros_like();
    for (Index t = 0; t < dy.timesteps(); ++t) {
      dw_ += x_.step(t).transpose() * dy.step(t);
      db_.row(0) += dy.step(t).colwise().sum();
      dx.step(t) = dy.step(t) * w_.transpose();
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    out.push_back({this->name_ + "/w", &w_, &dw_});
    out.push_back({this->name_ + "/b", &b_, &db_});
  }

 private:
  Index channels_;
  Mat<Scalar> w_, b_, dw_, db_;
  Tensor3<Scalar> x_;
};

// ---------------------------------------------------------------------------
// Head pieces working on (batch x channels) matrices.

template <typename Scalar>
class GlobalAvgPool {
 public:
  Mat<Scalar> forward(const Tensor3<Scalar>& x) {
    in_steps_ = x.timesteps();
    in_batch_ = x.batch();
    in_channels_ = x.channels();
    Mat<Scalar> y = Mat<Scalar>::Zero(x.batch(), x.channels());
    for (Index t = 0; t < x.timesteps(); ++t) y += x.step(t);
    return y / static_cast<Scalar>(x.timesteps());
  }

  Tensor3<Scalar> backward(const Mat<Scalar>& dy) {
    Tensor3<Scalar> dx(in_batch_, in_steps_, in_channels_);
    const Mat<Scalar> share = dy / static_cast<Scalar>(in_steps_);
    for (Index t = 0; t < in_steps_; ++t) dx.step(t) = share;
    return dx;
  }

 private:
  Index in_steps_ = 0, in_batch_ = 0, in_channels_ = 0;
};

template <typename Scalar>
class DenseSoftmax {
 public:
  DenseSoftmax(std::string name, Index in_features, Index classes)
      : name_(std::move(name)), in_(in_features), classes_(classes) {
    w_ = Mat<Scalar>::Zero(in_, classes_);
    b_ = Mat<Scalar>::Zero(1, classes_);
    dw_ = w_;
    db_ = b_;
  }

  void init(std::mt19937_64& rng) { init_fan_in(w_, in_, rng); }

  // Returns row-stochastic probabilities.
  Mat<Scalar> forward(const Mat<Scalar>& x) {
    if (x.cols() != in_) throw ShapeError(name_ + ": feature mismatch");
    x_ = x;
    Mat<Scalar> logits = (x * w_).rowwise() + b_.row(0);
    Mat<Scalar> probs(logits.rows(), logits.cols());
    for (Index r = 0; r < logits.rows(); ++r) {
      const Scalar m = logits.row(r).maxCoeff();
      Eigen::Array<Scalar, 1, Eigen::Dynamic> e = (logits.row(r).array() - m).exp();
      probs.row(r) = (e / e.sum()).matrix();
    }
    return probs;
  }

  // dlogits is the gradient w.r.t. the pre-softmax logits (softmax+CE fused).
  Mat<Scalar> backward(const Mat<Scalar>& dlogits) {
    dw_ += x_.transpose() * dlogits;
    db_.row(0) += dlogits.colwise().sum();
    return dlogits * w_.transpose();
  }

  void collect_params(std::vector<ParamRef<Scalar>>& out) {
    out.push_back({name_ + "/w", &w_, &dw_});
    out.push_back({name_ + "/b", &b_, &db_});
  }

  Index classes() const { return classes_; }

 private:
  std::string name_;
  Index in_, classes_;
  Mat<Scalar> w_, b_, dw_, db_, x_;
};

}  // namespace flowhawk::nn
