#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowhawk/nn/layers.hpp"

namespace flowhawk::nn {

enum class BlockKind { kPlain, kResA, kResB, kDense };

struct BlockSpec {
  BlockKind kind = BlockKind::kPlain;
  int filters = 0;   // 0 -> resolved to the configured feature width
  int units = 0;     // 0 -> auto per block rules (res_a: input channels, res_b: filters)
  int kernel = 3;
  int pool = 2;
  double dropout_rate = 0.2;
  int inner_plain_count = 0;  // dense blocks only
  bool downsample = true;     // plain blocks: pool stride = pool (false -> stride 1)
};

// ---------------------------------------------------------------------------
// Plain block: DSC -> BN -> MP -> GRU -> dropout -> LB.
template <typename Scalar>
class PlainBlock : public Layer<Scalar> {
 public:
  PlainBlock(std::string name, Index in_channels, const BlockSpec& spec, std::mt19937_64& rng)
      : Layer<Scalar>(std::move(name)) {
    const Index filters = spec.filters > 0 ? spec.filters : in_channels;
    units_ = spec.units > 0 ? spec.units : filters;
    dsc_ = std::make_unique<SeparableConv1D<Scalar>>(this->name_ + "/dsc", in_channels, filters,
                                                     spec.kernel);
    bn_ = std::make_unique<BatchNorm1D<Scalar>>(this->name_ + "/bn", filters);
    mp_ = std::make_unique<MaxPool1D<Scalar>>(this->name_ + "/mp", spec.pool,
                                              spec.downsample ? spec.pool : 1, PadMode::kSame);
    gru_ = std::make_unique<Gru<Scalar>>(this->name_ + "/gru", filters, units_);
    drop_ = std::make_unique<Dropout<Scalar>>(this->name_ + "/dropout", spec.dropout_rate);
    lb_ = std::make_unique<LinearBridge<Scalar>>(this->name_ + "/lb", units_);
    dsc_->init(rng);
    gru_->init(rng);
    lb_->init(rng);
  }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) override {
    Tensor3<Scalar> h = dsc_->forward(x, mode);
    h = bn_->forward(h, mode);
    h = mp_->forward(h, mode);
    h = gru_->forward(h, mode);
    h = drop_->forward(h, mode);
    return lb_->forward(h, mode);
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    Tensor3<Scalar> d = lb_->backward(dy);
    d = drop_->backward(d);
    d = gru_->backward(d);
    d = mp_->backward(d);
    d = bn_->backward(d);
    return dsc_->backward(d);
  }

  Shape2 out_shape(Shape2 in) const override {
    Shape2 s = dsc_->out_shape(in);
    s = mp_->out_shape(s);
    s = gru_->out_shape(s);
    return s;
  }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    dsc_->collect_params(out);
    bn_->collect_params(out);
    gru_->collect_params(out);
    lb_->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<Scalar>>& out) override { bn_->collect_state(out); }
  void reseed(uint64_t seed) override { drop_->reseed(seed); }

  Index units() const { return units_; }

 private:
  Index units_ = 0;
  std::unique_ptr<SeparableConv1D<Scalar>> dsc_;
  std::unique_ptr<BatchNorm1D<Scalar>> bn_;
  std::unique_ptr<MaxPool1D<Scalar>> mp_;
  std::unique_ptr<Gru<Scalar>> gru_;
  std::unique_ptr<Dropout<Scalar>> drop_;
  std::unique_ptr<LinearBridge<Scalar>> lb_;
};

// ---------------------------------------------------------------------------
// Residual block, type A: shape-preserving plain chain with an end-to-end
// additive shortcut. The non-downsampling pool and units == input channels
// make the summation type-check.
template <typename Scalar>
class ResBlockA : public Layer<Scalar> {
 public:
  ResBlockA(std::string name, Index in_channels, BlockSpec spec, std::mt19937_64& rng)
      : Layer<Scalar>(std::move(name)) {
    if (spec.units > 0 && spec.units != in_channels)
      throw ShapeError(this->name_ + ": res_a needs units == input channels (" +
                       std::to_string(in_channels) + "), got " + std::to_string(spec.units));
    spec.units = static_cast<int>(in_channels);
    spec.downsample = false;
    chain_ = std::make_unique<PlainBlock<Scalar>>(this->name_ + "/plain", in_channels, spec, rng);
  }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) override {
    return chain_->forward(x, mode) + x;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    return chain_->backward(dy) + dy;
  }

  Shape2 out_shape(Shape2 in) const override { return in; }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override { chain_->collect_params(out); }
  void collect_state(std::vector<ParamRef<Scalar>>& out) override { chain_->collect_state(out); }
  void reseed(uint64_t seed) override { chain_->reseed(seed); }

 private:
  std::unique_ptr<PlainBlock<Scalar>> chain_;
};

// ---------------------------------------------------------------------------
// Residual block, type B: the pool downsamples and the shortcut taps the
// post-pool activation, spanning GRU -> dropout -> LB. Requires units == filters.
template <typename Scalar>
class ResBlockB : public Layer<Scalar> {
 public:
  ResBlockB(std::string name, Index in_channels, const BlockSpec& spec, std::mt19937_64& rng)
      : Layer<Scalar>(std::move(name)) {
    const Index filters = spec.filters > 0 ? spec.filters : in_channels;
    const Index units = spec.units > 0 ? spec.units : filters;
    if (units != filters)
      throw ShapeError(this->name_ + ": res_b needs units == filters for the post-pool shortcut");
    dsc_ = std::make_unique<SeparableConv1D<Scalar>>(this->name_ + "/dsc", in_channels, filters,
                                                     spec.kernel);
    bn_ = std::make_unique<BatchNorm1D<Scalar>>(this->name_ + "/bn", filters);
    mp_ = std::make_unique<MaxPool1D<Scalar>>(this->name_ + "/mp", spec.pool, spec.pool,
                                              PadMode::kSame);
    gru_ = std::make_unique<Gru<Scalar>>(this->name_ + "/gru", filters, units);
    drop_ = std::make_unique<Dropout<Scalar>>(this->name_ + "/dropout", spec.dropout_rate);
    lb_ = std::make_unique<LinearBridge<Scalar>>(this->name_ + "/lb", units);
    dsc_->init(rng);
    gru_->init(rng);
    lb_->init(rng);
    units_ = units;
  }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) override {
    Tensor3<Scalar> a = mp_->forward(bn_->forward(dsc_->forward(x, mode), mode), mode);
    Tensor3<Scalar> y = lb_->forward(drop_->forward(gru_->forward(a, mode), mode), mode);
    return y + a;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    Tensor3<Scalar> da = lb_->backward(dy);
    da = drop_->backward(da);
    da = gru_->backward(da);
    da = da + dy;  // shortcut joins at the post-pool activation
    return dsc_->backward(bn_->backward(mp_->backward(da)));
  }

  Shape2 out_shape(Shape2 in) const override {
    Shape2 s = dsc_->out_shape(in);
    s = mp_->out_shape(s);
    return {s.first, units_};
  }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    dsc_->collect_params(out);
    bn_->collect_params(out);
    gru_->collect_params(out);
    lb_->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<Scalar>>& out) override { bn_->collect_state(out); }
  void reseed(uint64_t seed) override { drop_->reseed(seed); }

 private:
  Index units_ = 0;
  std::unique_ptr<SeparableConv1D<Scalar>> dsc_;
  std::unique_ptr<BatchNorm1D<Scalar>> bn_;
  std::unique_ptr<MaxPool1D<Scalar>> mp_;
  std::unique_ptr<Gru<Scalar>> gru_;
  std::unique_ptr<Dropout<Scalar>> drop_;
  std::unique_ptr<LinearBridge<Scalar>> lb_;
};

// ---------------------------------------------------------------------------
// Dense block: every inner plain block sees the channel-axis concatenation of
// the block input and all earlier inner outputs; the block output is the final
// running concatenation. Inner pools keep stride 1 so lengths stay equal.
template <typename Scalar>
class DenseBlock : public Layer<Scalar> {
 public:
  DenseBlock(std::string name, Index in_channels, const BlockSpec& spec, std::mt19937_64& rng)
      : Layer<Scalar>(std::move(name)), in_channels_(in_channels) {
    if (spec.inner_plain_count < 1)
      throw ConfigError(this->name_ + ": dense block needs inner_plain_count >= 1");
    BlockSpec inner = spec;
    inner.downsample = false;
    Index ch = in_channels;
    for (int i = 0; i < spec.inner_plain_count; ++i) {
      inner_.push_back(std::make_unique<PlainBlock<Scalar>>(
          this->name_ + "/plain" + std::to_string(i), ch, inner, rng));
      ch += inner_.back()->units();
    }
    out_channels_ = ch;
  }

  Tensor3<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) override {
    cat_ = x;
    for (auto& blk : inner_) {
      Tensor3<Scalar> out = blk->forward(cat_, mode);
      cat_ = concat_channels<Scalar>({&cat_, &out});
    }
    return cat_;
  }

  Tensor3<Scalar> backward(const Tensor3<Scalar>& dy) override {
    Tensor3<Scalar> dcat = dy;
    for (auto it = inner_.rbegin(); it != inner_.rend(); ++it) {
      const Index tail = (*it)->units();
      const Index keep = dcat.channels() - tail;
      Tensor3<Scalar> dprev(dcat.batch(), dcat.timesteps(), keep);
      Tensor3<Scalar> dout(dcat.batch(), dcat.timesteps(), tail);
      for (Index t = 0; t < dcat.timesteps(); ++t) {
        dprev.step(t) = dcat.step(t).leftCols(keep);
        dout.step(t) = dcat.step(t).rightCols(tail);
      }
      dcat = dprev + (*it)->backward(dout);
    }
    return dcat;
  }

  Shape2 out_shape(Shape2 in) const override { return {in.first, out_channels_}; }

  void collect_params(std::vector<ParamRef<Scalar>>& out) override {
    for (auto& b : inner_) b->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<Scalar>>& out) override {
    for (auto& b : inner_) b->collect_state(out);
  }
  void reseed(uint64_t seed) override {
    for (size_t i = 0; i < inner_.size(); ++i) inner_[i]->reseed(mix_seed(seed, i));
  }

  Index out_channels() const { return out_channels_; }

 private:
  Index in_channels_, out_channels_ = 0;
  std::vector<std::unique_ptr<PlainBlock<Scalar>>> inner_;
  Tensor3<Scalar> cat_;
};

}  // namespace flowhawk::nn
