#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowhawk/nn/blocks.hpp"
#include "flowhawk/nn/loss.hpp"

namespace flowhawk::nn {

struct SubnetSpec {
  char variant = 'A';  // 'A' | 'B' | 'C'
  std::vector<BlockSpec> blocks;
  int classes = 10;
  int feature_count = 47;
  int input_channels = 1;
};

struct SubnetHyper {
  int filters = 0;  // 0 -> feature_count
  int kernel = 3;
  int pool = 2;
  double dropout_rate = 0.2;
};

/// Subnet construction per variant:
///  A: depth shape-preserving residual blocks (type A);
///  B: depth downsampling residual blocks (type B) densely connected along
///     the timestep axis;
///  C: depth dense blocks (inner_plain plain blocks each) interleaved with
///     one downsampling plain block, head after the last dense block.
inline SubnetSpec make_subnet_spec(char variant, int depth, int inner_plain, int classes,
                                   int feature_count, const SubnetHyper& h = {}) {
  if (depth < 1) throw ConfigError("subnet depth must be >= 1");
  SubnetSpec spec;
  spec.variant = variant;
  spec.classes = classes;
  spec.feature_count = feature_count;
  const int filters = h.filters > 0 ? h.filters : feature_count;
  BlockSpec base;
  base.filters = filters;
  base.kernel = h.kernel;
  base.pool = h.pool;
  base.dropout_rate = h.dropout_rate;
  switch (variant) {
    case 'A': {
      base.kind = BlockKind::kResA;
      for (int i = 0; i < depth; ++i) spec.blocks.push_back(base);
      break;
    }
    case 'B': {
      base.kind = BlockKind::kResB;
      base.units = filters;
      for (int i = 0; i < depth; ++i) spec.blocks.push_back(base);
      break;
    }
    case 'C': {
      if (inner_plain < 1) throw ConfigError("variant C needs inner_plain >= 1");
      for (int i = 0; i < depth; ++i) {
        if (i > 0) {
          BlockSpec inter = base;
          inter.kind = BlockKind::kPlain;
          inter.downsample = true;
          spec.blocks.push_back(inter);
        }
        BlockSpec dense = base;
        dense.kind = BlockKind::kDense;
        dense.inner_plain_count = inner_plain;
        spec.blocks.push_back(dense);
      }
      break;
    }
    default:
      throw ConfigError(std::string("unknown subnet variant '") + variant + "'");
  }
  return spec;
}

// ---------------------------------------------------------------------------
template <typename Scalar>
class Network {
 public:
  Network(const SubnetSpec& spec, uint64_t seed) : spec_(spec) {
    std::mt19937_64 rng(mix_seed(seed, 0x6e657477));
    Index ch = spec.input_channels;
    Index steps = spec.feature_count;
    for (size_t i = 0; i < spec.blocks.size(); ++i) {
      const BlockSpec& b = spec.blocks[i];
      const std::string nm = "blk" + std::to_string(i);
      std::unique_ptr<Layer<Scalar>> layer;
      switch (b.kind) {
        case BlockKind::kPlain:
          layer = std::make_unique<PlainBlock<Scalar>>(nm, ch, b, rng);
          break;
        case BlockKind::kResA:
          layer = std::make_unique<ResBlockA<Scalar>>(nm, ch, b, rng);
          break;
        case BlockKind::kResB:
          layer = std::make_unique<ResBlockB<Scalar>>(nm, ch, b, rng);
          break;
        case BlockKind::kDense:
          layer = std::make_unique<DenseBlock<Scalar>>(nm, ch, b, rng);
          break;
      }
      Shape2 out = layer->out_shape({steps, ch});
      steps = out.first;
      ch = out.second;
      blocks_.push_back(std::move(layer));
    }
    time_dense_ = (spec.variant == 'B');
    head_channels_ = ch;
    dense_ = std::make_unique<DenseSoftmax<Scalar>>("head/dense", ch, spec.classes);
    dense_->init(rng);
  }

  /// Forward to row-stochastic class probabilities, (batch x classes).
  Mat<Scalar> forward(const Tensor3<Scalar>& x, RunMode mode) {
    if (x.timesteps() != spec_.feature_count || x.channels() != spec_.input_channels)
      throw ShapeError("network: input must be (batch, " + std::to_string(spec_.feature_count) +
                       ", " + std::to_string(spec_.input_channels) + ")");
    outs_.assign(blocks_.size(), Tensor3<Scalar>());
    adapters_.clear();
    adapters_.resize(blocks_.size());
    piece_len_.assign(blocks_.size(), 0);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      if (time_dense_ && i >= 2) {
        // Pieces: earlier outputs then the immediate input, pooled to the
        // shortest piece so the timestep concatenation stays bounded.
        Index target = outs_[i - 1].timesteps();
        for (size_t j = 0; j + 1 < i; ++j) target = std::min(target, outs_[j].timesteps());
        piece_len_[i] = target;
        std::vector<Tensor3<Scalar>> adjusted;
        adjusted.reserve(i);
        for (size_t j = 0; j < i; ++j) {
          auto pool = std::make_unique<AdaptiveMaxPool1D<Scalar>>(
              "adapt" + std::to_string(i) + "_" + std::to_string(j), target);
          adjusted.push_back(pool->forward(outs_[j], mode));
          adapters_[i].push_back(std::move(pool));
        }
        std::vector<const Tensor3<Scalar>*> ptrs;
        for (const auto& a : adjusted) ptrs.push_back(&a);
        outs_[i] = blocks_[i]->forward(concat_timesteps<Scalar>(ptrs), mode);
      } else {
        outs_[i] = blocks_[i]->forward(i == 0 ? x : outs_[i - 1], mode);
      }
    }
    gap_in_index_ = blocks_.size() - 1;
    return dense_->forward(gap_.forward(outs_.back()));
  }

  /// Backpropagate from d(loss)/d(logits); accumulates parameter gradients.
  void backward(const Mat<Scalar>& dlogits) {
    std::vector<Tensor3<Scalar>> douts(blocks_.size());
    douts[gap_in_index_] = gap_.backward(dense_->backward(dlogits));
    for (size_t ii = blocks_.size(); ii-- > 0;) {
      Tensor3<Scalar> din = checked(blocks_[ii]->backward(douts[ii]), blocks_[ii]->name());
      if (time_dense_ && ii >= 2) {
        const Index L = piece_len_[ii];
        Index at = 0;
        for (size_t j = 0; j < ii; ++j) {
          Tensor3<Scalar> dpiece(din.batch(), L, din.channels());
          for (Index t = 0; t < L; ++t) dpiece.step(t) = din.step(at + t);
          at += L;
          accumulate(douts[j], adapters_[ii][j]->backward(dpiece));
        }
      } else if (ii > 0) {
        accumulate(douts[ii - 1], din);
      } else {
        dx_ = din;
      }
    }
  }

  /// Gradient w.r.t. the network input from the last backward (diagnostics).
  const Tensor3<Scalar>& input_gradient() const { return dx_; }

  std::vector<ParamRef<Scalar>> params() {
    std::vector<ParamRef<Scalar>> out;
    for (auto& b : blocks_) b->collect_params(out);
    dense_->collect_params(out);
    return out;
  }

  std::vector<ParamRef<Scalar>> state() {
    std::vector<ParamRef<Scalar>> out;
    for (auto& b : blocks_) b->collect_state(out);
    return out;
  }

  void reseed_dropout(uint64_t seed) {
    for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i]->reseed(mix_seed(seed, i));
  }

  const SubnetSpec& spec() const { return spec_; }
  Index head_channels() const { return head_channels_; }

 private:
  static Tensor3<Scalar> checked(Tensor3<Scalar> g, const std::string& layer) {
    if (!g.all_finite()) throw NumericError("non-finite gradient leaving " + layer);
    return g;
  }

  static void accumulate(Tensor3<Scalar>& into, const Tensor3<Scalar>& g) {
    if (into.timesteps() == 0) {
      into = g;
      return;
    }
    for (Index t = 0; t < g.timesteps(); ++t) into.step(t) += g.step(t);
  }

  SubnetSpec spec_;
  std::vector<std::unique_ptr<Layer<Scalar>>> blocks_;
  bool time_dense_ = false;
  Index head_channels_ = 0;
  GlobalAvgPool<Scalar> gap_;
  std::unique_ptr<DenseSoftmax<Scalar>> dense_;
  // per-forward caches
  std::vector<Tensor3<Scalar>> outs_;
  std::vector<std::vector<std::unique_ptr<AdaptiveMaxPool1D<Scalar>>>> adapters_;
  std::vector<Index> piece_len_;
  size_t gap_in_index_ = 0;
  Tensor3<Scalar> dx_;
};

}  // namespace flowhawk::nn
