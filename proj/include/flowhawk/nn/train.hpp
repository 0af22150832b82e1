#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "flowhawk/errors.hpp"
#include "flowhawk/nn/loss.hpp"
#include "flowhawk/nn/network.hpp"
#include "flowhawk/nn/optimizer.hpp"

namespace flowhawk::nn {

struct Dataset {
  Mat<double> features;     // n x f, already normalized to [0,1]
  std::vector<int> labels;  // class indices

  Index size() const { return features.rows(); }
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 256;
  double learning_rate = 0.001;
  double rho = 0.9;
  double eps = 1e-7;
  double val_fraction = 0.1;
  uint64_t seed = 1;
  double early_stop_vacc = 2.0;  // > 1 disables early stopping
  bool verbose = false;
};

struct TrainReport {
  double vacc = 0.0;  // held-out accuracy of the final model
  double vp = 0.0;    // held-out macro precision
  int epochs_run = 0;
  std::vector<double> epoch_loss;
};

template <typename Scalar>
Mat<Scalar> predict_probs(Network<Scalar>& net, const Mat<Scalar>& features,
                          Index chunk = 512) {
  Mat<Scalar> probs(features.rows(), net.spec().classes);
  for (Index at = 0; at < features.rows(); at += chunk) {
    const Index n = std::min(chunk, features.rows() - at);
    Tensor3<Scalar> x = Tensor3<Scalar>::from_feature_rows(features.middleRows(at, n));
    probs.middleRows(at, n) = net.forward(x, RunMode::kInfer);
  }
  return probs;
}

template <typename Scalar>
std::vector<int> predict_classes(Network<Scalar>& net, const Mat<Scalar>& features) {
  Mat<Scalar> probs = predict_probs(net, features);
  std::vector<int> out(static_cast<size_t>(probs.rows()));
  for (Index r = 0; r < probs.rows(); ++r) {
    Index best;
    probs.row(r).maxCoeff(&best);
    out[static_cast<size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

inline double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.empty()) return 0.0;
  size_t ok = 0;
  for (size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

// Macro-averaged precision over the classes present in the truth; classes the
// model never predicts contribute zero.
inline double macro_precision_of(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int classes) {
  std::vector<long> tp(static_cast<size_t>(classes), 0), fp(static_cast<size_t>(classes), 0);
  std::vector<bool> present(static_cast<size_t>(classes), false);
  for (size_t i = 0; i < pred.size(); ++i) {
    present[static_cast<size_t>(truth[i])] = true;
    if (pred[i] == truth[i])
      ++tp[static_cast<size_t>(pred[i])];
    else
      ++fp[static_cast<size_t>(pred[i])];
  }
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    if (!present[static_cast<size_t>(c)]) continue;
    ++counted;
    const long denom = tp[static_cast<size_t>(c)] + fp[static_cast<size_t>(c)];
    if (denom > 0) sum += static_cast<double>(tp[static_cast<size_t>(c)]) / static_cast<double>(denom);
  }
  return counted > 0 ? sum / counted : 0.0;
}

/// Seeded stratified split; returns (train_indices, val_indices).
inline std::pair<std::vector<Index>, std::vector<Index>> stratified_split(
    const std::vector<int>& labels, double val_fraction, uint64_t seed) {
  std::map<int, std::vector<Index>> groups;
  for (size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Index>(i));
  std::mt19937_64 rng(mix_seed(seed, 0x5b1d));
  std::vector<Index> train, val;
  for (auto& [label, idx] : groups) {
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t take = static_cast<size_t>(std::floor(val_fraction * static_cast<double>(idx.size())));
    if (take == 0 && idx.size() >= 2 && val_fraction > 0.0) take = 1;
    for (size_t i = 0; i < idx.size(); ++i)
      (i < take ? val : train).push_back(idx[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

/// Minimizes sparse cross-entropy with RMSprop; fills VACC/VP from the
/// held-out stratified split. Deterministic for a fixed seed.
template <typename Scalar>
TrainReport train(Network<Scalar>& net, const Dataset& data, const TrainConfig& cfg) {
  if (data.size() == 0) throw DataError("train: empty dataset");
  for (int y : data.labels)
    if (y < 0 || y >= net.spec().classes) throw DataError("train: label out of class range");

  auto [train_idx, val_idx] = stratified_split(data.labels, cfg.val_fraction, cfg.seed);
  if (val_idx.empty()) throw DataError("train: dataset too small for a validation split");

  auto gather = [&](const std::vector<Index>& idx) {
    Mat<Scalar> x(static_cast<Index>(idx.size()), data.features.cols());
    std::vector<int> y(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Index>(i)) = data.features.row(idx[i]).template cast<Scalar>();
      y[i] = data.labels[static_cast<size_t>(idx[i])];
    }
    return std::make_pair(std::move(x), std::move(y));
  };
  auto [train_x, train_y] = gather(train_idx);
  auto [val_x, val_y] = gather(val_idx);

  auto params = net.params();
  RmsProp<Scalar> opt(static_cast<Scalar>(cfg.learning_rate), static_cast<Scalar>(cfg.rho),
                      static_cast<Scalar>(cfg.eps));
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x50f1));

  TrainReport report;
  std::vector<Index> order(static_cast<size_t>(train_x.rows()));
  std::iota(order.begin(), order.end(), Index(0));
  uint64_t step = 0;

  auto evaluate = [&]() {
    const std::vector<int> pred = predict_classes(net, val_x);
    report.vacc = accuracy_of(pred, val_y);
    report.vp = macro_precision_of(pred, val_y, net.spec().classes);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    Index batches = 0;
    for (Index at = 0; at < train_x.rows(); at += cfg.batch_size) {
      const Index n = std::min<Index>(cfg.batch_size, train_x.rows() - at);
      Mat<Scalar> bx(n, train_x.cols());
      std::vector<int> by(static_cast<size_t>(n));
      for (Index i = 0; i < n; ++i) {
        bx.row(i) = train_x.row(order[static_cast<size_t>(at + i)]);
        by[static_cast<size_t>(i)] = train_y[static_cast<size_t>(order[static_cast<size_t>(at + i)])];
      }
      zero_grads(params);
      net.reseed_dropout(mix_seed(cfg.seed, 0xd0 + step));
      Mat<Scalar> probs = net.forward(Tensor3<Scalar>::from_feature_rows(bx), RunMode::kTrain);
      auto loss = sparse_cross_entropy(probs, by);
      if (!std::isfinite(static_cast<double>(loss.value)))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches));
      net.backward(loss.dlogits);
      opt.step(params);
      epoch_loss += static_cast<double>(loss.value);
      ++batches;
      ++step;
    }
    report.epoch_loss.push_back(batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0);
    report.epochs_run = epoch + 1;
    evaluate();
    if (report.vacc >= cfg.early_stop_vacc) break;
  }
  if (cfg.epochs == 0) evaluate();
  return report;
}

}  // namespace flowhawk::nn
