#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "flowhawk/nn/tensor.hpp"

namespace flowhawk::nn {

// splitmix64; used to derive per-layer / per-step seeds from one pipeline seed
// so that seeding is order-independent.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename Scalar>
void fill_uniform(Mat<Scalar>& m, Scalar limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(limit),
                                              static_cast<double>(limit));
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(dist(rng));
}

// fan-in scaled uniform, U(+-sqrt(3/fan_in))
template <typename Scalar>
void init_fan_in(Mat<Scalar>& m, Index fan_in, std::mt19937_64& rng) {
  fill_uniform(m, static_cast<Scalar>(std::sqrt(3.0 / static_cast<double>(std::max<Index>(fan_in, 1)))), rng);
}

// plain scaled uniform for recurrent matrices, U(+-sqrt(1/fan_in))
template <typename Scalar>
void init_recurrent(Mat<Scalar>& m, Index fan_in, std::mt19937_64& rng) {
  fill_uniform(m, static_cast<Scalar>(std::sqrt(1.0 / static_cast<double>(std::max<Index>(fan_in, 1)))), rng);
}

template <typename Scalar>
void fill_gaussian(Mat<Scalar>& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(dist(rng));
}

}  // namespace flowhawk::nn
