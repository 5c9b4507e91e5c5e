#pragma once

// Synthetic inputs shared by the unit and acceptance suites.

#include <vector>

#include "hyperntf/evaluation.hpp"
#include "hyperntf/random.hpp"
#include "hyperntf/tensor.hpp"
#include "oracles.hpp"

namespace fixture {

using hyperntf::DenseMatrix;
using hyperntf::DenseTensor;
using hyperntf::Index;

// Exact nonnegative CP tensor from factors uniform on [0.1, 1.1).
inline DenseTensor cp_tensor(std::uint64_t seed, const std::vector<Index>& dims, Index rank) {
  hyperntf::Rng rng(seed);
  std::vector<DenseMatrix> f;
  for (Index d : dims) f.push_back(oracle::random_matrix(rng, d, rank, 0.1, 1.1));
  return oracle::cp(f);
}

// Exact nonnegative Tucker tensor G x_1 U_1 ... x_N U_N, all parts uniform on [0, 1).
inline DenseTensor tucker_tensor(std::uint64_t seed, const std::vector<Index>& dims,
                                 const std::vector<Index>& ranks) {
  hyperntf::Rng rng(seed);
  DenseTensor t = oracle::random_tensor(rng, ranks);
  for (std::size_t n = 0; n < dims.size(); ++n)
    t = hyperntf::mode_product(t, oracle::random_matrix(rng, dims[n], ranks[n]), static_cast<Index>(n));
  return t;
}

struct Labeled {
  DenseTensor x;
  hyperntf::LabelVector labels;
};

// `per_class` samples of each of `classes` prototype slices (disjoint supports of
// height 1) plus uniform noise of amplitude `noise`, classes interleaved.
inline Labeled separated_classes(std::uint64_t seed, Index rows, Index cols, Index classes,
                                 Index per_class, double noise) {
  hyperntf::Rng rng(seed);
  const Index m = classes * per_class;
  Labeled out{DenseTensor({rows, cols, m}), {}};
  const Index cells = rows * cols;
  for (Index s = 0; s < m; ++s) {
    const int c = static_cast<int>(s % classes);
    out.labels.push_back(c);
    for (Index cell = 0; cell < cells; ++cell) {
      const bool on = cell % classes == c;
      out.x.data()[s * cells + cell] = (on ? 1.0 : 0.0) + noise * rng.uniform();
    }
  }
  return out;
}

}  // namespace fixture
