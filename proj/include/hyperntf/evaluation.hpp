#pragma once

#include <cstdint>
#include <vector>

#include "hyperntf/tensor.hpp"

namespace hyperntf {

using LabelVector = std::vector<int>;

/// Lloyd's algorithm over the rows of `z` from k-means++ seeding. A cluster that
/// empties is re-seeded with the point farthest from its current centroid.
LabelVector kmeans(const DenseMatrix& z, Index clusters, std::uint64_t seed,
                   Index max_iter = 300);

/// Maximum-weight perfect assignment on a square matrix (Hungarian method).
/// Returns, for every row, the assigned column.
std::vector<Index> hungarian_max(const DenseMatrix& weights);

/// Contingency table: rows are predicted labels, columns true labels.
DenseMatrix contingency(const LabelVector& pred, const LabelVector& truth);

/// Fraction of samples that agree under the best one-to-one relabelling of `pred`.
double clustering_accuracy(const LabelVector& pred, const LabelVector& truth);

/// I(pred; truth) / sqrt(H(pred) H(truth)), natural logs. 1 for identical
/// single-cluster partitions, 0 when either entropy vanishes otherwise.
double nmi(const LabelVector& pred, const LabelVector& truth);

struct ClusterReport {
  std::vector<double> acc;
  std::vector<double> nmi;
  std::vector<std::uint64_t> seeds;
  double acc_mean = 0.0;
  double acc_std = 0.0;  ///< population standard deviation
  double nmi_mean = 0.0;
  double nmi_std = 0.0;

  Index runs() const { return static_cast<Index>(acc.size()); }
};

/// `runs` k-means runs with seeds base_seed, ..., base_seed + runs - 1.
ClusterReport evaluate_clustering(const DenseMatrix& z, const LabelVector& truth, Index clusters,
                                  Index runs = 10, std::uint64_t base_seed = 0);

}  // namespace hyperntf
