#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "hyperntf/tensor.hpp"

namespace hyperntf {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Neighbor {
  Index id;
  double distance;
};

/// k nearest other samples of every sample, closest first.
struct NeighborIndex {
  Index k = 0;
  std::vector<std::vector<Neighbor>> lists;

  Index num_samples() const { return static_cast<Index>(lists.size()); }
  const std::vector<Neighbor>& operator[](Index i) const {
    return lists[static_cast<std::size_t>(i)];
  }
};

enum class WeightScheme {
  Unit,        ///< w(e) = 1
  HeatKernel,  ///< w(e) = mean over vertex pairs of exp(-d^2 / sigma^2), sigma = median distance
};

/// Weighted hypergraph stored by its M x E incidence matrix.
///
/// Degrees are derived from the incidence and weights at construction:
/// d_V(i) = sum_e w(e) h(i,e) and d_E(e) = sum_i h(i,e).
class Hypergraph {
 public:
  Hypergraph() = default;

  /// Validates that H is 0/1, every hyperedge has at least two vertices and w > 0.
  Hypergraph(SparseMatrix incidence, DenseVector edge_weights);

  Index num_vertices() const { return incidence_.rows(); }
  Index num_edges() const { return incidence_.cols(); }

  const SparseMatrix& incidence() const { return incidence_; }
  const DenseVector& edge_weights() const { return edge_weights_; }
  const DenseVector& vertex_degrees() const { return vertex_degrees_; }
  const DenseVector& edge_degrees() const { return edge_degrees_; }

  /// H W D_E^{-1} H^T z through the sparse factors, O(nnz(H) * cols(z)).
  DenseMatrix adjacency_product(const DenseMatrix& z) const;

  /// D_V z.
  DenseMatrix degree_product(const DenseMatrix& z) const;

  /// Vertex lists of each hyperedge, ascending.
  std::vector<std::vector<Index>> edges() const;

 private:
  SparseMatrix incidence_;
  DenseVector edge_weights_;
  DenseVector vertex_degrees_;
  DenseVector edge_degrees_;
};

/// Brute-force Euclidean k-NN over the rows of `samples`. Ties go to the lower index.
NeighborIndex knn_search(const DenseMatrix& samples, Index k);

/// One hyperedge per sample: the sample together with its k nearest neighbours.
Hypergraph build_knn_hypergraph(const DenseMatrix& samples, Index k,
                                WeightScheme scheme = WeightScheme::Unit);

/// Symmetric 0/1 k-NN graph: w_ij = 1 iff i in kNN(j) or j in kNN(i).
SparseMatrix build_knn_graph(const DenseMatrix& samples, Index k);

/// Dense D_V - H W D_E^{-1} H^T.
DenseMatrix hypergraph_laplacian(const Hypergraph& g);

/// Dense D - W for a symmetric weight matrix.
DenseMatrix graph_laplacian(const SparseMatrix& w);

/// trace(z^T L z).
double regularizer_value(const DenseMatrix& laplacian, const DenseMatrix& z);

/// Same quantity evaluated hyperedge by hyperedge as
/// sum_e w(e) sum_{i in e} ||z_i - mean_e(z)||^2, which never goes negative.
double regularizer_value(const Hypergraph& g, const DenseMatrix& z);

}  // namespace hyperntf
