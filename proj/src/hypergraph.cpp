#include "hyperntf/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hyperntf {

Hypergraph::Hypergraph(SparseMatrix incidence, DenseVector edge_weights)
    : incidence_(std::move(incidence)), edge_weights_(std::move(edge_weights)) {
  incidence_.makeCompressed();
  const Index edges = incidence_.cols();
  if (edge_weights_.size() != edges)
    throw InvalidArgument("Hypergraph: " + std::to_string(edge_weights_.size()) +
                          " weights for " + std::to_string(edges) + " hyperedges");

  edge_degrees_ = DenseVector::Zero(edges);
  vertex_degrees_ = DenseVector::Zero(incidence_.rows());
  for (Index e = 0; e < edges; ++e) {
    if (!(edge_weights_[e] > 0.0))
      throw InvalidArgument("Hypergraph: hyperedge " + std::to_string(e) +
                            " has a non-positive weight");
    for (SparseMatrix::InnerIterator it(incidence_, e); it; ++it) {
      if (it.value() != 1.0)
        throw InvalidArgument("Hypergraph: incidence entries must be 0 or 1");
      edge_degrees_[e] += 1.0;
      vertex_degrees_[it.row()] += edge_weights_[e];
    }
    if (edge_degrees_[e] < 2.0)
      throw InvalidArgument("Hypergraph: hyperedge " + std::to_string(e) +
                            " has fewer than two vertices");
  }
}

DenseMatrix Hypergraph::adjacency_product(const DenseMatrix& z) const {
  if (z.rows() != num_vertices())
    throw InvalidArgument("Hypergraph::adjacency_product: row count mismatch");
  DenseMatrix per_edge = incidence_.transpose() * z;
  per_edge.array().colwise() *= (edge_weights_.array() / edge_degrees_.array());
  return incidence_ * per_edge;
}

DenseMatrix Hypergraph::degree_product(const DenseMatrix& z) const {
  if (z.rows() != num_vertices())
    throw InvalidArgument("Hypergraph::degree_product: row count mismatch");
  return vertex_degrees_.asDiagonal() * z;
}

std::vector<std::vector<Index>> Hypergraph::edges() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(num_edges()));
  for (Index e = 0; e < num_edges(); ++e)
    for (SparseMatrix::InnerIterator it(incidence_, e); it; ++it)
      out[static_cast<std::size_t>(e)].push_back(it.row());
  return out;
}

namespace {

void check_k(Index k, Index m) {
  if (k < 1 || k > m - 1)
    throw InvalidArgument("knn: k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(m - 1) + "]");
}

// Squared distances from sample i to every sample, columns of `cols` are samples.
DenseVector squared_distances(const DenseMatrix& cols, Index i) {
  return (cols.colwise() - cols.col(i)).colwise().squaredNorm().transpose();
}

double median_pairwise_distance(const DenseMatrix& cols) {
  const Index m = cols.cols();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index i = 0; i < m; ++i) {
    const DenseVector d2 = squared_distances(cols, i);
    for (Index j = i + 1; j < m; ++j) d.push_back(std::sqrt(d2[j]));
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(d.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

NeighborIndex knn_search(const DenseMatrix& samples, Index k) {
  const Index m = samples.rows();
  check_k(k, m);
  const DenseMatrix cols = samples.transpose();

  NeighborIndex index;
  index.k = k;
  index.lists.resize(static_cast<std::size_t>(m));
  std::vector<Index> order(static_cast<std::size_t>(m - 1));
  for (Index i = 0; i < m; ++i) {
    const DenseVector d2 = squared_distances(cols, i);
    std::size_t pos = 0;
    for (Index j = 0; j < m; ++j)
      if (j != i) order[pos++] = j;
    const auto closer = [&](Index a, Index b) {
      return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    auto& list = index.lists[static_cast<std::size_t>(i)];
    list.reserve(static_cast<std::size_t>(k));
    for (Index r = 0; r < k; ++r) {
      const Index j = order[static_cast<std::size_t>(r)];
      list.push_back({j, std::sqrt(d2[j])});
    }
  }
  return index;
}

Hypergraph build_knn_hypergraph(const DenseMatrix& samples, Index k, WeightScheme scheme) {
  const NeighborIndex nn = knn_search(samples, k);
  const Index m = samples.rows();

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(m * (k + 1)));
  for (Index e = 0; e < m; ++e) {
    entries.emplace_back(e, e, 1.0);
    for (const auto& nb : nn[e]) entries.emplace_back(nb.id, e, 1.0);
  }
  SparseMatrix h(m, m);
  h.setFromTriplets(entries.begin(), entries.end());

  DenseVector w = DenseVector::Ones(m);
  if (scheme == WeightScheme::HeatKernel) {
    const DenseMatrix cols = samples.transpose();
    const double sigma = median_pairwise_distance(cols);
    if (sigma > 0.0) {
      const double inv_s2 = 1.0 / (sigma * sigma);
      for (Index e = 0; e < m; ++e) {
        std::vector<Index> members{e};
        for (const auto& nb : nn[e]) members.push_back(nb.id);
        double acc = 0.0;
        Index pairs = 0;
        for (std::size_t a = 0; a < members.size(); ++a)
          for (std::size_t b = a + 1; b < members.size(); ++b, ++pairs)
            acc += std::exp(-(cols.col(members[a]) - cols.col(members[b])).squaredNorm() * inv_s2);
        w[e] = acc / static_cast<double>(pairs);
      }
    }
  }
  return Hypergraph(std::move(h), std::move(w));
}

SparseMatrix build_knn_graph(const DenseMatrix& samples, Index k) {
  const NeighborIndex nn = knn_search(samples, k);
  const Index m = samples.rows();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(2 * m * k));
  for (Index i = 0; i < m; ++i)
    for (const auto& nb : nn[i]) {
      entries.emplace_back(i, nb.id, 1.0);
      entries.emplace_back(nb.id, i, 1.0);
    }
  SparseMatrix w(m, m);
  w.setFromTriplets(entries.begin(), entries.end(), [](double a, double) { return a; });
  return w;
}

DenseMatrix hypergraph_laplacian(const Hypergraph& g) {
  const SparseMatrix& h = g.incidence();
  const DenseVector scale = g.edge_weights().array() / g.edge_degrees().array();
  const SparseMatrix adjacency = h * scale.asDiagonal() * SparseMatrix(h.transpose());
  DenseMatrix lap = -DenseMatrix(adjacency);
  lap.diagonal() += g.vertex_degrees();
  return lap;
}

DenseMatrix graph_laplacian(const SparseMatrix& w) {
  if (w.rows() != w.cols()) throw InvalidArgument("graph_laplacian: weight matrix is not square");
  DenseMatrix lap = -DenseMatrix(w);
  for (Index i = 0; i < w.rows(); ++i) lap(i, i) += w.col(i).sum();
  return lap;
}

double regularizer_value(const DenseMatrix& laplacian, const DenseMatrix& z) {
  if (laplacian.rows() != laplacian.cols() || laplacian.rows() != z.rows())
    throw InvalidArgument("regularizer_value: Laplacian is " + std::to_string(laplacian.rows()) +
                          "x" + std::to_string(laplacian.cols()) + ", z has " +
                          std::to_string(z.rows()) + " rows");
  return z.cwiseProduct(laplacian * z).sum();
}

double regularizer_value(const Hypergraph& g, const DenseMatrix& z) {
  if (z.rows() != g.num_vertices())
    throw InvalidArgument("regularizer_value: z row count does not match vertex count");
  const SparseMatrix& h = g.incidence();
  double total = 0.0;
  Eigen::RowVectorXd mean(z.cols());
  for (Index e = 0; e < g.num_edges(); ++e) {
    mean.setZero();
    for (SparseMatrix::InnerIterator it(h, e); it; ++it) mean += z.row(it.row());
    mean /= g.edge_degrees()[e];
    double spread = 0.0;
    for (SparseMatrix::InnerIterator it(h, e); it; ++it)
      spread += (z.row(it.row()) - mean).squaredNorm();
    total += g.edge_weights()[e] * spread;
  }
  return total;
}

}  // namespace hyperntf
