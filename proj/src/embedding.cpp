#include "hyperntf/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "hyperntf/random.hpp"

namespace hyperntf {

ManifoldKind parse_manifold_kind(const std::string& name) {
  if (name == "punctured_sphere") return ManifoldKind::PuncturedSphere;
  if (name == "gaussian" || name == "gaussian_surface") return ManifoldKind::GaussianSurface;
  if (name == "twin_peaks") return ManifoldKind::TwinPeaks;
  if (name == "toroidal_helix") return ManifoldKind::ToroidalHelix;
  throw InvalidArgument("unknown manifold kind '" + name + "'");
}

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::PuncturedSphere: return "punctured_sphere";
    case ManifoldKind::GaussianSurface: return "gaussian";
    case ManifoldKind::TwinPeaks: return "twin_peaks";
    case ManifoldKind::ToroidalHelix: return "toroidal_helix";
  }
  return "unknown";
}

Index default_knn(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::PuncturedSphere: return 44;
    case ManifoldKind::GaussianSurface: return 25;
    case ManifoldKind::TwinPeaks: return 15;
    case ManifoldKind::ToroidalHelix: return 10;
  }
  return 10;
}

EmbedMethod parse_embed_method(const std::string& name) {
  if (name == "hypergraph-le") return EmbedMethod::HypergraphLaplacian;
  if (name == "graph-le") return EmbedMethod::GraphLaplacian;
  if (name == "lle") return EmbedMethod::Lle;
  if (name == "random-projection") return EmbedMethod::RandomProjection;
  throw InvalidArgument("unknown embedding method '" + name + "'");
}

std::string to_string(EmbedMethod method) {
  switch (method) {
    case EmbedMethod::HypergraphLaplacian: return "hypergraph-le";
    case EmbedMethod::GraphLaplacian: return "graph-le";
    case EmbedMethod::Lle: return "lle";
    case EmbedMethod::RandomProjection: return "random-projection";
  }
  return "unknown";
}

PointCloud gen_manifold(ManifoldKind kind, Index m, std::uint64_t seed, double noise_sd) {
  if (m < 4) throw InvalidArgument("gen_manifold: need at least 4 points");
  if (!(noise_sd >= 0.0)) throw InvalidArgument("gen_manifold: noise_sd must be >= 0");
  constexpr double pi = std::numbers::pi;
  Rng rng(seed);
  PointCloud pc;
  pc.points.resize(m, 3);
  pc.color.resize(m);
  for (Index i = 0; i < m; ++i) {
    switch (kind) {
      case ManifoldKind::PuncturedSphere: {
        const double r = 5.0 * std::sqrt(rng.uniform());
        const double theta = 2.0 * pi * rng.uniform();
        const double px = r * std::cos(theta);
        const double py = r * std::sin(theta);
        const double a = 4.0 / (4.0 + px * px + py * py);
        pc.points.row(i) << a * px, a * py, 2.0 * (1.0 - a);
        pc.color[i] = r;
        break;
      }
      case ManifoldKind::GaussianSurface: {
        const double x = rng.uniform(-2.0, 2.0);
        const double y = rng.uniform(-2.0, 2.0);
        const double z = std::exp(-(x * x + y * y) / 2.0);
        pc.points.row(i) << x, y, z;
        pc.color[i] = z;
        break;
      }
      case ManifoldKind::TwinPeaks: {
        const double x = rng.uniform(-1.0, 1.0);
        const double y = rng.uniform(-1.0, 1.0);
        const double z = std::sin(pi * x) * std::tanh(3.0 * y);
        pc.points.row(i) << x, y, z;
        pc.color[i] = z;
        break;
      }
      case ManifoldKind::ToroidalHelix: {
        const double t = 2.0 * pi * rng.uniform();
        pc.points.row(i) << (2.0 + std::cos(8.0 * t)) * std::cos(t),
            (2.0 + std::cos(8.0 * t)) * std::sin(t), std::sin(8.0 * t);
        pc.color[i] = t;
        break;
      }
    }
  }
  if (noise_sd > 0.0)
    for (Index i = 0; i < m; ++i)
      for (Index c = 0; c < 3; ++c) pc.points(i, c) += noise_sd * rng.normal();
  return pc;
}

DenseVector manifold_residual(ManifoldKind kind, const DenseMatrix& points) {
  constexpr double pi = std::numbers::pi;
  DenseVector res(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    const double x = points(i, 0), y = points(i, 1), z = points(i, 2);
    switch (kind) {
      case ManifoldKind::PuncturedSphere:
        res[i] = x * x + y * y + (z - 1.0) * (z - 1.0) - 1.0;
        break;
      case ManifoldKind::GaussianSurface:
        res[i] = z - std::exp(-(x * x + y * y) / 2.0);
        break;
      case ManifoldKind::TwinPeaks:
        res[i] = z - std::sin(pi * x) * std::tanh(3.0 * y);
        break;
      case ManifoldKind::ToroidalHelix: {
        const double t = std::atan2(y, x);
        res[i] = std::abs(std::hypot(x, y) - 2.0 - std::cos(8.0 * t)) +
                 std::abs(z - std::sin(8.0 * t));
        break;
      }
    }
  }
  return res;
}

namespace {

void fix_signs(DenseMatrix& coords) {
  for (Index j = 0; j < coords.cols(); ++j) {
    Index at = 0;
    coords.col(j).cwiseAbs().maxCoeff(&at);
    if (coords(at, j) < 0.0) coords.col(j) *= -1.0;
  }
}

void check_embed_args(const PointCloud& pc, Index k, Index d) {
  const Index m = pc.size();
  if (k < 1 || k > m - 1)
    throw InvalidArgument("embedding: k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(m - 1) + "]");
  if (d < 1 || d > m - 2)
    throw InvalidArgument("embedding: d = " + std::to_string(d) + " outside [1, " +
                          std::to_string(m - 2) + "]");
}

}  // namespace

EmbeddingResult spectral_embed(const DenseMatrix& laplacian, Index d, EmbedMethod tag) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(laplacian);
  if (es.info() != Eigen::Success) throw NumericFailure("spectral_embed: eigensolver failed");
  const DenseVector& ev = es.eigenvalues();
  const double cutoff = 1e-8 * std::max(ev[ev.size() - 1], 0.0);
  Index zeros = 0;
  while (zeros < ev.size() && ev[zeros] <= cutoff) ++zeros;
  if (ev.size() - zeros < d)
    throw DegenerateSpectrum("spectral_embed: " + std::to_string(zeros) +
                                 " connected components leave fewer than " + std::to_string(d) +
                                 " nonzero eigenvalues",
                             zeros);
  EmbeddingResult out;
  out.method = tag;
  out.coords = es.eigenvectors().middleCols(zeros, d);
  out.coords.colwise().normalize();
  fix_signs(out.coords);
  out.eigenvalues = ev.segment(zeros, d);
  return out;
}

EmbeddingResult hypergraph_spectral_embed(const PointCloud& pc, Index k, Index d) {
  check_embed_args(pc, k, d);
  const Hypergraph g = build_knn_hypergraph(pc.points, k);
  return spectral_embed(hypergraph_laplacian(g), d, EmbedMethod::HypergraphLaplacian);
}

EmbeddingResult graph_spectral_embed(const PointCloud& pc, Index k, Index d) {
  check_embed_args(pc, k, d);
  return spectral_embed(graph_laplacian(build_knn_graph(pc.points, k)), d,
                        EmbedMethod::GraphLaplacian);
}

DenseMatrix lle_weights(const DenseMatrix& points, Index k, double reg) {
  const NeighborIndex nn = knn_search(points, k);
  const Index m = points.rows();
  DenseMatrix w = DenseMatrix::Zero(m, m);
  DenseMatrix local(k, points.cols());
  for (Index i = 0; i < m; ++i) {
    for (Index r = 0; r < k; ++r)
      local.row(r) = points.row(nn[i][static_cast<std::size_t>(r)].id) - points.row(i);
    DenseMatrix gram = local * local.transpose();
    gram.diagonal().array() += reg * gram.trace() / static_cast<double>(k);
    Eigen::LLT<DenseMatrix> llt(gram);
    if (llt.info() != Eigen::Success)
      throw NumericFailure("lle: local Gram of point " + std::to_string(i) + " is singular", i);
    DenseVector wi = llt.solve(DenseVector::Ones(k));
    const double total = wi.sum();
    if (!std::isfinite(total) || total == 0.0)
      throw NumericFailure("lle: degenerate weights at point " + std::to_string(i), i);
    wi /= total;
    for (Index r = 0; r < k; ++r) w(i, nn[i][static_cast<std::size_t>(r)].id) = wi[r];
  }
  return w;
}

EmbeddingResult lle_embed(const PointCloud& pc, Index k, Index d) {
  check_embed_args(pc, k, d);
  const Index m = pc.size();
  const DenseMatrix w = lle_weights(pc.points, k);
  const DenseMatrix a = DenseMatrix::Identity(m, m) - w;
  const DenseMatrix cost = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(cost);
  if (es.info() != Eigen::Success) throw NumericFailure("lle: eigensolver failed");
  EmbeddingResult out;
  out.method = EmbedMethod::Lle;
  out.coords = es.eigenvectors().middleCols(1, d);
  out.coords.colwise().normalize();
  fix_signs(out.coords);
  out.eigenvalues = es.eigenvalues().segment(1, d);
  return out;
}

EmbeddingResult random_projection_embed(const PointCloud& pc, Index d, std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("random_projection_embed: d must be >= 1");
  Rng rng(seed);
  DenseMatrix proj(pc.points.cols(), d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < proj.rows(); ++i) proj(i, j) = rng.normal();
  EmbeddingResult out;
  out.method = EmbedMethod::RandomProjection;
  out.coords = pc.points * proj;
  return out;
}

double neighborhood_preservation(const DenseMatrix& high, const DenseMatrix& low, Index k) {
  if (high.rows() != low.rows())
    throw InvalidArgument("neighborhood_preservation: " + std::to_string(high.rows()) +
                          " vs " + std::to_string(low.rows()) + " samples");
  const NeighborIndex a = knn_search(high, k);
  const NeighborIndex b = knn_search(low, k);
  const Index m = high.rows();
  double total = 0.0;
  std::vector<Index> ia, ib, common;
  for (Index i = 0; i < m; ++i) {
    ia.clear();
    ib.clear();
    for (const auto& nb : a[i]) ia.push_back(nb.id);
    for (const auto& nb : b[i]) ib.push_back(nb.id);
    std::sort(ia.begin(), ia.end());
    std::sort(ib.begin(), ib.end());
    common.clear();
    std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return total / static_cast<double>(m);
}

double neighborhood_preservation(const PointCloud& high, const EmbeddingResult& low, Index k) {
  return neighborhood_preservation(high.points, low.coords, k);
}

}  // namespace hyperntf
