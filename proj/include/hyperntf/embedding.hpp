#pragma once

#include <cstdint>
#include <string>

#include "hyperntf/hypergraph.hpp"
#include "hyperntf/tensor.hpp"

namespace hyperntf {

enum class ManifoldKind { PuncturedSphere, GaussianSurface, TwinPeaks, ToroidalHelix };

/// Parses "punctured_sphere", "gaussian", "twin_peaks" or "toroidal_helix".
ManifoldKind parse_manifold_kind(const std::string& name);
std::string to_string(ManifoldKind kind);

/// Neighbour count customarily used for each surface: 44, 25, 15 and 10.
Index default_knn(ManifoldKind kind);

struct PointCloud {
  DenseMatrix points;  ///< M x D
  DenseVector color;   ///< generating parameter, for plotting

  Index size() const { return points.rows(); }
};

enum class EmbedMethod { HypergraphLaplacian, GraphLaplacian, Lle, RandomProjection };

EmbedMethod parse_embed_method(const std::string& name);
std::string to_string(EmbedMethod method);

struct EmbeddingResult {
  DenseMatrix coords;       ///< M x d
  EmbedMethod method = EmbedMethod::HypergraphLaplacian;
  DenseVector eigenvalues;  ///< eigenvalues of the returned columns, ascending
};

/// Samples M points of the requested surface and adds isotropic Gaussian noise.
///   punctured sphere: p uniform in the disk of radius 5, (a p_x, a p_y, 2(1 - a)), a = 4/(4+|p|^2)
///   gaussian:         x, y uniform in [-2, 2], z = exp(-(x^2 + y^2)/2)
///   twin peaks:       x, y uniform in [-1, 1], z = sin(pi x) tanh(3 y)
///   toroidal helix:   t uniform in [0, 2 pi), ((2 + cos 8t) cos t, (2 + cos 8t) sin t, sin 8t)
PointCloud gen_manifold(ManifoldKind kind, Index m, std::uint64_t seed, double noise_sd = 0.0);

/// Residual of the defining equation of `kind` at each point (zero on the surface).
DenseVector manifold_residual(ManifoldKind kind, const DenseMatrix& points);

/// Eigenvectors of the d smallest nonzero eigenvalues of a symmetric Laplacian.
/// Eigenvalues below 1e-8 * largest count as zero. Columns have unit norm and
/// their largest-magnitude entry is positive.
EmbeddingResult spectral_embed(const DenseMatrix& laplacian, Index d, EmbedMethod tag);

/// Spectral embedding with the k-NN hypergraph Laplacian.
EmbeddingResult hypergraph_spectral_embed(const PointCloud& pc, Index k, Index d);

/// Laplacian eigenmap with the symmetric 0/1 k-NN graph.
EmbeddingResult graph_spectral_embed(const PointCloud& pc, Index k, Index d);

/// Barycentric reconstruction weights of every point from its k nearest neighbours,
/// row i holding the weights of point i. The local Gram is regularised by
/// (reg * trace(G) / k) I.
DenseMatrix lle_weights(const DenseMatrix& points, Index k, double reg = 1e-3);

/// Locally linear embedding: eigenvectors 2..d+1 of (I - W)^T (I - W).
EmbeddingResult lle_embed(const PointCloud& pc, Index k, Index d);

/// Gaussian random linear map of the points to d dimensions, a chance-level reference.
EmbeddingResult random_projection_embed(const PointCloud& pc, Index d, std::uint64_t seed);

/// Mean over samples of |kNN_high(i) and kNN_low(i)| / k.
double neighborhood_preservation(const DenseMatrix& high, const DenseMatrix& low, Index k);
double neighborhood_preservation(const PointCloud& high, const EmbeddingResult& low, Index k);

}  // namespace hyperntf
