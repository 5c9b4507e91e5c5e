#include <doctest.h>

#include <numbers>

#include <Eigen/Geometry>

#include "hyperntf/embedding.hpp"
#include "oracles.hpp"

using namespace hyperntf;

namespace {

double abs_correlation(const DenseVector& a, const DenseVector& b) {
  const DenseVector ac = a.array() - a.mean();
  const DenseVector bc = b.array() - b.mean();
  return std::abs(ac.dot(bc)) / (ac.norm() * bc.norm());
}

// Four far-apart clumps of five points: with k <= 4 every hyperedge stays inside
// its clump, so the hypergraph has four components.
PointCloud four_clumps() {
  Rng rng(70);
  PointCloud pc{DenseMatrix(20, 3), DenseVector::Zero(20)};
  for (Index i = 0; i < 20; ++i)
    for (Index c = 0; c < 3; ++c) pc.points(i, c) = rng.uniform() + 100.0 * static_cast<double>(i / 5);
  return pc;
}

}  // namespace

TEST_CASE("manifold names and defaults") {
  CHECK(parse_manifold_kind("punctured_sphere") == ManifoldKind::PuncturedSphere);
  CHECK(parse_manifold_kind("gaussian") == ManifoldKind::GaussianSurface);
  CHECK(parse_manifold_kind("twin_peaks") == ManifoldKind::TwinPeaks);
  CHECK(parse_manifold_kind("toroidal_helix") == ManifoldKind::ToroidalHelix);
  CHECK_THROWS_AS(parse_manifold_kind("swiss_roll"), InvalidArgument);
  CHECK(default_knn(ManifoldKind::PuncturedSphere) == 44);
  CHECK(default_knn(ManifoldKind::GaussianSurface) == 25);
  CHECK(default_knn(ManifoldKind::TwinPeaks) == 15);
  CHECK(default_knn(ManifoldKind::ToroidalHelix) == 10);
  for (auto k : {ManifoldKind::PuncturedSphere, ManifoldKind::GaussianSurface, ManifoldKind::TwinPeaks,
                 ManifoldKind::ToroidalHelix})
    CHECK(parse_manifold_kind(to_string(k)) == k);
  for (auto m : {EmbedMethod::HypergraphLaplacian, EmbedMethod::GraphLaplacian, EmbedMethod::Lle,
                 EmbedMethod::RandomProjection})
    CHECK(parse_embed_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_embed_method("isomap"), InvalidArgument);
}

TEST_CASE("gen_manifold") {
  SUBCASE("noise-free samples lie on their surfaces") {
    for (auto k : {ManifoldKind::PuncturedSphere, ManifoldKind::GaussianSurface, ManifoldKind::TwinPeaks,
                   ManifoldKind::ToroidalHelix}) {
      const PointCloud pc = gen_manifold(k, 300, 5);
      CHECK(pc.size() == 300);
      CHECK(pc.points.cols() == 3);
      CHECK(pc.color.size() == 300);
      CHECK(manifold_residual(k, pc.points).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(pc.points.allFinite());
    }
  }
  SUBCASE("closed-form points") {
    // Helix at t = 0, sphere map at the origin and far out, twin peaks at (0.5, 0).
    DenseMatrix p(1, 3);
    p << 3, 0, 0;
    CHECK(manifold_residual(ManifoldKind::ToroidalHelix, p)[0] <= 1e-15);
    p << 0, 0, 0;
    CHECK(manifold_residual(ManifoldKind::PuncturedSphere, p)[0] <= 1e-15);
    const double r = 1e4;
    const double a = 4.0 / (4.0 + r * r);
    p << a * r, 0, 2 * (1 - a);
    CHECK(manifold_residual(ManifoldKind::PuncturedSphere, p)[0] <= 1e-12);
    CHECK(p(0, 2) == doctest::Approx(2.0).epsilon(1e-6));
    p << 0.5, 0, std::sin(std::numbers::pi / 2) * std::tanh(0.0);
    CHECK(p(0, 2) == 0.0);
    CHECK(manifold_residual(ManifoldKind::TwinPeaks, p)[0] <= 1e-15);
    p << 0, 0, 1;
    CHECK(manifold_residual(ManifoldKind::GaussianSurface, p)[0] <= 1e-15);
  }
  SUBCASE("determinism and noise") {
    const PointCloud a = gen_manifold(ManifoldKind::TwinPeaks, 50, 9, 0.1);
    const PointCloud b = gen_manifold(ManifoldKind::TwinPeaks, 50, 9, 0.1);
    CHECK(a.points == b.points);
    CHECK(a.color == b.color);
    CHECK(manifold_residual(ManifoldKind::TwinPeaks, a.points).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(gen_manifold(ManifoldKind::TwinPeaks, 50, 10).points != gen_manifold(ManifoldKind::TwinPeaks, 50, 9).points);
  }
  CHECK_THROWS_AS(gen_manifold(ManifoldKind::TwinPeaks, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_manifold(ManifoldKind::TwinPeaks, 10, 1, -0.1), InvalidArgument);
}

TEST_CASE("spectral embeddings") {
  const PointCloud pc = gen_manifold(ManifoldKind::ToroidalHelix, 200, 3);
  for (bool hyper : {true, false}) {
    CAPTURE(hyper);
    const EmbeddingResult e = hyper ? hypergraph_spectral_embed(pc, 10, 3) : graph_spectral_embed(pc, 10, 3);
    CHECK(e.coords.rows() == 200);
    CHECK(e.coords.cols() == 3);
    CHECK(e.method == (hyper ? EmbedMethod::HypergraphLaplacian : EmbedMethod::GraphLaplacian));
    for (Index c = 0; c < 3; ++c) {
      CHECK(std::abs(e.coords.col(c).sum()) <= 1e-10);
      CHECK(e.coords.col(c).norm() == doctest::Approx(1.0).epsilon(1e-12));
      Index arg = 0;
      e.coords.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(e.coords(arg, c) > 0.0);
    }
    CHECK((e.coords.transpose() * e.coords - DenseMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(e.eigenvalues.size() == 3);
    CHECK(e.eigenvalues[0] > 0.0);
    CHECK(e.eigenvalues[0] <= e.eigenvalues[1]);
    CHECK(e.eigenvalues[1] <= e.eigenvalues[2]);
  }
}

TEST_CASE("complete graph spectrum") {
  Rng rng(71);
  const Index m = 9;
  const PointCloud pc{oracle::random_matrix(rng, m, 3), DenseVector::Zero(m)};
  const EmbeddingResult e = graph_spectral_embed(pc, m - 1, 4);
  for (Index i = 0; i < 4; ++i) CHECK(e.eigenvalues[i] == doctest::Approx(static_cast<double>(m)).epsilon(1e-12));
}

TEST_CASE("spectral embedding is invariant to rigid motions") {
  const PointCloud pc = gen_manifold(ManifoldKind::TwinPeaks, 150, 4, 0.01);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  PointCloud moved = pc;
  moved.points = (pc.points * rot.transpose()).rowwise() + Eigen::RowVector3d(5, -2, 1);
  for (bool hyper : {true, false}) {
    const EmbeddingResult a = hyper ? hypergraph_spectral_embed(pc, 15, 2) : graph_spectral_embed(pc, 15, 2);
    const EmbeddingResult b = hyper ? hypergraph_spectral_embed(moved, 15, 2) : graph_spectral_embed(moved, 15, 2);
    for (Index c = 0; c < 2; ++c) CHECK(abs_correlation(a.coords.col(c), b.coords.col(c)) >= 1.0 - 1e-8);
  }
}

TEST_CASE("degenerate spectrum") {
  const PointCloud pc = four_clumps();
  try {
    hypergraph_spectral_embed(pc, 3, 17);
    FAIL("expected DegenerateSpectrum");
  } catch (const DegenerateSpectrum& e) {
    CHECK(e.component_count == 4);
  }
  CHECK_THROWS_AS(graph_spectral_embed(pc, 3, 17), DegenerateSpectrum);
  CHECK(hypergraph_spectral_embed(pc, 3, 16).eigenvalues.size() == 16);
  CHECK_THROWS_AS(hypergraph_spectral_embed(pc, 3, 19), InvalidArgument);
  CHECK_THROWS_AS(hypergraph_spectral_embed(pc, 20, 2), InvalidArgument);
  CHECK_THROWS_AS(spectral_embed(DenseMatrix::Zero(5, 5), 1, EmbedMethod::GraphLaplacian), DegenerateSpectrum);
}

TEST_CASE("lle") {
  Rng rng(72);
  SUBCASE("weights sum to one") {
    const PointCloud pc = gen_manifold(ManifoldKind::GaussianSurface, 120, 2, 0.01);
    const DenseMatrix w = lle_weights(pc.points, 8);
    CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
    CHECK(w.diagonal().isZero());
    for (Index i = 0; i < w.rows(); ++i) CHECK((w.row(i).array() != 0.0).count() <= 8);
  }
  SUBCASE("exact affine reconstruction on a plane") {
    // Points in the affine plane z = 1 + x - 2y are reconstructed exactly by their
    // neighbours once the regulariser is negligible.
    DenseMatrix p(40, 3);
    for (Index i = 0; i < 40; ++i) {
      const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
      p.row(i) << x, y, 1 + x - 2 * y;
    }
    const DenseMatrix w = lle_weights(p, 3, 1e-12);
    const DenseMatrix residual = p - w * p;
    CHECK(residual.rowwise().norm().maxCoeff() <= 1e-8);
  }
  SUBCASE("embedding columns orthonormal") {
    const PointCloud pc = gen_manifold(ManifoldKind::TwinPeaks, 150, 3, 0.01);
    const EmbeddingResult e = lle_embed(pc, 12, 2);
    CHECK(e.method == EmbedMethod::Lle);
    CHECK(std::abs(e.coords.col(0).dot(e.coords.col(1))) <= 1e-8);
    CHECK(e.coords.col(0).norm() == doctest::Approx(1.0));
  }
  SUBCASE("singular local Gram") {
    DenseMatrix p = DenseMatrix::Zero(6, 3);
    try {
      lle_weights(p, 2, 0.0);
      FAIL("expected NumericFailure");
    } catch (const NumericFailure& e) {
      CHECK(e.index == 0);
    }
  }
}

TEST_CASE("neighborhood_preservation") {
  Rng rng(73);
  const DenseMatrix high = oracle::random_matrix(rng, 60, 3);
  CHECK(neighborhood_preservation(high, high, 5) == 1.0);
  DenseMatrix flat = high;
  flat.col(2).setConstant(4.0);
  CHECK(neighborhood_preservation(flat, DenseMatrix(flat.leftCols(2)), 5) == 1.0);

  SUBCASE("symmetric under a consistent permutation") {
    const DenseMatrix low = oracle::random_matrix(rng, 60, 2);
    std::vector<Index> perm(60);
    std::iota(perm.begin(), perm.end(), 0);
    for (Index i = 59; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    DenseMatrix hp(60, 3), lp(60, 2);
    for (Index i = 0; i < 60; ++i) {
      hp.row(i) = high.row(perm[static_cast<std::size_t>(i)]);
      lp.row(i) = low.row(perm[static_cast<std::size_t>(i)]);
    }
    CHECK(neighborhood_preservation(hp, lp, 6) == doctest::Approx(neighborhood_preservation(high, low, 6)).epsilon(1e-15));
  }
  SUBCASE("random embedding scores near chance") {
    // Permutation null: the expected overlap of two independent k-subsets of M-1 items is k^2/(M-1),
    // giving a score of k/(M-1).
    const PointCloud pc = gen_manifold(ManifoldKind::ToroidalHelix, 500, 6);
    DenseMatrix noise(500, 2);
    for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
    const double score = neighborhood_preservation(pc.points, noise, 10);
    CHECK(score == doctest::Approx(10.0 / 499.0).epsilon(0.5));
  }
  CHECK_THROWS_AS(neighborhood_preservation(high, DenseMatrix(high.topRows(10)), 5), InvalidArgument);
  CHECK_THROWS_AS(neighborhood_preservation(high, high, 60), InvalidArgument);
}

TEST_CASE("random projection baseline") {
  const PointCloud pc = gen_manifold(ManifoldKind::GaussianSurface, 80, 1);
  const EmbeddingResult a = random_projection_embed(pc, 2, 5);
  CHECK(a.coords.rows() == 80);
  CHECK(a.coords.cols() == 2);
  CHECK(a.method == EmbedMethod::RandomProjection);
  CHECK(a.coords == random_projection_embed(pc, 2, 5).coords);
}
