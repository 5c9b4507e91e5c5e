#include <doctest.h>

#include "fixtures.hpp"
#include "hyperntf/factorization.hpp"

using namespace hyperntf;

namespace {

// Objective written out independently: explicit CP sum plus pairwise penalty.
double reference_objective(const DenseTensor& x, const FactorModel& m, const Hypergraph* g,
                           double lambda) {
  const double fit = (x.data() - oracle::cp(m.all_factors()).data()).squaredNorm();
  if (g == nullptr || lambda == 0.0) return fit;
  return fit + lambda * oracle::pairwise_regularizer(g->edges(), g->edge_weights(), m.z);
}

FactorModel exact_model(std::uint64_t seed, const std::vector<Index>& dims, Index rank,
                        bool constant_z_rows) {
  FactorModel m = init_factors(dims, rank, seed);
  if (constant_z_rows) m.z = DenseVector::Ones(m.z.rows()) * m.z.row(0);
  return m;
}

double max_column_sum_error(const DenseMatrix& u) {
  return (u.colwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace

TEST_CASE("init_factors") {
  const FactorModel a = init_factors({4, 5, 30}, 3, 42);
  const FactorModel b = init_factors({4, 5, 30}, 3, 42);
  CHECK(a.factors == b.factors);
  CHECK(a.z == b.z);
  CHECK(a.order() == 3);
  CHECK(a.rank() == 3);
  CHECK(a.z.rows() == 30);
  for (const auto& u : a.all_factors()) CHECK((u.array() > 0.0).all());
  for (const auto& u : a.factors) CHECK(max_column_sum_error(u) <= 1e-12);
  CHECK(a.z != init_factors({4, 5, 30}, 3, 43).z);
}

TEST_CASE("SolverConfig validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    SolverConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  };
  bad([](SolverConfig& s) { s.rank = 0; });
  bad([](SolverConfig& s) { s.lambda = -1.0; });
  bad([](SolverConfig& s) { s.tol_obj = 0.0; });
  bad([](SolverConfig& s) { s.tol_rse = -1e-3; });
  bad([](SolverConfig& s) { s.epsilon_guard = 0.0; });
  bad([](SolverConfig& s) { s.max_iter = 0; });
  bad([](SolverConfig& s) { s.knn = 0; });
}

TEST_CASE("objective") {
  Rng rng(20);
  const FactorModel m = init_factors({3, 4, 10}, 2, 5);
  const DenseTensor exact = cp_reconstruct(std::span<const DenseMatrix>(m.all_factors()));
  CHECK(objective(exact, m) == doctest::Approx(0.0).epsilon(1e-24));
  CHECK(objective(exact, m, DenseMatrix::Zero(10, 10), 0.0) < 1e-24);

  const FactorModel flat = exact_model(6, {3, 4, 10}, 2, true);
  const DenseTensor flat_x = cp_reconstruct(std::span<const DenseMatrix>(flat.all_factors()));
  const Hypergraph g = sample_hypergraph(flat_x, 3, WeightScheme::Unit);
  CHECK(objective(flat_x, flat, g, 4.0) < 1e-20);

  for (int trial = 0; trial < 10; ++trial) {
    const DenseTensor x = oracle::random_tensor(rng, {3, 4, 10});
    const FactorModel r = init_factors(x.dims(), 3, static_cast<std::uint64_t>(trial));
    const Hypergraph h = sample_hypergraph(x, 3, WeightScheme::Unit);
    const double ref = reference_objective(x, r, &h, 2.5);
    CHECK(std::abs(objective(x, r, h, 2.5) - ref) <= 1e-10 * ref);
    CHECK(std::abs(objective(x, r, hypergraph_laplacian(h), 2.5) - ref) <= 1e-10 * ref);
  }
  CHECK_THROWS_AS(objective(DenseTensor({3, 4, 11}), m), InvalidArgument);
}

TEST_CASE("update_factor") {
  SUBCASE("exact reconstruction is a fixed point") {
    const FactorModel m = init_factors({4, 5, 30}, 3, 7);
    const DenseTensor x = cp_reconstruct(std::span<const DenseMatrix>(m.all_factors()));
    for (Index n = 0; n < 2; ++n) {
      const DenseMatrix u = update_factor(x, m, n);
      CHECK((u - m.factors[static_cast<std::size_t>(n)]).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("nonnegative and non-increasing over 100 seeded trials") {
    Rng rng(21);
    int increases = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const DenseTensor x = oracle::random_tensor(rng, {4, 5, 30});
      FactorModel m = init_factors(x.dims(), 1 + trial % 4, static_cast<std::uint64_t>(trial));
      const Index n = trial % 2;
      const double before = objective(x, m);
      m.factors[static_cast<std::size_t>(n)] = update_factor(x, m, n);
      CHECK((m.factors[static_cast<std::size_t>(n)].array() >= 0.0).all());
      if (objective(x, m) > before * (1.0 + 1e-12)) ++increases;
    }
    CHECK(increases == 0);
  }
  SUBCASE("zero entries stay zero") {
    FactorModel m = init_factors({3, 4, 8}, 2, 8);
    m.factors[0](1, 0) = 0.0;
    const DenseTensor x = fixture::cp_tensor(9, {3, 4, 8}, 2);
    CHECK(update_factor(x, m, 0)(1, 0) == 0.0);
  }
  CHECK_THROWS_AS(update_factor(DenseTensor({3, 4, 8}), init_factors({3, 4, 8}, 2, 1), 2), InvalidArgument);
}

TEST_CASE("normalize_columns") {
  Rng rng(22);
  const DenseMatrix u = oracle::random_matrix(rng, 5, 3, 0.1, 1.0);
  const auto [stochastic, s1] = normalize_columns(u);
  CHECK(max_column_sum_error(stochastic) <= 1e-15);
  const auto [again, ones] = normalize_columns(stochastic);
  CHECK(oracle::rel_err(again, stochastic) <= 1e-15);
  CHECK((ones.array() - 1.0).abs().maxCoeff() <= 1e-15);
  const auto [tripled, threes] = normalize_columns(DenseMatrix(3.0 * stochastic));
  CHECK(oracle::rel_err(tripled, stochastic) <= 1e-15);
  CHECK((threes.array() - 3.0).abs().maxCoeff() <= 1e-14);

  DenseMatrix dead = u;
  dead.col(1).setZero();
  try {
    normalize_columns(dead);
    FAIL("expected DegenerateRank");
  } catch (const DegenerateRank& e) {
    CHECK(e.column == 1);
  }

  for (int trial = 0; trial < 20; ++trial) {
    FactorModel m = init_factors({3, 4, 6}, 3, static_cast<std::uint64_t>(100 + trial));
    m.factors[0] *= rng.uniform(0.5, 4.0);
    const DenseTensor before = cp_reconstruct(std::span<const DenseMatrix>(m.all_factors()));
    normalize_and_absorb(m, 0);
    const DenseTensor after = cp_reconstruct(std::span<const DenseMatrix>(m.all_factors()));
    CHECK((before.data() - after.data()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(max_column_sum_error(m.factors[0]) <= 1e-14);
  }
}

TEST_CASE("update_z") {
  SUBCASE("lambda = 0 fixed point") {
    const FactorModel m = init_factors({4, 5, 30}, 3, 11);
    const DenseTensor x = cp_reconstruct(std::span<const DenseMatrix>(m.all_factors()));
    CHECK((update_z(x, m, nullptr, 0.0) - m.z).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("lambda > 0 fixed point with row-constant Z") {
    const FactorModel m = exact_model(12, {4, 5, 30}, 3, true);
    const DenseTensor x = cp_reconstruct(std::span<const DenseMatrix>(m.all_factors()));
    Rng rng(12);
    const Hypergraph g = build_knn_hypergraph(oracle::random_matrix(rng, 30, 4), 3);
    for (double lambda : {1.0, 4.0, 1024.0}) {
      CHECK((update_z(x, m, &g, lambda) - m.z).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((update_z(x, m, &g, lambda, 1e-12, true) - m.z).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("lambda = 4 non-increasing over 100 seeded trials") {
    Rng rng(23);
    int increases = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const DenseTensor x = oracle::random_tensor(rng, {4, 5, 30});
      FactorModel m = init_factors(x.dims(), 1 + trial % 4, static_cast<std::uint64_t>(trial));
      const Hypergraph g = sample_hypergraph(x, 3, WeightScheme::Unit);
      const double before = objective(x, m, g, 4.0);
      m.z = update_z(x, m, &g, 4.0);
      CHECK((m.z.array() >= 0.0).all());
      if (objective(x, m, g, 4.0) > before * (1.0 + 1e-12)) ++increases;
    }
    CHECK(increases == 0);
  }
  SUBCASE("lambda > 0 requires a hypergraph") {
    const FactorModel m = init_factors({3, 4, 6}, 2, 1);
    CHECK_THROWS_AS(update_z(DenseTensor({3, 4, 6}), m, nullptr, 1.0), InvalidArgument);
  }
}

TEST_CASE("hyperntf_solve") {
  const DenseTensor x = fixture::cp_tensor(30, {6, 6, 40}, 3);

  SUBCASE("trace bookkeeping and determinism") {
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.lambda = 4.0;
    cfg.knn = 3;
    cfg.max_iter = 40;
    cfg.tol_obj = 1e-12;
    cfg.tol_rse = 1e-12;
    cfg.seed = 3;
    const SolveResult a = hyperntf_solve(x, cfg);
    const SolveResult b = hyperntf_solve(x, cfg);
    CHECK(a.trace.objective == b.trace.objective);
    CHECK(a.trace.rse == b.trace.rse);
    CHECK(a.model.z == b.model.z);
    CHECK(a.trace.iterations() == 40);
    CHECK(a.trace.rse.size() == 40);
    CHECK(a.trace.seconds.size() == 40);
    CHECK(a.trace.reason == TerminationReason::MaxIter);
    CHECK(a.model.z.rows() == 40);
    CHECK(a.model.z.cols() == 3);
    for (const auto& u : a.model.all_factors()) CHECK((u.array() >= 0.0).all());
    for (const auto& u : a.model.factors) CHECK(max_column_sum_error(u) <= 1e-12);
    CHECK(a.trace.objective.front() <= a.trace.initial_objective);
    const Hypergraph g = sample_hypergraph(x, 3, WeightScheme::Unit);
    CHECK(a.trace.objective.back() == doctest::Approx(objective(x, a.model, g, 4.0)).epsilon(1e-12));
    CHECK(a.trace.kkt_residual >= 0.0);
  }
  SUBCASE("ntf equals hyperntf with lambda = 0") {
    SolverConfig cfg;
    cfg.rank = 2;
    cfg.max_iter = 30;
    cfg.seed = 4;
    const SolveResult a = hyperntf_solve(x, cfg);
    cfg.lambda = 7.0;
    const SolveResult b = ntf_solve(x, cfg);
    CHECK(a.trace.objective == b.trace.objective);
    CHECK(a.model.z == b.model.z);
  }
  SUBCASE("rank-one tensor is recovered") {
    const DenseTensor r1 = fixture::cp_tensor(31, {5, 6, 20}, 1);
    SolverConfig cfg;
    cfg.rank = 1;
    cfg.max_iter = 500;
    cfg.tol_obj = 1e-15;
    const SolveResult r = ntf_solve(r1, cfg);
    CHECK(r.trace.rse.back() < 1e-4);
    CHECK(r.trace.reason == TerminationReason::RseConverged);
  }
  SUBCASE("termination reasons") {
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.max_iter = 5000;
    cfg.tol_obj = 1e-3;
    cfg.tol_rse = 1e-12;
    const SolveResult r = ntf_solve(x, cfg);
    CHECK(r.trace.reason == TerminationReason::ObjectiveConverged);
    CHECK(r.trace.iterations() < 5000);
    const auto k = static_cast<std::size_t>(r.trace.iterations());
    const double prev = k >= 2 ? r.trace.objective[k - 2] : r.trace.initial_objective;
    CHECK(std::abs(r.trace.objective[k - 1] - prev) / r.trace.objective.front() < 1e-3);
    CHECK(to_string(r.trace.reason) == "objective-converged");

    cfg.absolute_tol_obj = true;
    cfg.tol_obj = 0.1;
    const SolveResult abs = ntf_solve(x, cfg);
    CHECK(abs.trace.reason == TerminationReason::ObjectiveConverged);
    CHECK(to_string(TerminationReason::RseConverged) == "rse-converged");
    CHECK(to_string(TerminationReason::MaxIter) == "max-iter");
  }
  SUBCASE("KKT residual shrinks with the tolerance") {
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.max_iter = 20000;
    cfg.tol_rse = 1e-14;
    cfg.tol_obj = 1e-3;
    const double loose = ntf_solve(x, cfg).trace.kkt_residual;
    cfg.tol_obj = 1e-9;
    const double tight = ntf_solve(x, cfg).trace.kkt_residual;
    MESSAGE("kkt residual: tol 1e-3 -> " << loose << ", tol 1e-9 -> " << tight);
    CHECK(tight < loose);
  }
  SUBCASE("input errors") {
    SolverConfig cfg;
    cfg.rank = 2;
    DenseTensor neg = x;
    neg.data()[17] = -0.5;
    try {
      hyperntf_solve(neg, cfg);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.index == 17);
    }
    CHECK_THROWS_AS(hyperntf_solve(DenseTensor({5}, DenseVector::Ones(5)), cfg), InvalidArgument);
    cfg.lambda = 1.0;
    cfg.knn = 40;
    CHECK_THROWS_AS(hyperntf_solve(x, cfg), InvalidArgument);
  }
  SUBCASE("an all-zero tensor is rejected") {
    SolverConfig cfg;
    CHECK_THROWS_AS(hyperntf_solve(DenseTensor({3, 3, 6}), cfg), DataError);
  }
  SUBCASE("absorbing scales into Z can raise the penalised objective") {
    // Penalty after absorption is sum_j s_j^2 p_j, so column sums above one cost
    // more penalty than the update saved in fit.
    FactorModel m = init_factors(x.dims(), 3, 3);
    const Hypergraph g = sample_hypergraph(x, 3, WeightScheme::Unit);
    const double before = objective(x, m, g, 4.0);
    m.factors[0] = update_factor(x, m, 0);
    const DenseVector s = m.factors[0].colwise().sum();
    const double penalty = regularizer_value(g, m.z);
    DenseMatrix scaled = m.z * s.asDiagonal();
    const double expected = objective(x, m) + 4.0 * regularizer_value(g, scaled);
    normalize_and_absorb(m, 0);
    CHECK(objective(x, m, g, 4.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(regularizer_value(g, m.z) > penalty);
    CHECK(objective(x, m, g, 4.0) > before);
  }
  SUBCASE("the safeguard keeps every sweep non-increasing") {
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.lambda = 4.0;
    cfg.knn = 3;
    cfg.max_iter = 200;
    cfg.tol_obj = 1e-12;
    cfg.seed = 3;
    const SolveResult on = hyperntf_solve(x, cfg);
    double prev = on.trace.initial_objective;
    for (double o : on.trace.objective) {
      CHECK(o <= prev * (1.0 + 1e-9));
      prev = o;
    }
    CHECK(on.trace.rejected_steps > 0);

    cfg.monotone_safeguard = false;
    const SolveResult off = hyperntf_solve(x, cfg);
    CHECK(off.trace.rejected_steps == 0);
    CHECK(off.trace.objective.front() > off.trace.initial_objective);
  }
}

TEST_CASE("ntd_solve") {
  const DenseTensor x = fixture::tucker_tensor(40, {6, 6, 20}, {2, 2, 2});
  SolverConfig cfg;
  cfg.max_iter = 300;
  cfg.tol_obj = 1e-14;
  cfg.tol_rse = 1e-12;
  const TuckerResult r = ntd_solve(x, {2, 2, 2}, cfg);
  CHECK((r.model.core.data().array() >= 0.0).all());
  for (const auto& u : r.model.factors) CHECK((u.array() >= 0.0).all());
  for (std::size_t k = 1; k < r.trace.objective.size(); ++k)
    CHECK(r.trace.objective[k] <= r.trace.objective[k - 1] * (1.0 + 1e-9));
  CHECK(r.trace.rse.back() < r.trace.rse.front());
  CHECK(r.model.sample_factor().rows() == 20);
  CHECK(r.model.sample_factor().cols() == 2);
  const DenseTensor xhat = r.model.reconstruct();
  CHECK(rse(x, xhat) == doctest::Approx(r.trace.rse.back()).epsilon(1e-10));
  CHECK_THROWS_AS(ntd_solve(x, {2, 2}, cfg), InvalidArgument);
  CHECK_THROWS_AS(ntd_solve(x, {7, 2, 2}, cfg), InvalidArgument);
}

TEST_CASE("hosvd") {
  Rng rng(50);
  const DenseTensor x = oracle::random_tensor(rng, {4, 5, 6});
  const TuckerModel t = hosvd(x, {2, 3, 4});
  for (const auto& u : t.factors)
    CHECK((u.transpose() * u - DenseMatrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(t.core.dims() == std::vector<Index>{2, 3, 4});
  CHECK(rse(x, hosvd(x, {4, 5, 6}).reconstruct()) <= 1e-12);

  const DenseTensor r1 = fixture::cp_tensor(51, {4, 5, 6}, 1);
  CHECK(rse(r1, hosvd(r1, {1, 1, 1}).reconstruct()) <= 1e-10);
  CHECK_THROWS_AS(hosvd(x, {5, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(hosvd(x, {0, 1, 1}), InvalidArgument);
}
