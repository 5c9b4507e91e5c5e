#include "hyperntf/factorization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "hyperntf/random.hpp"

namespace hyperntf {

std::vector<DenseMatrix> FactorModel::all_factors() const {
  std::vector<DenseMatrix> all = factors;
  all.push_back(z);
  return all;
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::ObjectiveConverged: return "objective-converged";
    case TerminationReason::RseConverged: return "rse-converged";
    case TerminationReason::MaxIter: return "max-iter";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (rank < 1) throw InvalidArgument("SolverConfig: rank must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("SolverConfig: lambda must be a finite value >= 0");
  if (knn < 1) throw InvalidArgument("SolverConfig: knn must be >= 1");
  if (max_iter < 1) throw InvalidArgument("SolverConfig: max_iter must be >= 1");
  if (!(tol_rse > 0.0)) throw InvalidArgument("SolverConfig: tol_rse must be > 0");
  if (!(tol_obj > 0.0)) throw InvalidArgument("SolverConfig: tol_obj must be > 0");
  if (!(epsilon_guard > 0.0)) throw InvalidArgument("SolverConfig: epsilon_guard must be > 0");
}

namespace {

constexpr double kAcceptSlack = 1e-13;

DenseMatrix uniform_matrix(Rng& rng, Index rows, Index cols) {
  DenseMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform_open(0.1, 1.1);
  return m;
}

// Hadamard product of U_i^T U_i over every factor except `skip`.
DenseMatrix gram_hadamard(const std::vector<DenseMatrix>& factors, Index skip) {
  const Index rank = factors.front().cols();
  DenseMatrix g = DenseMatrix::Ones(rank, rank);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (static_cast<Index>(k) == skip) continue;
    g.array() *= (factors[k].transpose() * factors[k]).array();
  }
  return g;
}

DenseMatrix guarded_ratio(const DenseMatrix& current, const DenseMatrix& numer,
                          const DenseMatrix& denom, double eps) {
  return current.array() * numer.array() / denom.array().max(eps);
}

void check_model(const DenseTensor& x, const FactorModel& m) {
  if (x.order() != m.order())
    throw InvalidArgument("factor model order " + std::to_string(m.order()) +
                          " does not match tensor order " + std::to_string(x.order()));
  for (Index k = 0; k + 1 < x.order(); ++k) {
    const auto& u = m.factors[static_cast<std::size_t>(k)];
    if (u.rows() != x.dim(k) || u.cols() != m.rank())
      throw InvalidArgument("factor " + std::to_string(k) + " has the wrong shape");
  }
  if (m.z.rows() != x.dim(x.order() - 1))
    throw InvalidArgument("Z row count does not match the sample mode");
}

double graph_coefficient(double lambda, bool strict_z) {
  if (lambda == 0.0) return 0.0;
  return strict_z ? 1.0 : lambda;
}

void check_input(const DenseTensor& x) {
  if (x.order() < 2) throw InvalidArgument("solver input must have order >= 2");
  const Index bad = x.first_negative();
  if (bad >= 0)
    throw DataError("solver input has a negative entry at linear index " + std::to_string(bad),
                    bad);
  if (!(frobenius(x) > 0.0)) throw DataError("solver input is identically zero");
}

bool converged(const SolverConfig& cfg, const SolveTrace& trace) {
  const auto k = trace.objective.size();
  const double current = trace.objective.back();
  const double previous = k >= 2 ? trace.objective[k - 2] : trace.initial_objective;
  const double change = std::abs(current - previous);
  if (cfg.absolute_tol_obj) return change < cfg.tol_obj;
  const double scale = std::max(trace.objective.front(), std::numeric_limits<double>::min());
  return change / scale < cfg.tol_obj;
}

// Records one sweep and decides whether to stop.
bool record(const SolverConfig& cfg, SolveTrace& trace, double obj, double rse_value,
            double seconds, Index iter) {
  trace.objective.push_back(obj);
  trace.rse.push_back(rse_value);
  trace.seconds.push_back(seconds);
  if (rse_value < cfg.tol_rse) {
    trace.reason = TerminationReason::RseConverged;
    return true;
  }
  if (converged(cfg, trace)) {
    trace.reason = TerminationReason::ObjectiveConverged;
    return true;
  }
  if (iter >= cfg.max_iter) {
    trace.reason = TerminationReason::MaxIter;
    return true;
  }
  return false;
}

}  // namespace

FactorModel init_factors(const std::vector<Index>& dims, Index rank, std::uint64_t seed) {
  if (rank < 1) throw InvalidArgument("init_factors: rank must be >= 1");
  if (dims.size() < 2) throw InvalidArgument("init_factors: need at least two modes");
  Rng rng(seed);
  FactorModel m;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseMatrix u = uniform_matrix(rng, dims[k], rank);
    m.factors.push_back(normalize_columns(u).first);
  }
  m.z = uniform_matrix(rng, dims.back(), rank);
  return m;
}

double objective(const DenseTensor& x, const FactorModel& m) {
  check_model(x, m);
  const auto all = m.all_factors();
  const DenseTensor xhat = cp_reconstruct(std::span<const DenseMatrix>(all));
  return (x.data() - xhat.data()).squaredNorm();
}

double objective(const DenseTensor& x, const FactorModel& m, const DenseMatrix& laplacian,
                 double lambda) {
  const double fit = objective(x, m);
  return lambda == 0.0 ? fit : fit + lambda * regularizer_value(laplacian, m.z);
}

double objective(const DenseTensor& x, const FactorModel& m, const Hypergraph& g, double lambda) {
  const double fit = objective(x, m);
  return lambda == 0.0 ? fit : fit + lambda * regularizer_value(g, m.z);
}

DenseMatrix update_factor(const DenseTensor& x, const FactorModel& m, Index mode,
                          double epsilon_guard) {
  check_model(x, m);
  if (mode < 0 || mode >= x.order() - 1)
    throw InvalidArgument("update_factor: mode " + std::to_string(mode) +
                          " is not a non-sample mode");
  const auto all = m.all_factors();
  const auto& u = m.factors[static_cast<std::size_t>(mode)];
  const DenseMatrix numer = mttkrp(x, std::span<const DenseMatrix>(all), mode);
  const DenseMatrix denom = u * gram_hadamard(all, mode);
  return guarded_ratio(u, numer, denom, epsilon_guard);
}

std::pair<DenseMatrix, DenseVector> normalize_columns(const DenseMatrix& u) {
  DenseVector scale = u.colwise().sum().transpose();
  for (Index j = 0; j < scale.size(); ++j)
    if (!(scale[j] > 0.0))
      throw DegenerateRank("normalize_columns: column " + std::to_string(j) + " sums to zero", j);
  DenseMatrix out = u * scale.cwiseInverse().asDiagonal();
  return {std::move(out), std::move(scale)};
}

void normalize_and_absorb(FactorModel& m, Index mode) {
  auto [u, scale] = normalize_columns(m.factors.at(static_cast<std::size_t>(mode)));
  m.factors[static_cast<std::size_t>(mode)] = std::move(u);
  m.z = m.z * scale.asDiagonal();
}

DenseMatrix update_z(const DenseTensor& x, const FactorModel& m, const Hypergraph* g,
                     double lambda, double epsilon_guard, bool strict_z) {
  check_model(x, m);
  const Index sample_mode = x.order() - 1;
  const auto all = m.all_factors();
  DenseMatrix numer = mttkrp(x, std::span<const DenseMatrix>(all), sample_mode);
  DenseMatrix denom = m.z * gram_hadamard(all, sample_mode);
  const double c = graph_coefficient(lambda, strict_z);
  if (c != 0.0) {
    if (g == nullptr) throw InvalidArgument("update_z: lambda > 0 requires a hypergraph");
    if (g->num_vertices() != m.z.rows())
      throw InvalidArgument("update_z: hypergraph vertex count does not match Z");
    numer += c * g->adjacency_product(m.z);
    denom += c * g->degree_product(m.z);
  }
  return guarded_ratio(m.z, numer, denom, epsilon_guard);
}

Hypergraph sample_hypergraph(const DenseTensor& x, Index k, WeightScheme scheme) {
  return build_knn_hypergraph(unfold(x, x.order() - 1), k, scheme);
}

double kkt_residual(const DenseTensor& x, const FactorModel& m, const Hypergraph* g,
                    double lambda) {
  check_model(x, m);
  const auto all = m.all_factors();
  double worst = 0.0;
  for (Index k = 0; k < x.order(); ++k) {
    const auto& f = all[static_cast<std::size_t>(k)];
    DenseMatrix grad = 2.0 * (f * gram_hadamard(all, k) -
                              mttkrp(x, std::span<const DenseMatrix>(all), k));
    if (k == x.order() - 1 && lambda != 0.0 && g != nullptr)
      grad += 2.0 * lambda * (g->degree_product(f) - g->adjacency_product(f));
    worst = std::max(worst, f.array().min(grad.array().abs()).maxCoeff());
  }
  return worst;
}

SolveResult hyperntf_solve(const DenseTensor& x, const SolverConfig& config) {
  config.validate();
  check_input(x);
  const Index order = x.order();
  const Index samples = x.dim(order - 1);
  const bool regularized = config.lambda != 0.0;

  Hypergraph graph;
  if (regularized) {
    if (config.knn > samples - 1)
      throw InvalidArgument("hyperntf_solve: knn = " + std::to_string(config.knn) +
                            " needs at least " + std::to_string(config.knn + 1) + " samples");
    graph = sample_hypergraph(x, config.knn, config.weight_scheme);
  }
  const Hypergraph* g = regularized ? &graph : nullptr;

  SolveResult result;
  FactorModel& m = result.model;
  SolveTrace& trace = result.trace;
  m = init_factors(x.dims(), config.rank, config.seed);

  const double xnorm = frobenius(x);
  const auto evaluate = [&](double& rse_out) {
    const double fit = objective(x, m);
    rse_out = std::sqrt(fit) / xnorm;
    return regularized ? fit + config.lambda * regularizer_value(graph, m.z) : fit;
  };
  double rse0 = 0.0;
  trace.initial_objective = evaluate(rse0);
  double current = trace.initial_objective;

  using clock = std::chrono::steady_clock;
  for (Index iter = 1;; ++iter) {
    const auto start = clock::now();
    try {
      for (Index n = 0; n + 1 < order; ++n) {
        if (!(regularized && config.monotone_safeguard)) {
          m.factors[static_cast<std::size_t>(n)] = update_factor(x, m, n, config.epsilon_guard);
          normalize_and_absorb(m, n);
          continue;
        }
        // Absorbing column scales into Z changes the penalty, so the step can
        // raise the objective; it is kept only when it does not.
        FactorModel candidate = m;
        candidate.factors[static_cast<std::size_t>(n)] =
            update_factor(x, m, n, config.epsilon_guard);
        normalize_and_absorb(candidate, n);
        const double cand_obj = objective(x, candidate, graph, config.lambda);
        if (cand_obj <= current * (1.0 + kAcceptSlack)) {
          m = std::move(candidate);
          current = cand_obj;
        } else {
          ++trace.rejected_steps;
        }
      }
    } catch (const DegenerateRank& e) {
      throw DegenerateRank(std::string(e.what()) + " at iteration " + std::to_string(iter),
                           e.column, iter);
    }
    m.z = update_z(x, m, g, config.lambda, config.epsilon_guard, config.strict_z_update);
    double rse_value = 0.0;
    const double obj = evaluate(rse_value);
    current = obj;
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    if (record(config, trace, obj, rse_value, secs, iter)) break;
  }
  trace.kkt_residual = kkt_residual(x, m, g, config.lambda);
  return result;
}

SolveResult ntf_solve(const DenseTensor& x, const SolverConfig& config) {
  SolverConfig plain = config;
  plain.lambda = 0.0;
  return hyperntf_solve(x, plain);
}

DenseTensor TuckerModel::reconstruct() const {
  DenseTensor out = core;
  for (std::size_t n = 0; n < factors.size(); ++n)
    out = mode_product(out, factors[n], static_cast<Index>(n));
  return out;
}

namespace {

void check_ranks(const DenseTensor& x, const std::vector<Index>& ranks, const char* where) {
  if (static_cast<Index>(ranks.size()) != x.order())
    throw InvalidArgument(std::string(where) + ": need one rank per mode");
  for (std::size_t n = 0; n < ranks.size(); ++n)
    if (ranks[n] < 1 || ranks[n] > x.dims()[n])
      throw InvalidArgument(std::string(where) + ": rank " + std::to_string(ranks[n]) +
                            " invalid for mode " + std::to_string(n) + " of extent " +
                            std::to_string(x.dims()[n]));
}

// t x_i m_i for every mode i != skip, transposed when `transpose` is set.
DenseTensor multi_mode_product(DenseTensor t, const std::vector<DenseMatrix>& ms, Index skip,
                               bool transpose) {
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (static_cast<Index>(i) == skip) continue;
    if (transpose)
      t = mode_product(t, ms[i].transpose(), static_cast<Index>(i));
    else
      t = mode_product(t, ms[i], static_cast<Index>(i));
  }
  return t;
}

// Scales slice j of `core` along `mode` by s_j.
void scale_core_slices(DenseTensor& core, Index mode, const DenseVector& s) {
  DenseMatrix g = unfold(core, mode);
  g = s.asDiagonal() * g;
  core = fold(g, mode, core.dims());
}

}  // namespace

TuckerResult ntd_solve(const DenseTensor& x, const std::vector<Index>& ranks,
                       const SolverConfig& config) {
  config.validate();
  check_input(x);
  check_ranks(x, ranks, "ntd_solve");
  const Index order = x.order();
  const double eps = config.epsilon_guard;

  Rng rng(config.seed);
  TuckerResult result;
  TuckerModel& m = result.model;
  SolveTrace& trace = result.trace;
  for (Index n = 0; n < order; ++n) {
    DenseMatrix u = uniform_matrix(rng, x.dim(n), ranks[static_cast<std::size_t>(n)]);
    m.factors.push_back(normalize_columns(u).first);
  }
  m.core = DenseTensor(ranks);
  for (Index i = 0; i < m.core.size(); ++i) m.core.data()[i] = rng.uniform_open(0.1, 1.1);

  const double xnorm = frobenius(x);
  const auto evaluate = [&](double& rse_out) {
    const double fit = (x.data() - m.reconstruct().data()).squaredNorm();
    rse_out = std::sqrt(fit) / xnorm;
    return fit;
  };
  double rse0 = 0.0;
  trace.initial_objective = evaluate(rse0);

  using clock = std::chrono::steady_clock;
  for (Index iter = 1;; ++iter) {
    const auto start = clock::now();
    for (Index n = 0; n < order; ++n) {
      auto& u = m.factors[static_cast<std::size_t>(n)];
      const DenseMatrix core_n = unfold(m.core, n);
      const DenseMatrix numer =
          unfold(multi_mode_product(x, m.factors, n, true), n) * core_n.transpose();
      std::vector<DenseMatrix> grams;
      for (const auto& f : m.factors) grams.push_back(f.transpose() * f);
      const DenseMatrix core_gram =
          unfold(multi_mode_product(m.core, grams, n, false), n) * core_n.transpose();
      u = guarded_ratio(u, numer, u * core_gram, eps);
      try {
        auto [normalized, scale] = normalize_columns(u);
        u = std::move(normalized);
        scale_core_slices(m.core, n, scale);
      } catch (const DegenerateRank& e) {
        throw DegenerateRank(std::string(e.what()) + " in mode " + std::to_string(n) +
                                 " at iteration " + std::to_string(iter),
                             e.column, iter);
      }
    }
    std::vector<DenseMatrix> grams;
    for (const auto& f : m.factors) grams.push_back(f.transpose() * f);
    const DenseTensor numer = multi_mode_product(x, m.factors, -1, true);
    const DenseTensor denom = multi_mode_product(m.core, grams, -1, false);
    m.core.data() = m.core.data().array() * numer.data().array() / denom.data().array().max(eps);

    double rse_value = 0.0;
    const double obj = evaluate(rse_value);
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    if (record(config, trace, obj, rse_value, secs, iter)) break;
  }
  return result;
}

TuckerModel hosvd(const DenseTensor& x, const std::vector<Index>& ranks) {
  check_ranks(x, ranks, "hosvd");
  TuckerModel m;
  for (Index n = 0; n < x.order(); ++n) {
    const DenseMatrix xn = unfold(x, n);
    Eigen::BDCSVD<DenseMatrix> svd(xn, Eigen::ComputeThinU);
    DenseMatrix u = svd.matrixU().leftCols(ranks[static_cast<std::size_t>(n)]);
    // Largest-magnitude entry of each singular vector made positive.
    for (Index j = 0; j < u.cols(); ++j) {
      Index at = 0;
      u.col(j).cwiseAbs().maxCoeff(&at);
      if (u(at, j) < 0.0) u.col(j) *= -1.0;
    }
    m.factors.push_back(std::move(u));
  }
  m.core = multi_mode_product(x, m.factors, -1, true);
  return m;
}

}  // namespace hyperntf
