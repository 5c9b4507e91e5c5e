#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hyperntf/hypergraph.hpp"
#include "hyperntf/tensor.hpp"

namespace hyperntf {

/// Nonnegative CP model of an L_0 x ... x L_{N-2} x M tensor. `factors` holds
/// U_0..U_{N-2} (columns sum to one after every sweep) and `z` is the M x J
/// sample-mode factor used as the reduced data.
struct FactorModel {
  std::vector<DenseMatrix> factors;
  DenseMatrix z;

  Index rank() const { return z.cols(); }
  Index order() const { return static_cast<Index>(factors.size()) + 1; }

  /// U_0, ..., U_{N-2}, Z in mode order.
  std::vector<DenseMatrix> all_factors() const;
};

enum class TerminationReason { ObjectiveConverged, RseConverged, MaxIter };

std::string to_string(TerminationReason reason);

struct SolverConfig {
  Index rank = 1;
  double lambda = 0.0;
  Index knn = 5;
  Index max_iter = 500;
  double tol_rse = 1e-4;
  /// Relative objective change |O_{k+1} - O_k| / O_1 unless `absolute_tol_obj` is set.
  double tol_obj = 1e-6;
  bool absolute_tol_obj = false;
  double epsilon_guard = 1e-12;
  std::uint64_t seed = 0;
  WeightScheme weight_scheme = WeightScheme::Unit;
  /// Use the hypergraph terms of the Z update with unit coefficient instead of lambda.
  bool strict_z_update = false;
  /// With lambda > 0, keep a U step (update, normalise, absorb into Z) only if it
  /// does not raise the objective.
  bool monotone_safeguard = true;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct SolveTrace {
  double initial_objective = 0.0;
  std::vector<double> objective;
  std::vector<double> rse;
  std::vector<double> seconds;
  TerminationReason reason = TerminationReason::MaxIter;
  /// max |min(U, grad U)| over every factor at the returned model.
  double kkt_residual = 0.0;
  /// U steps discarded by the monotone safeguard.
  Index rejected_steps = 0;

  Index iterations() const { return static_cast<Index>(objective.size()); }
};

/// Entries i.i.d. uniform on (0.1, 1.1); the U_n columns are then L1-normalised.
/// `dims` are the full tensor extents, the last one being the sample count.
FactorModel init_factors(const std::vector<Index>& dims, Index rank, std::uint64_t seed);

/// ||x - [[U_0, ..., Z]]||_F^2 + lambda * trace(Z^T L Z).
double objective(const DenseTensor& x, const FactorModel& m, const DenseMatrix& laplacian,
                 double lambda);
/// Same objective with the penalty evaluated on the sparse hypergraph.
double objective(const DenseTensor& x, const FactorModel& m, const Hypergraph& g, double lambda);
/// Fidelity term only.
double objective(const DenseTensor& x, const FactorModel& m);

/// Multiplicative update of U_n: U_n * [X_(n) KR] / max(U_n (Z^T Z * prod U_i^T U_i), eps).
DenseMatrix update_factor(const DenseTensor& x, const FactorModel& m, Index mode,
                          double epsilon_guard = 1e-12);

/// Divides every column by its sum. Returns the normalised matrix and the sums.
/// Throws DegenerateRank naming the first zero column.
std::pair<DenseMatrix, DenseVector> normalize_columns(const DenseMatrix& u);

/// Normalises U_mode in place and multiplies the scales into the columns of Z,
/// leaving the reconstruction unchanged.
void normalize_and_absorb(FactorModel& m, Index mode);

/// Multiplicative update of Z:
/// Z * [X_(N) KR + c H W D_E^{-1} H^T Z] / max(Z (prod U_i^T U_i) + c D_V Z, eps),
/// with c = lambda (or 1 when `strict_z` and lambda > 0). `g` may be null when c = 0.
DenseMatrix update_z(const DenseTensor& x, const FactorModel& m, const Hypergraph* g,
                     double lambda, double epsilon_guard = 1e-12, bool strict_z = false);

/// Hypergraph over the sample slices of x (rows of the last-mode unfolding).
Hypergraph sample_hypergraph(const DenseTensor& x, Index k, WeightScheme scheme);

/// Elementwise min(U, |grad U|) max-norm over all factors, a first-order KKT residual.
double kkt_residual(const DenseTensor& x, const FactorModel& m, const Hypergraph* g,
                    double lambda);

struct SolveResult {
  FactorModel model;
  SolveTrace trace;
};

/// Hypergraph-regularised nonnegative CP factorisation. Each sweep updates
/// U_0..U_{N-2} in order (normalising each and absorbing scales into Z), then Z.
SolveResult hyperntf_solve(const DenseTensor& x, const SolverConfig& config);

/// Nonnegative CP without the hypergraph penalty.
SolveResult ntf_solve(const DenseTensor& x, const SolverConfig& config);

struct TuckerModel {
  DenseTensor core;
  std::vector<DenseMatrix> factors;

  DenseTensor reconstruct() const;
  /// Mode-(N-1) factor, the per-sample embedding.
  const DenseMatrix& sample_factor() const { return factors.back(); }
};

struct TuckerResult {
  TuckerModel model;
  SolveTrace trace;
};

/// Nonnegative Tucker decomposition by multiplicative updates of each factor and the core.
/// Only rank-independent fields of `config` (iterations, tolerances, guard, seed) are used.
TuckerResult ntd_solve(const DenseTensor& x, const std::vector<Index>& ranks,
                       const SolverConfig& config);

/// Truncated HOSVD: U_n are the leading left singular vectors of each unfolding.
TuckerModel hosvd(const DenseTensor& x, const std::vector<Index>& ranks);

}  // namespace hyperntf
