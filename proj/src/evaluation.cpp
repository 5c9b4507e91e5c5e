#include "hyperntf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "hyperntf/random.hpp"

namespace hyperntf {

namespace {

Index nearest(const DenseMatrix& centers, const Eigen::RowVectorXd& x, double* dist2 = nullptr) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist2 != nullptr) *dist2 = best_d;
  return best;
}

DenseMatrix plus_plus_seeds(const DenseMatrix& z, Index clusters, Rng& rng) {
  const Index m = z.rows();
  DenseMatrix centers(clusters, z.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(m), false);
  Index first = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
  centers.row(0) = z.row(first);
  chosen[static_cast<std::size_t>(first)] = true;
  DenseVector d2 = (z.rowwise() - z.row(first)).rowwise().squaredNorm();

  for (Index c = 1; c < clusters; ++c) {
    const double total = d2.sum();
    Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < m; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0)  // rounding at the top of the cumulative sum
        for (Index i = m - 1; i >= 0 && pick < 0; --i)
          if (d2[i] > 0.0) pick = i;
    } else {
      for (Index i = 0; i < m && pick < 0; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centers.row(c) = z.row(pick);
    d2 = d2.cwiseMin((z.rowwise() - z.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

// Maps arbitrary labels to 0..K-1 in order of first appearance of the sorted values.
std::vector<Index> compact(const LabelVector& labels, Index& count) {
  std::map<int, Index> ids;
  for (int l : labels) ids.emplace(l, 0);
  Index next = 0;
  for (auto& [label, id] : ids) id = next++;
  count = next;
  std::vector<Index> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

void check_lengths(const LabelVector& a, const LabelVector& b, const char* where) {
  if (a.size() != b.size())
    throw InvalidArgument(std::string(where) + ": label vectors differ in length (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

}  // namespace

LabelVector kmeans(const DenseMatrix& z, Index clusters, std::uint64_t seed, Index max_iter) {
  const Index m = z.rows();
  if (clusters < 1 || clusters > m)
    throw InvalidArgument("kmeans: K = " + std::to_string(clusters) + " outside [1, " +
                          std::to_string(m) + "]");
  if (!z.allFinite()) throw InvalidArgument("kmeans: data contains non-finite values");

  Rng rng(seed);
  DenseMatrix centers = plus_plus_seeds(z, clusters, rng);
  LabelVector labels(static_cast<std::size_t>(m), -1);
  std::vector<Index> counts(static_cast<std::size_t>(clusters));

  for (Index iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Index i = 0; i < m; ++i) {
      const int c = static_cast<int>(nearest(centers, z.row(i)));
      if (c != labels[static_cast<std::size_t>(i)]) {
        labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;

    std::fill(counts.begin(), counts.end(), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    centers.setZero();
    for (Index i = 0; i < m; ++i) centers.row(labels[static_cast<std::size_t>(i)]) += z.row(i);
    for (Index c = 0; c < clusters; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

    for (Index c = 0; c < clusters; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < m; ++i) {
        const int owner = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] < 2) continue;
        const double d = (z.row(i) - centers.row(owner)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) break;
      const int owner = labels[static_cast<std::size_t>(far)];
      --counts[static_cast<std::size_t>(owner)];
      ++counts[static_cast<std::size_t>(c)];
      labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
      centers.row(c) = z.row(far);
    }
  }
  return labels;
}

std::vector<Index> hungarian_max(const DenseMatrix& weights) {
  if (weights.rows() != weights.cols())
    throw InvalidArgument("hungarian_max: weight matrix must be square");
  const Index n = weights.rows();
  if (n == 0) return {};
  // Minimisation form on cost = max - w, 1-based potentials.
  const double top = weights.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  const auto cost = [&](Index i, Index j) { return top - weights(i - 1, j - 1); };
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[js];
        if (cur < minv[js]) {
          minv[js] = cur;
          way[js] = j0;
        }
        if (minv[js] < delta) {
          delta = minv[js];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) {
          u[static_cast<std::size_t>(p[js])] += delta;
          v[js] -= delta;
        } else {
          minv[js] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j)
    assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

DenseMatrix contingency(const LabelVector& pred, const LabelVector& truth) {
  check_lengths(pred, truth, "contingency");
  Index kp = 0, kt = 0;
  const auto p = compact(pred, kp);
  const auto t = compact(truth, kt);
  DenseMatrix table = DenseMatrix::Zero(kp, kt);
  for (std::size_t i = 0; i < p.size(); ++i) table(p[i], t[i]) += 1.0;
  return table;
}

double clustering_accuracy(const LabelVector& pred, const LabelVector& truth) {
  check_lengths(pred, truth, "clustering_accuracy");
  if (pred.empty()) throw InvalidArgument("clustering_accuracy: no samples");
  const DenseMatrix table = contingency(pred, truth);
  const Index n = std::max(table.rows(), table.cols());
  DenseMatrix square = DenseMatrix::Zero(n, n);
  square.topLeftCorner(table.rows(), table.cols()) = table;
  const auto assign = hungarian_max(square);
  double matched = 0.0;
  for (Index i = 0; i < n; ++i) matched += square(i, assign[static_cast<std::size_t>(i)]);
  return matched / static_cast<double>(pred.size());
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
  check_lengths(pred, truth, "nmi");
  if (pred.empty()) throw InvalidArgument("nmi: no samples");
  const DenseMatrix table = contingency(pred, truth);
  const double total = static_cast<double>(pred.size());
  const DenseVector rows = table.rowwise().sum();
  const DenseVector cols = table.colwise().sum().transpose();

  const auto entropy = [&](const DenseVector& counts) {
    double h = 0.0;
    for (Index i = 0; i < counts.size(); ++i)
      if (counts[i] > 0.0) h -= counts[i] / total * std::log(counts[i] / total);
    return h;
  };
  const double hp = entropy(rows);
  const double ht = entropy(cols);
  if (hp == 0.0 || ht == 0.0) return (table.rows() == 1 && table.cols() == 1) ? 1.0 : 0.0;

  double mi = 0.0;
  for (Index i = 0; i < table.rows(); ++i)
    for (Index j = 0; j < table.cols(); ++j) {
      const double nij = table(i, j);
      if (nij > 0.0) mi += nij / total * std::log(total * nij / (rows[i] * cols[j]));
    }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

ClusterReport evaluate_clustering(const DenseMatrix& z, const LabelVector& truth, Index clusters,
                                  Index runs, std::uint64_t base_seed) {
  if (runs < 1) throw InvalidArgument("evaluate_clustering: runs must be >= 1");
  if (static_cast<Index>(truth.size()) != z.rows())
    throw InvalidArgument("evaluate_clustering: " + std::to_string(truth.size()) +
                          " labels for " + std::to_string(z.rows()) + " samples");
  ClusterReport report;
  for (Index r = 0; r < runs; ++r) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
    const LabelVector pred = kmeans(z, clusters, seed);
    report.seeds.push_back(seed);
    report.acc.push_back(clustering_accuracy(pred, truth));
    report.nmi.push_back(nmi(pred, truth));
  }
  const auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(v.size()));
  };
  stats(report.acc, report.acc_mean, report.acc_std);
  stats(report.nmi, report.nmi_mean, report.nmi_std);
  return report;
}

}  // namespace hyperntf
