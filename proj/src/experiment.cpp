#include "hyperntf/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <set>

#include "hyperntf/io.hpp"

namespace hyperntf {

namespace fs = std::filesystem;

Task parse_task(const std::string& name) {
  if (name == "factorize") return Task::Factorize;
  if (name == "unfold") return Task::Unfold;
  if (name == "cluster-eval") return Task::ClusterEval;
  if (name == "gen-manifold") return Task::GenManifold;
  if (name == "convert") return Task::Convert;
  throw ConfigError("unknown task '" + name + "'");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::Factorize: return "factorize";
    case Task::Unfold: return "unfold";
    case Task::ClusterEval: return "cluster-eval";
    case Task::GenManifold: return "gen-manifold";
    case Task::Convert: return "convert";
  }
  return "unknown";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "task",    "input",   "labels", "method", "rank",     "ranks",  "lambda",   "knn",
      "max_iter", "tol_obj", "tol_rse", "seed",  "runs",     "output", "kind",     "samples",
      "noise",   "dim",     "clusters", "limit", "weights",  "strict_z", "abs_tol",
      "safeguard"};
  return keys;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

Index to_index(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(key + ": '" + text + "' is not an integer");
  return static_cast<Index>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(key + ": '" + text + "' is not a non-negative integer");
  return v;
}

double to_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
    throw ConfigError(key + ": '" + text + "' is not a finite number");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": '" + text + "' is not a boolean");
}

std::vector<Index> to_index_list(const std::string& key, const std::string& text) {
  std::vector<Index> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(',', start);
    out.push_back(to_index(key, std::string(trim(std::string_view(text).substr(start, pos - start)))));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void require(const ConfigMap& v, const std::string& key, Task task) {
  if (!v.contains(key) || v.at(key).empty())
    throw ConfigError("task " + to_string(task) + " requires '" + key + "'");
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool is_factor_method(const std::string& m) {
  return m == "hyperntf" || m == "ntf" || m == "ntd" || m == "hosvd";
}

bool is_embed_method(const std::string& m) {
  return m == "hypergraph-le" || m == "graph-le" || m == "lle";
}

}  // namespace

ConfigMap parse_config_document(std::string_view text) {
  ConfigMap out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!is_key(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!out.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    if (end == text.size()) break;
  }
  return out;
}

SolverConfig ExperimentConfig::solver() const {
  SolverConfig s;
  s.rank = rank;
  s.lambda = lambda;
  s.knn = knn;
  s.max_iter = max_iter;
  s.tol_obj = tol_obj;
  s.tol_rse = tol_rse;
  s.seed = seed;
  s.weight_scheme = weights;
  s.strict_z_update = strict_z;
  s.absolute_tol_obj = abs_tol;
  s.monotone_safeguard = safeguard;
  return s;
}

ExperimentConfig make_config(const ConfigMap& v) {
  for (const auto& [key, value] : v)
    if (!is_key(key)) throw ConfigError("unknown key '" + key + "'");

  ExperimentConfig c;
  c.source = v;
  if (!v.contains("task")) throw ConfigError("configuration requires 'task'");
  c.task = parse_task(v.at("task"));
  const auto get = [&](const std::string& key) -> const std::string* {
    const auto it = v.find(key);
    return it == v.end() ? nullptr : &it->second;
  };

  if (auto s = get("input")) c.input = *s;
  if (auto s = get("labels")) c.labels = *s;
  if (auto s = get("method")) c.method = *s;
  if (auto s = get("output")) c.output = *s;
  if (auto s = get("kind")) c.kind = *s;
  if (auto s = get("rank")) c.rank = to_index("rank", *s);
  if (auto s = get("ranks")) c.ranks = to_index_list("ranks", *s);
  if (auto s = get("lambda")) c.lambda = to_double("lambda", *s);
  if (auto s = get("knn")) {
    c.knn = to_index("knn", *s);
    check(c.knn >= 1, "knn must be >= 1");
  }
  if (auto s = get("max_iter")) c.max_iter = to_index("max_iter", *s);
  if (auto s = get("tol_obj")) c.tol_obj = to_double("tol_obj", *s);
  if (auto s = get("tol_rse")) c.tol_rse = to_double("tol_rse", *s);
  if (auto s = get("seed")) c.seed = to_u64("seed", *s);
  if (auto s = get("runs")) c.runs = to_index("runs", *s);
  if (auto s = get("samples")) c.samples = to_index("samples", *s);
  if (auto s = get("noise")) c.noise = to_double("noise", *s);
  if (auto s = get("dim")) c.dim = to_index("dim", *s);
  if (auto s = get("clusters")) {
    c.clusters = to_index("clusters", *s);
    check(c.clusters >= 1, "clusters must be >= 1");
  }
  if (auto s = get("limit")) c.limit = to_index("limit", *s);
  if (auto s = get("strict_z")) c.strict_z = to_bool("strict_z", *s);
  if (auto s = get("abs_tol")) c.abs_tol = to_bool("abs_tol", *s);
  if (auto s = get("safeguard")) c.safeguard = to_bool("safeguard", *s);
  if (auto s = get("weights")) {
    if (*s == "unit") c.weights = WeightScheme::Unit;
    else if (*s == "heat") c.weights = WeightScheme::HeatKernel;
    else throw ConfigError("weights: '" + *s + "' is not unit or heat");
  }

  check(c.lambda >= 0.0, "lambda must be >= 0");
  check(c.max_iter >= 1, "max_iter must be >= 1");
  check(c.tol_obj > 0.0, "tol_obj must be > 0");
  check(c.tol_rse > 0.0, "tol_rse must be > 0");
  check(c.runs >= 1, "runs must be >= 1");
  check(c.samples >= 4, "samples must be >= 4");
  check(c.noise >= 0.0, "noise must be >= 0");
  check(c.dim >= 1, "dim must be >= 1");
  check(c.limit >= 0, "limit must be >= 0");
  for (Index r : c.ranks) check(r >= 1, "ranks must all be >= 1");
  if (!c.kind.empty()) {
    try {
      parse_manifold_kind(c.kind);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

  switch (c.task) {
    case Task::Factorize:
    case Task::ClusterEval:
      require(v, "input", c.task);
      require(v, "output", c.task);
      if (c.method.empty()) c.method = "hyperntf";
      check(is_factor_method(c.method), "method '" + c.method + "' is not a factorization");
      if (c.method == "ntd" || c.method == "hosvd")
        check(c.rank >= 1 || !c.ranks.empty(), "method " + c.method + " requires rank or ranks");
      else
        check(c.rank >= 1, "method " + c.method + " requires rank >= 1");
      if (c.knn == 0) c.knn = 5;
      if (c.task == Task::ClusterEval) require(v, "labels", c.task);
      break;
    case Task::Unfold:
      require(v, "output", c.task);
      check(!c.input.empty() || !c.kind.empty(), "task unfold requires 'input' or 'kind'");
      if (c.method.empty()) c.method = "hypergraph-le";
      check(is_embed_method(c.method), "method '" + c.method + "' is not an embedding");
      if (c.knn == 0) c.knn = c.kind.empty() ? 10 : default_knn(parse_manifold_kind(c.kind));
      break;
    case Task::GenManifold:
      require(v, "kind", c.task);
      require(v, "output", c.task);
      break;
    case Task::Convert:
      require(v, "input", c.task);
      require(v, "output", c.task);
      break;
  }
  return c;
}

const std::vector<std::string>& RunReport::key_order() {
  static const std::vector<std::string> order = [] {
    std::vector<std::string> keys = config_keys();
    for (const char* k :
         {"tensor_dims", "iterations", "initial_objective", "final_objective", "final_rse",
          "termination", "kkt_residual", "rejected_steps", "z_rows", "z_cols", "clusters_used", "acc_mean",
          "acc_std", "nmi_mean", "nmi_std", "acc_runs", "nmi_runs", "embedding_method",
          "embedding_dim", "eigenvalues", "neighborhood_preservation",
          "random_projection_preservation", "point_count", "artifacts"})
      keys.emplace_back(k);
    return keys;
  }();
  return order;
}

std::string RunReport::render() const {
  std::string out;
  for (const auto& key : key_order()) {
    const auto it = values.find(key);
    if (it == values.end()) continue;
    out += key;
    out += " = ";
    out += it->second;
    out += '\n';
  }
  return out;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::string join_dims(const std::vector<Index>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::vector<std::string> numbered(const std::string& prefix, Index n) {
  std::vector<std::string> h;
  for (Index i = 1; i <= n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

std::string render_trace(const SolveTrace& trace) {
  std::string out = "iter,objective,rse\n";
  for (std::size_t i = 0; i < trace.objective.size(); ++i)
    out += std::to_string(i + 1) + ',' + format_double(trace.objective[i]) + ',' +
           format_double(trace.rse[i]) + '\n';
  return out;
}

struct Dataset {
  DenseTensor x;
  LabelVector labels;
};

Dataset load_dataset(const ExperimentConfig& c, bool nonnegative) {
  Dataset d;
  if (is_idx_images(c.input)) {
    const bool idx_labels = !c.labels.empty() && is_idx_labels(c.labels);
    IdxDataset idx = import_idx(c.input, idx_labels ? c.labels : std::string(), c.limit, c.seed);
    d.x = std::move(idx.images);
    d.labels = std::move(idx.labels);
  } else {
    d.x = load_tensor(c.input, nonnegative);
  }
  if (c.task == Task::ClusterEval && d.labels.empty()) d.labels = read_labels(c.labels);
  return d;
}

struct Factorization {
  DenseMatrix z;
  std::optional<SolveTrace> trace;
};

Factorization factorize(const ExperimentConfig& c, const DenseTensor& x) {
  std::vector<Index> ranks = c.ranks;
  if (ranks.empty()) ranks.assign(static_cast<std::size_t>(x.order()), c.rank);
  if ((c.method == "ntd" || c.method == "hosvd") && static_cast<Index>(ranks.size()) != x.order())
    throw ConfigError("ranks: " + std::to_string(ranks.size()) + " values for an order-" +
                      std::to_string(x.order()) + " tensor");
  SolverConfig s = c.solver();
  if (s.rank < 1) s.rank = 1;
  Factorization f;
  if (c.method == "hyperntf" || c.method == "ntf") {
    SolveResult r = c.method == "ntf" ? ntf_solve(x, s) : hyperntf_solve(x, s);
    f.z = std::move(r.model.z);
    f.trace = std::move(r.trace);
  } else if (c.method == "ntd") {
    TuckerResult r = ntd_solve(x, ranks, s);
    f.z = r.model.sample_factor();
    f.trace = std::move(r.trace);
  } else {
    f.z = hosvd(x, ranks).sample_factor();
  }
  return f;
}

void report_trace(RunReport& report, const SolveTrace& trace) {
  report.values["iterations"] = std::to_string(trace.iterations());
  report.values["initial_objective"] = format_double(trace.initial_objective);
  report.values["final_objective"] = format_double(trace.objective.back());
  report.values["final_rse"] = format_double(trace.rse.back());
  report.values["termination"] = to_string(trace.reason);
  report.values["kkt_residual"] = format_double(trace.kkt_residual);
  report.values["rejected_steps"] = std::to_string(trace.rejected_steps);
}

void echo_config(RunReport& report, const ExperimentConfig& c) {
  auto& v = report.values;
  v["task"] = to_string(c.task);
  for (const auto& [key, value] : c.source) v[key] = value;
  v["task"] = to_string(c.task);
  if (!c.method.empty()) v["method"] = c.method;
  if (c.task != Task::Convert && c.task != Task::GenManifold) v["knn"] = std::to_string(c.knn);
}

}  // namespace

std::vector<fs::path> save_outputs(RunReport& report, const Artifacts& artifacts,
                                   const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::pair<fs::path, std::string>> files;
  if (artifacts.z)
    files.emplace_back(out_dir / "z.csv", format_csv_matrix(*artifacts.z, numbered("z", artifacts.z->cols())));
  if (artifacts.trace) files.emplace_back(out_dir / "trace.csv", render_trace(*artifacts.trace));
  const auto with_color = [&](const DenseMatrix& m, std::vector<std::string> header) {
    DenseMatrix full(m.rows(), m.cols() + 1);
    full.leftCols(m.cols()) = m;
    if (artifacts.color) {
      full.col(m.cols()) = *artifacts.color;
    } else {
      for (Index i = 0; i < m.rows(); ++i) full(i, m.cols()) = static_cast<double>(i);
    }
    header.emplace_back("color");
    return format_csv_matrix(full, header);
  };
  if (artifacts.points) {
    std::vector<std::string> header = artifacts.points->cols() == 3
                                          ? std::vector<std::string>{"x", "y", "z"}
                                          : numbered("x", artifacts.points->cols());
    files.emplace_back(out_dir / "points.csv", with_color(*artifacts.points, header));
  }
  if (artifacts.embedding)
    files.emplace_back(out_dir / "embedding.csv",
                       with_color(*artifacts.embedding, numbered("c", artifacts.embedding->cols())));

  std::string names;
  for (const auto& [path, body] : files) names += (names.empty() ? "" : ",") + path.filename().string();
  report.values["artifacts"] = names.empty() ? "report.txt" : "report.txt," + names;

  std::vector<fs::path> written;
  for (const auto& [path, body] : files) {
    atomic_write(path, body);
    written.push_back(path);
  }
  const fs::path report_path = out_dir / "report.txt";
  atomic_write(report_path, report.render());
  written.insert(written.begin(), report_path);
  report.artifacts = written;
  return written;
}

RunReport run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  echo_config(report, c);
  Artifacts artifacts;

  switch (c.task) {
    case Task::Factorize:
    case Task::ClusterEval: {
      const bool nonnegative = c.method != "hosvd";
      Dataset data = load_dataset(c, nonnegative);
      report.values["tensor_dims"] = join_dims(data.x.dims());
      Factorization f = factorize(c, data.x);
      if (f.trace) report_trace(report, *f.trace);
      report.values["z_rows"] = std::to_string(f.z.rows());
      report.values["z_cols"] = std::to_string(f.z.cols());
      if (c.task == Task::ClusterEval) {
        Index k = c.clusters;
        if (k == 0) k = static_cast<Index>(std::set<int>(data.labels.begin(), data.labels.end()).size());
        const ClusterReport cr = evaluate_clustering(f.z, data.labels, k, c.runs, c.seed);
        report.values["clusters_used"] = std::to_string(k);
        report.values["acc_mean"] = format_double(cr.acc_mean);
        report.values["acc_std"] = format_double(cr.acc_std);
        report.values["nmi_mean"] = format_double(cr.nmi_mean);
        report.values["nmi_std"] = format_double(cr.nmi_std);
        report.values["acc_runs"] = join_doubles(cr.acc);
        report.values["nmi_runs"] = join_doubles(cr.nmi);
      }
      artifacts.z = std::move(f.z);
      artifacts.trace = std::move(f.trace);
      break;
    }
    case Task::Unfold: {
      PointCloud pc;
      if (!c.kind.empty()) {
        pc = gen_manifold(parse_manifold_kind(c.kind), c.samples, c.seed, c.noise);
      } else {
        pc.points = read_csv_matrix(c.input).values;
        pc.color = DenseVector::LinSpaced(pc.points.rows(), 0.0, static_cast<double>(pc.points.rows() - 1));
      }
      const EmbedMethod method = parse_embed_method(c.method);
      EmbeddingResult emb;
      switch (method) {
        case EmbedMethod::HypergraphLaplacian: emb = hypergraph_spectral_embed(pc, c.knn, c.dim); break;
        case EmbedMethod::GraphLaplacian: emb = graph_spectral_embed(pc, c.knn, c.dim); break;
        default: emb = lle_embed(pc, c.knn, c.dim); break;
      }
      const EmbeddingResult baseline = random_projection_embed(pc, c.dim, c.seed);
      report.values["embedding_method"] = to_string(method);
      report.values["embedding_dim"] = std::to_string(c.dim);
      report.values["eigenvalues"] =
          join_doubles(std::vector<double>(emb.eigenvalues.data(), emb.eigenvalues.data() + emb.eigenvalues.size()));
      report.values["neighborhood_preservation"] =
          format_double(neighborhood_preservation(pc, emb, c.knn));
      report.values["random_projection_preservation"] =
          format_double(neighborhood_preservation(pc, baseline, c.knn));
      report.values["point_count"] = std::to_string(pc.size());
      artifacts.embedding = std::move(emb.coords);
      artifacts.color = pc.color;
      break;
    }
    case Task::GenManifold: {
      PointCloud pc = gen_manifold(parse_manifold_kind(c.kind), c.samples, c.seed, c.noise);
      report.values["point_count"] = std::to_string(pc.size());
      artifacts.points = std::move(pc.points);
      artifacts.color = std::move(pc.color);
      break;
    }
    case Task::Convert: {
      const DenseTensor t = load_tensor(c.input);
      const fs::path out(c.output);
      if (out.extension() == ".csv")
        atomic_write(out, format_csv_matrix(tensor_to_rows(t), {}));
      else
        save_tensor(t, out);
      report.values["tensor_dims"] = join_dims(t.dims());
      report.artifacts.push_back(out);
      report.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return report;
    }
  }

  save_outputs(report, artifacts, c.output);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace hyperntf
