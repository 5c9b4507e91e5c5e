// hyperntf: batch front end for factorization, manifold unfolding and clustering runs.
//
// Exit codes: 0 success, 2 configuration error, 3 data/format error, 4 numeric failure.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hyperntf/experiment.hpp"
#include "hyperntf/io.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

struct Subcommand {
  const char* name;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {"factorize", "Factorize a tensor and write the sample-mode factor"},
    {"unfold", "Embed a point cloud (generated or loaded) in low dimension"},
    {"cluster-eval", "Factorize, then score k-means clusterings of the reduced data"},
    {"gen-manifold", "Sample a synthetic 3-D manifold"},
    {"convert", "Convert a tensor between CSV and TNSR"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypergraph-regularized nonnegative tensor factorization toolkit"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, std::string> config_paths;
  for (const auto& sub : kSubcommands) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->add_option("--config", config_paths[sub.name], "key = value configuration document");
    for (const auto& key : hyperntf::config_keys()) {
      if (key == "task") continue;
      cmd->add_option("--" + key, flags[sub.name][key], "overrides '" + key + "'");
    }
  }

  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string task = chosen->get_name();
  try {
    hyperntf::ConfigMap values;
    if (!config_paths[task].empty()) {
      std::string text;
      try {
        text = hyperntf::read_file(config_paths[task]);
      } catch (const std::exception& e) {
        throw hyperntf::ConfigError(e.what());
      }
      values = hyperntf::parse_config_document(text);
    }
    for (const auto& [key, value] : flags[task])
      if (chosen->count("--" + key) > 0) values[key] = value;
    if (values.contains("task") && values["task"] != task)
      throw hyperntf::ConfigError("config task '" + values["task"] + "' conflicts with subcommand '" +
                                  task + "'");
    values["task"] = task;

    const hyperntf::ExperimentConfig config = hyperntf::make_config(values);
    const hyperntf::RunReport report = hyperntf::run_experiment(config);
    std::cerr << task << ": done in " << report.wall_seconds << " s\n";
    for (const auto& path : report.artifacts) std::cout << path.string() << '\n';
    return 0;
  } catch (const hyperntf::ConfigError& e) {
    std::cerr << task << ": configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const hyperntf::InvalidArgument& e) {
    std::cerr << task << ": invalid argument: " << e.what() << '\n';
    return kConfigError;
  } catch (const hyperntf::FormatError& e) {
    std::cerr << task << ": format error at offset " << e.offset << ": " << e.what() << '\n';
    return kDataError;
  } catch (const hyperntf::DataError& e) {
    std::cerr << task << ": data error: " << e.what() << '\n';
    return kDataError;
  } catch (const hyperntf::NumericFailure& e) {
    std::cerr << task << ": numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const hyperntf::DegenerateRank& e) {
    std::cerr << task << ": numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << task << ": " << e.what() << '\n';
    return kDataError;
  }
}
