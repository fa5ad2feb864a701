#include "malab/acceptance.hpp"
#include "malab/experiment.hpp"
#include "malab/parallel.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace {

using malab::json;

// Numbers and JSON literals pass through; anything else stays a string.
json value_of(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

json domain_value(const std::string& text) {
  if (std::filesystem::is_regular_file(text)) {
    std::ifstream in(text);
    return value_of(std::string(std::istreambuf_iterator<char>(in), {}));
  }
  return value_of(text);
}

json h_value(const std::string& text) {
  if (text.find(',') == std::string::npos) return value_of(text);
  json list = json::array();
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    list.push_back(value_of(text.substr(start, end - start)));
    start = end + 1;
  }
  return list;
}

struct Task {
  std::string name;
  std::string description;
  std::vector<std::string> keys;
};

const std::vector<Task> kTasks = {
    {"solve", "Solve the Dirichlet problem MA_h u = f, u = 0 on the boundary", {"domain", "h", "rhs"}},
    {"power", "Solve det D^2 u = M|u|^p by damped Picard iteration", {"domain", "h", "p", "M", "omega", "tol", "max_iterations"}},
    {"eigen", "Inverse iteration for the Monge-Ampere eigenvalue", {"domain", "h", "u0", "tol", "max_iterations", "ceiling_factor"}},
    {"barrier-check", "Sample a barrier and verify its determinant inequality",
     {"variant", "params", "form", "p", "c", "samples", "region"}},
    {"profile", "Normal growth profile and log-exponent fit of a solution", {"domain", "h", "u", "edge", "angle", "samples", "s"}},
    {"check", "Pointwise check of an explicit-constant bound",
     {"domain", "h", "u", "bound", "rhs_kind", "p", "M", "bound_tolerance"}},
    {"convergence", "Self-convergence study over a decreasing h list",
     {"domain", "h", "rhs", "p", "M", "omega", "tol", "max_iterations"}},
};

const std::vector<std::string> kSolverKeys = {"stencil_width", "method", "tolerance", "max_sweeps", "damping_floor"};

std::string flag(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f == key ? "--" + key : "--" + f + ",--" + key;
}

int finish(const malab::RunOutcome& outcome) {
  if (outcome.exit_code == malab::kExitOk) {
    for (const auto& f : outcome.files) std::cout << f << "\n";
  } else {
    std::cerr << outcome.report.dump(2) << "\n";
  }
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monge-Ampere numerical lab"};
  app.set_version_flag("--version", std::string(malab::kVersion));
  app.require_subcommand(1);

  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  app.add_option("--threads", threads, "Worker threads (default: MA_EIGEN_THREADS or 1)");
  app.add_option("--seed", seed, "Seed for all sampling");
  app.add_option("--out", out, "Output directory");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::map<std::string, CLI::Option*>> given;
  for (const Task& task : kTasks) {
    CLI::App* sub = app.add_subcommand(task.name, task.description);
    sub->set_help_flag("--help", "Print this help message and exit");
    subs[task.name] = sub;
    auto keys = task.keys;
    if (task.name != "barrier-check") keys.insert(keys.end(), kSolverKeys.begin(), kSolverKeys.end());
    for (const auto& key : keys) given[task.name][key] = sub->add_option(flag(key), values[task.name][key], key);
  }

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "Run an experiment config file");
  run->add_option("config", config_path, "JSON config")->required()->check(CLI::ExistingFile);

  int alt_threads = 4;
  CLI::App* accept = app.add_subcommand("accept", "Run the acceptance suite");
  accept->add_option("--alt-threads", alt_threads, "Thread count compared against the single-threaded pass");

  CLI11_PARSE(app, argc, argv);

  malab::RunOptions opts;
  opts.threads = threads > 0 ? threads : malab::default_thread_count();
  opts.seed = seed;
  opts.out_dir = out;

  try {
    if (*run) {
      std::ifstream in(config_path);
      json config;
      try {
        config = json::parse(in);
      } catch (const json::parse_error& e) {
        std::cerr << json{{"status", "error"}, {"error", {{"type", "ParseError"}, {"message", e.what()}, {"exit_code", 2}}}}.dump(2)
                  << "\n";
        return malab::kExitInvalid;
      }
      return finish(malab::run_experiment(config, opts));
    }
    if (*accept) {
      malab::AcceptanceOptions ao;
      ao.alt_threads = alt_threads;
      ao.out_dir = out.value_or("");
      return malab::run_acceptance(ao, std::cout).all_pass() ? malab::kExitOk : malab::kExitFailure;
    }
    for (const auto& [name, sub] : subs) {
      if (!*sub) continue;
      json config = {{"task", name}};
      for (const auto& [key, text] : values[name]) {
        if (given[name][key]->count() == 0) continue;
        if (key == "domain") {
          config[key] = domain_value(text);
        } else if (key == "h") {
          config[key] = h_value(text);
        } else if (key == "rhs" || key == "u" || key == "u0" || key == "method" || key == "bound" ||
                   key == "variant" || key == "form" || key == "rhs_kind") {
          config[key] = text;
        } else {
          config[key] = value_of(text);
        }
      }
      return finish(malab::run_experiment(config, opts));
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"status", "error"}, {"error", {{"type", "Error"}, {"message", e.what()}, {"exit_code", 1}}}}.dump(2)
              << "\n";
    return malab::kExitFailure;
  }
  return malab::kExitFailure;
}
