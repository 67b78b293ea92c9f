#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "iongate/experiment.hpp"

namespace iexp = iongate::experiment;

int main(int argc, char** argv) {
  CLI::App app{"iongate - trapped-ion two-qubit gate simulations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
  bool as_json = false;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--workers", workers, "worker threads for sweeps");

  auto* list = app.add_subcommand("list", "list bundled experiment configs");
  list->add_flag("--json", as_json, "machine-readable catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      iexp::RunOptions options;
      options.output_dir = out_dir;
      options.workers = workers;
      if (!seed_opt->empty()) {
        options.seed = seed;
        options.seed_overridden = true;
      }
      const auto result = iexp::run_config(config_path, options);
      std::cout << result.summary << "\n";
      for (const auto& a : result.artifacts)
        std::cout << "  " << a.string() << "\n";
      return iexp::kOk;
    }
    // list
    const auto entries = iexp::list_experiments();
    if (as_json) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& e : entries) {
        nlohmann::json item;
        item["name"] = e.name;
        item["path"] = e.path.string();
        item["experiment"] = e.experiment;
        item["description"] = e.description;
        j.push_back(item);
      }
      std::cout << j.dump(2) << "\n";
    } else {
      if (entries.empty())
        std::cout << "no bundled configs found under "
                  << iexp::config_directory() << "\n";
      for (const auto& e : entries)
        std::printf("%-28s %-17s %s\n", e.name.c_str(), e.experiment.c_str(),
                    e.description.c_str());
    }
    return iexp::kOk;
  } catch (const iongate::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return iexp::kSchemaViolation;
  } catch (const iongate::PhysicsError& e) {
    std::cerr << "physics precondition: " << e.what() << "\n";
    return iexp::kPhysicsViolation;
  } catch (const iongate::ConvergenceError& e) {
    std::cerr << "numeric convergence: " << e.what() << "\n";
    return iexp::kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return iexp::kUsage;
  }
}
