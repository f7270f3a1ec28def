// Scenario runner: one subcommand per module, JSON configs in, manifests,
// CSV tables and verdicts out.

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "afflow/scenario.hpp"

namespace sc = afflow::scenario;

namespace {

std::mutex print_mu;

void say(std::ostream& os, const std::string& line) {
  std::lock_guard<std::mutex> lk(print_mu);
  os << line << std::endl;
}

// Parse every config first so that no run starts on a broken batch.
int load(const std::vector<std::string>& paths, const std::string& sub, std::vector<sc::ScenarioConfig>& out) {
  for (const auto& p : paths) {
    try {
      out.push_back(sc::parse_config(afflow::io::read_json(p), sub));
    } catch (const afflow::Error& e) {
      say(std::cerr, p + ": " + e.what());
      return sc::kConfig;
    }
  }
  std::vector<std::string> names;
  for (const auto& c : out) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    say(std::cerr, "ConfigInvalid: scenario names must be unique within one invocation");
    return sc::kConfig;
  }
  return sc::kPass;
}

int run_all(const std::vector<sc::ScenarioConfig>& cfgs, const std::string& out, int parallel) {
  std::vector<int> codes(cfgs.size(), sc::kPass);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cfgs.size();) {
      const auto o = sc::run_scenario(cfgs[k], out);
      codes[k] = o.exit_code;
      std::string line = cfgs[k].name + ": " + o.verdict["status"].get<std::string>() + " (" + o.dir.string() + ")";
      if (!o.message.empty()) line += "\n  " + o.message;
      say(std::cout, line);
    }
  };
  const int workers = std::max(1, std::min<int>(parallel, static_cast<int>(cfgs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  // numeric failures outrank monitor failures
  int worst = sc::kPass;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afflow: affine normal flow on support functions"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string out;
  int parallel = 1;
  app.add_option("--out", out, "output root (AFFLOW_OUT overrides)");
  app.add_option("--parallel", parallel, "scenarios run concurrently")->check(CLI::PositiveNumber);

  std::vector<std::string> configs;
  for (const auto& name : sc::scenario_names()) {
    if (name == "acceptance") continue;
    auto* sub = app.add_subcommand(name, "run a '" + name + "' scenario");
    sub->add_option("--config", configs, "scenario config (repeatable)")->required()->check(CLI::ExistingFile);
  }

  std::vector<std::string> only;
  double tol_scale = 1.0;
  auto* acc = app.add_subcommand("acceptance", "run the acceptance criteria");
  acc->add_option("--only", only, "criterion number(s), comma separated")->delimiter(',');
  acc->add_option("--tolerance-scale", tol_scale, "scale every tolerance (values < 1 force failures)")
      ->check(CLI::PositiveNumber);
  acc->add_option("--config", configs, "acceptance scenario config")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors share the config-error exit code
    return app.exit(e) == 0 ? 0 : sc::kConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  std::vector<sc::ScenarioConfig> cfgs;
  if (sub == "acceptance" && configs.empty()) {
    nlohmann::json j = {{"scenario", "acceptance"}, {"name", "acceptance"}};
    std::vector<int> ids;
    try {
      for (const auto& o : only) ids.push_back(std::stoi(o));
    } catch (const std::exception&) {
      std::cerr << "ConfigInvalid: --only expects criterion numbers\n";
      return sc::kConfig;
    }
    j["acceptance"] = {{"only", ids}, {"tolerance_scale", tol_scale}};
    try {
      cfgs.push_back(sc::parse_config(j, sub));
    } catch (const afflow::Error& e) {
      std::cerr << e.what() << "\n";
      return sc::kConfig;
    }
  } else if (const int rc = load(configs, sub, cfgs); rc != sc::kPass) {
    return rc;
  } else if (sub == "acceptance") {
    // flags refine what the config selects
    for (auto& c : cfgs) {
      for (const auto& o : only) c.only.push_back(std::stoi(o));
      if (acc->count("--tolerance-scale")) c.tolerance_scale = tol_scale;
    }
  }
  return run_all(cfgs, out, parallel);
}
