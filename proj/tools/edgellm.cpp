// edgellm: run, compare, calibrate and report simulator experiments.

#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "edgellm/experiment.hpp"

namespace {

// "3", "1,2,7" or "1-5" (inclusive), mixed freely: "1-3,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw CLI::ValidationError("--seeds", "bad seed '" + std::string(s) + "'");
    }
    return v;
  };
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(number(item));
      continue;
    }
    const auto lo = number(item.substr(0, dash));
    const auto hi = number(item.substr(dash + 1));
    if (hi < lo || hi - lo > 100000) throw CLI::ValidationError("--seeds", "bad range '" + std::string(item) + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw CLI::ValidationError("--seeds", "no seeds given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware multi-agent LM inference simulator"};
  app.require_subcommand(1);

  std::string scenario = "scenarios/paper_default.json";
  std::string policy = "MA";
  std::string seeds = "1";
  int epochs = 30;
  std::string backend = "scripted";
  std::string out;

  auto* run = app.add_subcommand("run", "Simulate one policy over a set of seeds");
  run->add_option("--scenario", scenario, "Scenario JSON file");
  run->add_option("--policy", policy, "MA, MAL, RR, RL, AL, RF or LL");
  run->add_option("--seeds", seeds, "Seeds: 1,2,3 or 1-5");
  run->add_option("--epochs", epochs, "Planning epochs to simulate")->check(CLI::PositiveNumber);
  run->add_option("--backend", backend, "Planner backend: scripted or external");
  run->add_option("--out", out, "Run directory")->required();

  std::vector<std::string> runs;
  auto* compare = app.add_subcommand("compare", "Tabulate two or more completed runs");
  compare->add_option("runs", runs, "Run directories")->required();
  compare->add_option("--out", out, "Directory for comparison.csv and scatter.csv");

  int iterations = 10;
  auto* calibrate = app.add_subcommand("calibrate", "Tune DPP parameters offline");
  calibrate->add_option("--scenario", scenario, "Scenario JSON file");
  calibrate->add_option("--iterations", iterations, "Calibration iterations")->check(CLI::NonNegativeNumber);
  calibrate->add_option("--out", out, "Output parameter file")->required();

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("run", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      edgellm::RunManifest m;
      m.scenario_path = scenario;
      const auto name = edgellm::parse_policy_name(policy);
      if (!name) {
        std::cerr << "unknown policy '" << policy << "'\n";
        return 1;
      }
      m.policy = *name;
      const auto kind = edgellm::parse_backend(backend);
      if (!kind) {
        std::cerr << "unknown backend '" << backend << "'\n";
        return 1;
      }
      m.backend = *kind;
      m.seeds = parse_seeds(seeds);
      m.epochs = epochs;
      m.out_dir = out;
      edgellm::cmd_run(m, std::cout);
    } else if (*compare) {
      edgellm::cmd_compare(runs, out, std::cout);
    } else if (*calibrate) {
      edgellm::cmd_calibrate(scenario, iterations, out, std::cout);
    } else if (*report) {
      edgellm::cmd_report(run_dir, std::cout);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const edgellm::ExperimentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
