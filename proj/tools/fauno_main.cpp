#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fauno/config.hpp"
#include "fauno/errors.hpp"
#include "fauno/metrics.hpp"
#include "fauno/runner.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fauno::ConfigError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string run_dir_name(const fauno::ExperimentConfig& cfg, std::uint64_t seed) {
  std::ostringstream name;
  name << fauno::algorithm_name(cfg.algorithm) << '_' << cfg.topology.label()
       << "_lambda" << cfg.lambda_per_tick << "_seed" << seed;
  return name.str();
}

int cmd_run(const std::string& config_path, std::int64_t seed_override,
            const std::string& out) {
  auto cfg = fauno::ExperimentConfig::from_file(config_path);
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (seed_override >= 0) seeds = {static_cast<std::uint64_t>(seed_override)};
  for (std::uint64_t seed : seeds) {
    const auto dir = (fs::path(out) / run_dir_name(cfg, seed)).string();
    const auto report = fauno::run_experiment(cfg, seed, dir);
    std::cout << fauno::algorithm_name(cfg.algorithm) << " seed " << seed
              << ": finished_ratio " << report.finished_ratio.mean << " (+/-"
              << report.finished_ratio.stdev << "), response "
              << report.avg_response.mean << " ticks, report in " << dir << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path,
              const std::string& out) {
  auto base = json::parse(read_file(config_path));
  auto grid = json::parse(read_file(grid_path));
  if (!grid.is_object() || grid.empty()) {
    throw fauno::ConfigError("grid must be a non-empty object of pointer -> values");
  }
  std::vector<std::pair<std::string, json>> axes;
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) {
      throw fauno::ConfigError("grid entry '" + key + "' must be a non-empty array");
    }
    axes.emplace_back(key, values);
  }
  std::vector<std::size_t> index(axes.size(), 0);
  int cells = 0;
  while (true) {
    json cell = base;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      cell[json::json_pointer(axes[i].first)] = axes[i].second[index[i]];
    }
    auto cfg = fauno::ExperimentConfig::from_json_text(cell.dump());
    for (std::uint64_t seed : cfg.seeds) {
      const auto dir = (fs::path(out) / run_dir_name(cfg, seed)).string();
      const auto report = fauno::run_experiment(cfg, seed, dir);
      std::cout << "cell " << cells << " seed " << seed << ": finished_ratio "
                << report.finished_ratio.mean << "\n";
    }
    ++cells;
    std::size_t axis = 0;
    while (axis < axes.size() && ++index[axis] == axes[axis].second.size()) {
      index[axis] = 0;
      ++axis;
    }
    if (axis == axes.size()) break;
  }
  std::cout << "sweep complete: " << cells << " cells\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& config_path,
                 std::int64_t seed_override, int episodes, const std::string& out) {
  auto cfg = fauno::ExperimentConfig::from_file(config_path);
  const std::uint64_t seed =
      seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : cfg.seeds.front();
  const auto dir =
      out.empty() ? std::string{} : (fs::path(out) / ("eval_seed" + std::to_string(seed))).string();
  const auto report = fauno::evaluate_checkpoint(cfg, checkpoint, seed,
                                                 episodes > 0 ? episodes : cfg.episodes, dir);
  std::cout << report.to_json() << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  std::vector<fauno::MetricsReport> reports;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "report.json") {
      reports.push_back(fauno::MetricsReport::from_json(read_file(entry.path().string())));
    }
  }
  if (reports.empty()) {
    std::cerr << "no report.json files under " << in_dir << "\n";
    return 1;
  }
  if (format == "table") {
    std::cout << fauno::render_table(reports);
  } else if (format == "csv") {
    std::cout << "algorithm,topology,lambda,seed,finished_ratio_mean,"
                 "finished_ratio_std,avg_response_mean,avg_response_std\n";
    for (const auto& r : reports) {
      std::cout << r.algorithm << ',' << r.topology_label << ',' << r.lambda << ','
                << r.seed << ',' << r.finished_ratio.mean << ',' << r.finished_ratio.stdev
                << ',' << r.avg_response.mean << ',' << r.avg_response.stdev << "\n";
    }
  } else {
    json all = json::array();
    for (const auto& r : reports) all.push_back(json::parse(r.to_json()));
    std::cout << all.dump(2) << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& config_path) {
  auto cfg = fauno::ExperimentConfig::from_file(config_path);
  const auto topology = fauno::build_topology(cfg.topology, cfg.seeds.front());
  std::cout << "config ok: algorithm=" << fauno::algorithm_name(cfg.algorithm)
            << " topology=" << cfg.topology.label() << " nodes=" << topology.node_count()
            << " agents=" << topology.agent_nodes().size()
            << " clients=" << topology.client_nodes().size()
            << " episodes=" << cfg.episodes << " steps=" << cfg.steps_per_episode
            << " seeds=" << cfg.seeds.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated task-offloading simulator"};
  app.require_subcommand(1);

  std::string config_path, out = "out", grid_path, checkpoint, in_dir, format = "table";
  std::int64_t seed = -1;
  int episodes = 0;

  auto* run = app.add_subcommand("run", "Run one experiment configuration");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--seed", seed, "Override the config's seed list with one seed");
  run->add_option("--out", out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run a cross-product of config overrides");
  sweep->add_option("--config", config_path, "Base config JSON")->required();
  sweep->add_option("--grid", grid_path, "JSON object: json-pointer -> value list")
      ->required();
  sweep->add_option("--out", out, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Frozen-policy checkpoint evaluation");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint bundle")->required();
  evaluate->add_option("--config", config_path, "Experiment config JSON")->required();
  evaluate->add_option("--seed", seed, "Evaluation seed");
  evaluate->add_option("--episodes", episodes, "Episode count override");
  evaluate->add_option("--out", out, "Output directory (optional)");

  auto* report = app.add_subcommand("report", "Aggregate run reports");
  report->add_option("--in", in_dir, "Directory holding run outputs")->required();
  report->add_option("--format", format, "table|csv|json")
      ->check(CLI::IsMember({"table", "csv", "json"}));

  auto* validate = app.add_subcommand("validate", "Check a config without running");
  validate->add_option("--config", config_path, "Experiment config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out);
    if (sweep->parsed()) return cmd_sweep(config_path, grid_path, out);
    if (evaluate->parsed()) return cmd_evaluate(checkpoint, config_path, seed, episodes, out);
    if (report->parsed()) return cmd_report(in_dir, format);
    if (validate->parsed()) return cmd_validate(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
