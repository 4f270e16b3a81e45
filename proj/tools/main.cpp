#include "mrtrack/exporters.hpp"
#include "mrtrack/scenario.hpp"
#include "mrtrack/simulation.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mrtrack;
using nlohmann::json;

namespace {

std::string resolve_out_dir(const std::string& flag_value) {
  if (const char* env = std::getenv("MRTRACK_OUT"); env && *env) return env;
  return flag_value;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string trace_filename(int index) {
  std::ostringstream os;
  os << "trace_" << std::setw(3) << std::setfill('0') << index << ".json";
  return os.str();
}

int cmd_run(const std::string& scenario_path, const std::string& alg,
            int horizon, const std::string& occlusion, int trials,
            std::uint64_t seed, const std::string& out_flag, int pso_particles,
            int pso_iterations, int threads, double noise_scale, int ci_rounds) {
  const ScenarioConfig scenario = load_scenario(scenario_path);

  RunConfig run;
  run.alg = (alg == "dec" || alg == "dec_pomdp") ? Algorithm::DecPomdp
                                                 : Algorithm::SmaNbo;
  run.horizon = horizon;
  if (occlusion == "apriori")
    run.occlusion_mode = OcclusionMode::Apriori;
  else if (occlusion == "dynamic")
    run.occlusion_mode = OcclusionMode::Dynamic;
  else
    run.occlusion_mode = OcclusionMode::None;
  run.trials = trials;
  run.base_seed = seed;
  if (pso_particles > 0) run.pso.swarm_size = pso_particles;
  if (pso_iterations > 0) run.pso.iterations = pso_iterations;
  run.threads = threads;
  run.noise_scale = noise_scale;
  run.ci_rounds = ci_rounds;

  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);

  const BatchResult batch = run_batch(scenario, run);

  write_text(out_dir / "scenario.json", scenario_to_json(scenario).dump(2) + "\n");
  write_text(out_dir / "run.json", run_config_to_json(run).dump(2) + "\n");
  for (int i = 0; i < run.trials; ++i)
    write_text(out_dir / trace_filename(i), trace_to_json(batch.traces[i]).dump() + "\n");

  // aggregate summary: ownership categories per checkpoint plus failures
  const SankeyExport sankey = build_sankey(batch.traces, scenario);
  json summary;
  summary["scenario"] = scenario.name;
  summary["trials"] = run.trials;
  summary["failed_trials"] = run.trials - batch.successful();
  summary["checkpoints"] = sankey.checkpoints;
  summary["category_counts"] = json::array();
  for (std::size_t c = 0; c < sankey.node_counts.size(); ++c) {
    json row;
    row["checkpoint"] = sankey.checkpoints[c];
    for (int cat = 0; cat < 5; ++cat)
      row[profile_category_name(static_cast<ProfileCategory>(cat))] =
          sankey.node_counts[c][cat];
    summary["category_counts"].push_back(row);
  }
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");

  int failed = 0;
  for (const auto& t : batch.traces)
    if (t.failed) {
      std::cerr << "trial seed " << t.seed << " failed: " << t.error << "\n";
      ++failed;
    }
  std::cout << "wrote " << run.trials << " traces to " << out_dir.string() << " ("
            << failed << " failed)\n";
  return 0;
}

int cmd_analyze(const std::string& traces_flag, const std::string& emit,
                const std::string& out_flag) {
  const fs::path traces_dir = traces_flag;
  const fs::path out_dir = resolve_out_dir(out_flag.empty() ? traces_flag : out_flag);
  fs::create_directories(out_dir);

  const fs::path scenario_file = traces_dir / "scenario.json";
  if (!fs::exists(scenario_file))
    throw std::runtime_error("no scenario.json in " + traces_dir.string());
  std::ifstream in(scenario_file);
  json sj;
  in >> sj;
  const ScenarioConfig scenario = parse_scenario(sj);

  std::vector<TrialTrace> traces;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(traces_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream tin(f);
    json tj;
    tin >> tj;
    traces.push_back(trace_from_json(tj));
  }
  if (traces.empty()) throw std::runtime_error("no trace_*.json in " + traces_dir.string());

  if (emit == "sankey") {
    const SankeyExport s = build_sankey(traces, scenario);
    write_text(out_dir / "sankey.json", sankey_to_json(s).dump(2) + "\n");
    write_text(out_dir / "sankey.csv", sankey_to_csv(s));
    std::cout << "wrote sankey.json and sankey.csv to " << out_dir.string() << "\n";
  } else if (emit == "coverage") {
    const CoverageExport c = build_coverage(traces, scenario);
    write_text(out_dir / "coverage.json", coverage_to_json(c).dump(2) + "\n");
    write_text(out_dir / "coverage.csv", coverage_to_csv(c));
    std::cout << "wrote coverage.json and coverage.csv to " << out_dir.string() << "\n";
  } else {
    const EventsExport e = build_events(traces, scenario);
    write_text(out_dir / "events.json", events_to_json(e).dump(2) + "\n");
    std::cout << "wrote events.json to " << out_dir.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-robot active target tracking simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute a seeded Monte Carlo batch");
  std::string scenario_path, alg = "sma", occlusion = "apriori", run_out = "out";
  int horizon = 5, trials = 1, pso_particles = 0, pso_iterations = 0, threads = 0,
      ci_rounds = 1;
  std::uint64_t seed = 1;
  double noise_scale = 1.0;
  run->add_option("--scenario", scenario_path, "scenario config file")->required();
  run->add_option("--alg", alg, "planner: sma|dec")
      ->check(CLI::IsMember({"sma", "dec", "sma_nbo", "dec_pomdp"}));
  run->add_option("--horizon", horizon, "look-ahead steps H")->check(CLI::PositiveNumber);
  run->add_option("--occlusion", occlusion, "occlusion map mode")
      ->check(CLI::IsMember({"apriori", "dynamic", "none"}));
  run->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed; trial i uses seed + i");
  run->add_option("--out", run_out, "output directory (env MRTRACK_OUT overrides)");
  run->add_option("--pso-particles", pso_particles, "PSO swarm size");
  run->add_option("--pso-iterations", pso_iterations, "PSO iterations");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_option("--noise-scale", noise_scale, "scale on sensing noise");
  run->add_option("--ci-rounds", ci_rounds, "consensus rounds per step");

  auto* analyze = app.add_subcommand("analyze", "derive exports from stored traces");
  std::string traces_dir, emit = "sankey", analyze_out;
  analyze->add_option("--traces", traces_dir, "directory with trace_*.json")->required();
  analyze->add_option("--emit", emit, "sankey|coverage|events")
      ->check(CLI::IsMember({"sankey", "coverage", "events"}));
  analyze->add_option("--out", analyze_out, "output directory (default: traces dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, alg, horizon, occlusion, trials, seed, run_out,
                     pso_particles, pso_iterations, threads, noise_scale, ci_rounds);
    return cmd_analyze(traces_dir, emit, analyze_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
