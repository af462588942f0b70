#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "sliw/config.hpp"
#include "sliw/eval.hpp"
#include "sliw/io.hpp"
#include "sliw/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitIncompatible = 3;
constexpr int kExitDiverged = 4;

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("SLIW_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  bool verbose = false;
};

sliw::ExperimentConfig load_and_override(const CommonOpts& opts, uint64_t* seed_override) {
  sliw::ExperimentConfig cfg = sliw::load_config(opts.config_path);
  cfg.out_dir = opts.out_dir;
  if (seed_override != nullptr) cfg.seed = *seed_override;
  return cfg;
}

// Truth must cover every measurement timestamp (small slack for the last
// partial truth period).
void check_span(const std::vector<sliw::MeasurementRecord>& records,
                const std::vector<sliw::PoseLogEntry>& truth) {
  if (records.empty() || truth.empty()) {
    throw std::runtime_error("dataset or ground truth is empty");
  }
  if (records.front().t + 1e-9 < truth.front().t || records.back().t > truth.back().t + 1.0) {
    throw std::runtime_error("dataset span [" + std::to_string(records.front().t) + ", " +
                             std::to_string(records.back().t) +
                             "] not covered by ground truth span [" +
                             std::to_string(truth.front().t) + ", " +
                             std::to_string(truth.back().t) + "]");
  }
}

int cmd_gen(const CommonOpts& opts, uint64_t* seed_override) {
  const sliw::ExperimentConfig cfg = load_and_override(opts, seed_override);
  const sliw::WorldModel world = cfg.world.build(cfg.seed);
  const sliw::TrajectorySpec traj = cfg.trajectory.build(cfg.world.sensor_height);
  const sliw::Dataset ds = sliw::generate_dataset(world, traj, cfg.rates, cfg.noise, cfg.lidar,
                                                  cfg.seed, cfg.dynamic_boxes_in_dataset);
  fs::create_directories(cfg.out_dir);
  sliw::write_dataset_jsonl(cfg.out_dir + "/dataset.jsonl", ds.records);
  sliw::write_pose_log(cfg.out_dir + "/truth.csv", sliw::truth_to_pose_log(ds.truth));
  sliw::save_config(cfg, cfg.out_dir + "/config.json");
  if (opts.verbose) {
    std::printf("gen: %zu records, %zu truth poses, seed %llu -> %s\n", ds.records.size(),
                ds.truth.size(), static_cast<unsigned long long>(cfg.seed),
                cfg.out_dir.c_str());
  }
  return kExitOk;
}

int cmd_map(const CommonOpts& opts, const std::string& data_path,
            const std::string& truth_path) {
  const sliw::ExperimentConfig cfg = load_and_override(opts, nullptr);
  const auto records = sliw::read_dataset_jsonl(data_path);
  const auto truth = sliw::read_pose_log(truth_path);
  try {
    check_span(records, truth);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "sliw map: %s\n", ex.what());
    return kExitIncompatible;
  }
  const sliw::VoxelMap map = sliw::build_prior_map(records, truth, cfg.filter);
  fs::create_directories(cfg.out_dir);
  map.save(cfg.out_dir + "/map.bin");
  std::printf("map: %zu cells\n", map.size());
  for (const auto& [label, count] : sliw::label_histogram(map)) {
    std::printf("  %-8s %zu\n", label.c_str(), count);
  }
  return kExitOk;
}

int cmd_run(const CommonOpts& opts, const std::string& data_path, const std::string& truth_path,
            const std::string& map_path, const std::string& name, bool no_semantic,
            bool no_adaptive_scale) {
  sliw::ExperimentConfig cfg = load_and_override(opts, nullptr);
  if (no_semantic) cfg.semantic_weighting = false;
  if (no_adaptive_scale) cfg.adaptive_scale = false;

  const auto records = sliw::read_dataset_jsonl(data_path);
  const auto truth = sliw::read_pose_log(truth_path);
  const sliw::VoxelMap prior_map = sliw::VoxelMap::load(map_path);
  try {
    check_span(records, truth);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "sliw run: %s\n", ex.what());
    return kExitIncompatible;
  }

  sliw::RunResult result;
  try {
    result = sliw::run_filter(records, truth, prior_map, cfg);
  } catch (const sliw::DivergenceError& ex) {
    std::fprintf(stderr, "sliw run: %s at t=%.6f\n", ex.what(), ex.timestamp);
    return kExitDiverged;
  }

  fs::create_directories(cfg.out_dir);
  sliw::write_pose_log(cfg.out_dir + "/" + name + ".csv", result.pose_log);
  {
    const std::string events_path = cfg.out_dir + "/" + name + "_events.jsonl";
    std::FILE* f = std::fopen(events_path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open " + events_path);
    for (const sliw::RunEvent& e : result.events) {
      std::fprintf(f, "{\"t\":%.9f,\"iterations\":%d,\"constraints\":%d,\"degenerate\":%s}\n",
                   e.t, e.iterations, e.constraints, e.degenerate ? "true" : "false");
    }
    std::fclose(f);
  }
  if (opts.verbose) {
    const auto& s = result.final_state.nav;
    std::printf("run: %zu poses, final p = (%.3f, %.3f, %.3f), S = (%.4f, %.4f, %.4f)\n",
                result.pose_log.size(), s.p_WI.x(), s.p_WI.y(), s.p_WI.z(), s.S_v.x(),
                s.S_v.y(), s.S_v.z());
  }
  return kExitOk;
}

int cmd_eval(const CommonOpts& opts, const std::string& truth_path,
             const std::vector<std::string>& log_paths) {
  const auto truth = sliw::read_pose_log(truth_path);
  std::vector<std::pair<std::string, std::vector<sliw::PoseLogEntry>>> logs;
  for (const std::string& path : log_paths) {
    logs.emplace_back(fs::path(path).stem().string(), sliw::read_pose_log(path));
  }
  std::vector<sliw::NamedReport> reports;
  try {
    for (const auto& [name, log] : logs) {
      const sliw::AssociationResult assoc = sliw::associate(log, truth);
      reports.push_back({name, sliw::compute_errors(assoc.pairs)});
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "sliw eval: %s\n", ex.what());
    return kExitIncompatible;
  }
  fs::create_directories(opts.out_dir);
  sliw::compare_runs(reports, opts.out_dir + "/comparison.csv", opts.out_dir + "/plot_data.json");
  std::fputs(sliw::comparison_table(reports).c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"Semantic LiDAR-inertial-wheel fusion workbench"};
  app.require_subcommand(1);

  CommonOpts opts;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string data_path, truth_path, map_path;
  std::string run_name = "run";
  bool no_semantic = false, no_adaptive_scale = false;
  std::vector<std::string> eval_logs;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", opts.config_path, "experiment config JSON");
    if (need_config) c->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_flag("--verbose", opts.verbose, "chatty progress output");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen, true);
  gen->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });

  CLI::App* map_cmd = app.add_subcommand("map", "build the global prior map");
  add_common(map_cmd, true);
  map_cmd->add_option("--data", data_path, "dataset JSONL (default <out>/dataset.jsonl)");
  map_cmd->add_option("--truth", truth_path, "ground-truth CSV (default <out>/truth.csv)");

  CLI::App* run = app.add_subcommand("run", "replay the filter over a dataset");
  add_common(run, true);
  run->add_option("--data", data_path, "dataset JSONL (default <out>/dataset.jsonl)");
  run->add_option("--truth", truth_path, "ground-truth CSV (default <out>/truth.csv)");
  run->add_option("--map", map_path, "prior map (default <out>/map.bin)");
  run->add_option("--name", run_name, "pose-log basename (default run)");
  run->add_flag("--no-semantic", no_semantic, "disable semantic constraint weighting");
  run->add_flag("--no-adaptive-scale", no_adaptive_scale, "freeze the wheel scale factor");

  CLI::App* eval = app.add_subcommand("eval", "compare pose logs against ground truth");
  add_common(eval, false);
  eval->add_option("--truth", truth_path, "ground-truth CSV")->required();
  eval->add_option("logs", eval_logs, "pose-log CSVs")->required();

  CLI11_PARSE(app, argc, argv);

  if (data_path.empty()) data_path = opts.out_dir + "/dataset.jsonl";
  if (truth_path.empty()) truth_path = opts.out_dir + "/truth.csv";
  if (map_path.empty()) map_path = opts.out_dir + "/map.bin";

  try {
    if (gen->parsed()) return cmd_gen(opts, seed_set ? &seed : nullptr);
    if (map_cmd->parsed()) return cmd_map(opts, data_path, truth_path);
    if (run->parsed()) {
      return cmd_run(opts, data_path, truth_path, map_path, run_name, no_semantic,
                     no_adaptive_scale);
    }
    if (eval->parsed()) return cmd_eval(opts, truth_path, eval_logs);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "sliw: %s\n", ex.what());
    return kExitInput;
  }
  return kExitInput;
}
