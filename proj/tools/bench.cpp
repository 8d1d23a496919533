// bench: suite runner, profile builder and trajectory checker.

#include "rsscsm/bench.hpp"
#include "rsscsm/invariants.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace rsscsm;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ContractViolation("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ContractViolation("cannot write " + p.string());
  return out;
}

int cmd_run(const fs::path& suite_path, const fs::path& out_dir, int jobs, bool trace) {
  SuiteSpec spec = suite_from_json(slurp(suite_path));
  apply_seed_override(spec);
  fs::create_directories(out_dir);

  RunOptions opt;
  opt.jobs = jobs;
  if (trace) opt.trace_dir = out_dir / "traces";
  const SuiteResult res = run_suite(spec, opt);

  {
    auto f = open_out(out_dir / "records.csv");
    write_records_csv(f, res.records);
  }
  for (const auto& c : res.profiles) {
    auto f = open_out(out_dir / ("profile_" + c.solver + ".csv"));
    write_profile_csv(f, {c});
  }
  {
    auto f = open_out(out_dir / "summary.json");
    f << summary_to_json(spec, res.summary) << '\n';
  }

  for (const auto& r : res.summary) {
    std::cout << "n=" << r.size.n << " m=" << r.size.m << " " << r.solver << ": runs " << r.runs
              << ", solved " << r.solved << ", failed " << r.failed << ", iter " << r.mean_iters
              << ", nf " << r.mean_nf << ", time " << r.mean_time_s << " s\n";
  }
  return 0;
}

int cmd_profile(const fs::path& records_path, const fs::path& out_path, int samples) {
  std::ifstream in(records_path);
  if (!in) throw ContractViolation("cannot open " + records_path.string());
  auto records = read_records_csv(in);
  adjudicate_all(records);
  ProfileOptions opt;
  opt.samples = samples;
  const auto curves = performance_profile(records, opt);
  auto out = open_out(out_path);
  write_profile_csv(out, curves);
  return 0;
}

int cmd_check(const fs::path& traj_path, double epsilon) {
  std::ifstream in(traj_path);
  if (!in) throw ContractViolation("cannot open " + traj_path.string());
  const Trajectory traj = read_trajectory_jsonl(in);
  InvariantOptions opt;
  opt.epsilon_stop = epsilon;
  opt.expect_descent = traj.solver != "subgradient";
  const InvariantReport rep = check_trajectory(traj, opt);
  std::cout << to_json(rep) << '\n';

  const bool ok = rep.descent_violations == 0 && rep.orth_fraction() >= 0.99 &&
                  rep.worst_norm_recursion <= opt.norm_recursion_tol &&
                  (!rep.fr_residual || *rep.fr_residual <= 1e-6);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSSCSM benchmark harness"};
  app.require_subcommand(1);

  fs::path suite, out_dir;
  int jobs = 1;
  bool trace = false;
  auto* run = app.add_subcommand("run", "Run a benchmark suite");
  run->add_option("--suite", suite, "Suite JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--trace", trace, "Write per-run trajectories and line-search traces");

  fs::path records, profile_out;
  int samples = 50;
  auto* prof = app.add_subcommand("profile", "Build performance profiles from a records CSV");
  prof->add_option("--records", records, "Records CSV")->required()->check(CLI::ExistingFile);
  prof->add_option("--out", profile_out, "Profile CSV")->required();
  prof->add_option("--samples", samples, "Log-spaced tau samples")->check(CLI::PositiveNumber);

  fs::path trajectory;
  double epsilon = 1e-8;
  auto* check = app.add_subcommand("check", "Check trajectory invariants");
  check->add_option("--trajectory", trajectory, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
  check->add_option("--epsilon", epsilon, "Stopping tolerance used by the run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(suite, out_dir, jobs, trace);
    if (*prof) return cmd_profile(records, profile_out, samples);
    if (*check) return cmd_check(trajectory, epsilon);
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
