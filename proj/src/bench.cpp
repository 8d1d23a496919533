#include "rsscsm/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace rsscsm {

namespace {

using nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOptimalityTol = 1e-7;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw ContractViolation("records CSV: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string problem_id(const SuiteSpec& spec, const ProblemSize& s, std::uint64_t seed) {
  return to_string(spec.problem) + "_n" + std::to_string(s.n) + "_m" + std::to_string(s.m) + "_s" +
         std::to_string(seed);
}

SolveResult run_solver(const std::string& solver, const Objective& f, const ManifoldPoint& x0,
                       const SolverConfig& cfg, const IrpTraceSink& trace) {
  if (solver == "rsscsm") return rsscsm_solve(f, x0, cfg, trace);
  if (solver == "subgradient") return baseline_subgradient_solve(f, x0, cfg);
  throw ContractViolation("unknown solver '" + solver + "'");
}

}  // namespace

const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> ids{"rsscsm", "subgradient"};
  return ids;
}

SolverConfig SolverOverrides::apply(SolverConfig cfg) const {
  if (epsilon_stop) cfg.epsilon_stop = *epsilon_stop;
  if (max_iters) cfg.max_iters = *max_iters;
  if (max_null_steps) cfg.max_null_steps = *max_null_steps;
  if (tau_hi_init) cfg.ls.tau_hi_init = *tau_hi_init;
  if (interval_tol) cfg.ls.interval_tol = *interval_tol;
  return cfg;
}

void SuiteSpec::validate() const {
  if (sizes.empty()) throw EmptySuite("suite has no problem sizes");
  if (runs < 1) throw ContractViolation("suite needs runs >= 1");
  if (solvers.empty()) throw ContractViolation("suite needs at least one solver");
  const auto& known = known_solvers();
  for (const auto& s : solvers) {
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      throw ContractViolation("unknown solver '" + s + "'");
    }
  }
  for (const auto& [name, o] : overrides) {
    if (std::find(solvers.begin(), solvers.end(), name) == solvers.end()) {
      throw ContractViolation("overrides given for solver '" + name + "' which is not in the suite");
    }
    o.apply(SolverConfig{}).validate();
  }
  for (const auto& s : sizes) {
    if (s.n < 1 || s.m < 1) throw ContractViolation("suite sizes need n >= 1 and m >= 1");
  }
}

SuiteSpec suite_from_json(const std::string& text) {
  SuiteSpec spec;
  try {
    const json j = json::parse(text);
    spec.problem = problem_kind_from_string(j.at("problem").get<std::string>());
    spec.sizes.clear();
    for (const auto& s : j.at("sizes")) {
      if (s.is_array()) {
        if (s.size() != 2) throw ContractViolation("suite size entries are [n, m]");
        spec.sizes.push_back({s[0].get<int>(), s[1].get<int>()});
      } else {
        spec.sizes.push_back({s.at("n").get<int>(), s.at("m").get<int>()});
      }
    }
    spec.runs = j.value("runs", 10);
    spec.base_seed = j.value("base_seed", std::uint64_t{0});
    if (j.contains("solvers")) spec.solvers = j["solvers"].get<std::vector<std::string>>();
    if (j.contains("overrides")) {
      for (const auto& [name, o] : j["overrides"].items()) {
        SolverOverrides ov;
        if (o.contains("epsilon_stop")) ov.epsilon_stop = o["epsilon_stop"].get<double>();
        if (o.contains("max_iters")) ov.max_iters = o["max_iters"].get<int>();
        if (o.contains("max_null_steps")) ov.max_null_steps = o["max_null_steps"].get<int>();
        if (o.contains("tau_hi_init")) ov.tau_hi_init = o["tau_hi_init"].get<double>();
        if (o.contains("interval_tol")) ov.interval_tol = o["interval_tol"].get<double>();
        spec.overrides[name] = ov;
      }
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("suite JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string suite_to_json(const SuiteSpec& spec) {
  json sizes = json::array();
  for (const auto& s : spec.sizes) sizes.push_back({s.n, s.m});
  json ov = json::object();
  for (const auto& [name, o] : spec.overrides) {
    json e = json::object();
    if (o.epsilon_stop) e["epsilon_stop"] = *o.epsilon_stop;
    if (o.max_iters) e["max_iters"] = *o.max_iters;
    if (o.max_null_steps) e["max_null_steps"] = *o.max_null_steps;
    if (o.tau_hi_init) e["tau_hi_init"] = *o.tau_hi_init;
    if (o.interval_tol) e["interval_tol"] = *o.interval_tol;
    ov[name] = std::move(e);
  }
  return json{{"problem", to_string(spec.problem)}, {"sizes", sizes},  {"runs", spec.runs},
              {"base_seed", spec.base_seed},        {"solvers", spec.solvers}, {"overrides", ov}}
      .dump(2);
}

void apply_seed_override(SuiteSpec& spec) {
  const char* env = std::getenv("RSSCSM_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw ContractViolation("RSSCSM_SEED must be a non-negative integer");
  spec.base_seed = v;
}

// ---------------------------------------------------------------------------

bool within_optimality(double f, double f_opt) {
  const double rel = (f - f_opt) / (std::abs(f_opt) + 1.0);
  return rel >= 0.0 && rel <= kOptimalityTol;
}

std::optional<double> adjudicate(std::vector<BenchmarkRecord*>& records) {
  std::optional<double> f_opt;
  for (const auto* r : records) {
    if (r->status == "ok" && std::isfinite(r->final_f)) {
      f_opt = f_opt ? std::min(*f_opt, r->final_f) : r->final_f;
    }
  }
  for (auto* r : records) {
    r->solved = f_opt && r->status == "ok" && std::isfinite(r->final_f) &&
                within_optimality(r->final_f, *f_opt);
  }
  return f_opt;
}

void adjudicate_all(std::vector<BenchmarkRecord>& records) {
  std::map<std::string, std::vector<BenchmarkRecord*>> groups;
  for (auto& r : records) groups[r.problem_id].push_back(&r);
  for (auto& [id, group] : groups) adjudicate(group);
}

double ProfileCurve::rho(double tau) const {
  if (ratios.empty()) return 0.0;
  const auto it = std::upper_bound(ratios.begin(), ratios.end(), tau);
  return static_cast<double>(it - ratios.begin()) / static_cast<double>(ratios.size());
}

std::vector<ProfileCurve> performance_profile(const std::vector<BenchmarkRecord>& records,
                                              const ProfileOptions& opt) {
  if (records.empty()) throw EmptySuite("performance profile of an empty record set");

  std::vector<std::string> solvers;
  std::vector<std::string> problems;
  std::map<std::pair<std::string, std::string>, double> times;
  for (const auto& r : records) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) solvers.push_back(r.solver);
    if (std::find(problems.begin(), problems.end(), r.problem_id) == problems.end()) {
      problems.push_back(r.problem_id);
    }
    const double t = r.solved ? std::max(r.wall_time_s, kTimeFloor) : kInf;
    auto [it, inserted] = times.try_emplace({r.problem_id, r.solver}, t);
    if (!inserted) throw ContractViolation("duplicate record for problem '" + r.problem_id + "'");
  }

  std::map<std::string, double> best;
  for (const auto& p : problems) {
    double b = kInf;
    for (const auto& s : solvers) {
      const auto it = times.find({p, s});
      if (it != times.end()) b = std::min(b, it->second);
    }
    best[p] = b;
  }

  std::vector<ProfileCurve> curves;
  double max_finite = 1.0;
  for (const auto& s : solvers) {
    ProfileCurve c;
    c.solver = s;
    for (const auto& p : problems) {
      const auto it = times.find({p, s});
      const double t = it == times.end() ? kInf : it->second;
      const double r = std::isfinite(t) ? t / best.at(p) : kInf;
      c.ratios.push_back(r);
      if (std::isfinite(r)) max_finite = std::max(max_finite, r);
    }
    std::sort(c.ratios.begin(), c.ratios.end());
    curves.push_back(std::move(c));
  }

  const double tau_max = opt.tau_max.value_or(std::max(2.0, max_finite));
  std::vector<double> taus;
  const int n = std::max(opt.samples, 2);
  for (int i = 0; i < n; ++i) {
    taus.push_back(std::pow(tau_max, static_cast<double>(i) / (n - 1)));
  }
  for (auto& c : curves) {
    std::vector<double> ts = taus;
    for (double r : c.ratios) {
      if (std::isfinite(r) && r <= tau_max) ts.push_back(r);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    for (double t : ts) c.points.emplace_back(t, c.rho(t));
  }
  return curves;
}

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRecord>& records) {
  std::vector<SummaryRow> rows;
  auto find_row = [&](const BenchmarkRecord& r) -> SummaryRow& {
    for (auto& row : rows) {
      if (row.size == ProblemSize{r.n, r.m} && row.solver == r.solver) return row;
    }
    rows.push_back({{r.n, r.m}, r.solver});
    return rows.back();
  };
  for (const auto& r : records) {
    SummaryRow& row = find_row(r);
    ++row.runs;
    if (r.solved) ++row.solved;
    if (r.status != "ok") ++row.failed;
    row.mean_iters += static_cast<double>(r.iters);
    row.mean_nf += static_cast<double>(r.nf);
    row.mean_time_s += r.wall_time_s;
  }
  for (auto& row : rows) {
    row.mean_iters /= row.runs;
    row.mean_nf /= row.runs;
    row.mean_time_s /= row.runs;
  }
  return rows;
}

std::string summary_to_json(const SuiteSpec& spec, const std::vector<SummaryRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"n", r.size.n},
                   {"m", r.size.m},
                   {"solver", r.solver},
                   {"runs", r.runs},
                   {"solved", r.solved},
                   {"failed", r.failed},
                   {"iter", r.mean_iters},
                   {"nf", r.mean_nf},
                   {"time", r.mean_time_s}});
  }
  return json{{"suite", json::parse(suite_to_json(spec))}, {"rows", arr}}.dump(2);
}

// ---------------------------------------------------------------------------

ManifoldPoint starting_point(const ManifoldKind& kind, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x78u};
  std::mt19937_64 rng(seq);
  return random_point(kind, rng);
}

SuiteResult run_suite(const SuiteSpec& spec, const RunOptions& opt) {
  spec.validate();
  if (opt.jobs < 1) throw ContractViolation("jobs must be >= 1");
  if (opt.trace_dir) std::filesystem::create_directories(*opt.trace_dir);

  struct Cell {
    ProblemSize size;
    std::uint64_t seed;
    std::string solver;
  };
  std::vector<Cell> cells;
  std::uint64_t index = 0;
  for (const auto& size : spec.sizes) {
    for (int r = 0; r < spec.runs; ++r, ++index) {
      for (const auto& s : spec.solvers) cells.push_back({size, spec.base_seed + index, s});
    }
  }

  std::vector<BenchmarkRecord> records(cells.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      BenchmarkRecord rec;
      rec.problem_id = problem_id(spec, c.size, c.seed);
      rec.problem = to_string(spec.problem);
      rec.n = c.size.n;
      rec.m = c.size.m;
      rec.solver = c.solver;
      rec.seed = c.seed;

      const Instance inst = generate_instance(spec.problem, c.size.n, c.size.m, c.seed);
      const auto f = make_objective(inst);
      const ManifoldPoint x0 = starting_point(f->manifold(), c.seed);
      SolverConfig cfg;
      cfg.direction_seed = c.seed;
      if (const auto it = spec.overrides.find(c.solver); it != spec.overrides.end()) {
        cfg = it->second.apply(cfg);
      }

      std::vector<std::string> irp_lines;
      IrpTraceSink sink;
      if (opt.trace_dir) sink = [&](const IrpTraceRecord& r) { irp_lines.push_back(to_json_line(r)); };

      std::optional<Trajectory> traj;
      const auto start = std::chrono::steady_clock::now();
      try {
        SolveResult res = run_solver(c.solver, *f, x0, cfg, sink);
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.iters = res.state.stats.iters;
        rec.nf = res.state.stats.nf;
        rec.final_f = res.state.f_x;
        traj = std::move(res.trajectory);
      } catch (const SolverStall& e) {
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.iters = e.state.stats.iters;
        rec.nf = e.state.stats.nf;
        rec.final_f = e.state.f_x;
        rec.status = "stall";
        traj = e.trajectory;
      } catch (const std::exception&) {
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.final_f = std::numeric_limits<double>::quiet_NaN();
        rec.status = "error";
      }

      if (opt.trace_dir && traj) {
        std::ofstream tf(*opt.trace_dir / (rec.problem_id + "_" + c.solver + ".jsonl"));
        write_trajectory_jsonl(tf, *traj, false);
        if (!irp_lines.empty()) {
          std::ofstream irpf(*opt.trace_dir / (rec.problem_id + "_" + c.solver + "_irp.jsonl"));
          for (const auto& l : irp_lines) irpf << l << '\n';
        }
      }
      records[i] = std::move(rec);
    }
  };

  const int jobs = std::min<int>(opt.jobs, static_cast<int>(cells.size()));
  if (jobs <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SuiteResult out;
  out.records = std::move(records);
  adjudicate_all(out.records);
  out.profiles = performance_profile(out.records);
  out.summary = summarize(out.records);
  return out;
}

// ---------------------------------------------------------------------------

namespace {
const char* kCsvHeader = "problem_id,problem,n,m,solver,seed,iters,nf,wall_time_s,final_f,solved,status";
}

void write_records_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    for (const std::string* s : {&r.problem_id, &r.solver, &r.problem, &r.status}) {
      if (s->find_first_of(",\n\r") != std::string::npos) {
        throw ContractViolation("records CSV: field contains a separator: '" + *s + "'");
      }
    }
    os << r.problem_id << ',' << r.problem << ',' << r.n << ',' << r.m << ',' << r.solver << ','
       << r.seed << ',' << r.iters << ',' << r.nf << ',' << format_double(r.wall_time_s) << ','
       << format_double(r.final_f) << ',' << (r.solved ? 1 : 0) << ',' << r.status << '\n';
  }
}

std::vector<BenchmarkRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw EmptySuite("records CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ContractViolation("records CSV: unexpected header '" + line + "'");
  std::vector<BenchmarkRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 12) {
      throw ContractViolation("records CSV line " + std::to_string(lineno) + ": expected 12 fields");
    }
    try {
      BenchmarkRecord r;
      r.problem_id = cells[0];
      r.problem = cells[1];
      r.n = std::stoi(cells[2]);
      r.m = std::stoi(cells[3]);
      r.solver = cells[4];
      r.seed = std::stoull(cells[5]);
      r.iters = std::stoll(cells[6]);
      r.nf = std::stoll(cells[7]);
      r.wall_time_s = parse_double(cells[8]);
      r.final_f = parse_double(cells[9]);
      r.solved = cells[10] == "1";
      r.status = cells[11];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ContractViolation("records CSV line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return out;
}

void write_profile_csv(std::ostream& os, const std::vector<ProfileCurve>& curves) {
  os << "solver,tau,rho\n";
  for (const auto& c : curves) {
    for (const auto& [tau, rho] : c.points) {
      os << c.solver << ',' << format_double(tau) << ',' << format_double(rho) << '\n';
    }
  }
}

}  // namespace rsscsm
