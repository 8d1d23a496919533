#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsscsm/bench.hpp"
#include "profile_oracle.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace rsscsm;
using rsscsm::testing::brute_rho;
using rsscsm::testing::random_records;

namespace {

BenchmarkRecord rec(const std::string& problem, const std::string& solver, double time, double f,
                    bool solved = false) {
  BenchmarkRecord r;
  r.problem_id = problem;
  r.problem = "median";
  r.solver = solver;
  r.wall_time_s = time;
  r.final_f = f;
  r.solved = solved;
  r.iters = 3;
  r.nf = 9;
  return r;
}

const ProfileCurve& curve(const std::vector<ProfileCurve>& cs, const std::string& s) {
  for (const auto& c : cs) {
    if (c.solver == s) return c;
  }
  throw std::runtime_error("no curve for " + s);
}

}  // namespace

TEST_CASE("adjudication") {
  SUBCASE("single solver is always solved") {
    auto r = rec("p", "a", 1.0, 123.4);
    std::vector<BenchmarkRecord*> v{&r};
    CHECK(*adjudicate(v) == 123.4);
    CHECK(r.solved);
  }
  SUBCASE("criterion boundary") {
    const double fopt = 2.5;
    auto a = rec("p", "a", 1.0, fopt);
    auto b = rec("p", "b", 1.0, fopt + 2e-7 * (std::abs(fopt) + 1));
    auto c = rec("p", "c", 1.0, fopt + 0.5e-7 * (std::abs(fopt) + 1));
    std::vector<BenchmarkRecord*> v{&a, &b, &c};
    CHECK(*adjudicate(v) == fopt);
    CHECK(a.solved);
    CHECK_FALSE(b.solved);
    CHECK(c.solved);
  }
  SUBCASE("ties are both solved") {
    auto a = rec("p", "a", 1.0, -0.75), b = rec("p", "b", 2.0, -0.75);
    std::vector<BenchmarkRecord*> v{&a, &b};
    adjudicate(v);
    CHECK(a.solved);
    CHECK(b.solved);
  }
  SUBCASE("failed runs never count") {
    auto a = rec("p", "a", 1.0, -10.0), b = rec("p", "b", 1.0, 1.0);
    a.status = "error";
    std::vector<BenchmarkRecord*> v{&a, &b};
    CHECK(*adjudicate(v) == 1.0);
    CHECK_FALSE(a.solved);
    CHECK(b.solved);
    b.status = "stall";
    CHECK_FALSE(adjudicate(v).has_value());
    CHECK_FALSE(b.solved);
  }
  CHECK(within_optimality(1.0, 1.0));
  CHECK_FALSE(within_optimality(0.999, 1.0));
}

TEST_CASE("profile examples") {
  SUBCASE("two solvers, times 2 and 4") {
    std::vector<BenchmarkRecord> rs{rec("p", "a", 2.0, 0.0, true), rec("p", "b", 4.0, 0.0, true)};
    const auto cs = performance_profile(rs);
    CHECK(curve(cs, "a").ratios == std::vector<double>{1.0});
    CHECK(curve(cs, "b").ratios == std::vector<double>{2.0});
    CHECK(curve(cs, "a").rho(1.0) == 1.0);
    CHECK(curve(cs, "b").rho(1.0) == 0.0);
    CHECK(curve(cs, "b").rho(2.0) == 1.0);
  }
  SUBCASE("a solver that never solves") {
    std::vector<BenchmarkRecord> rs{rec("p", "a", 2.0, 0.0, true), rec("p", "b", 1.0, 1.0, false),
                                    rec("q", "a", 2.0, 0.0, true), rec("q", "b", 1.0, 1.0, false)};
    const auto cs = performance_profile(rs);
    for (double tau : {1.0, 10.0, 1e300}) CHECK(curve(cs, "b").rho(tau) == 0.0);
    for (const auto& [tau, rho] : curve(cs, "b").points) CHECK(rho == 0.0);
    CHECK(std::isinf(curve(cs, "b").ratios[0]));
  }
  SUBCASE("identical times") {
    std::vector<BenchmarkRecord> rs{rec("p", "a", 3.0, 0.0, true), rec("p", "b", 3.0, 0.0, true),
                                    rec("q", "a", 0.5, 0.0, true), rec("q", "b", 0.5, 0.0, true)};
    for (const auto& c : performance_profile(rs)) {
      CHECK(c.rho(1.0) == 1.0);
      CHECK(c.rho(1.0 - 1e-12) == 0.0);
    }
  }
  SUBCASE("times below the floor") {
    std::vector<BenchmarkRecord> rs{rec("p", "a", 0.0, 0.0, true), rec("p", "b", 2e-9, 0.0, true)};
    const auto cs = performance_profile(rs);
    CHECK(curve(cs, "a").ratios[0] == 1.0);
    CHECK(curve(cs, "b").ratios[0] == doctest::Approx(2.0));
  }
  CHECK_THROWS_AS(performance_profile({}), EmptySuite);
  std::vector<BenchmarkRecord> dup{rec("p", "a", 1.0, 0.0, true), rec("p", "a", 1.0, 0.0, true)};
  CHECK_THROWS_AS(performance_profile(dup), ContractViolation);
}

TEST_CASE("profile against the brute-force count") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lt(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rs = random_records(rng);
    const auto cs = performance_profile(rs);
    for (const auto& c : cs) {
      for (int i = 0; i < 100; ++i) {
        const double tau = std::pow(10.0, lt(rng));
        CHECK(c.rho(tau) == brute_rho(rs, c.solver, tau));
      }
      for (double r : c.ratios) {
        if (std::isfinite(r)) CHECK(c.rho(r) == brute_rho(rs, c.solver, r));
      }
      double prev = 0.0, prev_tau = 0.0;
      for (const auto& [tau, rho] : c.points) {
        CHECK(rho == brute_rho(rs, c.solver, tau));
        CHECK(tau >= 1.0);
        CHECK(tau > prev_tau);
        CHECK(rho >= prev);
        CHECK(rho <= 1.0);
        prev = rho;
        prev_tau = tau;
      }
      for (double r : c.ratios) CHECK(r >= 1.0);
    }
  }
}

TEST_CASE("summary averages") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BenchmarkRecord> rs;
  for (int i = 0; i < 30; ++i) {
    auto r = rec("p" + std::to_string(i), i % 2 ? "a" : "b", u(rng), u(rng), i % 3 == 0);
    r.n = 5 + 5 * (i % 3);
    r.m = 20;
    r.iters = i;
    r.nf = 3 * i + 1;
    if (i == 7) r.status = "stall";
    rs.push_back(r);
  }
  const auto rows = summarize(rs);
  CHECK(rows.size() == 6);
  for (const auto& row : rows) {
    double it = 0, nf = 0, t = 0;
    int n = 0, solved = 0, failed = 0;
    for (const auto& r : rs) {
      if (r.n != row.size.n || r.m != row.size.m || r.solver != row.solver) continue;
      it += r.iters;
      nf += r.nf;
      t += r.wall_time_s;
      ++n;
      solved += r.solved;
      failed += r.status != "ok";
    }
    CHECK(row.runs == n);
    CHECK(row.solved == solved);
    CHECK(row.failed == failed);
    CHECK(std::abs(row.mean_iters - it / n) <= 1e-12);
    CHECK(std::abs(row.mean_nf - nf / n) <= 1e-12);
    CHECK(std::abs(row.mean_time_s - t / n) <= 1e-12);
  }
}

TEST_CASE("records CSV round trip") {
  std::mt19937_64 rng(3);
  auto rs = random_records(rng);
  std::normal_distribution<double> nd;
  for (auto& r : rs) r.final_f = nd(rng) * 1e3;
  rs.front().final_f = std::numeric_limits<double>::quiet_NaN();
  rs.front().status = "error";
  rs.back().wall_time_s = std::numeric_limits<double>::infinity();
  std::stringstream ss;
  write_records_csv(ss, rs);
  const auto back = read_records_csv(ss);
  REQUIRE(back.size() == rs.size());
  CHECK(std::isnan(back.front().final_f));
  for (std::size_t i = 1; i < rs.size(); ++i) CHECK(back[i] == rs[i]);

  std::stringstream bad("problem_id,solver\n");
  CHECK_THROWS_AS(read_records_csv(bad), ContractViolation);
  std::stringstream empty;
  CHECK_THROWS_AS(read_records_csv(empty), EmptySuite);
  auto comma = rs;
  comma[0].problem_id = "a,b";
  std::stringstream out;
  CHECK_THROWS_AS(write_records_csv(out, comma), ContractViolation);
}

TEST_CASE("profile CSV") {
  std::vector<BenchmarkRecord> rs{rec("p", "a", 2.0, 0.0, true), rec("p", "b", 4.0, 0.0, true)};
  std::ostringstream os;
  write_profile_csv(os, performance_profile(rs));
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "solver,tau,rho");
  CHECK(first == "a,1,1");
}

TEST_CASE("suite JSON") {
  const auto s = suite_from_json(R"({"problem": "rcm", "sizes": [[3, 4], {"n": 2, "m": 5}], "runs": 2,
      "base_seed": 7, "solvers": ["rsscsm", "subgradient"],
      "overrides": {"subgradient": {"max_iters": 50}}})");
  CHECK(s.problem == ProblemKind::CenterOfMass);
  CHECK(s.sizes == std::vector<ProblemSize>{{3, 4}, {2, 5}});
  CHECK(s.runs == 2);
  CHECK(s.base_seed == 7);
  CHECK(*s.overrides.at("subgradient").max_iters == 50);
  const auto back = suite_from_json(suite_to_json(s));
  CHECK(suite_to_json(back) == suite_to_json(s));

  CHECK_THROWS_AS(suite_from_json(R"({"problem": "median", "sizes": []})"), EmptySuite);
  CHECK_THROWS_AS(suite_from_json(R"({"problem": "median", "sizes": [[2, 2]], "runs": 0})"), ContractViolation);
  CHECK_THROWS_AS(suite_from_json(R"({"problem": "median", "sizes": [[2, 2]], "solvers": ["x"]})"),
                  ContractViolation);
  CHECK_THROWS_AS(suite_from_json(R"({"problem": "median", "sizes": [[2, 2]],
      "overrides": {"rsscsm": {"epsilon_stop": -1}}})"),
                  ContractViolation);
  CHECK_THROWS_AS(suite_from_json("{"), ContractViolation);
}

TEST_CASE("seed override") {
  SuiteSpec s;
  s.sizes = {{2, 2}};
  ::setenv("RSSCSM_SEED", "99", 1);
  apply_seed_override(s);
  CHECK(s.base_seed == 99);
  ::setenv("RSSCSM_SEED", "abc", 1);
  CHECK_THROWS_AS(apply_seed_override(s), ContractViolation);
  ::unsetenv("RSSCSM_SEED");
  s.base_seed = 3;
  apply_seed_override(s);
  CHECK(s.base_seed == 3);
}

TEST_CASE("run_suite") {
  SuiteSpec spec;
  spec.problem = ProblemKind::Median;
  spec.sizes = {{4, 10}, {6, 12}};
  spec.runs = 3;
  spec.base_seed = 5;
  spec.solvers = {"rsscsm", "subgradient"};
  spec.overrides["subgradient"].max_iters = 300;

  const auto a = run_suite(spec);
  RunOptions par;
  par.jobs = 3;
  const auto b = run_suite(spec, par);
  REQUIRE(a.records.size() == 12);
  REQUIRE(b.records.size() == a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    CHECK(x.problem_id == y.problem_id);
    CHECK(x.iters == y.iters);
    CHECK(x.nf == y.nf);
    CHECK(x.final_f == y.final_f);
    CHECK(x.status == "ok");
    CHECK(x.wall_time_s >= 0.0);
    CHECK(x.nf >= x.iters);
  }
  // Instance seeds are base + index over (size, run).
  CHECK(a.records[0].seed == 5);
  CHECK(a.records[1].seed == 5);
  CHECK(a.records[2].seed == 6);
  CHECK(a.records.back().seed == 10);
  CHECK(a.profiles.size() == 2);
  CHECK(a.summary.size() == 4);

  // Every problem has at least one solved record (the best one).
  for (std::size_t i = 0; i < a.records.size(); i += 2) {
    CHECK((a.records[i].solved || a.records[i + 1].solved));
  }

  SuiteSpec empty = spec;
  empty.sizes.clear();
  CHECK_THROWS_AS(run_suite(empty), EmptySuite);
}

TEST_CASE("run_suite traces") {
  SuiteSpec spec;
  spec.problem = ProblemKind::CenterOfMass;
  spec.sizes = {{2, 3}};
  spec.runs = 1;
  RunOptions opt;
  opt.trace_dir = std::filesystem::temp_directory_path() / "rsscsm_bench_trace_test";
  std::filesystem::remove_all(*opt.trace_dir);
  run_suite(spec, opt);
  CHECK(std::filesystem::exists(*opt.trace_dir / "rcm_n2_m3_s0_rsscsm.jsonl"));
  CHECK(std::filesystem::exists(*opt.trace_dir / "rcm_n2_m3_s0_rsscsm_irp.jsonl"));
  std::filesystem::remove_all(*opt.trace_dir);
}
