#include "rsscsm/solver.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <string>

namespace rsscsm {

namespace {

using nlohmann::json;

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> read_opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

json flat(const Eigen::MatrixXd& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

Eigen::MatrixXd unflat(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw ContractViolation("trajectory: iterate data does not match its shape");
  }
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

LineSearchBranch branch_from(const std::string& s) {
  if (s == "positive") return LineSearchBranch::Positive;
  if (s == "negative") return LineSearchBranch::Negative;
  if (s == "null") return LineSearchBranch::Null;
  throw ContractViolation("trajectory: unknown line-search branch '" + s + "'");
}

}  // namespace

void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj, bool include_iterates) {
  if (include_iterates && traj.iterates.size() != traj.records.size()) {
    throw ContractViolation("trajectory has no recorded iterates to write");
  }
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const IterationRecord& r = traj.records[i];
    json j{{"solver", traj.solver},
           {"k", r.k},
           {"f", r.f},
           {"eta_norm", r.eta_norm},
           {"gtilde_norm", r.gtilde_norm},
           {"t", opt(r.t)},
           {"lambda", opt(r.lambda)},
           {"alpha", opt(r.alpha)},
           {"null", r.null_step},
           {"nf_cum", r.nf_cum},
           {"time_cum_s", r.time_cum_s},
           {"transported_norm", opt(r.transported_norm)},
           {"orth", opt(r.orth)},
           {"projected", r.projected},
           {"ip_plus", opt(r.ip_plus)},
           {"ip_minus", opt(r.ip_minus)}};
    if (r.ls) {
      const LineSearchSummary& s = *r.ls;
      j["ls"] = json{{"branch", to_string(s.branch)},
                     {"termination", s.termination == IrpTermination::Exact ? "exact" : "tolerance"},
                     {"phi0", s.phi0},
                     {"phi_t", s.phi_t},
                     {"dplus0", s.dplus0},
                     {"dminus0", s.dminus0},
                     {"t_minus", s.t_minus},
                     {"t_plus", s.t_plus},
                     {"dminus_at_t_minus", s.dminus_at_t_minus},
                     {"dplus_at_t_plus", s.dplus_at_t_plus},
                     {"irp_iterations", s.irp_iterations},
                     {"tau_hi_clamped", s.tau_hi_clamped},
                     {"hit_upper_bound", s.hit_upper_bound}};
    } else {
      j["ls"] = nullptr;
    }
    if (include_iterates) {
      const IterateSnapshot& it = traj.iterates[i];
      j["manifold"] = it.x.kind().name();
      j["shape"] = {it.x.data().rows(), it.x.data().cols()};
      j["x"] = flat(it.x.data());
      j["eta"] = flat(it.eta.data());
      j["gtilde"] = flat(it.g_tilde.data());
    }
    os << j.dump() << '\n';
  }
}

Trajectory read_trajectory_jsonl(std::istream& is) {
  Trajectory traj;
  std::string line;
  int lineno = 0;
  bool with_iterates = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (traj.records.empty()) {
        traj.solver = j.value("solver", std::string{});
        with_iterates = j.contains("x");
      }
      IterationRecord r;
      r.k = j.at("k").get<int>();
      r.f = j.at("f").get<double>();
      r.eta_norm = j.at("eta_norm").get<double>();
      r.gtilde_norm = j.at("gtilde_norm").get<double>();
      r.t = read_opt<double>(j, "t");
      r.lambda = read_opt<double>(j, "lambda");
      r.alpha = read_opt<double>(j, "alpha");
      r.null_step = j.at("null").get<bool>();
      r.nf_cum = j.at("nf_cum").get<std::int64_t>();
      r.time_cum_s = j.at("time_cum_s").get<double>();
      r.transported_norm = read_opt<double>(j, "transported_norm");
      r.orth = read_opt<double>(j, "orth");
      r.projected = j.value("projected", false);
      r.ip_plus = read_opt<double>(j, "ip_plus");
      r.ip_minus = read_opt<double>(j, "ip_minus");
      if (j.contains("ls") && !j["ls"].is_null()) {
        const json& s = j["ls"];
        LineSearchSummary ls;
        ls.branch = branch_from(s.at("branch").get<std::string>());
        ls.termination = s.at("termination").get<std::string>() == "exact" ? IrpTermination::Exact
                                                                            : IrpTermination::Tolerance;
        ls.phi0 = s.at("phi0").get<double>();
        ls.phi_t = s.at("phi_t").get<double>();
        ls.dplus0 = s.at("dplus0").get<double>();
        ls.dminus0 = s.at("dminus0").get<double>();
        ls.t_minus = s.at("t_minus").get<double>();
        ls.t_plus = s.at("t_plus").get<double>();
        ls.dminus_at_t_minus = s.at("dminus_at_t_minus").get<double>();
        ls.dplus_at_t_plus = s.at("dplus_at_t_plus").get<double>();
        ls.irp_iterations = s.at("irp_iterations").get<int>();
        ls.tau_hi_clamped = s.at("tau_hi_clamped").get<bool>();
        ls.hit_upper_bound = s.value("hit_upper_bound", false);
        r.ls = ls;
      }
      if (with_iterates) {
        const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
        if (shape.size() != 2) throw ContractViolation("trajectory: shape must have two entries");
        const Eigen::MatrixXd xd = unflat(j.at("x"), shape[0], shape[1]);
        const std::string man = j.at("manifold").get<std::string>();
        ManifoldPoint x = man == "sphere" ? ManifoldPoint::sphere(xd.col(0))
                          : man == "spd"  ? ManifoldPoint::spd(xd)
                                          : throw ContractViolation("trajectory: unknown manifold '" + man + "'");
        TangentVector eta(x, unflat(j.at("eta"), shape[0], shape[1]));
        TangentVector g(x, unflat(j.at("gtilde"), shape[0], shape[1]));
        traj.iterates.push_back({std::move(x), std::move(eta), std::move(g), r.t});
      }
      traj.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ContractViolation("trajectory line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return traj;
}

}  // namespace rsscsm
