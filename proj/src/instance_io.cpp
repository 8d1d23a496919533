#include "rsscsm/objectives.hpp"

#include "rsscsm/errors.hpp"

#include <json.hpp>

namespace rsscsm {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw ContractViolation("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrices_to_json(const std::vector<Eigen::MatrixXd>& ms) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back(matrix_to_json(m));
  return arr;
}

std::vector<Eigen::MatrixXd> matrices_from_json(const json& j) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

}  // namespace

std::string instance_to_json(const InstanceSpec& spec, bool include_data) {
  json j{{"kind", to_string(spec.kind)}, {"n", spec.n}, {"m", spec.m}, {"seed", spec.seed}};
  if (include_data) {
    const Instance inst = materialize(spec);
    json data;
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, MedianInstance>) {
            // Points stored one per row.
            data["points"] = matrix_to_json(i.points.transpose());
            data["weights"] = std::vector<double>(i.weights.data(), i.weights.data() + i.weights.size());
          } else {
            data["matrices"] = matrices_to_json(i.a);
          }
        },
        inst);
    j["data"] = std::move(data);
  }
  return j.dump();
}

InstanceSpec instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("instance JSON: ") + e.what());
  }
  InstanceSpec spec;
  try {
    spec.kind = problem_kind_from_string(j.at("kind").get<std::string>());
    spec.n = j.at("n").get<int>();
    spec.m = j.at("m").get<int>();
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("data") && !j["data"].is_null()) {
      const json& d = j["data"];
      switch (spec.kind) {
        case ProblemKind::Rayleigh:
          spec.data = RayleighInstance{spec.n, spec.m, matrices_from_json(d.at("matrices"))};
          break;
        case ProblemKind::CenterOfMass:
          spec.data = CenterOfMassInstance{spec.n, spec.m, matrices_from_json(d.at("matrices"))};
          break;
        case ProblemKind::Median: {
          MedianInstance mi{spec.n, spec.m, matrix_from_json(d.at("points")).transpose(), {}};
          if (d.contains("weights")) {
            const auto w = d["weights"].get<std::vector<double>>();
            mi.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
          } else {
            mi.weights = Eigen::VectorXd::Constant(spec.m, 1.0 / spec.m);
            mi.weights /= mi.weights.sum();
          }
          spec.data = std::move(mi);
          break;
        }
      }
      validate(*spec.data);
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("instance JSON: ") + e.what());
  }
  return spec;
}

Instance materialize(const InstanceSpec& spec) {
  if (spec.data) return *spec.data;
  return generate_instance(spec.kind, spec.n, spec.m, spec.seed);
}

}  // namespace rsscsm
