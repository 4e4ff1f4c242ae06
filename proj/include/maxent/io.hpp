#pragma once

// JSON input and output. The chain file format:
// {
//   "visible": ["i1", ...],          may be empty (pattern-only problems)
//   "hidden":  ["e1", ...],
//   "P_II": [[...]], "P_IE": [[...]], "P_EI": [[...]],   row-major
//   "pi_I": [...],
//   "L": [[...]],                    optional 0-1 pattern on the hidden part
//   "partition": [["e1"], ["e2", "e3"]]   optional, labels of hidden states
// }
// With an empty visible set only "hidden" (and optionally "L") are read.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxent/chain.hpp"
#include "maxent/errors.hpp"
#include "maxent/feasibility.hpp"
#include "maxent/linalg.hpp"
#include "maxent/qsd.hpp"
#include "maxent/reconstruct.hpp"
#include "maxent/solver.hpp"

namespace maxent::io {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw StructuralError("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

inline std::string label_of(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

inline Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw StructuralError("'" + field + "' must be an array");
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw StructuralError("'" + field + "' must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty())
    throw StructuralError("'" + field + "' must be a nonempty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Matrix m(j.size(), cols, 0.0);
  std::size_t r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols)
      throw StructuralError("'" + field + "' must be rectangular");
    std::size_t c = 0;
    for (const auto& x : row) {
      if (!x.is_number()) throw StructuralError("'" + field + "' must hold numbers");
      m(r, c++) = x.get<double>();
    }
    ++r;
  }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<std::string> labels_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw StructuralError("'" + field + "' must be an array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(label_of(x));
  return out;
}

inline bool is_pattern_only(const json& j) {
  return !j.contains("visible") || j.at("visible").empty();
}

struct PatternProblem {
  std::vector<std::string> hidden;
  std::optional<Matrix> comm;
};

inline PatternProblem pattern_from_json(const json& j) {
  PatternProblem p;
  if (!j.contains("hidden")) throw StructuralError("missing 'hidden'");
  p.hidden = labels_from_json(j.at("hidden"), "hidden");
  if (p.hidden.empty()) throw StructuralError("'hidden' is empty");
  if (j.contains("L")) {
    p.comm = matrix_from_json(j.at("L"), "L");
    if (p.comm->rows() != p.hidden.size() || p.comm->cols() != p.hidden.size())
      throw StructuralError("'L' has the wrong shape");
  }
  return p;
}

inline PartialChainSpec chain_spec_from_json(const json& j) {
  PartialChainSpec spec;
  for (const char* field : {"visible", "hidden", "P_II", "P_IE", "P_EI", "pi_I"})
    if (!j.contains(field))
      throw StructuralError(std::string("missing '") + field + "'");
  spec.states.visible = labels_from_json(j.at("visible"), "visible");
  spec.states.hidden = labels_from_json(j.at("hidden"), "hidden");
  spec.p_ii = matrix_from_json(j.at("P_II"), "P_II");
  spec.p_ie = matrix_from_json(j.at("P_IE"), "P_IE");
  spec.p_ei = matrix_from_json(j.at("P_EI"), "P_EI");
  spec.pi_i = vector_from_json(j.at("pi_I"), "pi_I");
  if (j.contains("L")) spec.comm = matrix_from_json(j.at("L"), "L");
  if (j.contains("partition")) {
    std::map<std::string, std::size_t> index;
    for (std::size_t e = 0; e < spec.states.hidden.size(); ++e)
      index[spec.states.hidden[e]] = e;
    std::vector<std::vector<std::size_t>> part;
    for (const auto& block : j.at("partition")) {
      if (!block.is_array()) throw StructuralError("'partition' must be a list of lists");
      std::vector<std::size_t> members;
      for (const auto& lbl : block) {
        const std::string l = label_of(lbl);
        auto it = index.find(l);
        if (it == index.end())
          throw StructuralError("partition references unknown hidden state '" + l + "'");
        members.push_back(it->second);
      }
      part.push_back(std::move(members));
    }
    spec.partition = std::move(part);
  }
  check_dimensions(spec);
  return spec;
}

inline json chain_spec_to_json(const PartialChainSpec& spec) {
  json j;
  j["visible"] = spec.states.visible;
  j["hidden"] = spec.states.hidden;
  j["P_II"] = matrix_to_json(spec.p_ii);
  j["P_IE"] = matrix_to_json(spec.p_ie);
  j["P_EI"] = matrix_to_json(spec.p_ei);
  j["pi_I"] = spec.pi_i;
  if (spec.comm) j["L"] = matrix_to_json(*spec.comm);
  if (spec.partition) {
    json part = json::array();
    for (const auto& block : *spec.partition) {
      json labels = json::array();
      for (std::size_t e : block) labels.push_back(spec.states.hidden[e]);
      part.push_back(labels);
    }
    j["partition"] = part;
  }
  return j;
}

inline json validation_to_json(const ValidationReport& rep) {
  json j;
  j["tol"] = rep.tol;
  j["pass"] = rep.all_passed();
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}});
  j["checks"] = checks;
  return j;
}

inline json completed_to_json(const CompletedChain& chain) {
  json j;
  j["visible"] = chain.spec.states.visible;
  j["hidden"] = chain.spec.states.hidden;
  j["mode"] = to_string(chain.mode);
  j["P"] = matrix_to_json(chain.full_matrix());
  j["P_EE"] = matrix_to_json(chain.p_ee);
  j["pi"] = chain.pi;
  return j;
}

inline json solution_to_json(const MaxentSolution& sol) {
  json j;
  j["p_hat"] = matrix_to_json(sol.p_hat);
  j["alpha"] = sol.alpha;
  j["beta"] = sol.beta;
  j["anchor_index"] = sol.anchor_index;
  j["entropy"] = {{"h_Z", sol.entropy_hZ}, {"H_prime", sol.entropy_Hprime}};
  j["telemetry"] = {{"iterations", sol.iterations}, {"residual", sol.residual}};
  return j;
}

inline json feasibility_to_json(const FeasibilityOutcome& out) {
  json j;
  j["verdict"] = out.verdict == Feasibility::feasible ? "feasible" : "infeasible";
  if (out.witness) j["witness"] = matrix_to_json(*out.witness);
  if (out.certificate)
    j["certificate"] = {{"u", out.certificate->u},
                        {"v", out.certificate->v},
                        {"w", out.certificate->w}};
  return j;
}

inline json qsd_to_json(const QsdReport& rep) {
  json j;
  j["side"] = rep.side == Side::visible ? "visible" : "hidden";
  j["rho"] = rep.rho;
  j["survival"] = rep.survival;
  j["geometric_residual"] = rep.geometric_residual;
  j["exit_law"] = rep.exit_law;
  j["exit_law_residual"] = rep.exit_law_residual;
  j["independence_residual"] = rep.independence_residual;
  return j;
}

inline json comparison_to_json(const ComparisonReport& rep) {
  json j;
  j["verdict"] = to_string(rep.verdict);
  json crit = json::array();
  for (const auto& c : rep.criteria)
    crit.push_back({{"name", c.name},
                    {"evaluated", c.evaluated},
                    {"pass", c.pass},
                    {"value", c.value},
                    {"bound", c.bound}});
  j["criteria"] = crit;
  j["stats"] = {{"marginal", rep.stats.marginal},
                {"renewal_marginal", rep.stats.visible_marginal_at_renewals},
                {"gap_histogram", rep.stats.gap_histogram}};
  return j;
}

inline std::string trace_to_csv(const SpliceTrace& tr, const CompletedChain& chain) {
  const std::size_t nv = chain.num_visible();
  std::vector<const char*> kind_at(tr.w.size(), "visible-step");
  for (const auto& seg : tr.segments)
    if (seg.kind == SegmentKind::excursion)
      for (std::size_t t = seg.begin; t < seg.end && t < tr.w.size(); ++t)
        kind_at[t] = "excursion";
  std::ostringstream out;
  out << "t,state,segment_kind\n";
  for (std::size_t t = 0; t < tr.w.size(); ++t) {
    const std::size_t g = tr.w[t];
    const std::string& label = g < nv ? chain.spec.states.visible[g]
                                      : chain.spec.states.hidden[g - nv];
    out << t << ',' << label << ',' << kind_at[t] << '\n';
  }
  return out.str();
}

}  // namespace maxent::io
