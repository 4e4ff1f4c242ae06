#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maxent/chain.hpp"
#include "maxent/errors.hpp"
#include "maxent/feasibility.hpp"
#include "maxent/io.hpp"
#include "maxent/labyrinths.hpp"
#include "maxent/qsd.hpp"
#include "maxent/reconstruct.hpp"
#include "maxent/solver.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitStructural = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitSimulation = 4;

struct Options {
  std::string input;
  std::string output = "-";
  std::string mode = "auto";
  double tol = maxent::kDefaultTol;
  double scale_tol = 1e-12;
  long max_iter = 100000;
  std::size_t anchor = 0;
  long steps = 1000000;
  std::uint64_t seed = 12345;
  std::size_t horizon = 50;
  std::string trace_path;
  bool with_report = false;
};

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw maxent::StructuralError("cannot write '" + path + "'");
  out << content;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

maxent::SolveOptions solve_options(const Options& opt) {
  maxent::SolveOptions so;
  so.tol = opt.scale_tol;
  so.max_iter = opt.max_iter;
  so.anchor = opt.anchor;
  return so;
}

struct CompletionResult {
  maxent::CompletedChain chain;
  std::optional<maxent::MaxentSolution> solution;
  std::vector<maxent::BlockSolve> blocks;
};

CompletionResult run_completion(const maxent::PartialChainSpec& spec, const Options& opt) {
  const bool has_comm = spec.comm.has_value();
  if (opt.mode == "parry" || opt.mode == "uniform")
    throw maxent::StructuralError("mode '" + opt.mode +
                                  "' applies only to inputs with an empty visible set");
  if (opt.mode == "constrained" && !has_comm)
    throw maxent::StructuralError("mode 'constrained' requires a support pattern 'L'");

  if (spec.partition && opt.mode != "bernoulli") {
    auto blocks = maxent::decompose(spec);
    const maxent::CompletionMode block_mode = has_comm
                                                  ? maxent::CompletionMode::constrained
                                                  : maxent::CompletionMode::bernoulli;
    std::vector<maxent::CompletionMode> modes(blocks.size(), block_mode);
    CompletionResult res;
    res.chain = maxent::complete_blocks(spec, blocks, modes, solve_options(opt), opt.tol,
                                        &res.blocks);
    return res;
  }
  if (has_comm && opt.mode != "bernoulli") {
    maxent::MaxentSolution sol = maxent::complete_constrained(spec, solve_options(opt));
    CompletionResult res{maxent::to_completed(spec, sol, opt.tol), std::move(sol), {}};
    return res;
  }
  return {maxent::complete_bernoulli(spec, opt.tol), std::nullopt, {}};
}

json entropy_to_json(const maxent::EntropyReport& er) {
  return json{{"h_X", er.h_X},
              {"h_Z", er.h_Z},
              {"H_prime", er.H_prime},
              {"identity_residual", er.identity_residual},
              {"terms",
               {{"visible", er.term_visible},
                {"exit", er.term_exit},
                {"hidden", er.term_hidden}}},
              {"decomposition_residual", er.decomposition_residual}};
}

json blocks_to_json(const std::vector<maxent::BlockSolve>& blocks) {
  json arr = json::array();
  for (const auto& b : blocks)
    arr.push_back({{"mode", maxent::to_string(b.mode)},
                   {"iterations", b.iterations},
                   {"residual", b.residual},
                   {"h_Z", b.entropy_hZ}});
  return arr;
}

// Pattern-only completion: a hidden alphabet with (parry) or without (uniform)
// a support constraint.
int run_complete_pattern(const json& j, const Options& opt) {
  maxent::io::PatternProblem p = maxent::io::pattern_from_json(j);
  const std::size_t n = p.hidden.size();
  std::string mode = opt.mode;
  if (mode == "auto") mode = p.comm ? "parry" : "uniform";
  json out;
  out["hidden"] = p.hidden;
  if (mode == "parry") {
    if (!p.comm) throw maxent::StructuralError("mode 'parry' requires a support pattern 'L'");
    maxent::ParryChain pc = maxent::complete_parry(*p.comm);
    out["mode"] = "parry";
    out["P"] = maxent::io::matrix_to_json(pc.p_hat);
    out["pi"] = pc.stationary;
    out["lambda"] = pc.lambda;
    out["entropy"] = pc.log_lambda;
  } else if (mode == "uniform") {
    if (p.comm)
      throw maxent::StructuralError("mode 'uniform' does not accept a support pattern");
    out["mode"] = "uniform";
    out["P"] = maxent::io::matrix_to_json(maxent::complete_uniform(n));
    out["pi"] = maxent::Vector(n, 1.0 / static_cast<double>(n));
    out["entropy"] = std::log(static_cast<double>(n));
  } else {
    throw maxent::StructuralError("mode '" + mode +
                                  "' requires a nonempty visible set in the input");
  }
  write_output(opt.output, dump(out));
  return kExitOk;
}

// On a scaling failure, re-examine the instance with the exact feasibility
// solver so the user gets a witness or a certificate instead of a bare error.
json feasibility_postmortem(const maxent::PartialChainSpec& spec) {
  const maxent::DerivedQuantities d = maxent::derive_quantities(spec);
  if (spec.partition) {
    auto blocks = maxent::decompose(spec);
    json arr = json::array();
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      json entry;
      entry["block"] = m;
      if (blocks[m].comm_m)
        entry["outcome"] = maxent::io::feasibility_to_json(
            maxent::solve_feasibility(blocks[m].pihat_m, *blocks[m].comm_m));
      arr.push_back(entry);
    }
    return json{{"blocks", arr}};
  }
  return maxent::io::feasibility_to_json(maxent::solve_feasibility(d.pihat_e, *spec.comm));
}

int run_validate(const Options& opt) {
  const json j = maxent::io::load_json_file(opt.input);
  const maxent::PartialChainSpec spec = maxent::io::chain_spec_from_json(j);
  const maxent::ValidationReport rep = maxent::validate_hypotheses(spec, opt.tol);
  write_output(opt.output, dump(maxent::io::validation_to_json(rep)));
  return rep.all_passed() ? kExitOk : kExitHypothesis;
}

int run_feasibility(const Options& opt) {
  const json j = maxent::io::load_json_file(opt.input);
  maxent::Vector pihat;
  maxent::Matrix comm(1, 1, 1.0);
  if (j.contains("pihat")) {
    pihat = maxent::io::vector_from_json(j.at("pihat"), "pihat");
    if (!j.contains("L")) throw maxent::StructuralError("missing 'L'");
    comm = maxent::io::matrix_from_json(j.at("L"), "L");
  } else {
    const maxent::PartialChainSpec spec = maxent::io::chain_spec_from_json(j);
    if (!spec.comm)
      throw maxent::StructuralError("feasibility needs a support pattern 'L'");
    pihat = maxent::derive_quantities(spec).pihat_e;
    comm = *spec.comm;
  }
  const maxent::FeasibilityOutcome outcome = maxent::solve_feasibility(pihat, comm);
  write_output(opt.output, dump(maxent::io::feasibility_to_json(outcome)));
  return outcome.verdict == maxent::Feasibility::feasible ? kExitOk : kExitInfeasible;
}

int run_complete(const Options& opt) {
  const json j = maxent::io::load_json_file(opt.input);
  if (maxent::io::is_pattern_only(j)) return run_complete_pattern(j, opt);
  const maxent::PartialChainSpec spec = maxent::io::chain_spec_from_json(j);
  const maxent::ValidationReport vrep = maxent::validate_hypotheses(spec, opt.tol);
  if (!vrep.all_passed()) {
    write_output(opt.output, dump(json{{"validation", maxent::io::validation_to_json(vrep)}}));
    return kExitHypothesis;
  }
  try {
    const CompletionResult res = run_completion(spec, opt);
    json out;
    out["validation"] = maxent::io::validation_to_json(vrep);
    out["chain"] = maxent::io::completed_to_json(res.chain);
    out["entropy"] = entropy_to_json(maxent::entropy_full(res.chain));
    if (res.solution) out["solution"] = maxent::io::solution_to_json(*res.solution);
    if (!res.blocks.empty()) out["blocks"] = blocks_to_json(res.blocks);
    write_output(opt.output, dump(out));
    return kExitOk;
  } catch (const maxent::SolveError& e) {
    json pm = feasibility_postmortem(spec);
    write_output(opt.output, dump(json{{"error", e.what()}, {"feasibility", pm}}));
    return kExitInfeasible;
  }
}

int run_qsd(const Options& opt) {
  const json j = maxent::io::load_json_file(opt.input);
  const maxent::PartialChainSpec spec = maxent::io::chain_spec_from_json(j);
  const maxent::ValidationReport vrep = maxent::validate_hypotheses(spec, opt.tol);
  if (!vrep.all_passed()) {
    write_output(opt.output, dump(json{{"validation", maxent::io::validation_to_json(vrep)}}));
    return kExitHypothesis;
  }
  const CompletionResult res = run_completion(spec, opt);
  json out;
  out["mode"] = maxent::to_string(res.chain.mode);
  out["visible"] = maxent::io::qsd_to_json(maxent::qsd_report_visible(res.chain, opt.horizon));
  out["hidden"] = maxent::io::qsd_to_json(maxent::qsd_report_hidden(res.chain, opt.horizon));
  write_output(opt.output, dump(out));
  return kExitOk;
}

int run_simulate(const Options& opt) {
  const json j = maxent::io::load_json_file(opt.input);
  const maxent::PartialChainSpec spec = maxent::io::chain_spec_from_json(j);
  const maxent::ValidationReport vrep = maxent::validate_hypotheses(spec, opt.tol);
  if (!vrep.all_passed()) {
    write_output(opt.output, dump(json{{"validation", maxent::io::validation_to_json(vrep)}}));
    return kExitHypothesis;
  }
  const CompletionResult res = run_completion(spec, opt);
  const maxent::SkeletonKernel kernel = maxent::build_skeleton(res.chain);
  const maxent::SpliceTrace tr = maxent::simulate_splice(
      res.chain, kernel, static_cast<std::size_t>(opt.steps), opt.seed);
  if (!opt.trace_path.empty())
    write_output(opt.trace_path, maxent::io::trace_to_csv(tr, res.chain));
  json out;
  out["steps"] = tr.w.size();
  out["seed"] = tr.seed;
  out["renewals"] = tr.renewal_times.size();
  out["segments"] = tr.segments.size();
  int code = kExitOk;
  if (opt.with_report) {
    const maxent::ComparisonReport rep = maxent::compare_laws(tr, res.chain);
    out["comparison"] = maxent::io::comparison_to_json(rep);
    if (rep.verdict != maxent::SimVerdict::pass) code = kExitSimulation;
  }
  write_output(opt.output, dump(out));
  return code;
}

// ---- Markdown report -------------------------------------------------------

std::string fmt(double x) { return maxent::format_double(x); }

void md_matrix(std::ostringstream& md, const std::vector<std::string>& labels,
               const maxent::Matrix& m) {
  md << "| |";
  for (const auto& l : labels) md << ' ' << l << " |";
  md << "\n|---|";
  for (std::size_t c = 0; c < labels.size(); ++c) md << "---|";
  md << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    md << "| **" << labels[r] << "** |";
    for (std::size_t c = 0; c < m.cols(); ++c) md << ' ' << fmt(m(r, c)) << " |";
    md << '\n';
  }
}

void md_qsd(std::ostringstream& md, const maxent::QsdReport& rep) {
  md << "| decay rate | " << fmt(rep.rho) << " |\n"
     << "| geometric survival residual | " << fmt(rep.geometric_residual) << " |\n"
     << "| exit-law residual | " << fmt(rep.exit_law_residual) << " |\n"
     << "| independence residual | " << fmt(rep.independence_residual) << " |\n";
}

int run_report(const Options& opt) {
  const json j = maxent::io::load_json_file(opt.input);
  const maxent::PartialChainSpec spec = maxent::io::chain_spec_from_json(j);
  std::ostringstream md;
  md << "# chain completion report\n\n";

  const maxent::ValidationReport vrep = maxent::validate_hypotheses(spec, opt.tol);
  md << "## hypotheses\n\ntolerance " << fmt(vrep.tol) << "\n\n"
     << "| check | residual | verdict |\n|---|---|---|\n";
  for (const auto& c : vrep.checks)
    md << "| " << c.name << " | " << fmt(c.residual) << " | "
       << (c.pass ? "pass" : "fail") << " |\n";
  md << '\n';
  if (!vrep.all_passed()) {
    md << "hypotheses violated; nothing further can be computed.\n";
    write_output(opt.output, md.str());
    return kExitHypothesis;
  }

  md << "## feasibility\n\n";
  if (spec.comm && !spec.partition) {
    const maxent::DerivedQuantities d = maxent::derive_quantities(spec);
    const maxent::FeasibilityOutcome outcome =
        maxent::solve_feasibility(d.pihat_e, *spec.comm);
    if (outcome.verdict == maxent::Feasibility::infeasible) {
      md << "verdict: **infeasible** — no completion respects the support pattern.\n\n";
      if (outcome.certificate) {
        md << "separating certificate (u, v, w):\n\n```\nu = [";
        for (double x : outcome.certificate->u) md << ' ' << fmt(x);
        md << " ]\nv = [";
        for (double x : outcome.certificate->v) md << ' ' << fmt(x);
        md << " ]\nw = [";
        for (double x : outcome.certificate->w) md << ' ' << fmt(x);
        md << " ]\n```\n";
      }
      write_output(opt.output, md.str());
      return kExitInfeasible;
    }
    md << "verdict: feasible (witness found by the exact solver).\n\n";
  } else if (spec.partition) {
    md << "per-block support handled by the partitioned solver below.\n\n";
  } else {
    md << "no support constraint: every hidden transition is allowed.\n\n";
  }

  CompletionResult res{maxent::CompletedChain{}, std::nullopt, {}};
  try {
    res = run_completion(spec, opt);
  } catch (const maxent::SolveError& e) {
    md << "## completion\n\nscaling failed: " << e.what() << "\n";
    write_output(opt.output, md.str());
    return kExitInfeasible;
  }

  md << "## completion\n\nmode: " << maxent::to_string(res.chain.mode) << "\n\n";
  std::vector<std::string> labels = res.chain.spec.states.visible;
  labels.insert(labels.end(), res.chain.spec.states.hidden.begin(),
                res.chain.spec.states.hidden.end());
  md_matrix(md, labels, res.chain.full_matrix());
  md << "\nstationary law: [";
  for (double x : res.chain.pi) md << ' ' << fmt(x);
  md << " ]\n\n";

  const maxent::EntropyReport er = maxent::entropy_full(res.chain);
  md << "## entropy\n\n"
     << "| quantity | value |\n|---|---|\n"
     << "| h(X) | " << fmt(er.h_X) << " |\n"
     << "| h(Z) | " << fmt(er.h_Z) << " |\n"
     << "| hidden-block share H' | " << fmt(er.H_prime) << " |\n"
     << "| identity residual | " << fmt(er.identity_residual) << " |\n"
     << "| decomposition residual | " << fmt(er.decomposition_residual) << " |\n\n";

  md << "## quasi-stationarity\n\nhorizon " << opt.horizon << "\n\n"
     << "### visible block\n\n| quantity | value |\n|---|---|\n";
  md_qsd(md, maxent::qsd_report_visible(res.chain, opt.horizon));
  md << "\n### hidden block\n\n| quantity | value |\n|---|---|\n";
  md_qsd(md, maxent::qsd_report_hidden(res.chain, opt.horizon));
  md << '\n';

  const maxent::SpliceTrace tr =
      maxent::simulate_splice(res.chain, static_cast<std::size_t>(opt.steps), opt.seed);
  const maxent::ComparisonReport rep = maxent::compare_laws(tr, res.chain);
  md << "## simulation\n\n"
     << "steps " << tr.w.size() << ", seed " << tr.seed << ", renewals "
     << tr.renewal_times.size() << "\n\n"
     << "| criterion | value | bound | verdict |\n|---|---|---|---|\n";
  for (const auto& c : rep.criteria)
    md << "| " << c.name << " | " << fmt(c.value) << " | " << fmt(c.bound) << " | "
       << (!c.evaluated ? "not evaluated" : c.pass ? "pass" : "fail") << " |\n";
  md << "\nverdict: **" << maxent::to_string(rep.verdict) << "**\n";
  write_output(opt.output, md.str());
  return rep.verdict == maxent::SimVerdict::pass ? kExitOk : kExitSimulation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maximum-entropy completion of partially specified Markov chains"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("input", opt.input, "input JSON file")->required();
    sub->add_option("-o,--output", opt.output, "output path, '-' for stdout");
    sub->add_option("--tol", opt.tol, "tolerance for hypothesis and identity checks");
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--mode", opt.mode,
                    "auto | bernoulli | constrained | parry | uniform")
        ->check(CLI::IsMember({"auto", "bernoulli", "constrained", "parry", "uniform"}));
    sub->add_option("--scale-tol", opt.scale_tol, "fixed-point convergence tolerance");
    sub->add_option("--max-iter", opt.max_iter, "fixed-point sweep limit");
    sub->add_option("--anchor", opt.anchor, "index of the hidden state pinned to beta=1");
  };

  CLI::App* validate = app.add_subcommand("validate", "check the standing hypotheses");
  add_common(validate);

  CLI::App* feas = app.add_subcommand(
      "feasibility", "decide whether a support pattern admits a completion");
  add_common(feas);

  CLI::App* complete = app.add_subcommand("complete", "maximum-entropy completion");
  add_common(complete);
  add_solver(complete);

  CLI::App* qsd = app.add_subcommand("qsd", "quasi-stationarity diagnostics");
  add_common(qsd);
  add_solver(qsd);
  qsd->add_option("--horizon", opt.horizon, "number of survival steps checked");

  CLI::App* simulate = app.add_subcommand("simulate", "splice-sample a trajectory");
  add_common(simulate);
  add_solver(simulate);
  simulate->add_option("--steps", opt.steps, "trajectory length");
  simulate->add_option("--seed", opt.seed, "RNG seed");
  simulate->add_option("--trace", opt.trace_path, "write the trajectory CSV here");
  simulate->add_flag("--report", opt.with_report, "compare the trace against the target law");

  CLI::App* report = app.add_subcommand("report", "full pipeline, Markdown summary");
  add_common(report);
  add_solver(report);
  report->add_option("--horizon", opt.horizon, "number of survival steps checked");
  report->add_option("--steps", opt.steps, "trajectory length");
  report->add_option("--seed", opt.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(validate)) return run_validate(opt);
    if (app.got_subcommand(feas)) return run_feasibility(opt);
    if (app.got_subcommand(complete)) return run_complete(opt);
    if (app.got_subcommand(qsd)) return run_qsd(opt);
    if (app.got_subcommand(simulate)) return run_simulate(opt);
    if (app.got_subcommand(report)) return run_report(opt);
  } catch (const maxent::DegeneracyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitHypothesis;
  } catch (const maxent::SolveError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStructural;
  }
  return kExitStructural;
}
