#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "invlqr/approx_solver.hpp"
#include "invlqr/exact_solver.hpp"
#include "invlqr/reference_problems.hpp"
#include "io.hpp"
#include "json.hpp"

#ifndef INVLQR_VERSION
#define INVLQR_VERSION "0.0.0"
#endif

namespace invlqr::cli {

std::string version() { return INVLQR_VERSION; }

namespace {

using json = nlohmann::ordered_json;

constexpr double kMembershipTol = 1e-3;

struct Options {
  std::string problem;
  std::string trajectory;
  std::string out;
  std::optional<int> steps;
  double tol_constancy = 1e-4;
  double tol_consistency = 1e-6;
  std::uint64_t seed = 1;
  std::optional<double> snr_db;
  std::string select = "mincond";
  std::string method = "both";
  std::string demo;
};

// Rounds to 12 significant digits so reports are stable across platforms.
json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  double r = std::strtod(buf, nullptr);
  if (r == 0.0) r = 0.0;
  return r;
}

json mat_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(num(M(i, j)));
    rows.push_back(row);
  }
  return rows;
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json header(const std::string& command) {
  json j;
  j["tool"] = {{"name", "invlqr"}, {"version", version()}};
  j["command"] = command;
  return j;
}

json tolerances(const ExactOptions& eo) {
  return {{"jameson", num(eo.tol_jameson)},
          {"constancy", num(eo.tol_constancy)},
          {"constancy_trim", eo.trim},
          {"consistency", num(eo.tol_consistency)},
          {"null_space_rel", num(eo.null_rel_tol)},
          {"lmi_slack", num(kSlackFeasTol)},
          {"membership", num(kMembershipTol)},
          {"qp_objective_accept", num(kQpObjectiveAccept)},
          {"qp_objective_suspect", num(kQpObjectiveSuspect)}};
}

json existence_json(const ExistenceReport& r) {
  json j;
  j["feasible"] = r.feasible();
  j["jameson"] = {{"passed", r.jameson.passed()},
                  {"symmetric_KB", r.jameson.symmetric_KB},
                  {"rank_match", r.jameson.rank_match},
                  {"eigs_nonpositive", r.jameson.eigs_nonpositive},
                  {"worst_index", r.jameson.worst_index}};
  j["constancy"] = {{"constant", r.constancy.constant},
                    {"deviation", num(r.constancy.deviation)},
                    {"worst_index", r.constancy.worst_index}};
  j["consistency"] = {{"consistent", r.consistent}, {"residual", num(r.consistency_residual)}};
  j["lmi"] = {{"feasible", r.lmi.feasible},
              {"slack", num(r.lmi.slack)},
              {"capped", r.lmi.capped},
              {"status", std::string(to_string(r.lmi.status))}};
  return j;
}

json space_json(const SolutionSpace& s) {
  json j;
  j["r"] = s.r;
  j["Q0"] = mat_json(s.Q0.matrix());
  j["F0"] = mat_json(s.F0.matrix());
  json qb = json::array(), fb = json::array();
  for (int i = 0; i < s.r; ++i) {
    qb.push_back(mat_json(s.Qbasis[static_cast<std::size_t>(i)].matrix()));
    fb.push_back(mat_json(s.Ybasis[static_cast<std::size_t>(i)].matrix()));
  }
  j["Q_basis"] = qb;
  j["F_basis"] = fb;
  if (s.interval) {
    j["interval"] = {{"lo", num(s.interval->first)},
                     {"hi", num(s.interval->second)},
                     {"lower_unbounded", s.lower_unbounded},
                     {"upper_unbounded", s.upper_unbounded}};
  } else {
    j["interval"] = nullptr;
  }
  j["lmi_description"] = "Q0 + sum_i v_i Q_basis[i] >= 0 and F0 + sum_i v_i F_basis[i] >= 0";
  return j;
}

json uniqueness_json(const UniquenessCertificate& u) {
  return {{"unique", u.unique},
          {"conclusive", u.conclusive},
          {"rank_X", u.l},
          {"tangent_intersection_dim", u.tangent_intersection_dim},
          {"X", mat_json(u.Xstar.matrix())},
          {"reason", u.reason}};
}

json approx_json(const ApproxSolution& s) {
  json j;
  j["method"] = s.method;
  j["status"] = std::string(to_string(s.status));
  j["Q"] = mat_json(s.Qstar.matrix());
  j["F"] = mat_json(s.Fstar.matrix());
  j["Y0"] = mat_json(s.Y0star.matrix());
  j["Lambda_T"] = mat_json(s.LambdaT.matrix());
  j["Omega_T"] = mat_json(s.OmegaT.matrix());
  j["objective"] = num(s.objective_value);
  j["residual"] = num(s.residual);
  j["max_gain_error"] = num(s.max_gain_error);
  // Only the trace pairings are optimized; the full products are informational.
  j["Q_Omega_norm"] = num((s.Qstar.matrix() * s.OmegaT.matrix()).norm());
  j["F_Lambda_norm"] = num((s.Fstar.matrix() * s.LambdaT.matrix()).norm());
  j["suspect"] = s.suspect;
  j["diagnostics"] = s.diagnostics;
  return j;
}

struct Loaded {
  ProblemFile pf;
  StateSpaceSystem sys;
  FeedbackTrajectory K;
  json inputs;
};

StateSpaceSystem make_system(const ProblemFile& pf) {
  try {
    return StateSpaceSystem::make(pf.A, pf.B);
  } catch (const InvalidArgument& e) {
    throw InputError(e.what());
  }
}

FeedbackTrajectory maybe_noise(const FeedbackTrajectory& K, const Options& o, json& inputs) {
  if (!o.snr_db) {
    inputs["noise"] = nullptr;
    return K;
  }
  inputs["noise"] = {{"snr_db", num(*o.snr_db)}, {"seed", o.seed}};
  return add_noise(K, *o.snr_db, o.seed);
}

Loaded load(const Options& o, bool need_trajectory) {
  if (o.problem.empty()) throw InputError("--problem is required");
  const std::string ptext = read_file(o.problem);
  Loaded L{parse_problem(ptext), {}, {}, json::object()};
  L.sys = make_system(L.pf);
  L.inputs["problem_digest"] = digest(ptext);
  if (need_trajectory) {
    if (o.trajectory.empty()) throw InputError("--trajectory is required");
    const std::string ttext = read_file(o.trajectory);
    L.inputs["trajectory_digest"] = digest(ttext);
    L.K = maybe_noise(parse_trajectory_csv(ttext, L.sys.n(), L.sys.m()), o, L.inputs);
  }
  return L;
}

ExactOptions exact_options(const Options& o) {
  ExactOptions eo;
  eo.tol_constancy = o.tol_constancy;
  eo.tol_consistency = o.tol_consistency;
  return eo;
}

void emit(const json& report, const Options& o, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) out << text;
  else write_file(o.out, text);
}

double max_state_error(const StateSpaceSystem& sys, const FeedbackTrajectory& Kref,
                       const FeedbackTrajectory& Ks, const Vector& x0) {
  const auto xr = simulate_closed_loop(sys, Kref, x0);
  const auto xs = simulate_closed_loop(sys, Ks, x0);
  double e = 0.0;
  for (std::size_t i = 0; i < xr.size(); ++i) e = std::max(e, (xr[i] - xs[i]).norm());
  return e;
}

// --- exact path ------------------------------------------------------------

struct SolveOutcome {
  json report;
  ExactRecovery rec;
  std::optional<MinConditionResult> selected;
  std::optional<UniquenessCertificate> cert;
};

SolveOutcome run_solve(const StateSpaceSystem& sys, const FeedbackTrajectory& K, const Options& o,
                       json report) {
  const ExactOptions eo = exact_options(o);
  SolveOutcome s{std::move(report), recover_exact(sys, K, eo), std::nullopt, std::nullopt};
  json& r = s.report;
  r["tolerances"] = tolerances(eo);
  r["existence"] = existence_json(s.rec.report);
  json diags = s.rec.report.diagnostics;
  if (!s.rec.report.feasible()) {
    diags.push_back("no exact cost exists for this gain; run 'invlqr approx' for a best-fit cost");
    r["solution_space"] = nullptr;
    r["selection"] = nullptr;
    r["uniqueness"] = nullptr;
    r["diagnostics"] = diags;
    return s;
  }
  SolutionSpace& sp = *s.rec.space;
  r["solution_space"] = space_json(sp);
  MinConditionResult sel;
  if (o.select == "mincond") {
    sel = min_condition_number(sp);
  } else {
    sel.v = s.rec.report.lmi.v;
    sel.Q = sp.Q(sel.v);
    sel.F = sp.F(sel.v);
    sel.alpha = max_eig_sym(sel.Q);
    sel.status = s.rec.report.lmi.status;
  }
  s.selected = sel;
  r["selection"] = {{"method", o.select},
                    {"status", std::string(to_string(sel.status))},
                    {"v", vec_json(sel.v)},
                    {"Q", mat_json(sel.Q.matrix())},
                    {"F", mat_json(sel.F.matrix())},
                    {"max_eig_Q", num(sel.alpha)}};
  s.cert = uniqueness_certificate(sel.Q, sp.Qbasis);
  r["uniqueness"] = uniqueness_json(*s.cert);
  r["diagnostics"] = diags;
  return s;
}

int cmd_forward(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.problem.empty()) throw InputError("--problem is required");
  ProblemFile pf = parse_problem(read_file(o.problem));
  if (!pf.Q) throw InputError("forward requires Q");
  if (!pf.F) throw InputError("forward requires F");
  const StateSpaceSystem sys = make_system(pf);
  const int N = o.steps.value_or(pf.N);
  QuadraticCost cost;
  try {
    cost = QuadraticCost::make(SymMatrix(*pf.Q), SymMatrix(*pf.F), pf.T);
  } catch (const InvalidArgument& e) {
    throw InputError(e.what());
  }
  if (N < 2) throw InputError("--steps must be at least 2");
  const FeedbackTrajectory K = feedback_from_P(sys, solve_dre(sys, cost, TimeGrid(pf.T, N)));
  const std::string csv = format_trajectory_csv(K);
  if (o.out.empty()) out << csv;
  else write_file(o.out, csv);
  err << "wrote " << K.grid.size() << " samples\n";
  return kOk;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  Loaded L = load(o, true);
  json r = header("check");
  r["inputs"] = L.inputs;
  const ExactOptions eo = exact_options(o);
  const ExactRecovery rec = recover_exact(L.sys, L.K, eo);
  r["tolerances"] = tolerances(eo);
  r["existence"] = existence_json(rec.report);
  json diags = rec.report.diagnostics;
  if (!rec.report.feasible()) diags.push_back("run 'invlqr approx' for a best-fit cost");
  r["diagnostics"] = diags;
  emit(r, o, out);
  err << (rec.report.feasible() ? "feasible\n" : "infeasible\n");
  return rec.report.feasible() ? kOk : kInfeasible;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.select != "mincond" && o.select != "base") throw InputError("--select must be mincond or base");
  Loaded L = load(o, true);
  json r = header("solve");
  r["inputs"] = L.inputs;
  SolveOutcome s = run_solve(L.sys, L.K, o, std::move(r));
  emit(s.report, o, out);
  if (!s.rec.report.feasible()) {
    err << "infeasible: no exact cost exists; try 'invlqr approx'\n";
    return kInfeasible;
  }
  err << "feasible, solution family dimension " << s.rec.space->r << "\n";
  return kOk;
}

// --- approximate path ------------------------------------------------------

ApproxMethod parse_method(const std::string& m) {
  if (m == "kkt-qp") return ApproxMethod::kkt_qp;
  if (m == "direct") return ApproxMethod::direct;
  if (m == "both") return ApproxMethod::both;
  throw InputError("--method must be kkt-qp, direct or both");
}

json run_approx(const StateSpaceSystem& sys, const FeedbackTrajectory& K, const Options& o,
                const std::optional<Vector>& x0, const FeedbackTrajectory* Ktrue, ApproxRecovery& ar) {
  ar = recover_approx(sys, K, parse_method(o.method));
  // A weak KKT certificate hands authority to the direct residual minimization.
  std::string authoritative = ar.solutions.front().method;
  for (const ApproxSolution& s : ar.solutions) {
    if (s.method == "kkt-qp" && s.objective_value > kQpObjectiveSuspect) authoritative = "direct";
  }
  if (authoritative == "direct" && ar.solutions.size() == 1 && ar.solutions.front().method != "direct") {
    ApproxSolution d = direct_residual_solve(sys, ar.obs, K.grid);
    evaluate_residual(sys, K, d);
    ar.solutions.push_back(std::move(d));
  }
  const ExactRecovery ex = recover_exact(sys, K, exact_options(o));
  json j;
  json sols = json::array();
  for (const ApproxSolution& s : ar.solutions) {
    json sj = approx_json(s);
    const FeedbackTrajectory Ks = approx_gain(sys, s, K.grid);
    sj["max_state_error"] = x0 ? num(max_state_error(sys, K, Ks, *x0)) : json(nullptr);
    if (ex.report.feasible()) {
      const Membership m = membership_test(s.Qstar, *ex.space, kMembershipTol);
      sj["member_of_exact_space"] = m.member;
    } else {
      sj["member_of_exact_space"] = nullptr;
    }
    if (Ktrue) {
      sj["residual_vs_true"] = num(residual_metric(*Ktrue, Ks));
      sj["max_gain_error_vs_true"] = num(max_gain_error(*Ktrue, Ks));
      sj["max_state_error_vs_true"] = x0 ? num(max_state_error(sys, *Ktrue, Ks, *x0)) : json(nullptr);
    }
    sols.push_back(sj);
  }
  j["exact_feasible"] = ex.report.feasible();
  j["authoritative"] = authoritative;
  j["solutions"] = sols;
  if (ar.solutions.size() == 2) {
    const double a = ar.solutions[0].residual;
    const double b = ar.solutions[1].residual;
    // Residuals below 1e-8 of the gain energy are at solver precision; their ratio is noise.
    const FeedbackTrajectory zero{K.grid, std::vector<Matrix>(K.K.size(), Matrix::Zero(sys.m(), sys.n()))};
    const double floor = 1e-8 * (1.0 + residual_metric(zero, K));
    j["agreement_gap"] = num(std::abs(a - b) / std::max({a, b, floor}));
  } else {
    j["agreement_gap"] = nullptr;
  }
  return j;
}

int cmd_approx(const Options& o, std::ostream& out, std::ostream& err) {
  parse_method(o.method);
  Loaded L = load(o, true);
  json r = header("approx");
  r["inputs"] = L.inputs;
  r["tolerances"] = tolerances(exact_options(o));
  ApproxRecovery ar;
  r["approximate"] = run_approx(L.sys, L.K, o, L.pf.x0, nullptr, ar);
  r["diagnostics"] = json::array();
  emit(r, o, out);
  for (const auto& s : ar.solutions) err << s.method << ": residual " << s.residual << "\n";
  return kOk;
}

// --- demos -----------------------------------------------------------------

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

int cmd_demo(const Options& o, std::ostream& out, std::ostream& err) {
  const std::optional<ReferenceProblem> ref = reference_problem(o.demo);
  if (!ref) {
    std::string names;
    for (const auto& n : reference_problem_names()) names += " " + n;
    throw InputError("unknown demo '" + o.demo + "'; choose one of:" + names);
  }
  const ReferenceProblem& p = *ref;
  const StateSpaceSystem sys = p.system();
  const int N = o.steps.value_or(p.N);
  if (N < 2) throw InputError("--steps must be at least 2");
  const FeedbackTrajectory Ktrue = feedback_from_P(sys, solve_dre(sys, p.cost(), TimeGrid(p.T, N)));
  Options od = o;
  if (!od.snr_db) od.snr_db = p.snr_db;
  json r = header("demo");
  json inputs;
  inputs["demo"] = p.name;
  inputs["steps"] = N;
  const FeedbackTrajectory K = maybe_noise(Ktrue, od, inputs);
  r["inputs"] = inputs;
  json cmp = json::array();
  auto line = [&](const std::string& what, const std::string& computed, const std::string& reference) {
    cmp.push_back({{"quantity", what}, {"computed", computed}, {"reference", reference}});
    out << "  " << what << ": " << computed << "  (reference " << reference << ")\n";
  };
  out << "demo " << p.name << "\n";

  if (!p.approx_Q) {
    SolveOutcome s = run_solve(sys, K, od, std::move(r));
    r = std::move(s.report);
    if (!s.rec.report.feasible()) {
      out << "  exact recovery failed\n";
    } else {
      const SolutionSpace& sp = *s.rec.space;
      out << "  solution family dimension " << sp.r << "\n";
      if (p.dQ && sp.interval) {
        const Reparametrized rp = reparametrize_interval(sp, p.Q, *p.dQ);
        line("alpha interval", "[" + fmt(rp.lo) + ", " + fmt(rp.hi) + "]",
             "[" + fmt(p.alpha_interval->first) + ", " + fmt(p.alpha_interval->second) + "]");
        line("direction residual of dQ", fmt(rp.direction_residual), "0");
      }
      if (p.dF && sp.r == 1) {
        const Matrix& Y1 = sp.Ybasis.front().matrix();
        const double c = Y1.cwiseProduct(p.dF->matrix()).sum() / Y1.squaredNorm();
        line("direction residual of dF", fmt((p.dF->matrix() - c * Y1).norm() / p.dF->matrix().norm()), "0");
      }
      if (p.min_condition_Q && s.selected) {
        const double d = (s.selected->Q.matrix() - p.min_condition_Q->matrix()).cwiseAbs().maxCoeff();
        line("min-condition Q max entry error", fmt(d), "<= 1e-2");
      }
      if (p.unique) {
        const UniquenessCertificate u = uniqueness_certificate(p.Q, sp.Qbasis);
        r["reference_uniqueness"] = uniqueness_json(u);
        line("unique (certificate at the generating Q)", u.unique ? "true" : "false", *p.unique ? "true" : "false");
      }
      const Membership m = membership_test(p.Q, sp, 1e-4);
      line("generating Q is a member", m.member ? "true" : "false", "true");
    }
  } else {
    const ExactRecovery ex = recover_exact(sys, K, exact_options(od));
    r["tolerances"] = tolerances(exact_options(od));
    r["existence"] = existence_json(ex.report);
    line("exact recovery feasible", ex.report.feasible() ? "true" : "false", "false");
    line("B_Q constancy deviation", fmt(ex.report.constancy.deviation), "> " + fmt(od.tol_constancy));
    ApproxRecovery ar;
    r["approximate"] = run_approx(sys, K, od, p.x0, &Ktrue, ar);
    for (std::size_t i = 0; i < ar.solutions.size(); ++i) {
      const auto& sj = r["approximate"]["solutions"][i];
      const std::string tag = ar.solutions[i].method + " ";
      line(tag + "residual vs true gain", fmt(sj["residual_vs_true"].get<double>()), fmt(*p.approx_residual));
      line(tag + "max gain error vs true", fmt(sj["max_gain_error_vs_true"].get<double>()),
           fmt(*p.approx_max_gain_error));
      if (!sj["max_state_error_vs_true"].is_null()) {
        line(tag + "max state error vs true", fmt(sj["max_state_error_vs_true"].get<double>()),
             fmt(*p.approx_max_state_error));
      }
      line(tag + "Q* max entry difference",
           fmt((ar.solutions[i].Qstar.matrix() - p.approx_Q->matrix()).cwiseAbs().maxCoeff()), "noise dependent");
    }
    r["diagnostics"] = ex.report.diagnostics;
  }
  r["reference_comparison"] = cmp;
  if (!o.out.empty()) {
    write_file(o.out, r.dump(2) + "\n");
    err << "report written to " << o.out << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inverse finite-horizon LQ optimal control"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Options o;

  auto add_io = [&](CLI::App* c, bool trajectory) {
    c->add_option("--problem", o.problem, "problem JSON (A, B, optional Q, F, T, N, x0)")->required();
    if (trajectory) c->add_option("--trajectory", o.trajectory, "gain CSV")->required();
    c->add_option("--out", o.out, "output path (default stdout)");
  };
  auto add_noise_opts = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "noise seed");
    c->add_option("--snr-db", o.snr_db, "add white Gaussian noise to the gain at this SNR");
  };
  auto add_tols = [&](CLI::App* c) {
    c->add_option("--tol-constancy", o.tol_constancy, "relative constancy tolerance for B_Q");
    c->add_option("--tol-consistency", o.tol_consistency, "relative residual tolerance of the linear system");
  };

  CLI::App* fwd = app.add_subcommand("forward", "solve the Riccati equation and write K(t)");
  add_io(fwd, false);
  fwd->add_option("--steps", o.steps, "grid steps (overrides N)");

  CLI::App* chk = app.add_subcommand("check", "existence test for an observed gain");
  add_io(chk, true);
  add_tols(chk);
  add_noise_opts(chk);

  CLI::App* slv = app.add_subcommand("solve", "exact recovery of the cost family");
  add_io(slv, true);
  add_tols(slv);
  add_noise_opts(slv);
  slv->add_option("--select", o.select, "mincond or base");

  CLI::App* apx = app.add_subcommand("approx", "best-fit cost for an infeasible gain");
  add_io(apx, true);
  add_tols(apx);
  add_noise_opts(apx);
  apx->add_option("--method", o.method, "kkt-qp, direct or both");

  CLI::App* dem = app.add_subcommand("demo", "run a built-in reference problem");
  dem->add_option("name", o.demo, "example1, example2, example3, case-study-exact, case-study-noisy")->required();
  dem->add_option("--out", o.out, "also write the JSON report here");
  dem->add_option("--steps", o.steps, "grid steps");
  dem->add_option("--select", o.select, "mincond or base");
  dem->add_option("--method", o.method, "kkt-qp, direct or both");
  add_tols(dem);
  add_noise_opts(dem);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (fwd->parsed()) return cmd_forward(o, out, err);
    if (chk->parsed()) return cmd_check(o, out, err);
    if (slv->parsed()) return cmd_solve(o, out, err);
    if (apx->parsed()) return cmd_approx(o, out, err);
    if (dem->parsed()) return cmd_demo(o, out, err);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidArgument& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kInputError;
}

}  // namespace invlqr::cli
