// Command-line front end. Reports are JSON on stdout (or --out); exit status
// 0 = decided, 2 = indeterminate, 1 = usage or data error.
#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "gammahull/certify.hpp"
#include "gammahull/convexity.hpp"
#include "gammahull/hull.hpp"
#include "gammahull/io.hpp"

using namespace gammahull;
using io::Json;

namespace {

constexpr int kDecided = 0;
constexpr int kDataError = 1;
constexpr int kIndeterminate = 2;

struct Args {
  std::string problem, point, objective = "margin", out, sdpa_out, external_solver, certificate, pencil, target,
      grid;
  int level = 0;
  std::optional<int> degree;
  int multiplier_degree = 0;
  double tol = 1e-7;
  int jobs = 1;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Infinite margins (presolve infeasibility) are not valid JSON numbers.
Json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

sdp::FeasibilityOptions feasibility(const Args& a) {
  sdp::FeasibilityOptions f;
  f.feas_margin = a.tol;
  f.solver.feas_margin = a.tol;
  if (const char* env = std::getenv("GAMMAHULL_SOLVER"); env && *env) f.external_command = env;
  else f.external_command = a.external_solver;
  return f;
}

io::ProblemFile load_problem(const Args& a) {
  if (a.problem.empty()) throw CLI::RequiredError("--problem");
  return io::parse_problem(a.problem);
}

std::vector<CMatrix> load_point(const Args& a, const io::ProblemFile& f) {
  if (a.point.empty()) throw CLI::RequiredError("--point");
  std::vector<CMatrix> X;
  if (a.point.front() == '(') {
    X = io::parse_scalar_point(a.point);
  } else if (auto it = f.anchors.find(a.point); it != f.anchors.end()) {
    X = it->second;
  } else if (std::filesystem::exists(a.point)) {
    const Json j = io::read_json(a.point);
    X = io::tuple_from_json(j.is_object() ? io::detail::field(j, "point", a.point) : j, a.point);
  } else {
    throw io::ParseError("point", "\"" + a.point + "\" is neither \"(a,b,...)\", an anchor name nor a file");
  }
  if (static_cast<int>(X.size()) != f.g)
    throw io::ParseError("point", "expected " + std::to_string(f.g) + " entries, got " + std::to_string(X.size()));
  return X;
}

std::vector<CMatrix> load_tuple(const std::string& path, const char* flag) {
  if (path.empty()) throw CLI::RequiredError(flag);
  const Json j = io::read_json(path);
  try {
    return io::tuple_from_json(j.is_object() ? io::detail::field(j, "coeffs", "") : j, "");
  } catch (const io::ParseError& e) {
    throw io::ParseError(path + (e.where().empty() ? "" : ": " + e.where()), e.message());
  }
}

MembershipOptions membership_options(const Args& a, const io::ProblemFile& f) {
  MembershipOptions mo;
  mo.objective = a.objective == "trace-min" ? Objective::trace_min : Objective::margin;
  mo.feasibility = feasibility(a);
  mo.accept_tol = a.tol;
  mo.lift.bound_k = f.archimedean_k;
  return mo;
}

Json verdict_json(const MembershipVerdict& v) {
  Json j;
  j["status"] = to_string(v.status);
  j["level"] = v.level;
  j["eta"] = v.eta;
  j["margin"] = number(v.margin);
  j["hankel_margin"] = number(v.hankel_margin);
  j["localizing_margin"] = number(v.localizing_margin);
  j["dual_bound"] = number(v.dual_bound);
  j["boundary"] = v.boundary;
  j["hankel_dim"] = v.hankel_dim;
  j["localizing_dim"] = v.localizing_dim;
  j["num_params"] = v.num_params;
  j["free_params"] = v.free_params;
  j["message"] = v.message;
  return j;
}

Json gns_json(const GnsRealization& r) {
  Json j;
  j["success"] = r.success;
  j["rank"] = r.rank;
  j["rank_low"] = r.rank_low;
  j["residual_moments"] = r.residual_moments;
  j["min_eig_p"] = r.residual_psd;
  j["gamma_pair_deviation"] = r.pair.deviation;
  if (!r.Z.empty()) {
    j["Z"] = io::to_json(r.Z);
    j["V"] = io::to_json(r.V);
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

Json verification_json(const VerificationReport& r) {
  Json j;
  j["ok"] = r.ok;
  j["recomposition_residual"] = r.recomposition_residual;
  j["gram_sos_min_eig"] = number(r.gram_sos_min_eig);
  j["gram_weighted_min_eig"] = number(r.gram_weighted_min_eig);
  if (r.violation) j["violation"] = number(*r.violation);
  j["failures"] = r.failures;
  return j;
}

void emit(const Json& report, const std::string& path) {
  if (path.empty()) std::cout << report.dump(2) << "\n";
  else io::write_json(report, path);
}

// Report skeleton shared by all commands.
Json header(const std::string& command, const Args& a) {
  Json j;
  j["command"] = command;
  Json args;
  if (!a.problem.empty()) args["problem"] = a.problem;
  if (!a.point.empty()) args["point"] = a.point;
  args["level"] = a.level;
  if (a.degree) args["degree"] = *a.degree;
  args["objective"] = a.objective;
  args["tol"] = a.tol;
  j["args"] = std::move(args);
  return j;
}

void finish(Json& j, const Clock& clock, const Args& a, int code) {
  j["exit_code"] = code;
  j["timings"] = {{"total_s", clock.seconds()}};
  const auto f = feasibility(a);
  j["solver"] = f.external_command.empty() ? Json("internal") : Json(f.external_command);
}

void maybe_export(const Args& a, const LiftProblem& lift, Json& j) {
  if (a.sdpa_out.empty()) return;
  auto ms = lift_sdp(lift, feasibility(a));
  sdp::export_sdpa(ms.problem, a.sdpa_out);
  j["sdpa"] = {{"path", a.sdpa_out}, {"vars", ms.problem.num_vars}, {"blocks", ms.problem.block_dims}};
}

// ---- commands ----

int check_grid(const Args& a, const io::ProblemFile& f) {
  if (f.g != 2) throw io::ParseError("grid", "grid studies need two variables");
  double lo = 0, hi = 0;
  int N = 0;
  {
    std::string s = a.grid;
    for (char& c : s)
      if (c == ',') c = ' ';
    std::istringstream is(s);
    if (!(is >> lo >> hi >> N) || N < 1 || !(lo <= hi)) throw io::ParseError("grid", "expected \"lo,hi,N\"");
  }
  const auto mo = membership_options(a, f);
  std::vector<std::string> rows(static_cast<std::size_t>(N) * N);
  std::atomic<int> next{0};
  auto step = [&](int i) { return N == 1 ? lo : lo + (hi - lo) * i / (N - 1); };
  auto worker = [&] {
    for (int k; (k = next++) < N * N;) {
      const double x = step(k / N), y = step(k % N);
      std::vector<CMatrix> X{CMatrix::Constant(1, 1, x), CMatrix::Constant(1, 1, y)};
      auto v = membership(f.p, f.gamma, X, a.level, mo);
      std::ostringstream os;
      os.precision(10);
      os << x << "," << y << "," << to_string(v.status) << "," << v.margin;
      rows[k] = os.str();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, a.jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot write " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "x,y,status,margin\n";
  bool undecided = false;
  for (const auto& r : rows) {
    os << r << "\n";
    undecided = undecided || r.find(",indeterminate,") != std::string::npos;
  }
  return undecided ? kIndeterminate : kDecided;
}

int cmd_check(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  if (!a.grid.empty()) return check_grid(a, f);
  auto X = load_point(a, f);
  auto mo = membership_options(a, f);
  LiftProblem lift(f.p, f.gamma, X, a.level, mo.lift);
  auto v = membership(lift, mo);
  Json j = header("check", a);
  j["verdict"] = verdict_json(v);
  j["member"] = v.status == LevelStatus::member_at_level;
  maybe_export(a, lift, j);
  const int code = v.status == LevelStatus::indeterminate ? kIndeterminate : kDecided;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

int cmd_hierarchy(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  auto X = load_point(a, f);
  HierarchyCriteria c;
  c.membership = membership_options(a, f);
  c.membership.objective = Objective::margin;
  c.separation.feasibility = feasibility(a);
  c.separation_degree = a.degree;
  auto rep = run_hierarchy(f.p, f.gamma, X, a.level, c);
  Json j = header("hierarchy", a);
  j["outcome"] = to_string(rep.outcome);
  j["decided_level"] = rep.decided_level;
  j["monotone"] = rep.monotone;
  j["message"] = rep.message;
  Json levels = Json::array();
  for (const auto& r : rep.levels) {
    Json l = verdict_json(r.verdict);
    if (!r.note.empty()) l["note"] = r.note;
    levels.push_back(std::move(l));
  }
  j["levels"] = std::move(levels);
  if (rep.witness) {
    j["witness"] = gns_json(*rep.witness);
    j["witness"]["error"] = rep.witness_error;
  }
  if (rep.separation) j["certificate"] = io::to_json(*rep.separation, X);
  const int code = rep.outcome == HierarchyOutcome::undetermined ? kIndeterminate : kDecided;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

int cmd_separate(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  auto X = load_point(a, f);
  SeparateOptions so;
  so.feasibility = feasibility(a);
  const int N = a.degree.value_or(separation_degree(f.p, a.level));
  auto cert = separate(f.p, f.gamma, X, N, so);
  Json j = header("separate", a);
  j["degree"] = N;
  int code = kIndeterminate;
  if (cert) {
    auto r = verify_certificate(*cert, f.p, X);
    j["verification"] = verification_json(r);
    j["violation"] = cert->violation;
    if (r.ok) code = kDecided;
    // --out holds the certificate itself; the report goes to stdout.
    if (!a.out.empty()) {
      io::write_json(io::to_json(*cert, X), a.out);
      j["certificate"] = a.out;
    } else {
      j["certificate"] = io::to_json(*cert, X);
    }
  } else {
    j["message"] = "no separating Gamma-pencil at degree " + std::to_string(N);
  }
  finish(j, clock, a, code);
  std::cout << j.dump(2) << "\n";
  return code;
}

int cmd_gns(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  auto X = load_point(a, f);
  HierarchyCriteria c;
  c.membership = membership_options(a, f);
  std::string note;
  double err = 0.0;
  auto w = certify_level(f.p, f.gamma, X, a.level, c, note, err);
  Json j = header("gns", a);
  if (w) {
    j["witness"] = gns_json(*w);
    j["witness"]["error"] = err;
  } else {
    j["message"] = note;
  }
  const int code = w ? kDecided : kIndeterminate;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

Json answer_json(Answer ans) { return to_string(ans); }

int cmd_bounded(const Args& a) {
  Clock clock;
  auto A = load_tuple(a.pencil, "--pencil");
  auto r = spectrahedron_bounded(A, feasibility(a));
  Json j = header("bounded", a);
  j["bounded"] = answer_json(r.bounded);
  j["independent"] = r.independent;
  j["margin"] = number(r.margin);
  j["message"] = r.message;
  const int code = r.bounded == Answer::indeterminate ? kIndeterminate : kDecided;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

Json inclusion_json(const InclusionResult& r) {
  Json j;
  j["included"] = to_string(r.included);
  j["margin"] = number(r.margin);
  j["residual"] = r.residual;
  j["boundary"] = r.boundary;
  j["message"] = r.message;
  return j;
}

int cmd_include(const Args& a) {
  Clock clock;
  auto A = load_tuple(a.pencil, "--pencil");
  auto B = load_tuple(a.target, "--target");
  InclusionOptions o;
  o.feasibility = feasibility(a);
  auto r = inclusion(A, B, o);
  Json j = header("include", a);
  j["result"] = inclusion_json(r);
  const int code = r.included == Answer::indeterminate ? kIndeterminate : kDecided;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

int cmd_polar(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  auto A = load_tuple(a.pencil, "--pencil");
  auto X = load_point(a, f);
  InclusionOptions o;
  o.feasibility = feasibility(a);
  auto r = gamma_polar_membership(f.gamma, A, X, o);
  Json j = header("polar", a);
  j["result"] = inclusion_json(r);
  const int code = r.included == Answer::indeterminate ? kIndeterminate : kDecided;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

int cmd_archimedean(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  if (!f.archimedean_k) throw io::ParseError("archimedean_k", "problem has no Archimedean constant");
  QmOptions qo;
  qo.feasibility = feasibility(a);
  const int cap = a.degree.value_or(2);
  auto c = archimedean_certificate(f.p, *f.archimedean_k, cap, qo);
  Json j = header("archimedean", a);
  j["k"] = *f.archimedean_k;
  int code = kIndeterminate;
  if (c) {
    auto r = verify_certificate(*c);
    j["verification"] = verification_json(r);
    j["multiplier_degree"] = c->beta;
    j["certificate"] = io::to_json(*c, f.g);
    if (r.ok) code = kDecided;
  } else {
    j["message"] = "no certificate with multiplier degree <= " + std::to_string(cap);
  }
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

int cmd_qm(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  if (a.target.empty()) throw CLI::RequiredError("--target");
  const Json t = io::read_json(a.target);
  MatrixPolynomial target;
  try {
    target = io::polynomial_from_json(t, f.g, "");
  } catch (const io::ParseError& e) {
    throw io::ParseError(a.target + (e.where().empty() ? "" : ": " + e.where()), e.message());
  }
  QmOptions qo;
  qo.feasibility = feasibility(a);
  const int alpha = a.degree.value_or((target.degree() + 1) / 2);
  Json j = header("qm", a);
  j["alpha"] = alpha;
  j["beta"] = a.multiplier_degree;
  int code = kDecided;
  try {
    auto c = qm_membership(target, f.p, alpha, a.multiplier_degree, qo);
    j["member"] = c.has_value();
    if (c) {
      auto r = verify_certificate(*c);
      j["verification"] = verification_json(r);
      j["certificate"] = io::to_json(*c, f.g);
      if (!r.ok) code = kIndeterminate;
    }
  } catch (const IndeterminateError& e) {
    j["member"] = nullptr;
    j["message"] = e.what();
    code = kIndeterminate;
  }
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

int cmd_sdpa_export(const Args& a) {
  Clock clock;
  auto f = load_problem(a);
  auto X = load_point(a, f);
  if (a.sdpa_out.empty()) throw CLI::RequiredError("--sdpa-out");
  auto mo = membership_options(a, f);
  LiftProblem lift(f.p, f.gamma, X, a.level, mo.lift);
  Json j = header("sdpa-export", a);
  maybe_export(a, lift, j);
  finish(j, clock, a, kDecided);
  emit(j, a.out);
  return kDecided;
}

int cmd_verify(const Args& a) {
  Clock clock;
  if (a.certificate.empty()) throw CLI::RequiredError("--certificate");
  auto c = io::parse_certificate(a.certificate);
  Json j = header("verify", a);
  j["kind"] = c.kind;
  VerificationReport r;
  if (c.separation) {
    auto f = load_problem(a);
    std::optional<std::vector<CMatrix>> X = c.point;
    if (!a.point.empty()) X = load_point(a, f);
    r = verify_certificate(*c.separation, f.p, X);
  } else {
    r = verify_certificate(*c.qm);
  }
  j["verification"] = verification_json(r);
  const int code = r.ok ? kDecided : kIndeterminate;
  finish(j, clock, a, code);
  emit(j, a.out);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gamma-convex hull membership and certificates"};
  app.require_subcommand(1);
  Args a;

  auto common = [&](CLI::App* s) {
    s->add_option("--problem", a.problem, "problem file (JSON)");
    s->add_option("--point", a.point, "\"(a,b,...)\", an anchor name, or a JSON tuple file");
    s->add_option("--level", a.level, "relaxation level d (hierarchy: highest level)")->check(CLI::NonNegativeNumber);
    s->add_option("--degree", a.degree, "certificate degree");
    s->add_option("--objective", a.objective, "lift objective")->check(CLI::IsMember({"margin", "trace-min"}));
    s->add_option("--out", a.out, "report path (default stdout)");
    s->add_option("--sdpa-out", a.sdpa_out, "write the lift SDP in SDPA format");
    s->add_option("--external-solver", a.external_solver, "command run as CMD input.dat-s output.sol");
    s->add_option("--tol", a.tol, "feasibility margin")->check(CLI::PositiveNumber);
    s->add_option("--jobs", a.jobs, "threads for grid studies")->check(CLI::PositiveNumber);
  };
  std::map<std::string, std::function<int(const Args&)>> commands{
      {"check", cmd_check},           {"hierarchy", cmd_hierarchy}, {"separate", cmd_separate},
      {"gns", cmd_gns},               {"include", cmd_include},     {"bounded", cmd_bounded},
      {"polar", cmd_polar},           {"archimedean", cmd_archimedean}, {"qm", cmd_qm},
      {"sdpa-export", cmd_sdpa_export}, {"verify", cmd_verify}};
  const std::map<std::string, std::string> help{
      {"check", "membership at one level (or a CSV grid with --grid)"},
      {"hierarchy", "levels 0..--level with witness extraction and separation"},
      {"separate", "separating Gamma-pencil with its Positivstellensatz certificate"},
      {"gns", "flat GNS witness at --level"},
      {"include", "spectrahedral inclusion D_A in D_B"},
      {"bounded", "boundedness of D_A"},
      {"polar", "membership of --point in the Gamma-polar of D_A"},
      {"archimedean", "certificate that k^2 - sum x_i^2 is in the quadratic module of p"},
      {"qm", "quadratic module membership of a target polynomial"},
      {"sdpa-export", "write the membership SDP in SDPA format"},
      {"verify", "re-check a certificate file"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    auto* s = app.add_subcommand(name, help.at(name));
    common(s);
    subs[name] = s;
  }
  subs["check"]->add_option("--grid", a.grid, "\"lo,hi,N\": N x N scalar grid, CSV output");
  subs["include"]->add_option("--pencil", a.pencil, "coefficients A_1..A_g (JSON)");
  subs["include"]->add_option("--target", a.target, "coefficients B_1..B_g (JSON)");
  subs["bounded"]->add_option("--pencil", a.pencil, "coefficients A_1..A_g (JSON)");
  subs["polar"]->add_option("--pencil", a.pencil, "coefficients A_1..A_g (JSON)");
  subs["qm"]->add_option("--target", a.target, "target polynomial (JSON)");
  subs["qm"]->add_option("--multiplier-degree", a.multiplier_degree, "degree of the p-weighted part")
      ->check(CLI::NonNegativeNumber);
  subs["verify"]->add_option("--certificate", a.certificate, "certificate file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kDataError;
  }
  try {
    for (const auto& [name, s] : subs)
      if (s->parsed()) return commands.at(name)(a);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kDataError;
}
