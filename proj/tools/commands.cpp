#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "minaffine/error.hpp"
#include "minaffine/multimarginal.hpp"
#include "minaffine/oracle.hpp"
#include "minaffine/parallel.hpp"
#include "minaffine/partition.hpp"
#include "minaffine/two_piece.hpp"
#include "problem.hpp"

namespace minaffine::cli {

using nlohmann::json;

namespace {

struct Flags {
  std::string path;
  std::string out;
  // unset flags fall back to the problem file, then to defaults
  std::optional<int> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_order;
  std::optional<int> workers;
  std::optional<int> atoms;
};

std::vector<int> one_based(const std::vector<int>& v) {
  std::vector<int> out;
  for (int x : v) out.push_back(x + 1);
  return out;
}

SolveOptions solve_options(const ProblemFile& p, const Flags& f) {
  SolveOptions o;
  o.max_order = f.max_order.value_or(p.options.max_order);
  o.restarts = f.restarts.value_or(p.options.restarts);
  o.seed = f.seed.value_or(p.options.seed);
  o.tolerance = p.options.tolerance;
  o.workers = f.workers.value_or(default_workers());
  return o;
}

void require_two(const std::vector<Measure1D>& ms) {
  if (ms.size() != 2) throw InputError("this command needs exactly two marginals");
}

void emit(const json& report, const Flags& f, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (!f.out.empty()) {
    std::ofstream file(f.out, std::ios::binary);
    if (!file) throw InputError("cannot write report to " + f.out);
    file << text;
  }
  out << text;
}

json pairwise_json(const PairwiseReport& r) {
  json issues = json::array();
  for (const auto& i : r.issues) issues.push_back(i.describe());
  return {{"passed", r.passed}, {"issues", issues}};
}

int cmd_validate(const Flags& f, std::ostream& out, std::ostream& err) {
  const ProblemFile p = load_problem(f.path);
  const auto ms = p.build_marginals();
  json report{{"command", "validate"}};
  bool valid = true;

  if (p.cost.kind != CostKind::MultiPieces && ms.size() == 2) {
    const MinAffineCost cost = p.two_marginal_cost();
    const CostValidation v = validate_cost(cost, working_box(ms[0], ms[1]));
    report["pairwise"] = pairwise_json(v.pairwise);
    report["essential_pieces"] = one_based(v.essential);
    report["dropped_pieces"] = one_based(v.dropped);
    valid = v.valid();
    for (const auto& i : v.pairwise.issues) err << "degenerate: " << i.describe() << "\n";
    for (int d : v.dropped) err << "warning: piece " << d + 1 << " is inessential and will be dropped\n";
  }
  if (p.cost.kind != CostKind::Pieces) {
    const auto pieces = p.cost.kind == CostKind::MinCoordinates
                            ? min_coordinate_pieces(static_cast<int>(ms.size()))
                            : p.cost.multi;
    if (pieces.size() < 2) {
      report["nondegeneracy"] = {{"passed", false}, {"reason", "needs at least two marginals"}};
      valid = false;
    } else {
      const NondegeneracyReport nd = validate_mm_nondegeneracy(pieces);
      report["nondegeneracy"] = {{"passed", nd.passed}, {"direction", nd.direction},
                                 {"reason", nd.reason}};
      if (!nd.passed) {
        valid = false;
        err << "degenerate: " << nd.reason << "\n";
      }
    }
  } else if (ms.size() != 2) {
    throw InputError("piece costs [a, b, c0] need exactly two marginals");
  }
  report["valid"] = valid;
  emit(report, f, out);
  return valid ? kOk : kDegenerate;
}

json partition_json(const SolveReport& r, const Measure1D& mu, const Measure1D& nu) {
  const Partition& P = r.partition;
  json cells = json::array();
  for (int i = 0; i < P.order(); ++i) {
    const auto xi = P.x_interval(i, mu);
    const auto yi = P.y_interval(i, nu);
    cells.push_back({{"cell", i + 1},
                     {"piece", r.active[i] + 1},
                     {"mass", P.mass(i)},
                     {"x_interval", {xi[0], xi[1]}},
                     {"y_interval", {yi[0], yi[1]}}});
  }
  return {{"order", P.order()},
          {"x_breakpoints", P.x_breakpoints(mu)},
          {"y_breakpoints", P.y_breakpoints(nu)},
          {"y_order", one_based(P.y_order())},
          {"cells", cells}};
}

int cmd_solve(const Flags& f, std::ostream& out) {
  const ProblemFile p = load_problem(f.path);
  const auto ms = p.build_marginals();
  require_two(ms);
  const MinAffineCost cost = p.two_marginal_cost();
  const SolveOptions opt = solve_options(p, f);
  const SolveReport r = optimize(ms[0], ms[1], cost, opt);

  json table = json::array();
  for (const auto& s : r.table)
    table.push_back({{"order", s.order}, {"y_order", one_based(s.y_order)}, {"value", s.value}});
  json report{
      {"command", "solve"},
      {"value", r.value},
      {"partition", partition_json(r, ms[0], ms[1])},
      {"plan_cost", plan_cost(r.plan, cost, ms[0], ms[1])},
      {"essential_pieces", one_based(r.essential)},
      {"dropped_pieces", one_based(r.dropped)},
      {"verification",
       {{"partition", {{"passed", r.verification.passed},
                       {"worst_margin", r.verification.worst_margin}}},
        {"cyclic_monotonicity", {{"passed", r.cyclic.passed},
                                 {"depth", r.cyclic.depth},
                                 {"worst_violation", r.cyclic.worst_violation},
                                 {"tested", r.cyclic.tested}}},
        {"marginal_error", r.marginal_error}}},
      {"diagnostics", {{"seed", opt.seed},
                       {"restarts", r.restarts},
                       {"evaluations", r.evaluations},
                       {"rejected_candidates", r.rejected_candidates},
                       {"subproblems", table}}}};
  if (r.essential.size() == 2) {
    const TwoPieceSolution tp =
        solve_two_piece(ms[0], ms[1], cost[r.essential[0]], cost[r.essential[1]]);
    report["two_piece"] = {{"split_point", tp.split},
                           {"anchor", {tp.anchor[0], tp.anchor[1]}},
                           {"value", tp.value},
                           {"orientation", tp.region.is_anti_monotone() ? "anti-monotone"
                                                                        : "comonotone"}};
  }
  emit(report, f, out);
  return kOk;
}

int cmd_compare(const Flags& f, std::ostream& out) {
  const ProblemFile p = load_problem(f.path);
  const int atoms = f.atoms.value_or(p.options.atoms);
  if (atoms < 1) throw InputError("--atoms must be positive");
  const auto ms = p.build_marginals();
  require_two(ms);
  const MinAffineCost cost = p.two_marginal_cost();
  const SolveOptions opt = solve_options(p, f);
  const SolveReport r = optimize(ms[0], ms[1], cost, opt);
  const DiscreteProblem dp = DiscreteProblem::two_marginal(
      discretize(ms[0], atoms), discretize(ms[1], atoms), cost, opt.workers);
  const OracleResult o = solve_discrete_ot(dp);
  const double width = std::max(ms[0].support_width(), ms[1].support_width());
  const double tol = 4.0 * width / atoms;
  const double gap = r.value - o.value;
  const bool ok = std::abs(gap) <= tol;
  json report{{"command", "compare"},
              {"solver_value", r.value},
              {"oracle_value", o.value},
              {"gap", gap},
              {"tolerance", tol},
              {"atoms", atoms},
              {"oracle_iterations", o.iterations},
              {"passed", ok}};
  emit(report, f, out);
  return ok ? kOk : kGapTooLarge;
}

int cmd_mm_solve(const Flags& f, std::ostream& out) {
  const ProblemFile p = load_problem(f.path);
  if (p.cost.kind != CostKind::MinCoordinates)
    throw DegenerateError("mm-solve needs the min-coordinates cost");
  MultiMarginalProblem mp{p.build_marginals()};
  if (mp.marginals.size() < 2)
    throw DegenerateError("mm-solve needs at least two marginals");
  const MultiMarginalSolution sol = solve_min_coordinates(mp);
  const auto samples = sample_plan(sol.plan, mp.refs(), 1000);
  std::vector<std::vector<double>> pts;
  for (const auto& s : samples) pts.push_back(s.x);
  const SupportConditionReport sc = verify_support_conditions(pts, sol.threshold);
  json report{{"command", "mm-solve"},
              {"marginals", mp.marginals.size()},
              {"threshold", sol.threshold},
              {"low_mass", sol.low_mass},
              {"value", sol.value},
              {"verification",
               {{"support_conditions", {{"passed", sc.passed},
                                        {"checked", sc.checked},
                                        {"low_violations", sc.low_violators.size()},
                                        {"high_violations", sc.high_violators.size()}}},
                {"marginal_error", marginal_reconstruction_error(sol.plan, mp.refs())}}}};
  emit(report, f, out);
  return kOk;
}

int cmd_plot_data(const Flags& f, std::ostream& out) {
  if (f.out.empty()) throw InputError("--out needs a directory");
  const ProblemFile p = load_problem(f.path);
  const auto ms = p.build_marginals();
  require_two(ms);
  const MinAffineCost cost = p.two_marginal_cost();
  const SolveReport r = optimize(ms[0], ms[1], cost, solve_options(p, f));

  const std::filesystem::path dir = f.out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string());
  auto open = [&](const char* name) {
    std::ofstream file(dir / name);
    if (!file) throw InputError("cannot write " + (dir / name).string());
    file << std::setprecision(17);
    return file;
  };

  const Box box = working_box(ms[0], ms[1]);
  constexpr int kGrid = 101;
  {
    auto file = open("regions.csv");
    file << "x,y,piece\n";
    for (int a = 0; a < kGrid; ++a) {
      for (int b = 0; b < kGrid; ++b) {
        const double x = box.x_lo + (box.x_hi - box.x_lo) * a / (kGrid - 1);
        const double y = box.y_lo + (box.y_hi - box.y_lo) * b / (kGrid - 1);
        file << x << ',' << y << ',' << cost.evaluate(x, y).argmin + 1 << '\n';
      }
    }
  }
  {
    auto file = open("partition.csv");
    file << "cell,piece,mass,x_lo,x_hi,y_lo,y_hi\n";
    for (int i = 0; i < r.partition.order(); ++i) {
      const auto xi = r.partition.x_interval(i, ms[0]);
      const auto yi = r.partition.y_interval(i, ms[1]);
      file << i + 1 << ',' << r.active[i] + 1 << ',' << r.partition.mass(i) << ','
           << xi[0] << ',' << xi[1] << ',' << yi[0] << ',' << yi[1] << '\n';
    }
  }
  {
    auto file = open("support.csv");
    file << "x,y,weight,cell\n";
    for (const auto& s : sample_plan(r.plan, {std::cref(ms[0]), std::cref(ms[1])}, 1000))
      file << s.x[0] << ',' << s.x[1] << ',' << s.weight << ',' << s.cell + 1 << '\n';
  }
  out << json{{"command", "plot-data"},
              {"directory", dir.string()},
              {"files", {"regions.csv", "partition.csv", "support.csv"}}}
                 .dump(2)
      << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transport solver for costs that are minima of affine functions", "minaffine"};
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "check the non-degeneracy assumptions");
  auto* solve = app.add_subcommand("solve", "solve a two-marginal problem by partition search");
  auto* compare = app.add_subcommand("compare", "compare the solver against the discrete oracle");
  auto* mm = app.add_subcommand("mm-solve", "solve the multi-marginal min-coordinates problem");
  auto* plot = app.add_subcommand("plot-data", "write CSV data for plotting");

  for (auto* sub : {validate, solve, compare, mm, plot}) {
    sub->add_option("problem", f.path, "problem file (JSON)")->required();
  }
  for (auto* sub : {solve, compare, plot}) {
    sub->add_option("--restarts", f.restarts, "random starts per subproblem")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--max-order", f.max_order, "largest partition order searched")
        ->check(CLI::PositiveNumber);
    sub->add_option("--workers", f.workers,
                    "parallel workers (default: $MINAFFINE_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
  }
  for (auto* sub : {validate, solve, compare, mm})
    sub->add_option("--out", f.out, "also write the JSON report to this file");
  plot->add_option("--out", f.out, "output directory")->required();
  compare->add_option("--atoms", f.atoms, "atoms per marginal for the oracle")
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(f, out, err);
    if (*solve) return cmd_solve(f, out);
    if (*compare) return cmd_compare(f, out);
    if (*mm) return cmd_mm_solve(f, out);
    if (*plot) return cmd_plot_data(f, out);
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace minaffine::cli
