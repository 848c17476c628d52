// iffd: solve, benchmark and inspect FD / IFFD preconditioned spline Poisson problems.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "iffd/iffd.hpp"

namespace {

using namespace iffd;

struct Flags {
  std::string config, domain, bc, precond, c0, out, format, dump_matrix, dump_solution;
  int n = 0, p = 0, max_iters = 0;
  double tol = 0;
  std::uint64_t seed = 0;
};

// Registers the shared run flags; values land in `f` and are applied on top of
// the config file only when given.
void add_run_flags(CLI::App* app, Flags& f, std::map<std::string, CLI::Option*>& opts) {
  opts["config"] = app->add_option("--config", f.config, "key = value configuration file");
  opts["domain"] = app->add_option("--domain", f.domain, "square, cube, annulus2d, annulus3d");
  opts["n"] = app->add_option("--n", f.n, "elements per direction");
  opts["p"] = app->add_option("--p", f.p, "spline degree");
  opts["bc"] = app->add_option("--bc", f.bc, "per direction dd|dn|nd|nn, comma separated");
  opts["precond"] = app->add_option("--precond", f.precond, "none, fd or iffd");
  opts["tol"] = app->add_option("--tol", f.tol, "relative residual tolerance");
  opts["max-iters"] = app->add_option("--max-iters", f.max_iters, "PCG iteration cap");
  opts["seed"] = app->add_option("--seed", f.seed, "right-hand side seed");
  opts["c0-knots"] = app->add_option("--c0-knots", f.c0, "repeated knots dir:k[:mult], mult defaults to p");
  opts["out"] = app->add_option("--out", f.out, "output file (default stdout)");
  opts["format"] = app->add_option("--format", f.format, "csv or md")->check(CLI::IsMember({"csv", "md"}));
}

RunConfig build_config(const Flags& f, const std::map<std::string, CLI::Option*>& opts) {
  RunConfig c;
  if (opts.at("config")->count()) {
    std::ifstream in(f.config);
    if (!in) throw InvalidArgument("cannot read config file '" + f.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      c = parse_config(ss.str());
    } catch (const Error& e) {
      throw InvalidArgument(f.config + ": " + e.what());
    }
  }
  auto given = [&](const char* k) { return opts.at(k)->count() > 0; };
  if (given("domain")) set_config_value(c, "domain", f.domain);
  if (given("n")) c.n = f.n;
  if (given("p")) c.p = f.p;
  if (given("bc")) c.bc = parse_bc(f.bc);
  if (given("precond")) c.precond = parse_variant(f.precond);
  if (given("tol")) c.tol = f.tol;
  if (given("max-iters")) c.max_iters = f.max_iters;
  if (given("seed")) c.seed = f.seed;
  if (given("c0-knots")) c.c0_knots = parse_knots(f.c0);
  if (given("out")) c.out = f.out;
  if (given("format")) c.format = f.format;
  return c;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write '" + path + "'");
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FD / IFFD preconditioned PCG for spline Poisson problems"};
  app.require_subcommand(1);

  Flags solve_flags;
  std::map<std::string, CLI::Option*> solve_opts;
  CLI::App* solve = app.add_subcommand("solve", "one preconditioned solve with a random right-hand side");
  add_run_flags(solve, solve_flags, solve_opts);
  solve->add_option("--dump-matrix", solve_flags.dump_matrix, "write the assembled stiffness matrix (Matrix Market)");
  solve->add_option("--dump-solution", solve_flags.dump_solution, "write the solution vector, one value per line");

  std::string table, bench_format = "csv", bench_out;
  std::uint64_t bench_seed = 1;
  CLI::App* bench = app.add_subcommand("bench", "iteration-count tables");
  bench->add_option("table", table, "square, cube, annulus3d or c0square")->required()->check(CLI::IsMember(bench_tables()));
  bench->add_option("--format", bench_format, "csv or md")->check(CLI::IsMember({"csv", "md"}));
  bench->add_option("--out", bench_out, "output file (default stdout)");
  bench->add_option("--seed", bench_seed, "right-hand side seed");

  int sn = 16, sp = 3;
  std::string sbc = "dd", sout;
  bool verify = false;
  CLI::App* spectrum = app.add_subcommand("spectrum", "closed-form regular spectrum of one direction as CSV");
  spectrum->add_option("--n", sn, "elements");
  spectrum->add_option("--p", sp, "spline degree");
  spectrum->add_option("--bc", sbc, "dd, dn, nd or nn");
  spectrum->add_option("--out", sout, "output file (default stdout)");
  spectrum->add_flag("--verify", verify, "compare with dense oracles; exit 1 above 1e-8");

  bool corrupt = false;
  CLI::App* selftest = app.add_subcommand("selftest", "transform and orthogonality checks");
  selftest->add_flag("--corrupt-transform", corrupt, "test hook: use the wrong transform kind")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      const RunConfig c = build_config(solve_flags, solve_opts);
      if (!solve_flags.dump_matrix.empty()) {
        std::ofstream os(solve_flags.dump_matrix);
        if (!os) throw InvalidArgument("cannot write '" + solve_flags.dump_matrix + "'");
        write_matrix_market(os, assemble_stiffness(builtin_geometry(c.domain), tensor_space(c)));
      }
      const SolveOutcome r = run_solve(c);
      if (!solve_flags.dump_solution.empty()) {
        std::ofstream os(solve_flags.dump_solution);
        os.precision(17);
        for (double x : r.solution) os << x << '\n';
      }
      emit(c.out, c.format == "md" ? render_markdown(r.row.domain, {r.row}) : render_csv({r.row}));
      return r.row.converged ? 0 : 1;
    }
    if (*bench) {
      std::vector<BenchRow> rows;
      bool ok = true;
      for (const RunConfig& c : bench_grid(table, bench_seed)) {
        rows.push_back(run_solve(c).row);
        ok = ok && rows.back().converged;
        std::cerr << csv_line(rows.back()) << '\n';
      }
      emit(bench_out, bench_format == "md" ? render_markdown(table, rows) : render_csv(rows));
      return ok ? 0 : 1;
    }
    if (*spectrum) {
      const SpectrumReport rep = run_spectrum(sn, sp, DirichletSet::from_token(sbc), verify);
      emit(sout, render_spectrum_csv(rep));
      if (verify) {
        const bool ok = rep.max_dtilde_error <= 1e-8 && rep.max_lambda_error <= 1e-8;
        std::cerr << (ok ? "verify ok" : "verify FAILED") << ": d_tilde rel err " << rep.max_dtilde_error
                  << ", lambda rel err " << rep.max_lambda_error << '\n';
        return ok ? 0 : 1;
      }
      return 0;
    }
    if (*selftest) {
      bool ok = true;
      for (const CheckResult& r : run_selftest({corrupt})) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
