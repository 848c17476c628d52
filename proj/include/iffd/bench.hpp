#pragma once

// Run configuration, single solves, benchmark tables and self-checks behind the
// command-line tool.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "iffd/errors.hpp"
#include "iffd/galerkin.hpp"
#include "iffd/geometry.hpp"
#include "iffd/solver.hpp"
#include "iffd/spectral.hpp"
#include "iffd/transforms.hpp"

namespace iffd {

/// A repeated interior knot: breakpoint k/n in one direction, multiplicity
/// 0 meaning p (a C^0 knot).
struct RepeatedKnot {
  int direction = 0;
  int breakpoint = 1;
  int multiplicity = 0;
  friend bool operator==(const RepeatedKnot&, const RepeatedKnot&) = default;
};

struct RunConfig {
  std::string domain = "square";
  int n = 16;
  int p = 3;
  std::vector<DirichletSet> bc;  // empty: domain default
  Variant precond = Variant::iffd;
  double tol = 1e-8;
  int max_iters = 1000;
  std::uint64_t seed = 1;
  std::vector<RepeatedKnot> c0_knots;
  std::string out;
  std::string format = "csv";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline int domain_dim(const std::string& domain) { return builtin_geometry(domain).dim(); }

/// Canonical geometry name for any accepted alias.
inline std::string canonical_domain(const std::string& domain) { return builtin_geometry(domain).name(); }

inline std::vector<DirichletSet> default_bc(const std::string& domain) {
  const std::string c = canonical_domain(domain);
  if (c == "thick_quarter_annulus_3d") return {DirichletSet::none(), DirichletSet::none(), {true, false}};
  return std::vector<DirichletSet>(domain_dim(c), DirichletSet::both());
}

inline std::vector<DirichletSet> parse_bc(const std::string& spec) {
  std::vector<DirichletSet> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(DirichletSet::from_token(tok));
  if (out.empty()) throw InvalidArgument("empty boundary specification");
  return out;
}

inline std::string render_bc(const std::vector<DirichletSet>& bc) {
  std::string s;
  for (std::size_t i = 0; i < bc.size(); ++i) s += (i ? "," : "") + bc[i].token();
  return s;
}

/// "dir:k[:mult]" entries, comma separated.
inline std::vector<RepeatedKnot> parse_knots(const std::string& spec) {
  std::vector<RepeatedKnot> out;
  if (spec.empty()) return out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    RepeatedKnot k;
    char c1 = 0, c2 = 0;
    std::istringstream ts(tok);
    if (!(ts >> k.direction >> c1 >> k.breakpoint) || c1 != ':')
      throw InvalidArgument("repeated knot must be dir:k or dir:k:mult, got '" + tok + "'");
    if (ts >> c2) {
      if (c2 != ':' || !(ts >> k.multiplicity)) throw InvalidArgument("repeated knot must be dir:k or dir:k:mult, got '" + tok + "'");
    }
    std::string rest;
    if (ts >> rest) throw InvalidArgument("trailing characters in repeated knot '" + tok + "'");
    out.push_back(k);
  }
  return out;
}

inline std::string render_knots(const std::vector<RepeatedKnot>& ks) {
  std::string s;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    s += (i ? "," : "") + std::to_string(ks[i].direction) + ":" + std::to_string(ks[i].breakpoint);
    if (ks[i].multiplicity) s += ":" + std::to_string(ks[i].multiplicity);
  }
  return s;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T x{};
  std::string rest;
  if (!(is >> x) || (is >> rest)) throw InvalidArgument("invalid value '" + v + "' for " + key);
  return x;
}

}  // namespace detail

/// Sets one configuration key (flag name without dashes).
inline void set_config_value(RunConfig& c, std::string key, const std::string& value) {
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "domain") c.domain = canonical_domain(value);
  else if (key == "n") c.n = detail::parse_number<int>(key, value);
  else if (key == "p") c.p = detail::parse_number<int>(key, value);
  else if (key == "bc") c.bc = parse_bc(value);
  else if (key == "precond") c.precond = parse_variant(value);
  else if (key == "tol") c.tol = detail::parse_number<double>(key, value);
  else if (key == "max-iters") c.max_iters = detail::parse_number<int>(key, value);
  else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(key, value);
  else if (key == "c0-knots") c.c0_knots = parse_knots(value);
  else if (key == "out") c.out = value;
  else if (key == "format") {
    if (value != "csv" && value != "md") throw InvalidArgument("format must be csv or md, got '" + value + "'");
    c.format = value;
  } else throw InvalidArgument("unknown key '" + key + "'");
}

/// key = value lines, '#' comments. Errors name the offending line.
inline RunConfig parse_config(const std::string& text, RunConfig c = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("line " + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

inline std::string render_config(const RunConfig& c) {
  std::ostringstream os;
  char tol[64];
  std::snprintf(tol, sizeof tol, "%.17g", c.tol);
  os << "domain = " << c.domain << '\n'
     << "n = " << c.n << '\n'
     << "p = " << c.p << '\n';
  if (!c.bc.empty()) os << "bc = " << render_bc(c.bc) << '\n';
  os << "precond = " << to_string(c.precond) << '\n'
     << "tol = " << tol << '\n'
     << "max-iters = " << c.max_iters << '\n'
     << "seed = " << c.seed << '\n';
  if (!c.c0_knots.empty()) os << "c0-knots = " << render_knots(c.c0_knots) << '\n';
  if (!c.out.empty()) os << "out = " << c.out << '\n';
  os << "format = " << c.format << '\n';
  return os.str();
}

/// Tensor space described by a configuration; validates it.
inline TensorSpace tensor_space(const RunConfig& c) {
  const int d = domain_dim(c.domain);
  const std::vector<DirichletSet> bc = c.bc.empty() ? default_bc(c.domain) : c.bc;
  if (static_cast<int>(bc.size()) != d)
    throw InvalidArgument("--bc needs " + std::to_string(d) + " comma-separated tokens for domain " + c.domain);
  if (c.n < 1) throw InvalidArgument("--n must be positive");
  if (c.p < 1 || c.p > kMaxDegree) throw InvalidArgument("--p must be in 1.." + std::to_string(kMaxDegree));
  std::vector<std::vector<KnotMultiplicity>> mults(d);
  for (const auto& k : c.c0_knots) {
    if (k.direction < 0 || k.direction >= d) throw InvalidArgument("repeated knot direction out of range");
    mults[k.direction].push_back({k.breakpoint, k.multiplicity ? k.multiplicity : c.p});
  }
  TensorSpace ts;
  for (int k = 0; k < d; ++k) ts.spaces.emplace_back(c.p, c.n, mults[k]);
  ts.bc = bc;
  return ts;
}

struct BenchRow {
  std::string domain;
  int dim = 0;
  int n = 0;
  int p = 0;
  std::string precond;
  int iters = 0;
  double relres = 0.0;
  double setup_ms = 0.0;
  double solve_ms = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
};

inline constexpr const char* kCsvHeader = "domain,dim,n,p,precond,iters,relres,setup_ms,solve_ms,seed";

inline std::string csv_line(const BenchRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%s,%d,%.3e,%.1f,%.1f,%llu", r.domain.c_str(), r.dim, r.n, r.p,
                r.precond.c_str(), r.iters, r.relres, r.setup_ms, r.solve_ms, static_cast<unsigned long long>(r.seed));
  return buf;
}

inline std::string render_csv(const std::vector<BenchRow>& rows) {
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) s += csv_line(r) + "\n";
  return s;
}

struct SolveOutcome {
  BenchRow row;
  std::vector<double> solution;
};

/// Assembly, preconditioner setup and PCG with a seeded random right-hand side.
inline SolveOutcome run_solve(const RunConfig& c) {
  const GeometryMap geom = builtin_geometry(c.domain);
  const TensorSpace ts = tensor_space(c);
  const auto a = stiffness_operator(geom, ts);
  const auto t0 = std::chrono::steady_clock::now();
  const TensorPreconditioner pre = make_preconditioner(c.precond, ts);
  const double setup_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const std::vector<double> b = random_vector(a->size(), c.seed);
  PcgResult res = pcg(*a, b, c.precond == Variant::none ? nullptr : &pre, c.tol, c.max_iters);
  SolveOutcome out;
  out.row = {geom.name(), geom.dim(), c.n, c.p, to_string(c.precond), res.report.iterations, res.report.final_relres,
             setup_ms, res.report.solve_ms, c.seed, res.report.converged};
  out.solution = std::move(res.solution);
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark tables

inline const std::vector<std::string>& bench_tables() {
  static const std::vector<std::string> t{"square", "cube", "annulus3d", "c0square"};
  return t;
}

/// Configurations of one table, ordered by (n, p, variant).
inline std::vector<RunConfig> bench_grid(const std::string& table, std::uint64_t seed = 1) {
  std::vector<RunConfig> out;
  auto add = [&](const std::string& dom, std::vector<int> ns, int pmin, int pmax, const std::string& bc,
                 std::vector<Variant> vs, bool c0) {
    for (int n : ns)
      for (int p = pmin; p <= pmax; ++p)
        for (Variant v : vs) {
          RunConfig c;
          c.domain = canonical_domain(dom);
          c.n = n;
          c.p = p;
          c.bc = parse_bc(bc);
          c.precond = v;
          c.seed = seed;
          if (c0) c.c0_knots = {{0, n / 2, 0}};
          out.push_back(c);
        }
  };
  if (table == "square") add("square", {64, 128, 256}, 2, 7, "dd,dd", {Variant::iffd}, false);
  else if (table == "cube") add("cube", {16, 32}, 2, 5, "dn,nd,nn", {Variant::iffd}, false);
  else if (table == "annulus3d") add("annulus3d", {16, 32}, 2, 5, "nn,nn,dn", {Variant::fd, Variant::iffd}, false);
  else if (table == "c0square") add("square", {64, 128}, 2, 5, "dd,dd", {Variant::fd, Variant::iffd}, true);
  else throw InvalidArgument("unknown table '" + table + "' (expected square, cube, annulus3d or c0square)");
  return out;
}

/// Markdown table with n down and p across; cells with several variants
/// show them as "fd / iffd".
inline std::string render_markdown(const std::string& title, const std::vector<BenchRow>& rows) {
  std::vector<int> ns, ps;
  std::vector<std::string> vs;
  for (const auto& r : rows) {
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
    if (std::find(ps.begin(), ps.end(), r.p) == ps.end()) ps.push_back(r.p);
    if (std::find(vs.begin(), vs.end(), r.precond) == vs.end()) vs.push_back(r.precond);
  }
  std::ostringstream os;
  os << "**" << title << "** (PCG iterations";
  if (vs.size() > 1) {
    os << ", ";
    for (std::size_t i = 0; i < vs.size(); ++i) os << (i ? " / " : "") << vs[i];
  }
  os << ")\n\n| n |";
  for (int p : ps) os << " p=" << p << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < ps.size(); ++i) os << "---|";
  os << '\n';
  for (int n : ns) {
    os << "| " << n << " |";
    for (int p : ps) {
      os << ' ';
      bool first = true;
      for (const auto& v : vs)
        for (const auto& r : rows)
          if (r.n == n && r.p == p && r.precond == v) {
            os << (first ? "" : " / ") << r.iters << (r.converged ? "" : "*");
            first = false;
          }
      os << " |";
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Spectrum dump

struct SpectrumRow {
  int j;
  double alpha, d_tilde, lambda;
};

struct SpectrumReport {
  std::vector<SpectrumRow> rows;
  double max_dtilde_error = 0.0;  // relative, only with verification
  double max_lambda_error = 0.0;
};

inline SpectrumReport run_spectrum(int n, int p, DirichletSet d, bool verify) {
  const SplineSpace space(p, n);
  const BandedMatrix m = univariate_mass(space, d);
  const BandedMatrix k = univariate_stiffness(space, d);
  const UnivariateSpectral s(space, d, m, k);
  SpectrumReport rep;
  for (int j = 0; j < s.splitting().n_reg; ++j)
    rep.rows.push_back({j + 1, s.nodes().frequencies[j], s.d_tilde()[j], s.lambda_reg()[j]});
  if (verify) {
    const std::vector<double> dd = dense_dtilde(s, m);
    const DenseMatrix kr = dense_regular_block(s, k);
    double lscale = 0.0;
    for (int j = 0; j < kr.rows(); ++j) lscale = std::max(lscale, std::abs(kr(j, j)));
    for (int j = 0; j < kr.rows(); ++j) {
      rep.max_dtilde_error = std::max(rep.max_dtilde_error, std::abs(dd[j] - s.d_tilde()[j]) / dd[j]);
      const double ref = std::max(std::abs(kr(j, j)), 1e-12 * lscale);
      rep.max_lambda_error = std::max(rep.max_lambda_error, std::abs(kr(j, j) - s.lambda_reg()[j]) / ref);
    }
  }
  return rep;
}

inline std::string render_spectrum_csv(const SpectrumReport& r) {
  std::string s = "j,alpha,d_tilde,lambda\n";
  char buf[160];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", row.j, row.alpha, row.d_tilde, row.lambda);
    s += buf;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Self-test

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

struct SelftestOptions {
  /// Test hook: run the fast transform of the wrong kind against each reference.
  bool corrupt_transform = false;
};

inline double transform_fast_vs_reference(TransformKind fast, TransformKind ref, int n, std::uint64_t seed) {
  const TransformPlan plan(fast, n);
  const DenseMatrix u = reference_matrix(ref, n);
  double worst = 0.0;
  std::vector<double> y(n), z(n);
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<double> x = random_vector(n, seed + rep);
    for (int adj = 0; adj < 2; ++adj) {
      if (adj) {
        plan.apply_adjoint(x, y);
        multiply_transpose(u, x, z);
      } else {
        plan.apply(x, y);
        multiply(u, x, z);
      }
      double e = 0.0, s = 0.0;
      for (int i = 0; i < n; ++i) {
        e += (y[i] - z[i]) * (y[i] - z[i]);
        s += z[i] * z[i];
      }
      worst = std::max(worst, std::sqrt(e / s));
    }
  }
  return worst;
}

inline std::vector<CheckResult> run_selftest(SelftestOptions opt = {}) {
  std::vector<CheckResult> out;
  {
    double worst = 0.0;
    std::string where;
    for (TransformKind k : kAllTransformKinds)
      for (int n : {3, 4, 5, 6, 7, 8, 9, 255, 256, 257, 1000}) {
        TransformKind fast = k;
        if (opt.corrupt_transform) fast = kAllTransformKinds[(static_cast<int>(k) + 1) % 8];
        const double e = transform_fast_vs_reference(fast, k, n, 17);
        if (e > worst) {
          worst = e;
          where = to_string(k) + " n=" + std::to_string(n);
        }
      }
    out.push_back({"transform-fast-vs-reference", worst <= 1e-12, "max rel error " + std::to_string(worst) + " at " + where});
  }
  {
    double worst = 0.0;
    std::string where;
    for (int p = 1; p <= 6; ++p)
      for (int n : {8, 16})
        for (DirichletSet d : kAllDirichletSets) {
          const SplineSpace space(p, n);
          const BandedMatrix m = univariate_mass(space, d);
          const UnivariateSpectral s(space, d, m, univariate_stiffness(space, d));
          const DenseMatrix q = s.dense_q();
          const DenseMatrix e = q.transposed() * m.to_dense() * q - DenseMatrix::identity(q.rows());
          if (e.max_abs() > worst) {
            worst = e.max_abs();
            where = "p=" + std::to_string(p) + " n=" + std::to_string(n) + " D=" + d.token();
          }
        }
    out.push_back({"mass-orthogonality", worst <= 1e-10, "max |Q^T M Q - I| " + std::to_string(worst) + " at " + where});
  }
  return out;
}

}  // namespace iffd
