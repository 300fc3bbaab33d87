#pragma once

// The rtensor command-line front end. Kept in a header so the tests can drive
// run() in-process.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rtensor/rtensor.hpp"

namespace rtensor::cli {

using json = nlohmann::json;
using cplx = std::complex<double>;

inline constexpr const char* kOutputDirEnv = "RTENSOR_OUTPUT_DIR";

// ------------------------------------------------------------------ columns

struct Column {
  std::string name;
  std::string doc;
};

struct TableSchema {
  std::string description;
  std::vector<Column> columns;
};

/// Every table the tool can emit, keyed by "subcommand" or "subcommand/mode".
inline const std::map<std::string, TableSchema>& schemas() {
  static const std::map<std::string, TableSchema> s = {
      {"density",
       {"generalized Wigner density on a grid of cell centres spanning the support",
        {{"y", "eigenvalue coordinate"}, {"rho", "density rho(y) = |y| P_p(y^2)"}}}},
      {"moments",
       {"moments of P_p against the Fuss-Catalan numbers",
        {{"n", "moment order"},
         {"moment", "numerical moment of P_p"},
         {"fuss_catalan", "F_p(n) = binom(pn, n)/((p-1)n + 1)"},
         {"abs_error", "|moment - fuss_catalan|"}}}},
      {"resolvent",
       {"expected resolvent against the Stieltjes transform of the density",
        {{"p", "tensor order"},
         {"w_re", "Re w"},
         {"w_im", "Im w"},
         {"omega_re", "Re of w^{-1} T_p(w^{-2})"},
         {"omega_im", "Im of w^{-1} T_p(w^{-2})"},
         {"stieltjes_re", "Re of the integral of rho(y)/(w - y)"},
         {"stieltjes_im", "Im of the integral of rho(y)/(w - y)"},
         {"abs_diff", "|omega - stieltjes|"}}}},
      {"maps",
       {"rooted p-valent combinatorial maps with n vertices, one per class",
        {{"index", "class index in enumeration order"},
         {"graph", "underlying multigraph as space-separated vertex pairs a-b"},
         {"successor", "space-separated successor permutation on half-edges"},
         {"pairing", "space-separated pairing involution on half-edges"},
         {"root", "root half-edge"}}}},
      {"invariants",
       {"Monte Carlo estimate of E[I_n(T)]/N against the exact Wick polynomial",
        {{"p", "tensor order"},
         {"N", "dimension"},
         {"n", "number of vertices"},
         {"samples", "number of ensemble draws"},
         {"mean", "sample mean of I_n(T)/N"},
         {"std_error", "standard error of the mean"},
         {"exact", "exact E[I_n(T)]/N"},
         {"z_score", "(mean - exact)/std_error"}}}},
      {"invariants/tensor",
       {"balanced invariant I_n(T) of a tensor read from file",
        {{"p", "tensor order"}, {"N", "dimension"}, {"n", "number of vertices"}, {"value", "I_n(T)"}}}},
      {"eigen",
       {"real normalized eigenpairs found by multi-start Newton",
        {{"index", "pair index, sorted by lambda"},
         {"lambda", "eigenvalue"},
         {"residual", "|T x^{p-1} - lambda x|"},
         {"near_degenerate", "1 if the bordered Jacobian is nearly singular"},
         {"x", "space-separated eigenvector components"}}}},
      {"spike",
       {"singular locus of the spiked resolvent over a sweep of b",
        {{"p", "tensor order"},
         {"b", "signal-to-noise ratio"},
         {"y_c", "largest non-removable singularity"},
         {"theta_c", "angle of the saddle producing y_c (theta_0 = pi/2 below threshold)"},
         {"rho_c_sq", "rho^2 of that saddle"},
         {"dominant_saddle", "0 if theta_0 dominates at y_c, 1 for theta_c"},
         {"f0", "Re f at the theta_0 saddle"},
         {"f1", "Re f at the theta_c saddle (equal to f0 below threshold)"}}}},
      {"spike/threshold",
       {"detection threshold, analytic and by bisection",
        {{"p", "tensor order"},
         {"b_t", "analytic threshold sqrt((p-1)^p/(p-2)^{p-2})"},
         {"b_t_bisection", "threshold found by bisection"},
         {"y_c_below", "singular locus below threshold"},
         {"y_c_at", "singular locus at threshold"}}}},
      {"annealed",
       {"annealed resolvent at finite N against its large-N limit",
        {{"p", "tensor order"},
         {"N", "dimension"},
         {"mode", "quadrature or saddle"},
         {"w_re", "Re w"},
         {"w_im", "Im w"},
         {"omega_re", "Re of the annealed resolvent"},
         {"omega_im", "Im of the annealed resolvent"},
         {"limit_re", "Re of w^{-1} T_p(w^{-2})"},
         {"limit_im", "Im of w^{-1} T_p(w^{-2})"},
         {"abs_error", "|omega - limit|"}}}},
      {"borel/disc",
       {"discontinuity of Z(g) at the cut q against the instanton estimate",
        {{"p", "order of the interaction"},
         {"q", "cut index, arg g = q omega"},
         {"g_abs", "|g|"},
         {"re_disc", "Re of the numerical discontinuity"},
         {"im_disc", "Im of the numerical discontinuity"},
         {"instanton_re", "Re of the instanton estimate"},
         {"instanton_im", "Im of the instanton estimate"},
         {"ratio", "Re(disc/instanton), NaN where no real instanton is trapped"}}}},
      {"borel/coeffs",
       {"perturbative and Borel coefficients",
        {{"p", "order of the interaction"},
         {"n", "order"},
         {"a_n", "coefficient of g^{n(p-2)/2}"},
         {"a_n_exact", "a_n as an exact fraction"},
         {"borel", "a_n / (n(p-2)/2)!"}}}},
      {"borel/z",
       {"sector partition function Z_q(g)",
        {{"p", "order of the interaction"},
         {"q", "sector index"},
         {"g_abs", "|g|"},
         {"arg", "arg g, on the branch used by g^{(p-2)/2}"},
         {"z_re", "Re Z_q(g)"},
         {"z_im", "Im Z_q(g)"}}}},
      {"borel/instantons",
       {"instantons at the cut q",
        {{"p", "order of the interaction"},
         {"q", "cut index"},
         {"g_abs", "|g|"},
         {"r", "instanton index"},
         {"phi_re", "Re phi_r"},
         {"phi_im", "Im phi_r"},
         {"action_re", "Re S(phi_r)"},
         {"action_im", "Im S(phi_r)"},
         {"real", "1 if phi_r is real"}}}},
  };
  return s;
}

inline json schema_json() {
  json out = json::object();
  for (const auto& [key, t] : schemas()) {
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"description", c.doc}});
    out[key] = {{"description", t.description}, {"columns", cols}};
  }
  return {{"version", kVersion},
          {"csv", "lines starting with # carry the version, the full config and the seed; then one header row"},
          {"json", "top-level object {meta, data}; data is an array of row objects keyed by column name"},
          {"tables", out}};
}

inline std::string columns_help(const std::string& key) {
  std::string s = "\nColumns:\n";
  for (const auto& c : schemas().at(key).columns) s += "  " + c.name + ": " + c.doc + "\n";
  return s;
}

// ------------------------------------------------------------------ output

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::string key;
  std::vector<std::vector<Cell>> rows;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline json json_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
  return std::get<std::string>(c);
}

struct RunInfo {
  std::string subcommand;
  json config;
  std::uint64_t seed{0};
};

inline void write_table(std::ostream& os, const Table& t, const RunInfo& info, const std::string& format) {
  const auto& cols = schemas().at(t.key).columns;
  if (format == "json") {
    json meta = {{"version", kVersion}, {"subcommand", info.subcommand}, {"table", t.key},
                 {"config", info.config}, {"seed", info.seed}};
    json names = json::array();
    for (const auto& c : cols) names.push_back(c.name);
    meta["columns"] = names;
    json data = json::array();
    for (const auto& r : t.rows) {
      json row = json::object();
      for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i].name] = json_cell(r[i]);
      data.push_back(row);
    }
    os << json{{"meta", meta}, {"data", data}}.dump(2) << '\n';
    return;
  }
  os << "# rtensor " << kVersion << '\n';
  os << "# subcommand: " << info.subcommand << '\n';
  os << "# table: " << t.key << '\n';
  os << "# config: " << info.config.dump() << '\n';
  os << "# seed: " << info.seed << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i].name;
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << '\n';
  }
}

// ------------------------------------------------------------------ parsing helpers

inline cplx parse_complex(const std::string& s, const std::string& flag) {
  const auto comma = s.find(',');
  try {
    std::size_t used = 0;
    if (comma == std::string::npos) {
      const double re = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return {re, 0.0};
    }
    const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
    const double re = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(s);
    const double im = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(s);
    return {re, im};
  } catch (const std::logic_error&) {
    throw ValidationError(flag + ": expected RE or RE,IM, got '" + s + "'");
  }
}

/// start:stop:step, inclusive of stop up to rounding.
inline std::vector<double> parse_range(const std::string& s, const std::string& flag) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  try {
    while (std::getline(ss, item, ':')) {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    }
  } catch (const std::logic_error&) {
    throw ValidationError(flag + ": expected START:STOP:STEP, got '" + s + "'");
  }
  if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0])
    throw ValidationError(flag + ": expected START:STOP:STEP with STEP > 0 and STOP >= START, got '" + s + "'");
  std::vector<double> out;
  const long long count = static_cast<long long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  if (count > 1000000) throw ValidationError(flag + ": more than 10^6 points");
  for (long long k = 0; k <= count; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[2]);
  return out;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

/// Runs f(i) for i in [0, n) on up to `threads` workers; rethrows the first error by index.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  const auto body = [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (nt == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += nt) body(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline SymmetricTensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("--tensor: cannot open '" + path + "'");
  return read_tensor(is);
}

inline SymmetricTensor example_tensor() {
  SymmetricTensor t(3, 3);
  t.set({0, 0, 0}, 2.0);
  t.set({0, 1, 1}, 1.0);
  t.set({0, 2, 2}, 1.0);
  return t;
}

// ------------------------------------------------------------------ the app

struct Options {
  int p = 3;
  int N = 8;
  int n = 2;
  int grid = 400;
  int n_max = 6;
  int cap = kDefaultMapCap;
  int q = 0;
  int starts = 64;
  int threads = 1;
  long long samples = 10000;
  std::uint64_t seed = 0;
  double b = 0.0;
  double tol = 1e-10;
  double arg = 0.0;
  std::string method = "automatic";
  std::string mode = "quadrature";
  std::string contour = "plus";
  std::string b_sweep;
  std::string tensor_path;
  std::string output;
  std::string format;
  std::vector<std::string> w{"3,1"};
  std::vector<int> Ns{100};
  std::vector<double> g{0.1};
  bool threshold = false;
  bool example = false;
  bool disc = false;
  bool z = false;
  bool instantons = false;
  int coeffs = -1;
};

/// Where the output goes: --output (relative paths resolve against
/// $RTENSOR_OUTPUT_DIR when set), else $RTENSOR_OUTPUT_DIR/<name>.<ext>, else stdout.
inline std::optional<std::filesystem::path> output_path(const Options& o, const std::string& name,
                                                        const std::string& ext) {
  const char* dir = std::getenv(kOutputDirEnv);
  if (!o.output.empty()) {
    std::filesystem::path p(o.output);
    if (p.is_relative() && dir != nullptr && *dir != '\0') p = std::filesystem::path(dir) / p;
    return p;
  }
  if (dir != nullptr && *dir != '\0') return std::filesystem::path(dir) / (name + "." + ext);
  return std::nullopt;
}

template <class W>
void emit(std::ostream& out, const Options& o, const std::string& name, const std::string& ext, W&& writer) {
  const auto path = output_path(o, name, ext);
  if (!path) {
    writer(out);
    return;
  }
  if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw Error("cannot open output file " + path->string());
  writer(f);
  if (!f) throw Error("error writing " + path->string());
}

inline Table cmd_density(const Options& o, json& cfg) {
  cfg = {{"p", o.p}, {"grid", o.grid}, {"method", o.method}};
  detail::require_order(o.p);
  if (o.grid < 1 || o.grid > 1000000) throw ValidationError("--grid must lie in [1, 10^6]");
  const Method m = o.method == "hypergeometric" ? Method::hypergeometric
                   : o.method == "root_tracking" ? Method::root_tracking
                                                 : Method::automatic;
  const DensityEvaluator eval(o.p, m);
  const double edge = support_edge(o.p);
  Table t{"density", {}};
  for (int k = 0; k < o.grid; ++k) {
    const double y = -edge + edge * (2.0 * k + 1.0) / o.grid;
    t.rows.push_back({y, eval.rho(y)});
  }
  return t;
}

inline Table cmd_moments(const Options& o, json& cfg) {
  cfg = {{"p", o.p}, {"n_max", o.n_max}};
  detail::require_order(o.p);
  if (o.n_max < 0 || o.n_max > 40) throw ValidationError("--n-max must lie in [0, 40]");
  const DensityEvaluator eval(o.p);
  Table t{"moments", {}};
  for (int n = 0; n <= o.n_max; ++n) {
    const double m = eval.moment(n);
    const double f = fuss_catalan_number(o.p, n).convert_to<double>();
    t.rows.push_back({static_cast<long long>(n), m, f, std::abs(m - f)});
  }
  return t;
}

inline Table cmd_resolvent(const Options& o, json& cfg) {
  cfg = {{"p", o.p}, {"w", o.w}};
  detail::require_order(o.p);
  const DensityEvaluator eval(o.p);
  Table t{"resolvent", {}};
  for (const auto& s : o.w) {
    const cplx w = parse_complex(s, "--w");
    const cplx om = eval.omega(w), st = eval.stieltjes(w);
    t.rows.push_back({static_cast<long long>(o.p), w.real(), w.imag(), om.real(), om.imag(), st.real(), st.imag(),
                      std::abs(om - st)});
  }
  return t;
}

inline json cmd_maps(const Options& o, json& cfg, Table& t) {
  cfg = {{"p", o.p}, {"n", o.n}, {"cap", o.cap}};
  const auto maps = enumerate_rooted_maps(o.p, o.n, o.cap);
  t = Table{"maps", {}};
  json list = json::array();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::string g;
    for (const auto& [a, b] : underlying_graph(maps[i]))
      g += (g.empty() ? "" : " ") + std::to_string(a) + "-" + std::to_string(b);
    t.rows.push_back({static_cast<long long>(i), g, join_ints(maps[i].successor), join_ints(maps[i].pairing),
                      static_cast<long long>(maps[i].root.value_or(0))});
    list.push_back(to_json(maps[i]));
  }
  return list;
}

inline Table cmd_invariants(const Options& o, json& cfg) {
  if (!o.tensor_path.empty()) {
    cfg = {{"tensor", o.tensor_path}, {"n", o.n}, {"cap", o.cap}};
    const auto T = load_tensor(o.tensor_path);
    return Table{"invariants/tensor",
                 {{static_cast<long long>(T.order()), static_cast<long long>(T.dim()), static_cast<long long>(o.n),
                   balanced_invariant(T, o.n, o.cap)}}};
  }
  cfg = {{"p", o.p}, {"N", o.N}, {"n", o.n}, {"samples", o.samples}, {"threads", o.threads}};
  const auto est = mc_expected_invariant(o.p, o.N, o.n, o.samples, o.seed, o.threads);
  const double exact = to_double(wick_expectation(o.p, o.N, o.n));
  const double z = est.std_error > 0 ? (est.mean - exact) / est.std_error : std::numeric_limits<double>::quiet_NaN();
  return Table{"invariants",
               {{static_cast<long long>(o.p), static_cast<long long>(o.N), static_cast<long long>(o.n), o.samples,
                 est.mean, est.std_error, exact, z}}};
}

inline Table cmd_eigen(const Options& o, json& cfg) {
  SymmetricTensor T = example_tensor();
  if (o.example) {
    cfg = {{"tensor", "example"}};
  } else if (!o.tensor_path.empty()) {
    cfg = {{"tensor", o.tensor_path}};
    T = load_tensor(o.tensor_path);
  } else {
    cfg = {{"p", o.p}, {"N", o.N}, {"tensor", "goe"}};
    T = sample_goe(o.p, o.N, o.seed);
  }
  cfg["starts"] = o.starts;
  cfg["tol"] = o.tol;
  cfg["threads"] = o.threads;
  const auto res = find_real_eigenpairs(T, {.starts = o.starts, .tol = o.tol, .seed = o.seed, .threads = o.threads});
  if (res.all_failed()) throw RootFindFailure("no Newton start converged");
  Table t{"eigen", {}};
  for (std::size_t i = 0; i < res.pairs.size(); ++i) {
    const auto& e = res.pairs[i];
    std::string x;
    for (std::size_t k = 0; k < e.x.size(); ++k) x += (k ? " " : "") + format_double(e.x[k]);
    t.rows.push_back({static_cast<long long>(i), e.lambda, e.residual, static_cast<long long>(e.near_degenerate), x});
  }
  return t;
}

inline Table cmd_spike(const Options& o, json& cfg) {
  if (o.threshold) {
    cfg = {{"p", o.p}, {"threshold", true}};
    const auto r = spike_threshold(o.p);
    return Table{"spike/threshold",
                 {{static_cast<long long>(o.p), r.b_t, r.b_t_bisection, r.y_c_below, r.y_c_at}}};
  }
  std::vector<double> bs{o.b};
  if (!o.b_sweep.empty()) bs = parse_range(o.b_sweep, "--b-sweep");
  cfg = {{"p", o.p}, {"threads", o.threads}};
  if (o.b_sweep.empty())
    cfg["b"] = o.b;
  else
    cfg["b_sweep"] = o.b_sweep;
  std::vector<SingularLocus> loci(bs.size());
  parallel_for(bs.size(), o.threads, [&](std::size_t i) { loci[i] = singular_locus(o.p, bs[i]); });
  Table t{"spike", {}};
  for (const auto& s : loci)
    t.rows.push_back({static_cast<long long>(s.p), s.b, s.y_c, s.theta_c, s.rho_c_sq,
                      static_cast<long long>(s.dominant_saddle), s.f0, s.f1});
  return t;
}

inline Table cmd_annealed(const Options& o, json& cfg) {
  cfg = {{"p", o.p}, {"w", o.w}, {"N", o.Ns}, {"mode", o.mode}, {"contour", o.contour}, {"threads", o.threads}};
  const AnnealedMode mode = o.mode == "saddle" ? AnnealedMode::saddle : AnnealedMode::quadrature;
  const Contour side = o.contour == "minus" ? Contour::minus : Contour::plus;
  std::vector<std::pair<cplx, int>> jobs;
  for (const auto& s : o.w)
    for (int N : o.Ns) jobs.emplace_back(parse_complex(s, "--w"), N);
  std::vector<std::vector<Cell>> rows(jobs.size());
  parallel_for(jobs.size(), o.threads, [&](std::size_t i) {
    const auto [w, N] = jobs[i];
    const cplx om = annealed_resolvent(o.p, w, N, mode, side);
    const cplx lim = annealed_resolvent(o.p, w, N, AnnealedMode::saddle, side);
    rows[i] = {static_cast<long long>(o.p), static_cast<long long>(N), o.mode, w.real(), w.imag(), om.real(),
               om.imag(), lim.real(), lim.imag(), std::abs(om - lim)};
  });
  return Table{"annealed", rows};
}

inline Table cmd_borel(const Options& o, json& cfg) {
  using namespace borel;
  const int chosen = int(o.disc) + int(o.z) + int(o.instantons) + int(o.coeffs >= 0);
  if (chosen > 1) throw ValidationError("--disc, --z, --instantons and --coeffs are mutually exclusive");
  cfg = {{"p", o.p}};
  if (o.coeffs >= 0) {
    cfg["coeffs"] = o.coeffs;
    Table t{"borel/coeffs", {}};
    for (int n = 0; n <= o.coeffs; ++n) {
      if ((n * o.p) % 2) continue;
      const auto a = perturbative_coeff(o.p, n);
      t.rows.push_back({static_cast<long long>(o.p), static_cast<long long>(n), a.convert_to<double>(), a.str(),
                        borel_coeff(o.p, n).convert_to<double>()});
    }
    return t;
  }
  cfg["q"] = o.q;
  cfg["g"] = o.g;
  cfg["threads"] = o.threads;
  if (o.z) {
    cfg["arg"] = o.arg;
    Table t{"borel/z", {}};
    std::vector<std::vector<Cell>> rows(o.g.size());
    parallel_for(o.g.size(), o.threads, [&](std::size_t i) {
      const cplx v = sector_Z<double>(o.p, {o.g[i], o.arg}, o.q);
      rows[i] = {static_cast<long long>(o.p), static_cast<long long>(o.q), o.g[i], o.arg, v.real(), v.imag()};
    });
    t.rows = rows;
    return t;
  }
  if (o.instantons) {
    Table t{"borel/instantons", {}};
    for (double g : o.g)
      for (const auto& in : instantons(o.p, g, o.q))
        t.rows.push_back({static_cast<long long>(o.p), static_cast<long long>(o.q), g, static_cast<long long>(in.r),
                          in.phi.real(), in.phi.imag(), in.action.real(), in.action.imag(),
                          static_cast<long long>(in.real)});
    return t;
  }
  Table t{"borel/disc", {}};
  for (const auto& r : discontinuity_sweep(o.p, o.q, o.g, o.threads))
    t.rows.push_back({static_cast<long long>(r.p), static_cast<long long>(r.q), r.g_abs, r.disc.real(),
                      r.disc.imag(), r.instanton.real(), r.instanton.imag(), r.ratio});
  return t;
}

/// Parses argv and runs one subcommand. Exit codes: 0 success, 2 invalid
/// input, 3 numerical failure, 1 anything else (I/O).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"rtensor: random tensor spectra, invariants, eigenpairs and Borel analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* s, const std::string& default_format) {
    s->add_option("--output,-o", o.output, std::string("output file; relative paths resolve against $") +
                                                kOutputDirEnv + " when set");
    s->add_option("--format", o.format, "csv or json (default " + default_format + ")")
        ->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--seed", o.seed, "random seed")->capture_default_str();
    s->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::Range(1, 256));
  };
  const auto add_p = [&](CLI::App* s) {
    s->add_option("--p", o.p, "tensor order")->capture_default_str()->check(CLI::Range(2, 12));
  };

  auto* density = app.add_subcommand("density", "generalized Wigner density on a grid");
  add_p(density);
  density->add_option("--grid", o.grid, "number of grid cells")->capture_default_str();
  density->add_option("--method", o.method, "automatic, hypergeometric or root_tracking")
      ->capture_default_str()
      ->check(CLI::IsMember({"automatic", "hypergeometric", "root_tracking"}));
  density->footer(columns_help("density"));
  add_common(density, "csv");

  auto* moments = app.add_subcommand("moments", "moments of P_p against Fuss-Catalan numbers");
  add_p(moments);
  moments->add_option("--n-max", o.n_max, "largest moment order")->capture_default_str();
  moments->footer(columns_help("moments"));
  add_common(moments, "csv");

  auto* resolvent = app.add_subcommand("resolvent", "expected resolvent and Stieltjes transform");
  add_p(resolvent);
  resolvent->add_option("--w", o.w, "spectral parameter RE or RE,IM; repeatable")->capture_default_str();
  resolvent->footer(columns_help("resolvent"));
  add_common(resolvent, "csv");

  auto* maps = app.add_subcommand("maps", "enumerate rooted combinatorial maps");
  add_p(maps);
  maps->add_option("--n", o.n, "number of vertices")->capture_default_str();
  maps->add_option("--cap", o.cap, "largest n allowed")->capture_default_str();
  maps->footer(columns_help("maps") + "JSON output lists the maps as {p, n, half_edges, successor, pairing, root}.\n");
  add_common(maps, "json");

  auto* invariants = app.add_subcommand("invariants", "balanced invariants: Monte Carlo against exact Wick");
  add_p(invariants);
  invariants->add_option("--N", o.N, "dimension")->capture_default_str();
  invariants->add_option("--n", o.n, "number of vertices")->capture_default_str();
  invariants->add_option("--samples", o.samples, "Monte Carlo draws")->capture_default_str();
  invariants->add_option("--cap", o.cap, "largest n allowed")->capture_default_str();
  invariants->add_option("--tensor", o.tensor_path, "evaluate I_n on a tensor file instead");
  invariants->footer(columns_help("invariants") + "With --tensor:" + columns_help("invariants/tensor"));
  add_common(invariants, "csv");

  auto* sample = app.add_subcommand("sample", "draw a Gaussian symmetric tensor, optionally spiked along e_1");
  add_p(sample);
  sample->add_option("--N", o.N, "dimension")->capture_default_str();
  sample->add_option("--b", o.b, "spike strength b >= 0")->capture_default_str();
  sample->footer("\nWrites a tensor file: one JSON header line, then little-endian float64 packed entries.\n");
  add_common(sample, "tensor");

  auto* eigen = app.add_subcommand("eigen", "real eigenpairs of a symmetric tensor");
  add_p(eigen);
  eigen->add_option("--N", o.N, "dimension of the sampled tensor")->capture_default_str();
  eigen->add_option("--tensor", o.tensor_path, "read the tensor from a file");
  eigen->add_flag("--example", o.example, "use the 3x3x3 example tensor T000=2, T011=T022=1");
  eigen->add_option("--starts", o.starts, "Newton starts")->capture_default_str();
  eigen->add_option("--tol", o.tol, "residual tolerance")->capture_default_str();
  eigen->footer(columns_help("eigen"));
  add_common(eigen, "csv");

  auto* spike = app.add_subcommand("spike", "singular locus of the spiked resolvent");
  add_p(spike);
  spike->add_option("--b", o.b, "signal-to-noise ratio")->capture_default_str();
  spike->add_option("--b-sweep", o.b_sweep, "START:STOP:STEP sweep over b");
  spike->add_flag("--threshold", o.threshold, "report the detection threshold instead");
  spike->footer(columns_help("spike") + "With --threshold:" + columns_help("spike/threshold"));
  add_common(spike, "csv");

  auto* annealed = app.add_subcommand("annealed", "annealed resolvent at finite N");
  add_p(annealed);
  annealed->add_option("--w", o.w, "spectral parameter RE or RE,IM; repeatable")->capture_default_str();
  annealed->add_option("--N", o.Ns, "dimension; repeatable")->capture_default_str();
  annealed->add_option("--mode", o.mode, "quadrature or saddle")
      ->capture_default_str()
      ->check(CLI::IsMember({"quadrature", "saddle"}));
  annealed->add_option("--contour", o.contour, "plus or minus")
      ->capture_default_str()
      ->check(CLI::IsMember({"plus", "minus"}));
  annealed->footer(columns_help("annealed"));
  add_common(annealed, "csv");

  auto* borel = app.add_subcommand("borel", "zero-dimensional phi^p model: discontinuities, coefficients, Z_q");
  add_p(borel);
  borel->add_option("--q", o.q, "cut or sector index")->capture_default_str();
  borel->add_option("--g", o.g, "|g|; repeatable")->capture_default_str();
  borel->add_option("--arg", o.arg, "arg g for --z")->capture_default_str();
  borel->add_flag("--disc", o.disc, "discontinuity at the cut q (the default)");
  borel->add_flag("--z", o.z, "sector partition function Z_q(|g| e^{i arg})");
  borel->add_flag("--instantons", o.instantons, "instantons at the cut q");
  borel->add_option("--coeffs", o.coeffs, "perturbative coefficients up to this order");
  borel->footer(columns_help("borel/disc") + "With --coeffs:" + columns_help("borel/coeffs") +
                "With --z:" + columns_help("borel/z") + "With --instantons:" + columns_help("borel/instantons"));
  add_common(borel, "json");

  auto* schema = app.add_subcommand("schema", "print the column schema of every table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (schema->parsed()) {
      out << schema_json().dump(2) << '\n';
      return 0;
    }
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    RunInfo info{name, json::object(), o.seed};

    if (name == "sample") {
      info.config = {{"p", o.p}, {"N", o.N}, {"b", o.b}};
      SymmetricTensor T = sample_goe(o.p, o.N, o.seed);
      if (o.b > 0) {
        std::vector<double> v(o.N, 0.0);
        v[0] = 1.0;
        T = add_spike(T, {o.b, v});
      }
      const json extra = {{"generator", {{"version", kVersion}, {"subcommand", name}, {"config", info.config}}}};
      emit(out, o, name, "tensor", [&](std::ostream& os) { write_tensor(os, T, extra); });
      return 0;
    }

    const std::string fmt = o.format.empty() ? ((name == "maps" || name == "borel") ? "json" : "csv") : o.format;
    Table table;
    if (name == "maps") {
      const json list = cmd_maps(o, info.config, table);
      emit(out, o, name, fmt, [&](std::ostream& os) {
        if (fmt == "json") {
          const json meta = {{"version", kVersion}, {"subcommand", name}, {"table", "maps"},
                             {"config", info.config}, {"seed", info.seed}, {"count", list.size()}};
          os << json{{"meta", meta}, {"data", list}}.dump(2) << '\n';
        } else {
          write_table(os, table, info, fmt);
        }
      });
      return 0;
    }
    if (name == "density") table = cmd_density(o, info.config);
    else if (name == "moments") table = cmd_moments(o, info.config);
    else if (name == "resolvent") table = cmd_resolvent(o, info.config);
    else if (name == "invariants") table = cmd_invariants(o, info.config);
    else if (name == "eigen") table = cmd_eigen(o, info.config);
    else if (name == "spike") table = cmd_spike(o, info.config);
    else if (name == "annealed") table = cmd_annealed(o, info.config);
    else if (name == "borel") table = cmd_borel(o, info.config);
    info.config["seed"] = o.seed;
    emit(out, o, name, fmt, [&](std::ostream& os) { write_table(os, table, info, fmt); });
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

} // namespace rtensor::cli
