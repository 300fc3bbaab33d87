#pragma once

// Real eigenpairs T x^{p-1} = lambda x, x.x = 1, by multistart Newton on the
// bordered Lagrange system, and the instantons they correspond to.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace rtensor {

struct Eigenpair {
  int p{};
  double lambda{};
  std::vector<double> x;
  double residual{};
  /// Bordered Jacobian nearly singular at the solution: the pair may sit on a
  /// continuous family rather than be isolated.
  bool near_degenerate{};
};

struct EigenSearchOptions {
  int starts = 64;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  int max_iter = 200;
  int threads = 1;
};

struct EigenSearchResult {
  std::vector<Eigenpair> pairs;
  int starts{};
  int converged{};
  /// Every start failed to converge.
  [[nodiscard]] bool all_failed() const noexcept { return converged == 0; }
};

namespace detail {

[[nodiscard]] inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

[[nodiscard]] inline double eig_residual(const std::vector<double>& g, double lambda, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (g[i] - lambda * x[i]) * (g[i] - lambda * x[i]);
  return std::sqrt(s);
}

[[nodiscard]] inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Picks the representative of the class of (lambda, x): for odd p the class
/// contains (-lambda, -x), for even p it contains (lambda, -x).
inline void canonicalize_sign(Eigenpair& e) {
  bool flip = false;
  if (e.p % 2 == 1 && e.lambda != 0.0 && std::abs(e.lambda) > 1e-14) {
    flip = e.lambda < 0.0;
  } else {
    for (double a : e.x)
      if (std::abs(a) > 1e-8) {
        flip = a < 0.0;
        break;
      }
  }
  if (flip) {
    for (double& a : e.x) a = -a;
    if (e.p % 2 == 1) e.lambda = -e.lambda;
  }
  if (e.p % 2 == 1 && e.lambda == 0.0) e.lambda = 0.0;  // drop a negative zero
}

/// Newton iteration from x0 (normalized internally).
[[nodiscard]] inline std::optional<Eigenpair> newton_eigenpair(const SymmetricTensor& T, std::vector<double> x,
                                                               double tol, int max_iter) {
  const int N = T.dim(), p = T.order();
  double nx = norm2(x);
  if (nx == 0.0) return std::nullopt;
  for (double& a : x) a /= nx;
  auto g = T.contract_gradient(x);
  double lambda = dot(x, g);
  double res = eig_residual(g, lambda, x);
  Eigen::MatrixXd J(N + 1, N + 1);
  Eigen::VectorXd F(N + 1);
  // after reaching tol, a few extra steps polish the pair while they still help
  int polish = 8;
  for (int it = 0; it < max_iter && (res >= tol || polish-- > 0); ++it) {
    const Eigen::MatrixXd H = T.contract_hessian(x);
    J.setZero();
    J.topLeftCorner(N, N) = double(p - 1) * H - lambda * Eigen::MatrixXd::Identity(N, N);
    for (int i = 0; i < N; ++i) {
      J(i, N) = -x[i];
      J(N, i) = -x[i];
      F(i) = g[i] - lambda * x[i];
    }
    F(N) = 0.5 * (1.0 - dot(x, x));
    const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-F);
    // backtracking on the residual after projection to the sphere
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      std::vector<double> y(N);
      for (int i = 0; i < N; ++i) y[i] = x[i] + t * step(i);
      const double ny = norm2(y);
      if (ny == 0.0) continue;
      for (double& a : y) a /= ny;
      auto gy = T.contract_gradient(y);
      const double ly = dot(y, gy);
      const double ry = eig_residual(gy, ly, y);
      if (ry < res) {
        x = std::move(y);
        g = std::move(gy);
        lambda = ly;
        res = ry;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (res >= tol) return std::nullopt;
      break;
    }
  }
  if (!(res < tol)) return std::nullopt;
  Eigenpair e{p, lambda, x, res, false};
  // conditioning of the bordered Jacobian at the solution
  const Eigen::MatrixXd H = T.contract_hessian(x);
  J.setZero();
  J.topLeftCorner(N, N) = double(p - 1) * H - lambda * Eigen::MatrixXd::Identity(N, N);
  for (int i = 0; i < N; ++i) J(i, N) = J(N, i) = -x[i];
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  e.near_degenerate = sv(sv.size() - 1) < 1e-8 * std::max(1.0, sv(0));
  canonicalize_sign(e);
  return e;
}

[[nodiscard]] inline bool same_class(const Eigenpair& a, const Eigenpair& b, double tol) {
  if (std::abs(a.lambda - b.lambda) >= 10.0 * tol) return false;
  double dm = 0.0, dp = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    dm += (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
    dp += (a.x[i] + b.x[i]) * (a.x[i] + b.x[i]);
  }
  // near a degenerate solution the residual is a higher power of the distance,
  // so converged vectors scatter over a cluster of radius ~ tol^{1/3}
  const double xtol = a.near_degenerate && b.near_degenerate ? std::max(1e-6, 10.0 * std::cbrt(tol)) : 1e-6;
  return std::sqrt(std::min(dm, dp)) < xtol;
}

} // namespace detail

/// Random uniform start on the unit sphere for start index s.
[[nodiscard]] inline std::vector<double> sphere_start(int N, std::uint64_t seed, std::uint64_t s) {
  const CounterStream stream(seed, 0xe16e0000ULL + s);
  std::vector<double> x(N);
  for (int i = 0; i < N; ++i) x[i] = stream.normal(static_cast<std::uint64_t>(i));
  return x;
}

/// Multistart search for real eigenpairs. Completeness is not guaranteed.
[[nodiscard]] inline EigenSearchResult find_real_eigenpairs(const SymmetricTensor& T,
                                                            const EigenSearchOptions& opt = {}) {
  detail::require(opt.starts >= 1, "find_real_eigenpairs: starts must be >= 1");
  detail::require(opt.tol > 0.0, "find_real_eigenpairs: tol must be positive");
  const int N = T.dim();
  std::vector<std::optional<Eigenpair>> found(opt.starts);
  const auto work = [&](int begin, int end) {
    for (int s = begin; s < end; ++s)
      found[s] = detail::newton_eigenpair(T, sphere_start(N, opt.seed, s), opt.tol, opt.max_iter);
  };
  const int threads = std::clamp(opt.threads, 1, opt.starts);
  if (threads == 1) {
    work(0, opt.starts);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opt.starts + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk, e = std::min(opt.starts, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  EigenSearchResult out;
  out.starts = opt.starts;
  for (auto& f : found) {
    if (!f) continue;
    ++out.converged;
    const bool dup = std::any_of(out.pairs.begin(), out.pairs.end(),
                                 [&](const Eigenpair& e) { return detail::same_class(e, *f, opt.tol); });
    if (!dup) out.pairs.push_back(std::move(*f));
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const Eigenpair& a, const Eigenpair& b) {
    return a.lambda != b.lambda ? a.lambda > b.lambda : a.x > b.x;
  });
  // flag clusters of distinct vectors sharing an eigenvalue
  for (std::size_t i = 0; i + 1 < out.pairs.size(); ++i)
    if (std::abs(out.pairs[i].lambda - out.pairs[i + 1].lambda) < 1e-6)
      out.pairs[i].near_degenerate = out.pairs[i + 1].near_degenerate = true;
  return out;
}

/// ((p-1)^N - 1)/(p-2); the p -> 2 limit N for matrices.
[[nodiscard]] inline boost::multiprecision::cpp_int eigenpair_count_bound(int p, int N) {
  detail::require_order(p);
  detail::require(N >= 1, "eigenpair_count_bound: N must be >= 1");
  if (p == 2) return N;
  return (boost::multiprecision::pow(boost::multiprecision::cpp_int(p - 1), N) - 1) / (p - 2);
}

struct InstantonPoint {
  std::vector<double> phi;
  double action{};
  Eigenpair source_pair;
  double y{};
};

/// phi = (y/lambda)^{1/(p-2)} x, a real solution of phi = (1/y) T phi^{p-1}.
[[nodiscard]] inline InstantonPoint instanton_from_eigenpair(const Eigenpair& pair, double y) {
  const int p = pair.p;
  if (p < 3) throw DomainError("instanton_from_eigenpair: needs p >= 3");
  if (pair.lambda == 0.0 || y == 0.0 || (pair.lambda > 0) != (y > 0))
    throw SignMismatch("instanton_from_eigenpair: sign(lambda) must equal sign(y) and both be nonzero");
  const double r = std::pow(y / pair.lambda, 1.0 / (p - 2));
  InstantonPoint out;
  out.y = y;
  out.source_pair = pair;
  out.phi.resize(pair.x.size());
  for (std::size_t i = 0; i < pair.x.size(); ++i) out.phi[i] = r * pair.x[i];
  out.action = double(p - 2) / (2.0 * p) * r * r;
  return out;
}

/// ||phi - (1/y) T phi^{p-1}|| / ||phi||.
[[nodiscard]] inline double instanton_residual(const SymmetricTensor& T, const InstantonPoint& inst) {
  const auto g = T.contract_gradient(inst.phi);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(inst.phi[i] - g[i] / inst.y, 2);
  return std::sqrt(s) / detail::norm2(inst.phi);
}

/// Leading instanton action min (p-2)/(2p) (|y|/|lambda|)^{2/(p-2)} over pairs
/// whose class contains a representative with sign(lambda) = sign(y).
[[nodiscard]] inline double discontinuity_exponent(const std::vector<Eigenpair>& pairs, double y) {
  detail::require(y != 0.0, "discontinuity_exponent: y must be nonzero");
  std::optional<double> best;
  int p = 0;
  for (const auto& e : pairs) {
    p = e.p;
    if (p < 3) throw DomainError("discontinuity_exponent: needs p >= 3");
    if (e.lambda == 0.0) continue;
    const bool matches = (p % 2 == 1) || ((e.lambda > 0) == (y > 0));
    if (!matches) continue;
    const double s = double(p - 2) / (2.0 * p) * std::pow(std::abs(y) / std::abs(e.lambda), 2.0 / (p - 2));
    if (!best || s < *best) best = s;
  }
  if (!best) throw NoMatchingPairs("discontinuity_exponent: no real eigenpair with matching sign");
  return *best;
}

[[nodiscard]] inline double discontinuity_exponent(const SymmetricTensor& T, double y,
                                                   const EigenSearchOptions& opt = {}) {
  if (T.order() < 3) throw DomainError("discontinuity_exponent: needs p >= 3");
  return discontinuity_exponent(find_real_eigenpairs(T, opt).pairs, y);
}

[[nodiscard]] inline nlohmann::json to_json(const Eigenpair& e) {
  return {{"lambda", e.lambda}, {"x", e.x}, {"residual", e.residual}, {"near_degenerate", e.near_degenerate}};
}

} // namespace rtensor
