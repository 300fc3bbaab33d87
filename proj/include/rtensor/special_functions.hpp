#pragma once

// Fuss-Catalan numbers and function T_p(u) = 1 + u T_p(u)^p, the density
// P_p(x) whose moments are the Fuss-Catalan numbers, the generalized Wigner
// density rho(y) = |y| P_p(y^2) and the expected resolvent w^{-1} T_p(w^{-2}).

#include <boost/math/tools/roots.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace rtensor {

using cplx = std::complex<double>;
using boost::multiprecision::cpp_int;

enum class Method { hypergeometric, root_tracking, automatic };
enum class Side { above, below };

[[nodiscard]] inline std::string to_string(Method m) {
  switch (m) {
  case Method::hypergeometric: return "hypergeometric";
  case Method::root_tracking: return "root_tracking";
  default: return "auto";
  }
}

/// Exact binomial coefficient.
[[nodiscard]] inline cpp_int binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  cpp_int r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// F_p(n) = binom(pn+1, n)/(pn+1), exact.
[[nodiscard]] inline cpp_int fuss_catalan_number(int p, int n) {
  detail::require_order(p);
  detail::require(n >= 0, "fuss_catalan_number: n must be >= 0");
  const unsigned pn1 = static_cast<unsigned>(p) * static_cast<unsigned>(n) + 1;
  return binomial(pn1, static_cast<unsigned>(n)) / pn1;
}

/// u_c = (p-1)^{p-1}/p^p, where T_p has its branch point.
[[nodiscard]] inline double critical_point(int p) {
  detail::require_order(p);
  return std::pow(double(p - 1), p - 1) / std::pow(double(p), p);
}

/// T_p(u_c) = p/(p-1).
[[nodiscard]] inline double critical_value(int p) {
  detail::require_order(p);
  return double(p) / double(p - 1);
}

/// Edge of the generalized Wigner support, p^{p/2}/(p-1)^{(p-1)/2} = u_c^{-1/2}.
[[nodiscard]] inline double support_edge(int p) {
  detail::require_order(p);
  return std::pow(double(p), 0.5 * p) / std::pow(double(p - 1), 0.5 * (p - 1));
}

namespace detail {

template <class T>
[[nodiscard]] T ipow(T x, int n) {
  T r(1);
  while (n > 0) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

[[nodiscard]] inline double fc_residual(int p, cplx u, cplx T) {
  return std::abs(T - 1.0 - u * ipow(T, p));
}

/// Newton iteration on T - 1 - u T^p. Stops when the step reaches rounding
/// level or stops shrinking; returns nullopt if it diverges.
[[nodiscard]] inline std::optional<cplx> fc_newton(int p, cplx u, cplx T, int max_iter = 30) {
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const cplx tp1 = ipow(T, p - 1);
    const cplx F = T - 1.0 - u * tp1 * T;
    const cplx dF = 1.0 - double(p) * u * tp1;
    if (dF == 0.0) return std::nullopt;
    const cplx step = F / dF;
    const double size = std::abs(step);
    const double scale = std::max(1.0, std::abs(T));
    if (size <= 1e-15 * scale) return T - step;
    // near the branch point rounding limits the attainable accuracy
    if (it > 0 && size >= 0.5 * prev && size < 1e-9 * scale) return T;
    T -= step;
    if (!std::isfinite(T.real()) || !std::isfinite(T.imag())) return std::nullopt;
    prev = size;
  }
  return std::nullopt;
}

/// Ratio F_p(n+1)/F_p(n).
[[nodiscard]] inline double fc_term_ratio(int p, int n) {
  // F_p(n) = (pn)! / (n! ((p-1)n+1)!)
  double r = 1.0;
  for (int j = 1; j <= p; ++j) r *= double(p * n + j);
  r /= double(n + 1);
  for (int j = 2; j <= p; ++j) r /= double((p - 1) * n + j);
  return r;
}

[[nodiscard]] inline cplx fc_series(int p, cplx u, double rel_tol = 1e-17) {
  cplx term = 1.0, sum = 1.0;
  for (int n = 0; n < 100000; ++n) {
    term *= fc_term_ratio(p, n) * u;
    sum += term;
    if (std::abs(term) <= rel_tol * std::abs(sum)) return sum;
  }
  throw EndpointRegime("Fuss-Catalan series did not converge; |u| too close to u_c");
}

/// Sign of Gamma(x) for real non-integer x, via the reflection formula
/// Gamma(x) Gamma(1-x) = pi / sin(pi x) with Gamma(1-x) > 0 for x < 0.
[[nodiscard]] inline int gamma_sign(double x) {
  if (x > 0) return 1;
  return std::sin(std::numbers::pi * x) > 0 ? 1 : -1;
}

[[nodiscard]] inline bool is_nonpositive_integer(double x) {
  return x <= 0 && std::abs(x - std::round(x)) < 1e-14;
}

} // namespace detail

/// A value of T_p together with the waypoints used to reach it from u = 0.
struct FussCatalanBranch {
  int p{};
  cplx u{};
  cplx value{};
  std::vector<cplx> path;
};

/// Continues the root of T = 1 + u T^p analytic at u = 0 along the polyline
/// `waypoints` (first point must be 0) with predictor-corrector steps.
[[nodiscard]] inline FussCatalanBranch track_fc_branch(int p, const std::vector<cplx>& waypoints) {
  detail::require_order(p);
  const double uc = critical_point(p);
  FussCatalanBranch out{p, 0.0, 1.0, {cplx(0.0)}};
  cplx u = 0.0, T = 1.0;
  for (std::size_t s = 1; s < waypoints.size(); ++s) {
    const cplx target = waypoints[s];
    double t = 0.0, h = 1.0;
    const cplx start = u;
    const cplx seg = target - start;
    const double len = std::abs(seg);
    if (len == 0.0) continue;
    while (t < 1.0) {
      // keep steps small relative to the distance to the branch point and to
      // the scale of |u|, where the other roots come close
      const double guard =
          0.1 * std::min(std::abs(u - uc), std::max(std::abs(u), uc)) / len;
      double step = std::min({h, 1.0 - t, std::max(guard, 1e-15)});
      bool accepted = false;
      while (!accepted) {
        if (step < 1e-13) {
          throw BranchTrackingFailed("lost the Fuss-Catalan branch near u = " +
                                     std::to_string(u.real()) + (u.imag() < 0 ? "" : "+") +
                                     std::to_string(u.imag()) + "i (last good waypoint)");
        }
        const cplx un = start + (t + step) * seg;
        const cplx tp1 = detail::ipow(T, p - 1);
        const cplx slope = tp1 * T / (1.0 - double(p) * u * tp1);
        const cplx predicted = T + slope * (un - u);
        auto corrected = detail::fc_newton(p, un, predicted, 8);
        if (corrected && std::abs(*corrected - predicted) <= 0.1 * std::abs(*corrected) &&
            detail::fc_residual(p, un, *corrected) < 1e-12) {
          T = *corrected;
          u = un;
          t += step;
          accepted = true;
          h = std::min(1.0, 2.0 * step);
        } else {
          step *= 0.5;
        }
      }
    }
    u = target;
    out.path.push_back(target);
  }
  out.u = u;
  out.value = T;
  return out;
}

/// Default polyline from 0 to u avoiding the cut [u_c, +inf).
[[nodiscard]] inline std::vector<cplx> fc_default_path(int p, cplx u) {
  const double uc = critical_point(p);
  if (u.real() < 0.5 * uc) return {0.0, u};
  const double s = u.imag() < 0 ? -1.0 : 1.0;
  const double h = std::max(0.5 * uc, std::abs(u.imag()));
  return {0.0, cplx(0.0, s * h), cplx(u.real(), s * h), u};
}

[[nodiscard]] inline bool on_fc_cut(int p, cplx u) {
  return u.imag() == 0.0 && u.real() >= critical_point(p);
}

/// T_p(u) on the plane cut along [u_c, +inf).
[[nodiscard]] inline FussCatalanBranch fc_function_branch(int p, cplx u,
                                                          Method method = Method::automatic) {
  detail::require_order(p);
  const double uc = critical_point(p);
  if (on_fc_cut(p, u))
    throw CutContact("T_p evaluated on its cut [u_c, inf); use fc_function_boundary");
  const bool series_ok = std::abs(u) < 0.5 * uc;
  if (method == Method::hypergeometric ||
      (method == Method::automatic && series_ok)) {
    if (std::abs(u) >= 0.95 * uc)
      throw EndpointRegime("Fuss-Catalan series requested at |u| >= 0.95 u_c");
    cplx T = detail::fc_series(p, u);
    if (auto polished = detail::fc_newton(p, u, T, 4)) T = *polished;
    return {p, u, T, {cplx(0.0), u}};
  }
  return track_fc_branch(p, fc_default_path(p, u));
}

[[nodiscard]] inline cplx fc_function(int p, cplx u, Method method = Method::automatic) {
  return fc_function_branch(p, u, method).value;
}

/// T_p(u) for real u <= u_c by bracketing, exact at u = u_c.
[[nodiscard]] inline double fc_function_real(int p, double u) {
  detail::require_order(p);
  const double uc = critical_point(p);
  if (u > uc * (1 + 1e-15)) throw CutContact("fc_function_real: u > u_c lies on the cut");
  if (u >= uc) return critical_value(p);
  if (u == 0.0) return 1.0;
  const auto g = [&](double T) { return T - 1.0 - u * std::pow(T, p); };
  double lo = u > 0 ? 1.0 : 0.0;
  double hi = u > 0 ? critical_value(p) : 1.0;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  double T = 0.5 * (r.first + r.second);
  if (auto polished = detail::fc_newton(p, cplx(u), cplx(T), 3)) {
    if (std::abs(polished->real() - T) < 1e-8) T = polished->real();
  }
  return T;
}

/// One-sided limit T_p(x +/- i0) for real x. Above the cut the imaginary part
/// is positive.
[[nodiscard]] inline cplx fc_function_boundary(int p, double x, Side side) {
  detail::require_order(p);
  const double uc = critical_point(p);
  if (x < uc) return fc_function(p, cplx(x, 0.0));
  if (x == uc) return critical_value(p);
  const double sgn = side == Side::above ? 1.0 : -1.0;
  // epsilon sequence and Richardson extrapolation to the cut, then a final
  // Newton polish directly at the real point
  // offsets shrink with the distance to the branch point so that they stay
  // small compared to the local scale of T_p
  const double scale = std::min(1.0, (x - uc) / uc);
  const std::array<double, 3> eps{1e-4, 1e-5, 1e-6};
  std::array<cplx, 3> v{};
  for (std::size_t i = 0; i < eps.size(); ++i)
    v[i] = fc_function(p, cplx(x, sgn * eps[i] * scale));
  // values at eps, eps/10, eps/100; eliminate O(eps) and O(eps^2)
  const cplx r1 = (10.0 * v[1] - v[0]) / 9.0;
  const cplx r2 = (10.0 * v[2] - v[1]) / 9.0;
  const cplx extrapolated = (100.0 * r2 - r1) / 99.0;
  cplx T = extrapolated;
  if (auto polished = detail::fc_newton(p, cplx(x, 0.0), extrapolated, 20)) {
    if (std::abs(*polished - v[2]) < 1e-2 * std::max(1.0, std::abs(v[2]))) T = *polished;
  }
  if (sgn * T.imag() < 0) T = std::conj(T);
  return T;
}

/// Hypergeometric series pFq(a; b; z) for real parameters and 0 <= z < 1.
[[nodiscard]] inline double hypergeometric_pfq(const std::vector<double>& a,
                                               const std::vector<double>& b, double z,
                                               double rel_tol = 1e-16) {
  double term = 1.0, sum = 1.0;
  int small = 0;
  for (int n = 0; n < 200000; ++n) {
    double r = z / double(n + 1);
    for (double ai : a) r *= ai + n;
    for (double bi : b) r /= bi + n;
    term *= r;
    sum += term;
    if (term == 0.0) return sum;
    if (std::abs(term) <= rel_tol * std::abs(sum)) {
      if (++small >= 2) return sum;
    } else {
      small = 0;
    }
  }
  throw EndpointRegime("hypergeometric series failed to converge");
}

/// Branch-tracked Fuss-Catalan state for one order p: T_p, P_p, rho and omega.
class DensityEvaluator {
public:
  static constexpr double kSeriesSafety = 0.95;

  explicit DensityEvaluator(int p, Method method = Method::automatic)
      : p_(p), method_(method) {
    detail::require_order(p);
    uc_ = critical_point(p);
    edge_ = rtensor::support_edge(p);
    for (int k = 1; k <= p - 1; ++k) {
      Term term;
      term.k = k;
      // log |Lambda_{k,p}| with the sign tracked separately
      double log_mag = -1.5 * std::log(double(p - 1)) + 0.5 * std::log(p / (2 * std::numbers::pi)) +
                       (double(k) / p) * std::log(uc_);
      int sign = 1;
      for (int j = 1; j <= p - 1; ++j) {
        if (j == k) continue;
        const double arg = double(j - k) / p;
        log_mag += std::lgamma(arg);
        sign *= detail::gamma_sign(arg);
      }
      bool vanishes = false;
      for (int j = 1; j <= p - 1; ++j) {
        const double arg = double(j + 1) / (p - 1) - double(k) / p;
        if (detail::is_nonpositive_integer(arg)) {
          vanishes = true;  // 1/Gamma vanishes at poles
          break;
        }
        log_mag -= std::lgamma(arg);
        sign *= detail::gamma_sign(arg);
      }
      term.lambda = vanishes ? 0.0 : sign * std::exp(log_mag);
      for (int j = 1; j <= p - 1; ++j)
        term.a.push_back(1.0 - double(1 + j) / (p - 1) + double(k) / p);
      for (int j = 1; j <= p - 1; ++j)
        if (j != k) term.b.push_back(1.0 + double(k - j) / p);
      terms_.push_back(std::move(term));
    }
  }

  [[nodiscard]] int p() const noexcept { return p_; }
  [[nodiscard]] double u_c() const noexcept { return uc_; }
  [[nodiscard]] double support_edge() const noexcept { return edge_; }
  [[nodiscard]] Method method() const noexcept { return method_; }

  /// Lambda_{k,p}, k = 1..p-1.
  [[nodiscard]] double lambda(int k) const { return terms_.at(k - 1).lambda; }

  [[nodiscard]] cplx T(cplx u) const { return fc_function(p_, u); }

  /// P_p(x) from the hypergeometric representation.
  [[nodiscard]] double pp_hypergeometric(double x) const {
    check_x(x);
    if (x == 1.0 / uc_) return 0.0;
    const double z = uc_ * x;
    if (z > kSeriesSafety)
      throw EndpointRegime("P_p series requested at u_c x = " + std::to_string(z) +
                           " > " + std::to_string(kSeriesSafety) + "; use root tracking");
    double sum = 0.0;
    for (const auto& t : terms_) {
      if (t.lambda == 0.0) continue;
      sum += t.lambda * std::pow(x, double(t.k - p_) / p_) * hypergeometric_pfq(t.a, t.b, z);
    }
    return std::max(sum, 0.0);
  }

  /// P_p(x) = Im T_p(1/x + i0) / (pi x).
  [[nodiscard]] double pp_roots(double x) const {
    check_x(x);
    if (x * uc_ >= 1.0) return 0.0;
    const cplx T = fc_function_boundary(p_, 1.0 / x, Side::above);
    return std::max(T.imag(), 0.0) / (std::numbers::pi * x);
  }

  [[nodiscard]] double pp(double x) const {
    switch (method_) {
    case Method::hypergeometric: return pp_hypergeometric(x);
    case Method::root_tracking: return pp_roots(x);
    default:
      check_x(x);
      return uc_ * x > kSeriesSafety ? pp_roots(x) : pp_hypergeometric(x);
    }
  }

  [[nodiscard]] double rho(double y) const {
    const double ay = std::abs(y);
    if (ay >= edge_) return 0.0;
    if (ay == 0.0) return p_ == 2 ? 1.0 / std::numbers::pi : std::numeric_limits<double>::infinity();
    return ay * pp(ay * ay);
  }

  [[nodiscard]] double rho_roots(double y) const {
    detail::require(y != 0.0, "wigner_density_roots: y must be nonzero");
    const double ay = std::abs(y);
    if (ay >= edge_) return 0.0;
    const cplx T = fc_function_boundary(p_, 1.0 / (y * y), Side::above);
    return std::max(T.imag(), 0.0) / (std::numbers::pi * ay);
  }

  /// Expected resolvent w^{-1} T_p(w^{-2}).
  [[nodiscard]] cplx omega(cplx w) const {
    if (w.imag() == 0.0 && std::abs(w.real()) <= edge_)
      throw CutContact("expected_resolvent evaluated on the cut [-edge, edge]");
    return fc_function(p_, 1.0 / (w * w)) / w;
  }

  /// Integrates g(x) P_p(x) over (0, 1/u_c) after x = sin^p(t)/u_c, which
  /// removes both the x^{1/p-1} singularity at 0 and the square root at the edge.
  template <class G>
  [[nodiscard]] auto integrate_against_density(G&& g, double rel_tol = 1e-13) const {
    const auto integrand = [&](double t) {
      const double s = std::sin(t), c = std::cos(t);
      const double x = std::pow(s, p_) / uc_;
      const double dx = p_ * std::pow(s, p_ - 1) * c / uc_;
      if (dx == 0.0 || x <= 0.0 || x * uc_ >= 1.0) return decltype(g(x))(0.0);
      return g(x) * (pp(x) * dx);
    };
    return quad::integrate_doubling(integrand, 0.0, std::numbers::pi / 2, rel_tol, 4, 1 << 10);
  }

  /// Moments int_0^{1/u_c} x^n P_p(x) dx for n = 0..n_max, sharing density
  /// evaluations between orders.
  [[nodiscard]] std::vector<double> moments(int n_max, double rel_tol = 1e-12) const {
    detail::require(n_max >= 0, "density_moment: n must be >= 0");
    using boost::math::quadrature::gauss;
    const auto& nodes = gauss<double, quad::kPanelPoints>::abscissa();
    const auto& weights = gauss<double, quad::kPanelPoints>::weights();
    const auto pass = [&](int panels) {
      std::vector<double> acc(n_max + 1, 0.0);
      const double width = (std::numbers::pi / 2) / panels;
      for (int k = 0; k < panels; ++k) {
        const double mid = (k + 0.5) * width, half = 0.5 * width;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          for (double sgn : {-1.0, 1.0}) {
            if (i == 0 && sgn < 0 && nodes[0] == 0.0) continue;
            const double t = mid + sgn * half * nodes[i];
            const double s = std::sin(t), c = std::cos(t);
            const double x = std::pow(s, p_) / uc_;
            if (x <= 0.0 || x * uc_ >= 1.0) continue;
            const double base = half * weights[i] * pp(x) * p_ * std::pow(s, p_ - 1) * c / uc_;
            double xn = 1.0;
            for (int n = 0; n <= n_max; ++n) {
              acc[n] += base * xn;
              xn *= x;
            }
          }
        }
      }
      return acc;
    };
    auto prev = pass(4);
    for (int panels = 8; panels <= 1024; panels *= 2) {
      auto cur = pass(panels);
      bool ok = true;
      for (int n = 0; n <= n_max; ++n)
        if (std::abs(cur[n] - prev[n]) > rel_tol * std::abs(cur[n])) ok = false;
      if (ok) return cur;
      prev = std::move(cur);
    }
    throw QuadratureFailure("density moments did not converge", std::abs(prev.back()));
  }

  [[nodiscard]] double moment(int n) const { return moments(n).back(); }

  /// int rho(y) y^k dy over the full support (odd k vanish by symmetry).
  [[nodiscard]] double signed_moment(int k) const {
    detail::require(k >= 0, "signed_moment: k must be >= 0");
    // split into y > 0 and y < 0 halves and evaluate both numerically
    const auto half = [&](double sign) {
      return integrate_against_density(
          [&](double x) { return 0.5 * std::pow(sign * std::sqrt(x), k); });
    };
    return half(1.0) + half(-1.0);
  }

  /// Numerical Stieltjes transform int rho(y)/(w - y) dy.
  [[nodiscard]] cplx stieltjes(cplx w) const {
    return integrate_against_density([&](double x) { return w / (w * w - x); });
  }

private:
  struct Term {
    int k{};
    double lambda{};
    std::vector<double> a, b;
  };

  void check_x(double x) const {
    if (!(x > 0.0) || x > 1.0 / uc_ * (1 + 1e-15))
      throw DomainError("P_p argument outside (0, 1/u_c]");
  }

  int p_;
  Method method_;
  double uc_{}, edge_{};
  std::vector<Term> terms_;
};

[[nodiscard]] inline double pp_density(int p, double x) {
  return DensityEvaluator(p, Method::hypergeometric).pp_hypergeometric(x);
}

[[nodiscard]] inline double wigner_density(int p, double y, Method method = Method::automatic) {
  return DensityEvaluator(p, method).rho(y);
}

[[nodiscard]] inline double wigner_density_roots(int p, double y) {
  return DensityEvaluator(p, Method::root_tracking).rho_roots(y);
}

[[nodiscard]] inline cplx expected_resolvent(int p, cplx w) {
  return DensityEvaluator(p).omega(w);
}

[[nodiscard]] inline double density_moment(int p, int n) { return DensityEvaluator(p).moment(n); }

[[nodiscard]] inline cplx density_stieltjes(int p, cplx w) {
  return DensityEvaluator(p).stieltjes(w);
}

} // namespace rtensor
