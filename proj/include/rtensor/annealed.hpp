#pragma once

// Large-N annealed computations: the radial integral of rho^{-1} e^{N f(rho)},
// its saddle point, the resolvent built from it, and the spiked-model saddle
// system with its detection threshold and singular locus.

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace rtensor {

enum class AnnealedMode { quadrature, saddle };
enum class Contour { plus, minus };

[[nodiscard]] inline std::string to_string(AnnealedMode m) {
  return m == AnnealedMode::quadrature ? "quadrature" : "saddle";
}

namespace detail {

inline void check_annealed_w(int p, cplx w) {
  require_order(p);
  if (w.imag() == 0.0 && std::abs(w.real()) <= support_edge(p))
    throw CutContact("annealed: w lies on the cut [-" + std::to_string(support_edge(p)) + ", " +
                     std::to_string(support_edge(p)) + "]");
}

/// f(rho) = ln rho - rho^2/2 + rho^{2p}/(2 p w^2).
[[nodiscard]] inline cplx radial_f(int p, cplx w, cplx rho) {
  const cplx r2 = rho * rho;
  return std::log(rho) - 0.5 * r2 + std::pow(r2, p) / (2.0 * p * w * w);
}

/// T_p on [0, u_c], clamped to the branch point value at the edge.
[[nodiscard]] inline double fc_real_clamped(int p, double u) {
  const double uc = critical_point(p);
  if (u >= uc) return critical_value(p);
  return fc_function_real(p, u);
}

} // namespace detail

/// Saddle of f: rho_0^2 = T_p(w^{-2}).
[[nodiscard]] inline cplx annealed_saddle_rho_sq(int p, cplx w) {
  detail::check_annealed_w(p, w);
  const cplx u = 1.0 / (w * w);
  if (u.imag() == 0.0 && u.real() >= 0.0) return detail::fc_real_clamped(p, u.real());
  return fc_function(p, u);
}

/// Contour tilt theta_pm = (psi -+ pi/2)/p. The annealed weight depends on w^2
/// only, so psi is taken modulo pi in (-pi/2, pi/2].
[[nodiscard]] inline double annealed_tilt(int p, cplx w, Contour side) {
  double psi = std::arg(w);
  if (psi > std::numbers::pi / 2) psi -= std::numbers::pi;
  if (psi <= -std::numbers::pi / 2) psi += std::numbers::pi;
  return (psi + (side == Contour::plus ? -1.0 : 1.0) * std::numbers::pi / 2) / p;
}

/// (1/N) ln of the radial integral, w-independent constants dropped. The
/// quadrature runs along 0 -> rho_0 -> rho_0 + t e^{i theta_pm}, which ends in
/// the same convergence sector as the ray e^{i theta_pm} R_+.
[[nodiscard]] inline cplx annealed_logZ(int p, cplx w, int N, AnnealedMode mode, Contour side = Contour::plus,
                                        double rel_tol = 1e-13) {
  const cplx rho0 = std::sqrt(annealed_saddle_rho_sq(p, w));
  const cplx f0 = detail::radial_f(p, w, rho0);
  if (mode == AnnealedMode::saddle) return f0;
  detail::require(N >= 1 && N <= 10000, "annealed_logZ: quadrature mode needs 1 <= N <= 10^4");
  const auto integrand = [&](cplx rho) { return std::exp(double(N) * (detail::radial_f(p, w, rho) - f0)) / rho; };
  const cplx seg = quad::integrate_doubling([&](double t) { return integrand(t * rho0) * rho0; }, 0.0, 1.0,
                                            rel_tol, 4, 1 << 14);
  const cplx dir = std::polar(1.0, annealed_tilt(p, w, side));
  const auto ray = [&](double s) { return integrand(rho0 + s * dir) * dir; };
  const double R = quad::truncation_radius([&](double s) { return std::abs(ray(s)); }, 1.0, 1e-18, 1e4);
  const cplx tail = quad::integrate_doubling(ray, 0.0, R, rel_tol, 4, 1 << 14);
  return f0 + std::log(seg + tail) / double(N);
}

/// omega(w) = 1/w - p d/dw annealed_logZ. The saddle mode is (1/w) T_p(w^{-2});
/// the quadrature mode differentiates with a five-point stencil, step 1e-3 |w|.
[[nodiscard]] inline cplx annealed_resolvent(int p, cplx w, int N, AnnealedMode mode, Contour side = Contour::plus) {
  if (mode == AnnealedMode::saddle) return annealed_saddle_rho_sq(p, w) / w;
  const double h = 1e-3 * std::abs(w);
  const auto F = [&](double k) { return annealed_logZ(p, w + k * h, N, mode, side); };
  const cplx d = (-F(2) + 8.0 * F(1) - 8.0 * F(-1) + F(-2)) / (12.0 * h);
  return 1.0 / w - double(p) * d;
}

// ---------------------------------------------------------------- spiked model

struct SpikeSaddle {
  double theta{};
  cplx rho_sq;
  cplx f_value;
  double residual_theta{};
  double residual_rho{};
};

struct SaddleReport {
  int p{};
  cplx w;
  double b{};
  std::vector<SpikeSaddle> saddles;
  int dominant_index{};
  /// Set when the theta_1 search itself failed; theta_0 is still reported.
  std::optional<std::string> theta1_failure;
};

/// f(theta, rho) evaluated from its definition.
[[nodiscard]] inline cplx spike_f(int p, cplx w, double b, double theta, cplx rho_sq) {
  const cplx rho = std::sqrt(rho_sq);
  const double c = std::cos(theta);
  return std::log(std::sin(theta)) + std::log(rho) - 0.5 * rho_sq + b / (w * double(p)) * std::pow(rho, p) * std::pow(c, p) +
         std::pow(rho_sq, p) / (2.0 * p * w * w);
}

/// Partial derivatives (d_theta f, d_rho f).
[[nodiscard]] inline std::pair<cplx, cplx> spike_gradient(int p, cplx w, double b, double theta, cplx rho_sq) {
  const cplx rho = std::sqrt(rho_sq);
  const double c = std::cos(theta), s = std::sin(theta);
  const cplx dth = c / s - b / w * std::pow(rho, p) * std::pow(c, p - 1) * s;
  const cplx drho = 1.0 / rho - rho + b / w * std::pow(rho, p - 1) * std::pow(c, p) + std::pow(rho, 2 * p - 1) / (w * w);
  return {dth, drho};
}

/// rho^2(theta) = T_p(w^{-2} sin^{2-2p} theta) / sin^2 theta on the principal branch.
[[nodiscard]] inline cplx spike_rho_sq(int p, cplx w, double theta) {
  const double s2 = std::sin(theta) * std::sin(theta);
  const cplx u = 1.0 / (w * w) * std::pow(s2, 1 - p);
  const cplx T = (u.imag() == 0.0 && u.real() >= 0.0) ? cplx(detail::fc_real_clamped(p, u.real())) : fc_function(p, u);
  return T / s2;
}

namespace detail {

[[nodiscard]] inline SpikeSaddle make_saddle(int p, cplx w, double b, double theta, cplx rho_sq) {
  const auto [dth, drho] = spike_gradient(p, w, b, theta, rho_sq);
  return {theta, rho_sq, spike_f(p, w, b, theta, rho_sq), std::abs(dth), std::abs(drho)};
}

} // namespace detail

/// Saddles of f(theta, rho): theta_0 = pi/2 always, plus real theta_1 in
/// (0, pi/2) for real w > 0 when the reduced equation has a root there.
[[nodiscard]] inline SaddleReport spike_saddles(int p, cplx w, double b) {
  detail::require(p >= 3, "spike_saddles: needs p >= 3");
  detail::require(b >= 0.0, "spike_saddles: b must be >= 0");
  SaddleReport rep{p, w, b, {}, 0, std::nullopt};
  const double half_pi = std::numbers::pi / 2;
  rep.saddles.push_back(detail::make_saddle(p, w, b, half_pi, annealed_saddle_rho_sq(p, w)));
  if (b > 0.0 && w.imag() == 0.0 && w.real() > 0.0) {
    const double y = w.real();
    // principal branch needs w^{-2} sin^{2-2p} theta <= u_c
    const double smin = std::pow(1.0 / (y * y * critical_point(p)), 1.0 / (2.0 * p - 2.0));
    if (smin < 1.0) {
      const double th_min = std::asin(smin);
      // g(theta) = (b/y) rho^p cos^{p-2} sin^2 - 1, theta = th_min + (pi/2 - th_min) s^2
      const auto theta_of = [&](double s) { return th_min + (half_pi - th_min) * s * s; };
      const auto g = [&](double s) {
        const double th = theta_of(s);
        // at th_min the argument of T_p is u_c up to rounding that the square-root
        // branch point would amplify, so use T_c there
        const double r2 = s == 0.0 ? critical_value(p) / (smin * smin) : spike_rho_sq(p, y, th).real();
        return b / y * std::pow(r2, 0.5 * p) * std::pow(std::cos(th), p - 2) * std::pow(std::sin(th), 2) - 1.0;
      };
      try {
        std::vector<double> roots;
        const double g0 = g(0.0);
        if (std::abs(g0) < 1e-13) roots.push_back(0.0);
        const int grid = 400;
        double prev_s = 0.0, prev = g0;
        for (int k = 1; k < grid; ++k) {
          const double s = double(k) / grid;
          const double cur = g(s);
          if ((prev < 0) != (cur < 0) && !(k == 1 && std::abs(g0) < 1e-13)) {
            boost::uintmax_t it = 200;
            const auto r = boost::math::tools::toms748_solve(g, prev_s, s, prev, cur,
                                                             boost::math::tools::eps_tolerance<double>(52), it);
            roots.push_back(0.5 * (r.first + r.second));
          }
          prev_s = s;
          prev = cur;
        }
        for (double s : roots) {
          const double th = theta_of(s);
          const cplx r2 = s == 0.0 ? cplx(critical_value(p) / (smin * smin)) : spike_rho_sq(p, y, th);
          rep.saddles.push_back(detail::make_saddle(p, w, b, th, r2));
        }
      } catch (const std::exception& e) {
        rep.theta1_failure = std::string("theta_1 root search failed: ") + e.what();
      }
    }
  }
  for (std::size_t i = 1; i < rep.saddles.size(); ++i)
    if (rep.saddles[i].f_value.real() > rep.saddles[rep.dominant_index].f_value.real())
      rep.dominant_index = static_cast<int>(i);
  return rep;
}

// ------------------------------------------------------------------ threshold

/// h(v) = 1 - (p-1) v^{p-2} - b^{-2/(p-2)} / v.
[[nodiscard]] inline double spike_h(int p, double b, double v) {
  return 1.0 - (p - 1) * std::pow(v, p - 2) - std::pow(b, -2.0 / (p - 2)) / v;
}

[[nodiscard]] inline double spike_h_prime(int p, double b, double v) {
  return -(p - 1.0) * (p - 2.0) * std::pow(v, p - 3) + std::pow(b, -2.0 / (p - 2)) / (v * v);
}

/// Location of the maximum of h, from h'(v) = 0.
[[nodiscard]] inline double spike_v_max(int p, double b) {
  return std::pow((p - 1.0) * (p - 2.0), -1.0 / (p - 1)) * std::pow(b, -2.0 / ((p - 1.0) * (p - 2.0)));
}

/// max_{v > 0} h(v) by Brent's method (independent of the closed-form v_m).
[[nodiscard]] inline double spike_h_max_numeric(int p, double b) {
  const auto neg = [&](double v) { return -spike_h(p, b, v); };
  // the maximum lies where both terms are O(1): bracket generously
  const double c = std::pow(b, -2.0 / (p - 2));
  const double lo = 1e-6 * std::min(1.0, c), hi = 10.0 + c;
  boost::uintmax_t it = 500;
  const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 52, it);
  return -r.second;
}

[[nodiscard]] inline double spike_threshold_analytic(int p) {
  detail::require(p >= 3, "spike_threshold: needs p >= 3");
  return std::sqrt(std::pow(p - 1.0, p) / std::pow(p - 2.0, p - 2));
}

struct ThresholdResult {
  int p{};
  double b_t{};
  double b_t_bisection{};
  double y_c_below{};
  double y_c_at{};
  double h_root{};
  double h_at_root{};
  double h_prime_at_root{};
};

/// Threshold both analytically and by bisection on b of max_v h(v) >= 0.
[[nodiscard]] inline ThresholdResult spike_threshold(int p) {
  ThresholdResult r;
  r.p = p;
  r.b_t = spike_threshold_analytic(p);
  double lo = 1e-3, hi = 1.0;
  while (spike_h_max_numeric(p, hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (spike_h_max_numeric(p, mid) >= 0.0 ? hi : lo) = mid;
  }
  r.b_t_bisection = 0.5 * (lo + hi);
  r.y_c_below = std::pow(p, 0.5 * p) / std::pow(p - 1.0, 0.5 * (p - 1));
  r.y_c_at = std::pow(p, 0.5 * p);
  r.h_root = spike_v_max(p, r.b_t);
  r.h_at_root = spike_h(p, r.b_t, r.h_root);
  r.h_prime_at_root = spike_h_prime(p, r.b_t, r.h_root);
  return r;
}

// ------------------------------------------------------------ singular locus

/// y_c from v = y^{-2/((p-1)(p-2))} (p-1)^{-2/(p-2)} p^{p/((p-1)(p-2))}.
[[nodiscard]] inline double y_from_v(int p, double v) {
  const double e = (p - 1.0) * (p - 2.0);
  const double base = v * std::pow(p - 1.0, 2.0 / (p - 2)) * std::pow(double(p), -double(p) / e);
  return std::pow(base, -e / 2.0);
}

[[nodiscard]] inline double v_from_y(int p, double y) {
  const double e = (p - 1.0) * (p - 2.0);
  return std::pow(y, -2.0 / e) * std::pow(p - 1.0, -2.0 / (p - 2)) * std::pow(double(p), double(p) / e);
}

struct SingularLocus {
  int p{};
  double b{};
  double y_c{};
  double theta_c{};
  double rho_c_sq{};
  /// 0 when the theta_0 saddle dominates at y_c, 1 for theta_c.
  int dominant_saddle{};
  double f0{};
  double f1{};
  /// Which root of h(v) = 0 was used: "none" below threshold, "small_v" or "large_v".
  std::string root;
  /// Events met while selecting the root (dominance checks that failed).
  std::vector<std::string> events;
};

/// The non-removable singularity y_c(b) of the spiked resolvent.
[[nodiscard]] inline SingularLocus singular_locus(int p, double b) {
  detail::require(p >= 3, "singular_locus: needs p >= 3");
  detail::require(b >= 0.0, "singular_locus: b must be >= 0");
  SingularLocus out;
  out.p = p;
  out.b = b;
  const double half_pi = std::numbers::pi / 2;
  const double hmax = b > 0.0 ? spike_h(p, b, spike_v_max(p, b)) : -1.0;
  if (b == 0.0 || hmax < -1e-12) {
    out.y_c = std::pow(p, 0.5 * p) / std::pow(p - 1.0, 0.5 * (p - 1));
    out.theta_c = half_pi;
    out.rho_c_sq = critical_value(p);
    out.root = "none";
    out.f0 = spike_f(p, out.y_c, b, half_pi, out.rho_c_sq).real();
    out.f1 = out.f0;
    return out;
  }
  const double vm = spike_v_max(p, b);
  std::vector<std::pair<std::string, double>> candidates;
  if (hmax <= 1e-12) {
    candidates.emplace_back("small_v", vm);
  } else {
    const auto h = [&](double v) { return spike_h(p, b, v); };
    const auto solve = [&](double a, double c) {
      boost::uintmax_t it = 200;
      const auto r = boost::math::tools::toms748_solve(h, a, c, boost::math::tools::eps_tolerance<double>(52), it);
      return 0.5 * (r.first + r.second);
    };
    double lo = vm;
    while (h(lo) > 0.0) lo *= 0.5;
    double hi = vm;
    while (h(hi) > 0.0) hi *= 2.0;
    // the smaller v maps to the larger y_c, continuous from p^{p/2} at b_t
    candidates.emplace_back("small_v", solve(lo, vm));
    candidates.emplace_back("large_v", solve(vm, hi));
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& [name, v] = candidates[k];
    const double y = y_from_v(p, v);
    const double s2 = std::pow(y, -2.0 / (p - 1)) * std::pow(double(p), double(p) / (p - 1)) / (p - 1.0);
    if (!(s2 > 0.0 && s2 <= 1.0)) throw RootFindFailure("singular_locus: root gives sin^2 theta_c outside (0, 1]");
    const double th = std::asin(std::sqrt(s2));
    const double r2 = std::pow(y, 2.0 / (p - 1)) * std::pow(double(p), -1.0 / (p - 1));
    const double f0 = spike_f(p, y, b, half_pi, annealed_saddle_rho_sq(p, y)).real();
    const double f1 = spike_f(p, y, b, th, r2).real();
    const bool dominant = f1 > f0;
    if (dominant || k == 0) {
      out.y_c = y;
      out.theta_c = th;
      out.rho_c_sq = r2;
      out.f0 = f0;
      out.f1 = f1;
      out.root = name;
      out.dominant_saddle = dominant ? 1 : 0;
    }
    if (dominant) break;
    out.events.push_back("theta_c saddle not dominant at the " + name + " root (Re f0 = " + std::to_string(f0) +
                         ", Re f1 = " + std::to_string(f1) + ")");
  }
  return out;
}

} // namespace rtensor
