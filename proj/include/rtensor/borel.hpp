#pragma once

// Zero-dimensional phi^p model: sector partition functions on tilted rays,
// perturbative and Borel coefficients, Taylor-rest bounds, discontinuities at
// the cuts and the instantons responsible for them.
//
// Every integral is a sum of two straight rays through the origin. The real
// type is a template parameter so that discontinuities, which are
// exponentially small differences of O(1) numbers, can be done in 50 digits.

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace rtensor::borel {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;
using HighReal = boost::multiprecision::cpp_bin_float_50;
using HighComplex = boost::multiprecision::cpp_complex_50;

template <class Real>
using Complex = std::conditional_t<std::is_floating_point_v<Real>, std::complex<Real>, HighComplex>;

struct SectorSpec {
  int p;
  int q;
  double omega;
  double alpha_q;
  int eta;

  static SectorSpec make(int p, int q) {
    detail::require_order(p, 3);
    if (q < 0 || q > p - 3)
      throw DomainError("sector index q must lie in [0, p-3], got " + std::to_string(q));
    const double w = 2.0 * boost::math::constants::pi<double>() / (p - 2);
    return {p, q, w, (q + 0.5) * w, p % 2 == 1 ? 1 : 2};
  }
};

/// |g| e^{i alpha} with alpha kept as given; it is not reduced mod 2 pi,
/// since g^{(p-2)/2} depends on the branch.
template <class Real = double>
struct Polar {
  Real abs{0};
  Real arg{0};
};

/// Deformations of the canonical two-ray contour. `tilt` rotates the outgoing
/// ray and `tilt_back` the incoming one; each must stay inside the sector where
/// its integrand decays. `radius` = 0 picks the truncation adaptively. `nodes`
/// is the initial number of Gauss-Legendre nodes per ray.
struct ContourSpec {
  double tilt{0.0};
  double tilt_back{0.0};
  double radius{0.0};
  int nodes{64};
};

namespace detail {

template <class Real>
Real pi() {
  return boost::math::constants::pi<Real>();
}

// tolerances scale with the working precision
template <class Real>
Real precision_constant(double low, const char* high) {
  if constexpr (std::is_floating_point_v<Real>)
    return Real(low);
  else
    return Real(high);
}

template <class Real>
Real default_tol() {
  return precision_constant<Real>(1e-13, "1e-45");
}

template <class Real>
Real truncation_ratio() {
  return precision_constant<Real>(1e-18, "1e-55");
}

/// e^{i beta} * int_0^R exp(-e^{2 i beta} r^2 / 2 + (kr + i ki) r^p) dr
template <class Real>
Complex<Real> ray_integral(int p, Real beta, Real kr, Real ki, const ContourSpec& c) {
  using std::cos;
  using std::exp;
  using std::pow;
  using std::sin;
  using std::sqrt;
  const Real c2 = cos(2 * beta), s2 = sin(2 * beta);
  const Real tiny = precision_constant<Real>(1e-14, "1e-45");
  const Real kabs = sqrt(kr * kr + ki * ki);
  if (kr > tiny * kabs || (kr >= -tiny * kabs && c2 <= 0))
    throw OutsideWedge("ray at angle " + std::to_string(static_cast<double>(beta)) +
                       " leaves the convergence sector");
  const auto exponent_re = [&](Real r) { return -c2 * r * r / 2 + kr * pow(r, p); };
  Real radius = Real(c.radius);
  if (c.radius <= 0) {
    radius = quad::truncation_radius([&](Real r) { return Real(exp(exponent_re(r))); }, Real(1),
                                     truncation_ratio<Real>(), Real(1e6));
  }
  const auto f = [&](Real r) {
    const Real rp = pow(r, p);
    const Real mag = exp(exponent_re(r));
    const Real ph = -s2 * r * r / 2 + ki * rp;
    return Complex<Real>(mag * cos(ph), mag * sin(ph));
  };
  const int panels = std::max(2, c.nodes / static_cast<int>(quad::kPanelPoints));
  const auto v = quad::integrate_doubling(f, Real(0), radius, default_tol<Real>(), panels, 1 << 15);
  return Complex<Real>(cos(beta), sin(beta)) * v;
}

/// (2 pi)^{-1/2} over the line through 0 at angle theta, with the coupling term
/// i s x^p on the canonical line. Deformations from `c` rotate each half.
template <class Real>
Complex<Real> two_ray(int p, Real theta, Real s, const ContourSpec& c) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Real d1 = Real(c.tilt), d2 = Real(c.tilt_back);
  // i s e^{i p d}: the coupling coefficient after rotating a ray by d
  const Real out_re = -s * sin(p * d1), out_im = s * cos(p * d1);
  const Real sign = p % 2 == 0 ? Real(1) : Real(-1);
  const Real in_re = -sign * s * sin(p * d2), in_im = sign * s * cos(p * d2);
  const auto out = ray_integral<Real>(p, theta + d1, out_re, out_im, c);
  const auto in = ray_integral<Real>(p, theta + pi<Real>() + d2, in_re, in_im, c);
  const Real norm = 1 / sqrt(2 * pi<Real>());
  return (out - in) * Complex<Real>(norm, Real(0));
}

} // namespace detail

/// a_n = (np)! / (n! (np/2)! (2^{p/2} p)^n), the coefficient of g^{n(p-2)/2}.
inline cpp_rational perturbative_coeff(int p, int n) {
  rtensor::detail::require_order(p, 2);
  if (n < 0) throw DomainError("n must be >= 0");
  if ((n * p) % 2 != 0)
    throw ParityError("n*p must be even, got n=" + std::to_string(n) + ", p=" + std::to_string(p));
  const auto fact = [](int k) {
    cpp_int r = 1;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
  };
  // (2^{p/2})^n = 2^{np/2}, an integer since np is even
  const cpp_int den = fact(n) * fact(n * p / 2) * (cpp_int(1) << (n * p / 2)) * pow(cpp_int(p), n);
  return cpp_rational(fact(n * p), den);
}

/// Coefficient of t^{n(p-2)/2} in the Borel transform B(t): a_n / (n(p-2)/2)!.
inline cpp_rational borel_coeff(int p, int n) {
  const cpp_rational a = perturbative_coeff(p, n);
  cpp_int f = 1;
  for (int i = 2; i <= n * (p - 2) / 2; ++i) f *= i;
  return a / f;
}

/// Partial sum of B(t) over terms with n < n_terms.
inline std::complex<double> borel_transform(int p, std::complex<double> t, int n_terms) {
  std::complex<double> sum = 0.0;
  for (int n = 0; n < n_terms; ++n) {
    if ((n * p) % 2 != 0) continue;
    sum += borel_coeff(p, n).convert_to<double>() * std::pow(t, 0.5 * n * (p - 2));
  }
  return sum;
}

/// Tilt of the sector-q contour: theta_q = (p-2)/(2p) (alpha_q - alpha).
inline double sector_tilt(int p, int q, double alpha) {
  const auto s = SectorSpec::make(p, q);
  return (p - 2.0) / (2.0 * p) * (s.alpha_q - alpha);
}

/// Z_q(g) = int over e^{i theta_q} R of [d phi] exp(-phi^2/2 + g^{(p-2)/2} phi^p / p).
template <class Real = double>
Complex<Real> sector_Z(int p, const Polar<Real>& g, int q, const ContourSpec& c = {}) {
  using std::abs;
  using std::pow;
  (void)SectorSpec::make(p, q);
  if (g.abs < 0) throw DomainError("|g| must be >= 0");
  if (c.nodes < 64) throw DomainError("contour needs at least 64 nodes");
  const Real pi = detail::pi<Real>();
  const Real omega = 2 * pi / (p - 2);
  const Real alpha_q = (Real(q) + Real(0.5)) * omega;
  if (abs(g.arg - alpha_q) >= pi / 2 + pi / (p - 2))
    throw OutsideWedge("arg g = " + std::to_string(static_cast<double>(g.arg)) +
                       " is outside the extended sector " + std::to_string(q));
  const Real theta = Real(p - 2) / (2 * p) * (alpha_q - g.arg);
  // on the canonical line g^{(p-2)/2} e^{i p theta} = i (-1)^q |g|^{(p-2)/2}
  const Real s = (q % 2 == 0 ? 1 : -1) * pow(g.abs, Real(p - 2) / 2) / p;
  return detail::two_ray<Real>(p, theta, s, c);
}

/// Convenience overload: the branch of arg g nearest to the bisectrix is used.
inline std::complex<double> sector_Z(int p, std::complex<double> g, int q, const ContourSpec& c = {}) {
  const auto s = SectorSpec::make(p, q);
  double a = std::arg(g);
  const double two_pi = 2 * boost::math::constants::pi<double>();
  a += two_pi * std::round((s.alpha_q - a) / two_pi);
  return sector_Z<double>(p, Polar<double>{std::abs(g), a}, q, c);
}

/// Z(g) on the principal sheet: the sector containing arg g in [0, 2 pi).
/// On a boundary qω the sector q (the side arg > qω) is used.
inline std::complex<double> partition_function(int p, std::complex<double> g, const ContourSpec& c = {}) {
  rtensor::detail::require_order(p, 3);
  const double two_pi = 2 * boost::math::constants::pi<double>();
  double a = std::arg(g);
  if (a < 0) a += two_pi;
  const double omega = two_pi / (p - 2);
  const int q = std::min(p - 3, static_cast<int>(std::floor(a / omega)));
  return sector_Z<double>(p, Polar<double>{std::abs(g), a}, q, c);
}

/// Z_q(|g| e^{i(qω)+}) - Z_{q-1}(|g| e^{i(qω)-}), with Z_{-1} = Z_{p-3} evaluated at 2π.
template <class Real = HighReal>
std::complex<double> discontinuity(int p, double g_abs, int q, const ContourSpec& c = {}) {
  (void)SectorSpec::make(p, q);
  if (!(g_abs > 0)) throw DomainError("|g| must be > 0");
  const Real omega = 2 * detail::pi<Real>() / (p - 2);
  const Real at = Real(q) * omega;
  const int below = q == 0 ? p - 3 : q - 1;
  const Real at_below = q == 0 ? Real(p - 2) * omega : at;
  const auto hi = sector_Z<Real>(p, Polar<Real>{Real(g_abs), at}, q, c);
  const auto lo = sector_Z<Real>(p, Polar<Real>{Real(g_abs), at_below}, below, c);
  const auto d = hi - lo;
  return {static_cast<double>(real(d)), static_cast<double>(imag(d))};
}

struct Instanton {
  int r;
  std::complex<double> phi;
  std::complex<double> action;
  bool real;  // trapped by the real contour of a sector adjacent to the cut
};

/// Saddles phi_r = |g|^{-1/2} e^{iω(r - q/2)} of the action at g on the cut qω,
/// with S(phi_r) = (p-2)/(2p|g|) e^{2iω(r - q/2)}.
inline std::vector<Instanton> instantons(int p, double g_abs, int q) {
  const auto s = SectorSpec::make(p, q);
  if (!(g_abs > 0)) throw DomainError("|g| must be > 0");
  std::vector<Instanton> out;
  for (int r = 0; r <= p - 3; ++r) {
    const double ang = s.omega * (r - 0.5 * q);
    const int twice = 2 * r - q;  // phi_r real iff (2r - q)/(p - 2) is an integer
    const bool real = twice % (p - 2) == 0;
    out.push_back({r, std::polar(1.0 / std::sqrt(g_abs), ang),
                   std::polar((p - 2.0) / (2.0 * p * g_abs), 2 * ang), real});
  }
  return out;
}

/// Number of real instantons trapped at the cut q: eta for every q when p is
/// odd; 2 on even and 0 on odd cuts when p is even.
inline int trapped_instantons(int p, int q) {
  (void)SectorSpec::make(p, q);
  return (q % 2 == 0 ? 1 : 0) + ((p + q) % 2 == 0 ? 1 : 0);
}

/// (i eta / sqrt(p-2)) e^{-(p-2)/(2p|g|)}.
inline std::complex<double> instanton_discontinuity(int p, double g_abs) {
  rtensor::detail::require_order(p, 3);
  const int eta = p % 2 == 1 ? 1 : 2;
  return {0.0, eta / std::sqrt(p - 2.0) * std::exp(-(p - 2.0) / (2.0 * p * g_abs))};
}

/// Leading instanton estimate at a specific cut, zero where nothing is trapped.
inline std::complex<double> instanton_discontinuity(int p, double g_abs, int q) {
  const int n = trapped_instantons(p, q);
  return {0.0, n / std::sqrt(p - 2.0) * std::exp(-(p - 2.0) / (2.0 * p * g_abs))};
}

/// sum_{k<n, kp even} a_k g^{k(p-2)/2} with g^{(p-2)/2} on the branch of g.arg.
template <class Real = double>
Complex<Real> perturbative_sum(int p, const Polar<Real>& g, int n) {
  using std::cos;
  using std::pow;
  using std::sin;
  Complex<Real> sum(Real(0), Real(0));
  const Real half = Real(p - 2) / 2;
  for (int k = 0; k < n; ++k) {
    if ((k * p) % 2 != 0) continue;
    const Real a = static_cast<Real>(perturbative_coeff(p, k));
    const Real mag = a * pow(g.abs, half * k), ph = g.arg * half * k;
    sum += Complex<Real>(mag * cos(ph), mag * sin(ph));
  }
  return sum;
}

struct RestCheck {
  int n;
  double lhs;
  double bound;
  bool holds;
};

/// Rest bound |Z_q - sum_{k<n}| <= (1/n!) (|g|^{n(p-2)/2} / p^n)
///   ((np)! / (2^{np/2} (np/2)!)) cos^{-(np+1/2)}[(p-2)(alpha_q - alpha)/p]
/// for every n in `orders`, with Z_q computed once. Real = HighReal resolves
/// rests far below 1e-15.
template <class Real = double>
std::vector<RestCheck> taylor_rest_table(int p, const Polar<double>& g, int q, const std::vector<int>& orders) {
  using std::abs;
  const auto spec = SectorSpec::make(p, q);
  for (int n : orders) {
    if (n < 0 || n > 12) throw DomainError("rest order n must lie in [0, 12]");
    if ((n * p) % 2 != 0)
      throw ParityError("rest bound needs n*p even, got n=" + std::to_string(n));
  }
  const Polar<Real> gr{Real(g.abs), Real(g.arg)};
  const auto z = sector_Z<Real>(p, gr, q);
  const double c = std::cos((p - 2.0) * (spec.alpha_q - g.arg) / p);
  std::vector<RestCheck> out;
  for (int n : orders) {
    const double lhs = static_cast<double>(abs(z - perturbative_sum<Real>(p, gr, n)));
    cpp_int fnp = 1, fhalf = 1, fn = 1;
    for (int i = 2; i <= n * p; ++i) fnp *= i;
    for (int i = 2; i <= n * p / 2; ++i) fhalf *= i;
    for (int i = 2; i <= n; ++i) fn *= i;
    const cpp_rational moment(fnp, fhalf * (cpp_int(1) << (n * p / 2)));
    const double bound = (moment / fn).convert_to<double>() * std::pow(g.abs, 0.5 * n * (p - 2)) /
                         std::pow(double(p), n) * std::pow(c, -(n * p + 0.5));
    out.push_back({n, lhs, bound, lhs <= bound});
  }
  return out;
}

template <class Real = double>
RestCheck taylor_rest_check(int p, const Polar<double>& g, int q, int n) {
  return taylor_rest_table<Real>(p, g, q, {n}).front();
}

enum class Halfplane { plus, minus };

/// Z±(w) = int over e^{i theta±} R of [d phi] exp(-phi^2/2 + phi^p / (p w)),
/// theta± = (psi ∓ pi/2)/p, valid for |psi ∓ pi/2| < p pi / 4.
template <class Real = double>
Complex<Real> rescaled_Z(int p, const Polar<Real>& w, Halfplane h, const ContourSpec& c = {}) {
  using std::abs;
  rtensor::detail::require_order(p, 3);
  if (!(w.abs > 0)) throw DomainError("|w| must be > 0");
  const Real pi = detail::pi<Real>();
  const Real shift = h == Halfplane::plus ? pi / 2 : -pi / 2;
  if (abs(w.arg - shift) >= p * pi / 4)
    throw OutsideWedge("arg w = " + std::to_string(static_cast<double>(w.arg)) +
                       " is outside the continuation domain of this half-plane");
  const Real theta = (w.arg - shift) / p;
  // e^{i p theta} / (p w) = ∓ i / (p |w|)
  const Real s = (h == Halfplane::plus ? Real(-1) : Real(1)) / (p * w.abs);
  return detail::two_ray<Real>(p, theta, s, c);
}

/// Z+(y) - Z-(y) at real y != 0 in 50 digits.
inline std::complex<double> rescaled_discontinuity(int p, double y) {
  if (y == 0.0) throw DomainError("y must be nonzero");
  const HighReal pi = detail::pi<HighReal>();
  const HighReal psi_plus = y > 0 ? HighReal(0) : pi;
  const HighReal psi_minus = y > 0 ? HighReal(0) : -pi;
  const HighReal a = std::abs(y);
  const auto d = rescaled_Z<HighReal>(p, {a, psi_plus}, Halfplane::plus) -
                 rescaled_Z<HighReal>(p, {a, psi_minus}, Halfplane::minus);
  return {static_cast<double>(real(d)), static_cast<double>(imag(d))};
}

struct DiscontinuityRow {
  int p;
  int q;
  double g_abs;
  std::complex<double> disc;
  std::complex<double> instanton;
  double ratio;  // Re(disc / instanton); NaN where no instanton is trapped
};

/// Discontinuity against the instanton estimate over a list of |g|, in parallel.
inline std::vector<DiscontinuityRow> discontinuity_sweep(int p, int q, const std::vector<double>& g_abs,
                                                         int threads = 1) {
  (void)SectorSpec::make(p, q);
  std::vector<DiscontinuityRow> rows(g_abs.size());
  std::vector<std::exception_ptr> errors(g_abs.size());
  const auto work = [&](std::size_t i) {
    try {
      const auto d = discontinuity(p, g_abs[i], q);
      const auto inst = instanton_discontinuity(p, g_abs[i], q);
      const double ratio = inst == std::complex<double>(0.0) ? std::numeric_limits<double>::quiet_NaN()
                                                             : (d / inst).real();
      rows[i] = {p, q, g_abs[i], d, inst, ratio};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(g_abs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < g_abs.size(); i += nt) work(i);
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

} // namespace rtensor::borel
