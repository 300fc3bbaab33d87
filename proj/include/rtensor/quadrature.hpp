#pragma once

// Composite Gauss-Legendre quadrature with panel doubling, generic over the
// real type (double or a Boost.Multiprecision float) and the integrand's value
// type (real or complex). Node tables come from Boost.Math.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <complex>
#include <limits>

#include "errors.hpp"

namespace rtensor::quad {

inline constexpr unsigned kPanelPoints = 32;

template <class Real>
struct PanelResult {
  using value_type = Real;
  Real abs_error{0};
  Real l1_norm{0};
  int panels{0};
};

/// Sum of 32-point Gauss-Legendre rules over `panels` equal sub-intervals.
template <class Real, class F>
auto gauss_legendre_panels(F&& f, Real a, Real b, int panels, Real* l1 = nullptr) {
  using boost::math::quadrature::gauss;
  using std::abs;
  const Real width = (b - a) / panels;
  using Value = decltype(f(a));
  Value sum = Value(0);
  Real norm = 0;
  for (int k = 0; k < panels; ++k) {
    const Real lo = a + width * k;
    const Real hi = (k + 1 == panels) ? b : lo + width;
    sum += gauss<Real, kPanelPoints>::integrate(f, lo, hi);
    if (l1 != nullptr)
      norm += gauss<Real, kPanelPoints>::integrate([&](Real t) { return Real(abs(f(t))); }, lo, hi);
  }
  if (l1 != nullptr) *l1 = norm;
  return sum;
}

/// Doubles the panel count until two successive composite sums agree to
/// `rel_tol` relative to the L1 norm of the integrand.
template <class Real, class F>
auto integrate_doubling(F&& f, Real a, Real b, Real rel_tol, int initial_panels = 2,
                        int max_panels = 1 << 14, PanelResult<Real>* info = nullptr) {
  using std::abs;
  Real l1 = 0;
  auto previous = gauss_legendre_panels(f, a, b, initial_panels, &l1);
  for (int panels = 2 * initial_panels; panels <= max_panels; panels *= 2) {
    auto current = gauss_legendre_panels(f, a, b, panels);
    const Real diff = Real(abs(current - previous));
    const Real scale = l1 > 0 ? l1 : Real(1);
    if (diff <= rel_tol * scale) {
      if (info != nullptr) *info = PanelResult<Real>{diff, l1, panels};
      return current;
    }
    previous = current;
  }
  throw QuadratureFailure("composite Gauss-Legendre did not converge within " +
                              std::to_string(max_panels) + " panels",
                          static_cast<double>(rel_tol));
}

/// Smallest radius on the doubling ladder start, 2*start, ... at which
/// `magnitude(r)` falls below `ratio` times the largest magnitude seen so far.
template <class Real, class M>
Real truncation_radius(M&& magnitude, Real start, Real ratio, Real max_radius) {
  Real peak = 0;
  // sample the interior finely enough to see the peak of a unimodal envelope
  for (Real r = 0; r <= start; r += start / 64) {
    const Real m = magnitude(r);
    if (m > peak) peak = m;
  }
  for (Real r = start; r <= max_radius; r *= Real(1.25)) {
    const Real m = magnitude(r);
    if (m > peak) peak = m;
    if (m < ratio * peak) return r;
  }
  throw QuadratureFailure("integrand does not decay before the maximal radius",
                          static_cast<double>(max_radius));
}

} // namespace rtensor::quad
