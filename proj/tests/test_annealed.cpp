#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rtensor/annealed.hpp"
#include "rtensor/special_functions.hpp"

using namespace rtensor;

namespace {

// T_p(u) by its power series with the Pascal-triangle Fuss-Catalan numbers.
double fc_series_oracle(int p, double u, int terms = 12) {
  double s = 0.0;
  for (int n = 0; n < terms; ++n) s += double(oracle::fuss_catalan_small(p, n)) * std::pow(u, n);
  return s;
}

// f at theta_0 rewritten with u T^p = T - 1.
double reduced_f0(int p, double T) { return 0.5 * std::log(T) - (p - 1.0) * T / (2.0 * p) - 1.0 / (2.0 * p); }

// f at a theta saddle with both saddle equations substituted; s2 = sin^2 theta, T = rho^2 s2.
double reduced_f1(int p, double s2, double T) {
  return 0.5 * std::log(T) - (p - 1.0) / (2.0 * p) * T / s2 + (1.0 - 2.0 * s2) / (2.0 * p * s2);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

} // namespace

TEST(Annealed, SaddleRadius) {
  EXPECT_NEAR(annealed_saddle_rho_sq(3, 10.0).real(), fc_series_oracle(3, 0.01), 1e-14);
  EXPECT_NEAR(annealed_saddle_rho_sq(3, 10.0).real(), 1.0103, 1e-4);
  EXPECT_NEAR(annealed_saddle_rho_sq(4, 1e6).real(), 1.0, 1e-11);
  const cplx f_far = annealed_logZ(3, 1e6, 0, AnnealedMode::saddle);
  EXPECT_NEAR(f_far.real(), -0.5, 1e-11);
}

TEST(Annealed, CutContact) {
  EXPECT_THROW((void)annealed_logZ(3, 2.0, 100, AnnealedMode::saddle), CutContact);
  EXPECT_THROW((void)annealed_resolvent(2, -1.5, 100, AnnealedMode::quadrature), CutContact);
  EXPECT_NO_THROW((void)annealed_logZ(3, cplx(2.0, 0.5), 100, AnnealedMode::saddle));
}

TEST(Annealed, SaddleResolventIsExpectedResolvent) {
  for (int p : {2, 3, 4, 5})
    for (cplx w : {cplx(5.0, 0.0), cplx(0.5, 1.0), cplx(-3.0, 0.2), cplx(1.0, -2.0)}) {
      const cplx a = annealed_resolvent(p, w, 0, AnnealedMode::saddle);
      EXPECT_LT(std::abs(a - expected_resolvent(p, w)), 1e-12) << p << " " << w;
    }
  EXPECT_NEAR(annealed_resolvent(2, 3.0, 0, AnnealedMode::saddle).real(), (3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
  EXPECT_NEAR(annealed_resolvent(2, 3.0, 0, AnnealedMode::saddle).real(), 0.381966, 1e-6);
}

TEST(Annealed, QuadratureConvergesLikeOneOverN) {
  const cplx exact = fc_function(3, 1.0 / 25.0) / 5.0;
  std::vector<double> Ns{100, 200, 400, 800}, errs;
  for (double N : Ns) errs.push_back(std::abs(annealed_resolvent(3, 5.0, int(N), AnnealedMode::quadrature) - exact));
  for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_LT(errs[i], errs[i - 1]);
  EXPECT_NEAR(loglog_slope(Ns, errs), -1.0, 0.2);
  EXPECT_LT(errs[2], 2e-3);
}

TEST(Annealed, LogZQuadratureApproachesSaddle) {
  const cplx s = annealed_logZ(3, 5.0, 0, AnnealedMode::saddle);
  double prev = 1e300;
  for (int N : {100, 200, 400}) {
    const double d = std::abs(annealed_logZ(3, 5.0, N, AnnealedMode::quadrature) - s);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(Annealed, ContoursAreConjugateOnTheRealAxis) {
  for (double y : {5.0, -4.0}) {
    const cplx a = annealed_resolvent(3, y, 200, AnnealedMode::quadrature, Contour::plus);
    const cplx b = annealed_resolvent(3, y, 200, AnnealedMode::quadrature, Contour::minus);
    EXPECT_LT(std::abs(a - std::conj(b)), 1e-10);
    EXPECT_LT(std::abs(a.imag()), 1e-10);
  }
}

TEST(Annealed, ComplexArgumentQuadrature) {
  for (int p : {3, 4}) {
    const cplx w(1.0, 2.0);
    const cplx exact = expected_resolvent(p, w);
    const double e1 = std::abs(annealed_resolvent(p, w, 200, AnnealedMode::quadrature) - exact);
    const double e2 = std::abs(annealed_resolvent(p, w, 800, AnnealedMode::quadrature) - exact);
    EXPECT_LT(e2, e1);
    EXPECT_LT(e2, 5e-3);
  }
}

TEST(Spike, ZeroSignalHasSingleSaddle) {
  for (double y : {3.0, 6.0}) {
    const auto rep = spike_saddles(3, y, 0.0);
    ASSERT_EQ(rep.saddles.size(), 1u);
    EXPECT_EQ(rep.dominant_index, 0);
    EXPECT_NEAR(rep.saddles[0].theta, std::numbers::pi / 2, 1e-15);
    EXPECT_LT(std::abs(rep.saddles[0].rho_sq / y - expected_resolvent(3, y)), 1e-13);
  }
}

TEST(Spike, ThresholdSaddle) {
  const double bt = std::sqrt(8.0), y = std::pow(3.0, 1.5);
  const auto rep = spike_saddles(3, y, bt);
  ASSERT_EQ(rep.saddles.size(), 2u);
  const auto& s1 = rep.saddles[1];
  EXPECT_NEAR(std::pow(std::sin(s1.theta), 2), 0.5, 1e-8);
  EXPECT_NEAR(s1.rho_sq.real(), 3.0, 1e-8);
  for (const auto& s : rep.saddles) {
    EXPECT_LT(s.residual_theta, 1e-10);
    EXPECT_LT(s.residual_rho, 1e-10);
  }
  // direct evaluation against the reduced forms
  const double T0 = fc_series_oracle(3, 1.0 / 27.0, 40);
  EXPECT_NEAR(rep.saddles[0].f_value.real(), reduced_f0(3, T0), 1e-12);
  EXPECT_NEAR(s1.f_value.real(), reduced_f1(3, 0.5, 1.5), 1e-12);
  EXPECT_NEAR(rep.saddles[0].f_value.real(), -0.49345, 1e-5);
  EXPECT_NEAR(s1.f_value.real(), -0.79727, 1e-5);
  // at p = 3 the quoted closed value coincides with the direct one
  EXPECT_NEAR(s1.f_value.real(), 0.5 * std::log(1.5) - 1.0, 1e-12);
  const int best = rep.saddles[0].f_value.real() > s1.f_value.real() ? 0 : 1;
  EXPECT_EQ(rep.dominant_index, best);
}

TEST(Spike, ThetaOneValueAtThresholdForHigherOrders) {
  for (int p : {4, 5}) {
    const double bt = spike_threshold_analytic(p), y = std::pow(p, 0.5 * p);
    const auto rep = spike_saddles(p, y, bt);
    ASSERT_EQ(rep.saddles.size(), 2u) << p;
    const auto& s1 = rep.saddles[1];
    EXPECT_NEAR(std::pow(std::sin(s1.theta), 2), 1.0 / (p - 1), 1e-8);
    EXPECT_NEAR(s1.rho_sq.real(), double(p), 1e-8);
    const double direct = s1.f_value.real();
    const double corrected = 0.5 * std::log(p / (p - 1.0)) - (p - 1.0) / 2.0 + (p - 3.0) / (2.0 * p);
    EXPECT_NEAR(direct, corrected, 1e-12);
    const double quoted = 0.5 * std::log(p / (p - 1.0)) + (p - 5.0) / 2.0;
    EXPECT_GT(std::abs(direct - quoted), 0.1);
  }
}

TEST(Spike, ReductionConsistencyAboveThreshold) {
  const int p = 3;
  const double b = 1.01 * std::sqrt(8.0);
  const double yc = singular_locus(p, b).y_c;
  const auto rep = spike_saddles(p, 0.999 * yc, b);
  ASSERT_GE(rep.saddles.size(), 2u);
  for (const auto& s : rep.saddles) {
    EXPECT_LT(s.residual_theta, 1e-10);
    EXPECT_LT(s.residual_rho, 1e-10);
    const double s2 = std::pow(std::sin(s.theta), 2);
    const double u = std::pow(s2, 1 - p) / std::pow(0.999 * yc, 2);
    EXPECT_NEAR(s.rho_sq.real(), fc_function_real(p, u) / s2, 1e-10 * s.rho_sq.real());
    EXPECT_NEAR(s.f_value.real(), reduced_f1(p, s2, s.rho_sq.real() * s2), 1e-10);
  }
}

TEST(Spike, NoThetaOneBelowThreshold) {
  const double b = 0.99 * std::sqrt(8.0);
  for (double y : {0.98, 1.0, 1.02, 1.2})
    EXPECT_EQ(spike_saddles(3, y * std::pow(3.0, 1.5), b).saddles.size(), 1u) << y;
}

TEST(Threshold, AnalyticAndBisectionAgree) {
  for (int p : {3, 4, 5, 6}) {
    const auto r = spike_threshold(p);
    EXPECT_NEAR(r.b_t_bisection, r.b_t, 1e-8 * r.b_t) << p;
    EXPECT_LT(std::abs(r.h_at_root), 1e-10);
    EXPECT_LT(std::abs(r.h_prime_at_root), 1e-10);
    EXPECT_NEAR(spike_h_max_numeric(p, r.b_t), 0.0, 1e-10);
    EXPECT_NEAR(r.y_c_at, std::pow(p, 0.5 * p), 1e-12 * r.y_c_at);
  }
  EXPECT_NEAR(spike_threshold(3).b_t, 2.8284271, 1e-7);
  EXPECT_NEAR(spike_threshold(4).b_t, 4.5, 1e-14);
  EXPECT_NEAR(spike_threshold(3).y_c_at, 5.1961524, 1e-7);
}

TEST(SingularLocus, BelowAndAtThreshold) {
  EXPECT_NEAR(singular_locus(3, 1.0).y_c, 1.5 * std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(singular_locus(3, 0.0).y_c, 2.598076, 1e-6);
  for (int p : {3, 4, 5}) {
    const double bt = spike_threshold_analytic(p);
    const auto at = singular_locus(p, bt);
    EXPECT_NEAR(at.y_c, std::pow(p, 0.5 * p), 1e-8 * at.y_c) << p;
    EXPECT_NEAR(std::pow(std::sin(at.theta_c), 2), 1.0 / (p - 1), 1e-8);
    EXPECT_NEAR(at.rho_c_sq, double(p), 1e-8);
    const auto below = singular_locus(p, 0.999 * bt);
    EXPECT_NEAR(below.y_c, std::pow(p, 0.5 * p) / std::pow(p - 1.0, 0.5 * (p - 1)), 1e-12);
    // continuity from above
    EXPECT_NEAR(singular_locus(p, bt * (1 + 1e-10)).y_c, at.y_c, 1e-3 * at.y_c);
  }
}

TEST(SingularLocus, MonotoneAboveThreshold) {
  const double bt = std::sqrt(8.0);
  double prev = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double b = bt * (1.0 + 9.0 * k / 40.0);
    const auto L = singular_locus(3, b);
    EXPECT_GT(L.y_c, prev);
    EXPECT_EQ(L.root, "small_v");
    // h vanishes at the mapped v
    EXPECT_NEAR(spike_h(3, b, v_from_y(3, L.y_c)), 0.0, 1e-10);
    prev = L.y_c;
  }
  EXPECT_GT(prev, 100.0);
}

TEST(SingularLocus, DominanceIsRecorded) {
  const auto L = singular_locus(3, 2.0 * std::sqrt(8.0));
  EXPECT_EQ(L.dominant_saddle, L.f1 > L.f0 ? 1 : 0);
  if (L.dominant_saddle == 0) EXPECT_FALSE(L.events.empty());
}

TEST(SingularLocus, VMapRoundTrip) {
  for (int p : {3, 4, 6})
    for (double y : {1.5, 7.0, 123.0}) EXPECT_NEAR(y_from_v(p, v_from_y(p, y)), y, 1e-12 * y);
}
