#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "rtensor/invariants.hpp"
#include "rtensor/maps.hpp"
#include "rtensor/special_functions.hpp"
#include "rtensor/tensor.hpp"

using namespace rtensor;

namespace {

SymmetricTensor random_tensor(int p, int N, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymmetricTensor t(p, N);
  for (std::size_t r = 0; r < t.size(); ++r) t.data()[r] = u(gen);
  return t;
}

// Sum of dense T^n traces for a p = 2 tensor.
double trace_power(const SymmetricTensor& t, int n) {
  const Eigen::MatrixXd m = t.as_matrix();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < n; ++i) acc = acc * m;
  return acc.trace();
}

CombinatorialMap rerooted(const CombinatorialMap& m, int root) {
  auto c = m;
  c.root = root;
  return c;
}

// Covariance of two index tuples under the symmetrized propagator.
double propagator(int p, int N, std::vector<int> a, std::vector<int> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) return 0.0;
  // number of sigma with a_i = b_sigma(i) is prod m_k!
  double mult = 1.0, fact = 1.0;
  for (std::size_t i = 0; i < a.size();) {
    std::size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    for (std::size_t k = 2; k <= j - i; ++k) mult *= double(k);
    i = j;
  }
  for (int k = 2; k <= p; ++k) fact *= k;
  return double(p) / std::pow(double(N), p - 1) * mult / fact;
}

} // namespace

TEST(Maps, FigureOneCount) {
  const auto maps = enumerate_rooted_maps(3, 2);
  EXPECT_EQ(maps.size(), 5u);
  const auto groups = group_by_underlying_graph(maps);
  ASSERT_EQ(groups.size(), 2u);
  std::vector<int> sizes;
  for (const auto& [g, c] : groups) sizes.push_back(c);
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<int>{2, 3}));
}

TEST(Maps, MatrixCycleIsUnique) {
  for (int n = 1; n <= 6; ++n) EXPECT_EQ(enumerate_rooted_maps(2, n).size(), 1u) << n;
}

TEST(Maps, OddHalfEdgesGiveNothing) {
  EXPECT_TRUE(enumerate_rooted_maps(3, 1).empty());
  EXPECT_TRUE(enumerate_rooted_maps(3, 3).empty());
}

TEST(Maps, LargerCounts) {
  // counts from independent labelled enumeration: rooted classes = labelled connected
  // matchings * n p / (n! (p)^n) with cyclic vertex symmetry
  EXPECT_EQ(enumerate_rooted_maps(3, 4).size(), 60u);
  EXPECT_EQ(enumerate_rooted_maps(4, 2).size(), 24u);
  EXPECT_EQ(enumerate_rooted_maps(4, 3).size(), 297u);
}

TEST(Maps, CapExceeded) {
  EXPECT_THROW((void)enumerate_rooted_maps(3, 6), CapExceeded);
  EXPECT_THROW((void)enumerate_rooted_maps(4, 4), CapExceeded);
  EXPECT_THROW((void)enumerate_rooted_maps(3, 4, 10), CapExceeded);
  EXPECT_EQ(enumerate_rooted_maps(2, 7, 14).size(), 1u);
}

TEST(Maps, ValidAndConnected) {
  for (const auto& m : enumerate_rooted_maps(3, 4)) {
    EXPECT_NO_THROW(m.validate());
    EXPECT_TRUE(m.connected());
    ASSERT_TRUE(m.root.has_value());
    EXPECT_EQ(canonical_code(m, *m.root), m.pairing);
  }
}

TEST(Maps, ValidationRejectsBadMaps) {
  CombinatorialMap m;
  m.p = 3;
  m.n = 2;
  m.successor = standard_successor(3, 2);
  m.pairing = {1, 0, 3, 2, 5, 5};
  EXPECT_THROW(m.validate(), ValidationError);
  m.pairing = {1, 0, 3, 2, 5, 4};
  EXPECT_NO_THROW(m.validate());
  m.successor = {1, 0, 2, 4, 5, 3};
  EXPECT_THROW(m.validate(), ValidationError);
  m.successor = standard_successor(3, 2);
  m.root = 6;
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Maps, CanonicalFormIsRelabellingInvariant) {
  std::mt19937 gen(7);
  for (const auto& m : enumerate_rooted_maps(3, 4)) {
    // relabel half-edges by a random permutation
    std::vector<int> perm(m.half_edges());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    CombinatorialMap r = m;
    for (int h = 0; h < m.half_edges(); ++h) {
      r.successor[perm[h]] = perm[m.successor[h]];
      r.pairing[perm[h]] = perm[m.pairing[h]];
    }
    EXPECT_EQ(canonical_code(r, perm[*m.root]), m.pairing);
  }
}

TEST(Maps, JsonRoundTrip) {
  for (const auto& m : enumerate_rooted_maps(3, 2)) {
    const auto j = to_json(m);
    EXPECT_EQ(j["half_edges"].size(), 6u);
    const auto back = map_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back, m);
  }
  auto bad = to_json(enumerate_rooted_maps(3, 2).front());
  bad["pairing"][0] = 0;
  EXPECT_THROW((void)map_from_json(bad), ValidationError);
}

TEST(TraceInvariant, DiagonalMatrixTwoCycle) {
  const auto maps = enumerate_rooted_maps(2, 2);
  ASSERT_EQ(maps.size(), 1u);
  SymmetricTensor t(2, 3);
  t.set({0, 0}, 1.5);
  t.set({1, 1}, -2.0);
  t.set({2, 2}, 0.5);
  EXPECT_NEAR(trace_invariant(t, maps[0]), 1.5 * 1.5 + 4.0 + 0.25, 1e-14);
}

TEST(TraceInvariant, ZeroTensor) {
  for (const auto& m : enumerate_rooted_maps(3, 2)) EXPECT_EQ(trace_invariant(SymmetricTensor(3, 4), m), 0.0);
}

TEST(TraceInvariant, DegreeMismatch) {
  const auto m = enumerate_rooted_maps(3, 2).front();
  EXPECT_THROW((void)trace_invariant(SymmetricTensor(4, 2), m), DimensionMismatch);
}

TEST(TraceInvariant, ThetaMapsGiveSumOfSquares) {
  const auto t = random_tensor(3, 4, 11);
  double ss = 0.0;
  oracle::for_each_tuple(3, 4, [&](const std::vector<int>& idx) { ss += std::pow(t.at(idx), 2); });
  const auto maps = enumerate_rooted_maps(3, 2);
  int theta = 0;
  for (const auto& m : maps) {
    const auto g = underlying_graph(m);
    if (g == std::vector<std::pair<int, int>>{{0, 1}, {0, 1}, {0, 1}}) {
      ++theta;
      EXPECT_NEAR(trace_invariant(t, m), ss, 1e-12 * ss);
    }
  }
  EXPECT_EQ(theta, 2);
}

TEST(TraceInvariant, RootIndependence) {
  const auto t = random_tensor(4, 3, 5);
  for (const auto& m : enumerate_rooted_maps(4, 3)) {
    const double ref = trace_invariant(t, m);
    for (int r = 0; r < m.half_edges(); ++r)
      EXPECT_NEAR(trace_invariant(t, rerooted(m, r)), ref, 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST(TraceInvariant, MatchesBruteForceContraction) {
  // brute force over all edge labels for p = 3, n = 4
  const int N = 2;
  const auto t = random_tensor(3, N, 3);
  for (const auto& m : enumerate_rooted_maps(3, 4)) {
    const int E = m.half_edges() / 2;
    std::vector<int> eid(m.half_edges(), -1);
    int next = 0;
    for (int h = 0; h < m.half_edges(); ++h)
      if (eid[h] < 0) eid[h] = eid[m.pairing[h]] = next++;
    double total = 0.0;
    oracle::for_each_tuple(E, N, [&](const std::vector<int>& lab) {
      double prod = 1.0;
      for (int v = 0; v < m.n; ++v)
        prod *= t.at({lab[eid[3 * v]], lab[eid[3 * v + 1]], lab[eid[3 * v + 2]]});
      total += prod;
    });
    EXPECT_NEAR(trace_invariant(t, m), total, 1e-12 * std::max(1.0, std::abs(total)));
  }
}

TEST(BalancedInvariant, MatrixTraces) {
  const auto t = random_tensor(2, 5, 2);
  for (int n = 1; n <= 6; ++n) {
    const double ref = trace_power(t, n);
    EXPECT_NEAR(balanced_invariant(t, n), ref, 1e-12 * std::max(1.0, std::abs(ref))) << n;
  }
}

TEST(BalancedInvariant, OrderThreeFormula) {
  for (int N : {2, 3}) {
    const auto t = random_tensor(3, N, 100 + N);
    double dumbbell = 0.0, theta = 0.0;
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < N; ++c) {
          dumbbell += t.at({a, a, b}) * t.at({b, c, c});
          theta += t.at({a, b, c}) * t.at({a, b, c});
        }
    const double ref = 3.0 * dumbbell + 2.0 * theta;
    EXPECT_NEAR(balanced_invariant(t, 2), ref, 1e-12 * std::abs(ref)) << N;
  }
}

TEST(BalancedInvariant, ZeroTensorAndOddDegree) {
  EXPECT_EQ(balanced_invariant(SymmetricTensor(3, 3), 2), 0.0);
  EXPECT_EQ(balanced_invariant(SymmetricTensor(4, 3), 3), 0.0);
  EXPECT_EQ(balanced_invariant(random_tensor(3, 3, 1), 3), 0.0);
}

TEST(BalancedInvariant, CapExceeded) { EXPECT_THROW((void)balanced_invariant(random_tensor(3, 2, 1), 6), CapExceeded); }

TEST(Wick, OrderThreeDegreeTwo) {
  for (long long N : {1, 2, 3, 7, 16, 100}) {
    const cpp_rational expected = cpp_rational(1) + cpp_rational(6, N) + cpp_rational(8, N * N);
    EXPECT_EQ(wick_expectation(3, N, 2), expected) << N;
  }
}

TEST(Wick, MatrixDegreeTwo) {
  for (long long N : {1, 5, 32}) EXPECT_EQ(wick_expectation(2, N, 2), cpp_rational(1) + cpp_rational(1, N));
}

TEST(Wick, MatrixDegreeFourIsserlis) {
  // E Tr T^4 / N by Isserlis over index sums with the explicit covariance
  for (int N : {1, 2, 3, 4}) {
    double s = 0.0;
    oracle::for_each_tuple(4, N, [&](const std::vector<int>& i) {
      const std::vector<int> e0{i[0], i[1]}, e1{i[1], i[2]}, e2{i[2], i[3]}, e3{i[3], i[0]};
      s += propagator(2, N, e0, e1) * propagator(2, N, e2, e3) + propagator(2, N, e0, e2) * propagator(2, N, e1, e3) +
           propagator(2, N, e0, e3) * propagator(2, N, e1, e2);
    });
    EXPECT_NEAR(rtensor::to_double(wick_expectation(2, N, 4)), s / N, 1e-12) << N;
  }
}

TEST(Wick, OrderThreeDegreeTwoIsserlis) {
  for (int N : {2, 3}) {
    double s = 0.0;
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < N; ++c) {
          s += 3.0 * propagator(3, N, {a, a, b}, {b, c, c});
          s += 2.0 * propagator(3, N, {a, b, c}, {a, b, c});
        }
    EXPECT_NEAR(rtensor::to_double(wick_expectation(3, N, 2)), s / N, 1e-12) << N;
  }
}

TEST(Wick, OddAndCaps) {
  EXPECT_EQ(wick_expectation(3, 5, 3), 0);
  EXPECT_EQ(wick_expectation(4, 5, 3), 0);
  EXPECT_THROW((void)wick_expectation(4, 5, 4), CapExceeded);
  EXPECT_THROW((void)wick_expectation(2, 5, 6), CapExceeded);
}

TEST(Wick, MelonicLimit) {
  // <I_{2m}>/N / F_p(m) -> 1 monotonically
  for (int p : {3, 4, 5, 6}) {
    double prev = 1e300;
    const double F1 = rtensor::to_double(cpp_rational(fuss_catalan_number(p, 1)));
    for (long long N : {8, 16, 32, 64, 1 << 20}) {
      const double r = rtensor::to_double(wick_expectation(p, N, 2)) / F1;
      EXPECT_LT(r, prev);
      EXPECT_GE(r, 1.0);
      prev = r;
    }
    EXPECT_NEAR(prev, 1.0, 1e-4);
  }
  // leading coefficient of the degree-four polynomial is F_3(2)
  const auto poly = wick_polynomial(3, 4);
  EXPECT_EQ(poly.rbegin()->first, 0);
  EXPECT_EQ(poly.rbegin()->second, cpp_rational(fuss_catalan_number(3, 2)));
}

TEST(MonteCarlo, OrderThreeDegreeTwo) {
  const auto est = mc_expected_invariant(3, 16, 2, 10000, 42, 4);
  EXPECT_EQ(est.samples, 10000);
  EXPECT_GT(est.std_error, 0.0);
  EXPECT_LT(std::abs(est.mean - 1.40625), 4.0 * est.std_error) << est.mean << " +- " << est.std_error;
}

TEST(MonteCarlo, MatrixDegreeTwo) {
  const auto est = mc_expected_invariant(2, 32, 2, 10000, 7, 4);
  EXPECT_LT(std::abs(est.mean - (1.0 + 1.0 / 32.0)), 4.0 * est.std_error);
}

TEST(MonteCarlo, OddDegreeIsZero) {
  const auto est = mc_expected_invariant(3, 8, 3, 200, 1);
  EXPECT_EQ(est.mean, 0.0);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(MonteCarlo, OddTracesAverageToZero) {
  const auto est = mc_expected_invariant(2, 6, 3, 4000, 3, 2);
  EXPECT_LT(std::abs(est.mean), 4.0 * est.std_error);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
  const auto a = mc_expected_invariant(3, 5, 2, 300, 9, 1);
  const auto b = mc_expected_invariant(3, 5, 2, 300, 9, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}
