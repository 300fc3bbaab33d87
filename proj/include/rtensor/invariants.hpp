#pragma once

// Trace invariants Tr_b(T) of combinatorial maps, the balanced invariants
// I_n(T) = sum over rooted classes, their exact Gaussian expectations by Wick
// pairing, and Monte Carlo estimates over the tensor ensemble.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace rtensor {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

[[nodiscard]] inline double to_double(const cpp_rational& q) { return q.convert_to<double>(); }

namespace detail {

/// Dense factor over a list of index variables, row-major in `vars` order.
struct Factor {
  std::vector<int> vars;
  std::vector<double> data;
};

inline constexpr double kMaxFactorEntries = 2e8;

[[nodiscard]] inline double factor_size(std::size_t nvars, int N) { return std::pow(double(N), double(nvars)); }

/// Multiplies `fs` and sums out variable v.
[[nodiscard]] inline Factor eliminate(const std::vector<const Factor*>& fs, int v, int N) {
  std::vector<int> keep;
  for (const Factor* f : fs)
    for (int x : f->vars)
      if (x != v && std::find(keep.begin(), keep.end(), x) == keep.end()) keep.push_back(x);
  std::sort(keep.begin(), keep.end());
  if (factor_size(keep.size() + 1, N) > kMaxFactorEntries)
    throw CapExceeded("trace invariant: intermediate factor too large");
  // all = keep..., v (v fastest)
  std::vector<int> all = keep;
  all.push_back(v);
  const std::size_t K = all.size();
  // per factor stride for each position in `all`
  std::vector<std::vector<std::size_t>> strides(fs.size(), std::vector<std::size_t>(K, 0));
  for (std::size_t f = 0; f < fs.size(); ++f) {
    const auto& vars = fs[f]->vars;
    std::size_t stride = 1;
    for (std::size_t i = vars.size(); i-- > 0;) {
      const auto pos = std::find(all.begin(), all.end(), vars[i]) - all.begin();
      strides[f][pos] += stride;
      stride *= N;
    }
  }
  Factor out;
  out.vars = keep;
  out.data.assign(static_cast<std::size_t>(factor_size(keep.size(), N)), 0.0);
  std::vector<int> idx(K, 0);
  std::vector<std::size_t> off(fs.size(), 0);
  const std::size_t total = static_cast<std::size_t>(factor_size(K, N));
  for (std::size_t flat = 0; flat < total; ++flat) {
    double prod = 1.0;
    for (std::size_t f = 0; f < fs.size(); ++f) prod *= fs[f]->data[off[f]];
    out.data[flat / N] += prod;
    // odometer increment with incremental offsets
    for (std::size_t k = K; k-- > 0;) {
      ++idx[k];
      for (std::size_t f = 0; f < fs.size(); ++f) off[f] += strides[f][k];
      if (idx[k] < N) break;
      for (std::size_t f = 0; f < fs.size(); ++f) off[f] -= strides[f][k] * N;
      idx[k] = 0;
    }
  }
  return out;
}

/// Full contraction of a product of factors by greedy variable elimination.
[[nodiscard]] inline double contract_factors(std::vector<Factor> factors, int N) {
  double scalar = 1.0;
  while (true) {
    std::vector<int> vars;
    for (const auto& f : factors)
      for (int x : f.vars)
        if (std::find(vars.begin(), vars.end(), x) == vars.end()) vars.push_back(x);
    if (vars.empty()) break;
    // pick the variable whose elimination produces the smallest factor
    int best = -1;
    std::size_t best_size = SIZE_MAX;
    for (int v : vars) {
      std::vector<int> u;
      for (const auto& f : factors) {
        if (std::find(f.vars.begin(), f.vars.end(), v) == f.vars.end()) continue;
        for (int x : f.vars)
          if (std::find(u.begin(), u.end(), x) == u.end()) u.push_back(x);
      }
      if (u.size() < best_size) {
        best_size = u.size();
        best = v;
      }
    }
    std::vector<const Factor*> with;
    std::vector<Factor> rest;
    for (const auto& f : factors)
      if (std::find(f.vars.begin(), f.vars.end(), best) != f.vars.end()) with.push_back(&f);
    Factor merged = eliminate(with, best, N);
    for (auto& f : factors)
      if (std::find(f.vars.begin(), f.vars.end(), best) == f.vars.end()) rest.push_back(std::move(f));
    rest.push_back(std::move(merged));
    factors = std::move(rest);
  }
  for (const auto& f : factors) scalar *= f.data.at(0);
  return scalar;
}

/// Edge id of every half-edge (pairs share an id), edges numbered 0..E-1.
[[nodiscard]] inline std::vector<int> edge_ids(const CombinatorialMap& m) {
  std::vector<int> id(m.half_edges(), -1);
  int next = 0;
  for (int h = 0; h < m.half_edges(); ++h)
    if (id[h] < 0) id[h] = id[m.pairing[h]] = next++;
  return id;
}

} // namespace detail

/// Dense view reused across the vertices of one or more maps.
class DenseTensorView {
public:
  explicit DenseTensorView(const SymmetricTensor& t) : p_(t.order()), N_(t.dim()), dense_(t.unpack()) {}
  [[nodiscard]] int order() const noexcept { return p_; }
  [[nodiscard]] int dim() const noexcept { return N_; }
  [[nodiscard]] double operator[](std::size_t flat) const { return dense_[flat]; }

private:
  int p_, N_;
  std::vector<double> dense_;
};

/// Tr_b(T): one tensor per vertex, indices identified along edges and summed.
[[nodiscard]] inline double trace_invariant(const DenseTensorView& T, const CombinatorialMap& b) {
  if (b.p != T.order())
    throw DimensionMismatch("trace_invariant: map degree " + std::to_string(b.p) + " != tensor order " +
                            std::to_string(T.order()));
  b.validate();
  const int N = T.dim(), p = b.p;
  const auto eid = detail::edge_ids(b);
  std::vector<detail::Factor> factors;
  std::vector<char> done(b.half_edges(), 0);
  for (int h0 = 0; h0 < b.half_edges(); ++h0) {
    if (done[h0]) continue;
    std::vector<int> slots;  // edge variable per tensor slot, in cyclic order
    int c = h0;
    do {
      done[c] = 1;
      slots.push_back(eid[c]);
      c = b.successor[c];
    } while (c != h0);
    detail::Factor f;
    for (int e : slots)
      if (std::find(f.vars.begin(), f.vars.end(), e) == f.vars.end()) f.vars.push_back(e);
    std::sort(f.vars.begin(), f.vars.end());
    const std::size_t k = f.vars.size();
    f.data.resize(static_cast<std::size_t>(std::pow(double(N), double(k))));
    std::vector<int> assign(k, 0);
    for (std::size_t flat = 0; flat < f.data.size(); ++flat) {
      std::size_t dense = 0;
      for (int s = 0; s < p; ++s) {
        const auto pos = std::find(f.vars.begin(), f.vars.end(), slots[s]) - f.vars.begin();
        dense = dense * N + assign[pos];
      }
      f.data[flat] = T[dense];
      for (std::size_t q = k; q-- > 0;) {
        if (++assign[q] < N) break;
        assign[q] = 0;
      }
    }
    factors.push_back(std::move(f));
  }
  return detail::contract_factors(std::move(factors), N);
}

[[nodiscard]] inline double trace_invariant(const SymmetricTensor& T, const CombinatorialMap& b) {
  return trace_invariant(DenseTensorView(T), b);
}

/// Rooted classes of (p, n) grouped into representatives with multiplicities.
/// The trace invariant depends only on the underlying graph, since T is symmetric.
struct InvariantPlan {
  int p{}, n{};
  std::vector<CombinatorialMap> representatives;
  std::vector<int> multiplicity;
  std::size_t rooted_classes{};

  static std::shared_ptr<const InvariantPlan> get(int p, int n, int cap = kDefaultMapCap) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const InvariantPlan>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{p, n, cap}];
    if (!slot) {
      auto plan = std::make_shared<InvariantPlan>();
      plan->p = p;
      plan->n = n;
      const auto maps = enumerate_rooted_maps(p, n, cap);
      plan->rooted_classes = maps.size();
      std::map<std::vector<std::pair<int, int>>, std::size_t> index;
      for (const auto& m : maps) {
        auto key = underlying_graph(m);
        auto it = index.find(key);
        if (it == index.end()) {
          index.emplace(std::move(key), plan->representatives.size());
          plan->representatives.push_back(m);
          plan->multiplicity.push_back(1);
        } else {
          ++plan->multiplicity[it->second];
        }
      }
      slot = plan;
    }
    return slot;
  }
};

/// I_n(T) = sum over connected rooted p-valent maps with n vertices of Tr_b(T).
[[nodiscard]] inline double balanced_invariant(const SymmetricTensor& T, int n, int cap = kDefaultMapCap) {
  const auto plan = InvariantPlan::get(T.order(), n, cap);
  if (plan->representatives.empty()) return 0.0;
  const DenseTensorView view(T);
  double total = 0.0;
  for (std::size_t i = 0; i < plan->representatives.size(); ++i)
    total += plan->multiplicity[i] * trace_invariant(view, plan->representatives[i]);
  return total;
}

/// Laurent polynomial in N with exact rational coefficients: exponent -> coefficient.
using LaurentPolynomial = std::map<int, cpp_rational>;

[[nodiscard]] inline cpp_rational evaluate(const LaurentPolynomial& poly, long long N) {
  cpp_rational s = 0;
  for (const auto& [e, c] : poly) {
    cpp_rational term = c;
    if (e >= 0)
      term *= boost::multiprecision::pow(cpp_int(N), e);
    else
      term /= boost::multiprecision::pow(cpp_int(N), -e);
    s += term;
  }
  return s;
}

/// <I_n(T)>/N as a Laurent polynomial in N under the Gaussian ensemble with
/// covariance (p/N^{p-1}) (1/p!) sum_sigma prod_i delta(a_i, b_sigma(i)).
[[nodiscard]] inline LaurentPolynomial wick_polynomial(int p, int n) {
  detail::require_order(p);
  detail::require(n >= 0, "wick_expectation: n must be >= 0");
  LaurentPolynomial poly;
  if (n % 2 != 0 || (n * p) % 2 != 0) return poly;  // odd number of Gaussian factors
  if (n == 0) return poly;
  if (n > 4 || n * p > 12)
    throw CapExceeded("wick_expectation supports n in {2, 4} with n*p <= 12");
  const auto plan = InvariantPlan::get(p, n);
  const int H = n * p;
  std::vector<int> sigma_base(p);
  std::iota(sigma_base.begin(), sigma_base.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(sigma_base);
  while (std::next_permutation(sigma_base.begin(), sigma_base.end()));
  // vertex pairings of {0..n-1}
  std::vector<std::vector<std::pair<int, int>>> vpairings;
  {
    std::vector<int> rest(n);
    std::iota(rest.begin(), rest.end(), 0);
    std::vector<std::pair<int, int>> cur;
    const auto rec = [&](auto&& self, std::vector<int> left) -> void {
      if (left.empty()) {
        vpairings.push_back(cur);
        return;
      }
      const int a = left[0];
      for (std::size_t i = 1; i < left.size(); ++i) {
        std::vector<int> next;
        for (std::size_t j = 1; j < left.size(); ++j)
          if (j != i) next.push_back(left[j]);
        cur.emplace_back(a, left[i]);
        self(self, next);
        cur.pop_back();
      }
    };
    rec(rec, rest);
  }
  const int pairs = n / 2;
  for (std::size_t r = 0; r < plan->representatives.size(); ++r) {
    const auto& m = plan->representatives[r];
    const auto vert = m.vertex_of();
    // slot position of each half-edge within its vertex cycle
    std::vector<std::vector<int>> slots(n);
    {
      std::vector<char> done(H, 0);
      for (int h0 = 0; h0 < H; ++h0) {
        if (done[h0]) continue;
        int c = h0;
        do {
          done[c] = 1;
          slots[vert[c]].push_back(c);
          c = m.successor[c];
        } while (c != h0);
      }
    }
    std::map<int, cpp_int> counts;  // number of index cycles -> count of terms
    std::vector<std::size_t> choice(pairs);
    for (const auto& vp : vpairings) {
      std::fill(choice.begin(), choice.end(), 0);
      while (true) {
        std::vector<int> parent(H);
        std::iota(parent.begin(), parent.end(), 0);
        const auto find = [&](int x) {
          while (parent[x] != x) x = parent[x] = parent[parent[x]];
          return x;
        };
        const auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
        for (int h = 0; h < H; ++h) unite(h, m.pairing[h]);
        for (int k = 0; k < pairs; ++k) {
          const auto [u, v] = vp[k];
          const auto& s = perms[choice[k]];
          for (int i = 0; i < p; ++i) unite(slots[u][i], slots[v][s[i]]);
        }
        int comps = 0;
        for (int h = 0; h < H; ++h)
          if (find(h) == h) ++comps;
        counts[comps] += 1;
        int k = pairs - 1;
        while (k >= 0 && ++choice[k] == perms.size()) choice[k--] = 0;
        if (k < 0) break;
      }
    }
    // prefactor (p / N^{p-1})^{n/2} (1/p!)^{n/2} / N
    cpp_int pfact = 1;
    for (int i = 2; i <= p; ++i) pfact *= i;
    const cpp_rational pref = cpp_rational(boost::multiprecision::pow(cpp_int(p), pairs)) /
                              cpp_rational(boost::multiprecision::pow(pfact, pairs));
    const int shift = -(p - 1) * pairs - 1;
    for (const auto& [c, cnt] : counts) poly[c + shift] += pref * cpp_rational(cnt) * plan->multiplicity[r];
  }
  for (auto it = poly.begin(); it != poly.end();) it = it->second == 0 ? poly.erase(it) : std::next(it);
  return poly;
}

/// Exact <I_n(T)>/N at dimension N.
[[nodiscard]] inline cpp_rational wick_expectation(int p, long long N, int n) {
  detail::require(N >= 1, "wick_expectation: N must be >= 1");
  return evaluate(wick_polynomial(p, n), N);
}

struct InvariantEstimate {
  int n{}, p{}, N{};
  double mean{};
  double std_error{};
  long long samples{};
  std::uint64_t seed{};
};

/// Seed of the i-th Monte Carlo sample.
[[nodiscard]] inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t i) {
  return CounterStream(seed, 0x5eedULL).bits(i);
}

/// Sample mean of I_n(T)/N over independent ensemble draws. The per-sample
/// values are summed in sample order, so the result does not depend on threads.
[[nodiscard]] inline InvariantEstimate mc_expected_invariant(int p, int N, int n, long long samples,
                                                             std::uint64_t seed, int threads = 1) {
  detail::require_order(p);
  detail::require(N >= 1, "mc_expected_invariant: N must be >= 1");
  detail::require(samples >= 1, "mc_expected_invariant: samples must be >= 1");
  InvariantEstimate est{n, p, N, 0.0, 0.0, samples, seed};
  const auto plan = InvariantPlan::get(p, n);
  if (plan->representatives.empty()) return est;
  std::vector<double> values(static_cast<std::size_t>(samples));
  const auto work = [&](long long begin, long long end) {
    for (long long i = begin; i < end; ++i) {
      const auto T = sample_goe(p, N, sample_seed(seed, static_cast<std::uint64_t>(i)));
      const DenseTensorView view(T);
      double total = 0.0;
      for (std::size_t r = 0; r < plan->representatives.size(); ++r)
        total += plan->multiplicity[r] * trace_invariant(view, plan->representatives[r]);
      values[static_cast<std::size_t>(i)] = total / N;
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    work(0, samples);
  } else {
    std::vector<std::thread> pool;
    const long long chunk = (samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const long long b = t * chunk, e = std::min(samples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / samples;
  if (samples > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (samples - 1)) / std::sqrt(double(samples));
  }
  return est;
}

} // namespace rtensor
