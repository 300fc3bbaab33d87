#pragma once

// Real symmetric tensors of order p in dimension N, stored once per index
// multiset a_1 <= ... <= a_p in lexicographic order. Indices are 0-based.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace rtensor {

/// Lexicographic table of nondecreasing index tuples for one (p, N).
class MultisetTable {
public:
  MultisetTable(int p, int N) : p_(p), N_(N) {
    detail::require(p >= 1 && N >= 1, "multiset table needs p >= 1 and N >= 1");
    // count_[L][v] = number of nondecreasing length-L tuples with entries in [v, N)
    count_.assign(p + 1, std::vector<std::uint64_t>(N + 1, 0));
    for (int v = 0; v <= N; ++v) count_[0][v] = 1;
    for (int L = 1; L <= p; ++L)
      for (int v = N - 1; v >= 0; --v) count_[L][v] = count_[L][v + 1] + count_[L - 1][v];
    size_ = count_[p][0];
    detail::require(size_ < (std::uint64_t(1) << 31), "symmetric tensor too large for packed storage");
    indices_.reserve(size_ * p);
    orbit_.reserve(size_);
    std::vector<int> cur(p, 0);
    std::vector<double> fact(p + 1, 1.0);
    for (int i = 1; i <= p; ++i) fact[i] = fact[i - 1] * i;
    while (true) {
      indices_.insert(indices_.end(), cur.begin(), cur.end());
      double c = fact[p];
      for (int i = 0; i < p;) {
        int j = i;
        while (j < p && cur[j] == cur[i]) ++j;
        c /= fact[j - i];
        i = j;
      }
      orbit_.push_back(c);
      int k = p - 1;
      while (k >= 0 && cur[k] == N - 1) --k;
      if (k < 0) break;
      ++cur[k];
      for (int j = k + 1; j < p; ++j) cur[j] = cur[k];
    }
  }

  [[nodiscard]] int order() const noexcept { return p_; }
  [[nodiscard]] int dim() const noexcept { return N_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }

  /// Sorted indices of the r-th multiset.
  [[nodiscard]] std::span<const int> multiset(std::size_t r) const {
    return {indices_.data() + r * p_, static_cast<std::size_t>(p_)};
  }

  /// Number of distinct orderings p!/prod(m_i!) of the r-th multiset.
  [[nodiscard]] double orbit_size(std::size_t r) const { return orbit_[r]; }

  /// Rank of a nondecreasing tuple.
  [[nodiscard]] std::size_t rank(std::span<const int> sorted) const {
    std::size_t r = 0;
    int prev = 0;
    for (int i = 0; i < p_; ++i) {
      const int L = p_ - i - 1;
      for (int v = prev; v < sorted[i]; ++v) r += count_[L][v];
      prev = sorted[i];
    }
    return r;
  }

  /// Shared immutable table for (p, N), built once per process.
  static std::shared_ptr<const MultisetTable> get(int p, int N) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const MultisetTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{p, N}];
    if (!slot) slot = std::make_shared<const MultisetTable>(p, N);
    return slot;
  }

private:
  int p_, N_;
  std::size_t size_{};
  std::vector<std::vector<std::uint64_t>> count_;
  std::vector<int> indices_;
  std::vector<double> orbit_;
};

/// Rank-one signal b N^{1-p/2} v^{(x)p}.
struct SpikeSpec {
  double b{0.0};
  std::vector<double> v;

  void validate() const {
    detail::require(b >= 0.0, "spike: signal-to-noise ratio b must be >= 0");
    const double n2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
    detail::require(std::abs(n2 - 1.0) < 1e-12, "spike: v must be a unit vector");
  }
};

class SymmetricTensor {
public:
  SymmetricTensor(int p, int N) : table_(make_table(p, N)), data_(table_->size(), 0.0) {}

  SymmetricTensor(int p, int N, std::vector<double> packed) : table_(make_table(p, N)), data_(std::move(packed)) {
    if (data_.size() != table_->size())
      throw DimensionMismatch("packed data length " + std::to_string(data_.size()) + " != C(N+p-1, p) = " +
                              std::to_string(table_->size()));
  }

  /// Builds a tensor from f(sorted multiset) -> component.
  template <class F>
  static SymmetricTensor from_function(int p, int N, F&& f) {
    SymmetricTensor t(p, N);
    for (std::size_t r = 0; r < t.size(); ++r) t.data_[r] = f(t.table_->multiset(r));
    return t;
  }

  [[nodiscard]] int order() const noexcept { return table_->order(); }
  [[nodiscard]] int dim() const noexcept { return table_->dim(); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }
  [[nodiscard]] std::vector<double>& data() noexcept { return data_; }
  [[nodiscard]] const MultisetTable& table() const noexcept { return *table_; }
  [[nodiscard]] std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  void set_seed(std::optional<std::uint64_t> s) noexcept { seed_ = s; }

  /// Component T_{a_1...a_p} for indices in any order.
  [[nodiscard]] double at(std::span<const int> idx) const { return data_[rank_of(idx)]; }
  [[nodiscard]] double at(std::initializer_list<int> idx) const {
    return at(std::span<const int>(idx.begin(), idx.size()));
  }

  void set(std::span<const int> idx, double value) { data_[rank_of(idx)] = value; }
  void set(std::initializer_list<int> idx, double value) {
    set(std::span<const int>(idx.begin(), idx.size()), value);
  }

  /// T x^p.
  template <class S>
  [[nodiscard]] S contract_full(const std::vector<S>& x) const {
    check_vector(x.size());
    const int p = order();
    S total = S(0);
    for (std::size_t r = 0; r < data_.size(); ++r) {
      if (data_[r] == 0.0) continue;
      const auto m = table_->multiset(r);
      S prod = S(data_[r] * table_->orbit_size(r));
      for (int i = 0; i < p; ++i) prod *= x[m[i]];
      total += prod;
    }
    return total;
  }

  /// (T x^{p-1})_a.
  template <class S>
  [[nodiscard]] std::vector<S> contract_gradient(const std::vector<S>& x) const {
    check_vector(x.size());
    const int p = order();
    std::vector<S> g(dim(), S(0));
    std::vector<S> pre(p + 1), suf(p + 1);
    for (std::size_t r = 0; r < data_.size(); ++r) {
      if (data_[r] == 0.0) continue;
      const auto m = table_->multiset(r);
      prefix_suffix(m, x, pre, suf);
      const double w = data_[r] * table_->orbit_size(r) / p;
      for (int i = 0; i < p; ++i) g[m[i]] += w * (pre[i] * suf[i + 1]);
    }
    return g;
  }

  /// (T x^{p-2})_{ab}.
  template <class S>
  [[nodiscard]] Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> contract_hessian(const std::vector<S>& x) const {
    check_vector(x.size());
    const int p = order();
    detail::require(p >= 2, "contract_hessian needs p >= 2");
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> H =
        Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim(), dim());
    for (std::size_t r = 0; r < data_.size(); ++r) {
      if (data_[r] == 0.0) continue;
      const auto m = table_->multiset(r);
      const double w = data_[r] * table_->orbit_size(r) / (double(p) * (p - 1));
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          if (i == j) continue;
          S prod = S(w);
          for (int k = 0; k < p; ++k)
            if (k != i && k != j) prod *= x[m[k]];
          H(m[i], m[j]) += prod;
        }
    }
    return H;
  }

  /// Dense row-major N^p copy (small tensors only). Each packed component is
  /// scattered to all distinct orderings of its multiset.
  [[nodiscard]] std::vector<double> unpack() const {
    const int p = order(), N = dim();
    const double total = std::pow(double(N), p);
    detail::require(total <= 5e7, "unpack: N^p too large");
    std::vector<double> dense(static_cast<std::size_t>(total));
    std::vector<int> perm(p);
    for (std::size_t r = 0; r < data_.size(); ++r) {
      const auto m = table_->multiset(r);
      std::copy(m.begin(), m.end(), perm.begin());
      do {
        std::size_t flat = 0;
        for (int a : perm) flat = flat * N + a;
        dense[flat] = data_[r];
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return dense;
  }

  /// The p = 2 tensor as a symmetric matrix.
  [[nodiscard]] Eigen::MatrixXd as_matrix() const {
    if (order() != 2) throw DimensionMismatch("as_matrix requires p = 2");
    Eigen::MatrixXd M(dim(), dim());
    for (int a = 0; a < dim(); ++a)
      for (int b = 0; b < dim(); ++b) M(a, b) = at({a, b});
    return M;
  }

  SymmetricTensor& operator+=(const SymmetricTensor& o) {
    if (o.order() != order() || o.dim() != dim()) throw DimensionMismatch("tensor sum: shapes differ");
    for (std::size_t r = 0; r < data_.size(); ++r) data_[r] += o.data_[r];
    return *this;
  }

  friend bool operator==(const SymmetricTensor& a, const SymmetricTensor& b) {
    return a.order() == b.order() && a.dim() == b.dim() && a.data_ == b.data_;
  }

private:
  static std::shared_ptr<const MultisetTable> make_table(int p, int N) {
    detail::require_order(p, 1);
    detail::require(N >= 1, "dimension N must be >= 1");
    return MultisetTable::get(p, N);
  }

  [[nodiscard]] std::size_t rank_of(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != order())
      throw DimensionMismatch("expected " + std::to_string(order()) + " indices");
    std::vector<int> s(idx.begin(), idx.end());
    for (int a : s)
      if (a < 0 || a >= dim()) throw DimensionMismatch("tensor index out of range");
    std::sort(s.begin(), s.end());
    return table_->rank(s);
  }

  void check_vector(std::size_t n) const {
    if (static_cast<int>(n) != dim())
      throw DimensionMismatch("vector length " + std::to_string(n) + " != N = " + std::to_string(dim()));
  }

  template <class S>
  static void prefix_suffix(std::span<const int> m, const std::vector<S>& x, std::vector<S>& pre,
                            std::vector<S>& suf) {
    const std::size_t p = m.size();
    pre[0] = S(1);
    for (std::size_t i = 0; i < p; ++i) pre[i + 1] = pre[i] * x[m[i]];
    suf[p] = S(1);
    for (std::size_t i = p; i-- > 0;) suf[i] = suf[i + 1] * x[m[i]];
  }

  std::shared_ptr<const MultisetTable> table_;
  std::vector<double> data_;
  std::optional<std::uint64_t> seed_;
};

/// Variance of the packed component with multiset orbit size c under the
/// tensor GOE: p / (N^{p-1} c).
[[nodiscard]] inline double goe_component_variance(int p, int N, double orbit_size) {
  return double(p) / (std::pow(double(N), p - 1) * orbit_size);
}

/// Draws a tensor from the Gaussian ensemble exp(-N^{p-1}/(2p) sum_{all tuples} T^2).
/// Component r uses its own counter stream keyed by (seed, r).
[[nodiscard]] inline SymmetricTensor sample_goe(int p, int N, std::uint64_t seed) {
  detail::require_order(p);
  detail::require(N >= 1, "sample_goe: N must be >= 1");
  SymmetricTensor t(p, N);
  const auto& tab = t.table();
  for (std::size_t r = 0; r < t.size(); ++r) {
    const CounterStream stream(seed, r);
    t.data()[r] = stream.normal(0) * std::sqrt(goe_component_variance(p, N, tab.orbit_size(r)));
  }
  t.set_seed(seed);
  return t;
}

/// A = b N^{1-p/2} v^{(x)p} + T.
[[nodiscard]] inline SymmetricTensor add_spike(const SymmetricTensor& T, const SpikeSpec& spec) {
  if (static_cast<int>(spec.v.size()) != T.dim())
    throw DimensionMismatch("spike vector length differs from tensor dimension");
  spec.validate();
  SymmetricTensor A = T;
  if (spec.b == 0.0) return A;
  const int p = T.order();
  const double scale = spec.b * std::pow(double(T.dim()), 1.0 - 0.5 * p);
  for (std::size_t r = 0; r < A.size(); ++r) {
    double prod = scale;
    for (int a : T.table().multiset(r)) prod *= spec.v[a];
    A.data()[r] += prod;
  }
  return A;
}

/// (1/N) Tr (w - T)^{-1} for a p = 2 tensor, by LU solves against basis vectors.
[[nodiscard]] inline std::complex<double> matrix_resolvent(const SymmetricTensor& T, std::complex<double> w,
                                                           double rcond_floor = 1e-13) {
  if (T.order() != 2) throw DimensionMismatch("matrix_resolvent requires p = 2");
  const int N = T.dim();
  const Eigen::MatrixXcd M = w * Eigen::MatrixXcd::Identity(N, N) - T.as_matrix().cast<std::complex<double>>();
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  const double rc = lu.rcond();
  if (!(rc > rcond_floor)) throw NearSingular("w is (numerically) an eigenvalue of T", rc);
  std::complex<double> tr = 0.0;
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(N);
  for (int i = 0; i < N; ++i) {
    e.setZero();
    e(i) = 1.0;
    tr += lu.solve(e)(i);
  }
  return tr / double(N);
}

} // namespace rtensor
