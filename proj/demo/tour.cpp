// A short walk through the library: spectra, eigenpairs, the spiked
// threshold and the Borel analysis of the zero-dimensional model.

#include <cmath>
#include <cstdio>

#include "rtensor/rtensor.hpp"

using namespace rtensor;

int main() {
  std::puts("generalized Wigner densities rho(y) at half the support edge");
  for (int p = 2; p <= 5; ++p) {
    const double e = support_edge(p);
    std::printf("  p=%d  edge=%.6f  rho=%.6f  F_p(3)=%s  moment=%.10f\n", p, e, wigner_density(p, 0.5 * e),
                fuss_catalan_number(p, 3).str().c_str(), density_moment(p, 3));
  }

  std::puts("\nrooted cubic maps with two vertices");
  const auto maps = enumerate_rooted_maps(3, 2);
  for (const auto& [graph, count] : [&] {
         std::map<std::vector<std::pair<int, int>>, int> g;
         for (const auto& m : maps) ++g[underlying_graph(m)];
         return g;
       }()) {
    std::printf("  %d rooted classes on edges", count);
    for (const auto& [a, b] : graph) std::printf(" %d-%d", a, b);
    std::puts("");
  }
  const auto exact = wick_expectation(3, 16, 2);
  const auto mc = mc_expected_invariant(3, 16, 2, 2000, 7);
  std::printf("  E[I_2]/N at N=16: exact %.6f, Monte Carlo %.6f +- %.6f\n", to_double(exact), mc.mean, mc.std_error);

  std::puts("\nreal eigenpairs of T000=2, T011=T022=1");
  SymmetricTensor t(3, 3);
  t.set({0, 0, 0}, 2.0);
  t.set({0, 1, 1}, 1.0);
  t.set({0, 2, 2}, 1.0);
  for (const auto& e : find_real_eigenpairs(t, {.starts = 40, .seed = 1}).pairs)
    std::printf("  lambda=%.12f  x=(%.6f, %.6f, %.6f)  residual=%.1e\n", e.lambda, e.x[0], e.x[1], e.x[2],
                e.residual);

  std::puts("\nspiked tensors: the singular locus jumps at b_t");
  for (int p = 3; p <= 5; ++p) {
    const auto r = spike_threshold(p);
    std::printf("  p=%d  b_t=%.12f  y_c below=%.6f  at=%.6f\n", p, r.b_t, r.y_c_below, r.y_c_at);
  }

  std::puts("\nphi^p model: discontinuity at the positive real cut vs one instanton");
  for (double g : {0.1, 0.05, 0.025}) {
    const auto d = borel::discontinuity(3, g, 0);
    const auto i = borel::instanton_discontinuity(3, g);
    std::printf("  |g|=%.3f  disc=%.6ei  instanton=%.6ei  ratio=%.4f\n", g, d.imag(), i.imag(), d.imag() / i.imag());
  }
  return 0;
}
