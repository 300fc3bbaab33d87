#pragma once

// p-valent combinatorial maps: half-edges 0..np-1, a successor permutation
// whose cycles all have length p (the vertices) and a fixed-point-free pairing
// involution (the edges). Half-edges of vertex v are v*p, ..., v*p+p-1 in
// cyclic order in every map produced here.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace rtensor {

inline constexpr int kDefaultMapCap = 12;

struct CombinatorialMap {
  int p{};
  int n{};
  std::vector<int> successor;
  std::vector<int> pairing;
  std::optional<int> root;

  [[nodiscard]] int half_edges() const noexcept { return static_cast<int>(pairing.size()); }

  /// Throws ValidationError unless the invariants hold.
  void validate() const {
    const int H = half_edges();
    detail::require(H == n * p, "map: half-edge count must be n*p");
    detail::require(static_cast<int>(successor.size()) == H, "map: successor size mismatch");
    std::vector<char> seen(H, 0);
    for (int h = 0; h < H; ++h) {
      detail::require(successor[h] >= 0 && successor[h] < H, "map: successor out of range");
      detail::require(pairing[h] >= 0 && pairing[h] < H, "map: pairing out of range");
      detail::require(pairing[h] != h && pairing[pairing[h]] == h,
                      "map: pairing must be a fixed-point-free involution");
      if (seen[h]) continue;
      int len = 0, c = h;
      do {
        seen[c] = 1;
        c = successor[c];
        ++len;
      } while (c != h && len <= H);
      detail::require(len == p, "map: every successor cycle must have length p");
    }
    if (root) detail::require(*root >= 0 && *root < H, "map: root must be a half-edge");
  }

  /// Vertex label of each half-edge (cycle index of the successor).
  [[nodiscard]] std::vector<int> vertex_of() const {
    const int H = half_edges();
    std::vector<int> v(H, -1);
    int next = 0;
    for (int h = 0; h < H; ++h) {
      if (v[h] >= 0) continue;
      int c = h;
      do {
        v[c] = next;
        c = successor[c];
      } while (c != h);
      ++next;
    }
    return v;
  }

  [[nodiscard]] bool connected() const {
    const auto vert = vertex_of();
    const int nv = vert.empty() ? 0 : *std::max_element(vert.begin(), vert.end()) + 1;
    std::vector<int> parent(nv);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (int h = 0; h < half_edges(); ++h) parent[find(vert[h])] = find(vert[pairing[h]]);
    for (int v = 0; v < nv; ++v)
      if (find(v) != find(0)) return false;
    return true;
  }

  friend bool operator==(const CombinatorialMap&, const CombinatorialMap&) = default;
};

/// Standard successor with vertex v owning half-edges v*p..v*p+p-1.
[[nodiscard]] inline std::vector<int> standard_successor(int p, int n) {
  std::vector<int> s(n * p);
  for (int h = 0; h < n * p; ++h) s[h] = (h / p) * p + (h % p + 1) % p;
  return s;
}

/// Relabels half-edges breadth-first from `root`: the root's vertex gets
/// labels 0..p-1 in successor order, then each newly reached vertex (through
/// the pairing of the lowest labelled unprocessed half-edge) gets the next
/// block. Returns the relabelled pairing, which identifies the rooted map up
/// to isomorphism. Requires a connected map.
[[nodiscard]] inline std::vector<int> canonical_code(const CombinatorialMap& m, int root) {
  const int H = m.half_edges();
  std::vector<int> label(H, -1), order;
  order.reserve(H);
  const auto claim_vertex = [&](int h) {
    int c = h;
    do {
      label[c] = static_cast<int>(order.size());
      order.push_back(c);
      c = m.successor[c];
    } while (c != h);
  };
  claim_vertex(root);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int partner = m.pairing[order[i]];
    if (label[partner] < 0) claim_vertex(partner);
  }
  if (static_cast<int>(order.size()) != H) throw ValidationError("canonical_code: map is not connected");
  std::vector<int> code(H);
  for (int i = 0; i < H; ++i) code[i] = label[m.pairing[order[i]]];
  return code;
}

/// The rooted map whose canonical code is `code` (root = half-edge 0).
[[nodiscard]] inline CombinatorialMap map_from_code(int p, const std::vector<int>& code) {
  CombinatorialMap m;
  m.p = p;
  m.n = static_cast<int>(code.size()) / p;
  m.successor = standard_successor(p, m.n);
  m.pairing = code;
  m.root = 0;
  return m;
}

/// Connected rooted p-valent maps with n vertices, one per rooted isomorphism
/// class. An odd number of half-edges admits no pairing and yields an empty list.
[[nodiscard]] inline std::vector<CombinatorialMap> enumerate_rooted_maps(int p, int n, int cap = kDefaultMapCap) {
  detail::require_order(p, 1);
  detail::require(n >= 0, "enumerate_rooted_maps: n must be >= 0");
  const int H = n * p;
  if (H > cap)
    throw CapExceeded("enumerate_rooted_maps: n*p = " + std::to_string(H) + " exceeds the cap " +
                      std::to_string(cap));
  if (H % 2 != 0 || n == 0) return {};
  CombinatorialMap m;
  m.p = p;
  m.n = n;
  m.successor = standard_successor(p, n);
  m.pairing.assign(H, -1);
  std::set<std::vector<int>> codes;
  // recursive generation of all perfect matchings
  const auto rec = [&](auto&& self) -> void {
    int first = -1;
    for (int h = 0; h < H; ++h)
      if (m.pairing[h] < 0) {
        first = h;
        break;
      }
    if (first < 0) {
      if (!m.connected()) return;
      for (int r = 0; r < H; ++r) codes.insert(canonical_code(m, r));
      return;
    }
    for (int h = first + 1; h < H; ++h) {
      if (m.pairing[h] >= 0) continue;
      m.pairing[first] = h;
      m.pairing[h] = first;
      self(self);
      m.pairing[first] = m.pairing[h] = -1;
    }
  };
  rec(rec);
  std::vector<CombinatorialMap> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(map_from_code(p, c));
  return out;
}

/// Underlying multigraph as a canonical sorted edge list (vertex pairs),
/// minimized over vertex relabellings. Cyclic orders and the root are ignored.
[[nodiscard]] inline std::vector<std::pair<int, int>> underlying_graph(const CombinatorialMap& m) {
  const auto vert = m.vertex_of();
  const int nv = vert.empty() ? 0 : *std::max_element(vert.begin(), vert.end()) + 1;
  std::vector<std::pair<int, int>> edges;
  for (int h = 0; h < m.half_edges(); ++h)
    if (h < m.pairing[h]) edges.emplace_back(vert[h], vert[m.pairing[h]]);
  std::vector<int> perm(nv);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::pair<int, int>> best;
  do {
    std::vector<std::pair<int, int>> e;
    e.reserve(edges.size());
    for (auto [a, b] : edges) {
      int x = perm[a], y = perm[b];
      e.emplace_back(std::min(x, y), std::max(x, y));
    }
    std::sort(e.begin(), e.end());
    if (best.empty() || e < best) best = std::move(e);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Rooted classes grouped by underlying graph: graph -> number of classes.
[[nodiscard]] inline std::map<std::vector<std::pair<int, int>>, int>
group_by_underlying_graph(const std::vector<CombinatorialMap>& maps) {
  std::map<std::vector<std::pair<int, int>>, int> groups;
  for (const auto& m : maps) ++groups[underlying_graph(m)];
  return groups;
}

[[nodiscard]] inline nlohmann::json to_json(const CombinatorialMap& m) {
  nlohmann::json j;
  j["p"] = m.p;
  j["n"] = m.n;
  std::vector<int> h(m.half_edges());
  std::iota(h.begin(), h.end(), 0);
  j["half_edges"] = h;
  j["successor"] = m.successor;
  j["pairing"] = m.pairing;
  j["root"] = m.root ? nlohmann::json(*m.root) : nlohmann::json(nullptr);
  return j;
}

[[nodiscard]] inline CombinatorialMap map_from_json(const nlohmann::json& j) {
  CombinatorialMap m;
  m.p = j.at("p").get<int>();
  m.n = j.at("n").get<int>();
  m.successor = j.at("successor").get<std::vector<int>>();
  m.pairing = j.at("pairing").get<std::vector<int>>();
  if (j.contains("root") && !j["root"].is_null()) m.root = j["root"].get<int>();
  m.validate();
  return m;
}

} // namespace rtensor
