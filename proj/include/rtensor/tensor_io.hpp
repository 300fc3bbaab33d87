#pragma once

// Tensor files: one JSON header line followed by the packed components as
// little-endian IEEE float64 in lexicographic multiset order.
//
//   {"p":3,"N":4,"seed":7,"layout":"packed-multiset-lex","count":20,"dtype":"float64","endianness":"little"}\n
//   <count * 8 bytes>

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "tensor.hpp"

namespace rtensor {

inline constexpr const char* kTensorLayout = "packed-multiset-lex";

[[nodiscard]] inline nlohmann::json tensor_header(const SymmetricTensor& t) {
  nlohmann::json h;
  h["p"] = t.order();
  h["N"] = t.dim();
  if (t.seed()) h["seed"] = *t.seed();
  h["layout"] = kTensorLayout;
  h["count"] = t.size();
  h["dtype"] = "float64";
  h["endianness"] = "little";
  return h;
}

/// `extra` keys are merged into the header line; readers ignore them.
inline void write_tensor(std::ostream& os, const SymmetricTensor& t, const nlohmann::json& extra = {}) {
  nlohmann::json h = tensor_header(t);
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) h[k] = v;
  os << h.dump() << '\n';
  for (double v : t.data()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(buf, 8);
  }
  if (!os) throw Error("write_tensor: stream error");
}

[[nodiscard]] inline SymmetricTensor read_tensor(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("read_tensor: missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("read_tensor: bad header: ") + e.what());
  }
  if (h.value("layout", std::string()) != kTensorLayout)
    throw ValidationError("read_tensor: unsupported layout");
  if (h.value("dtype", std::string("float64")) != "float64" ||
      h.value("endianness", std::string("little")) != "little")
    throw ValidationError("read_tensor: only little-endian float64 payloads are supported");
  const int p = h.at("p").get<int>();
  const int N = h.at("N").get<int>();
  SymmetricTensor t(p, N);
  if (h.contains("count") && h["count"].get<std::size_t>() != t.size())
    throw DimensionMismatch("read_tensor: count does not match C(N+p-1, p)");
  for (double& v : t.data()) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ValidationError("read_tensor: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(buf[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  if (h.contains("seed")) t.set_seed(h["seed"].get<std::uint64_t>());
  return t;
}

} // namespace rtensor
