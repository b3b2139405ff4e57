#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace normev {

using AgentId = int;
using GameId = int;
using ActionId = std::uint8_t;
using SymbolId = std::uint8_t;
using NormId = std::uint64_t;

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

/// One agent's perception, encoded as a fixed-length tuple of cell-content
/// symbols from the domain alphabet.
using Descriptor = std::vector<SymbolId>;

/// Starting conditions of a game: one perception descriptor per role, in
/// canonical role order. Equality is exact structural equality; any variation
/// in any perceived cell is a different context.
struct Context {
  std::vector<Descriptor> perRoleView;

  int roleCount() const { return static_cast<int>(perRoleView.size()); }

  bool operator==(const Context&) const = default;
  auto operator<=>(const Context&) const = default;

  // Canonical byte serialisation, used as games-base key and for norm ids.
  std::string key() const {
    std::string out;
    out.push_back(static_cast<char>(perRoleView.size()));
    for (const Descriptor& d : perRoleView) {
      out.push_back(static_cast<char>(d.size()));
      for (const SymbolId s : d) out.push_back(static_cast<char>(s));
    }
    return out;
  }
};

}  // namespace normev
