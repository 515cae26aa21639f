#include "spescreen/chem/fingerprint.hpp"

#include <algorithm>
#include <bit>

#include "spescreen/error.hpp"
#include "spescreen/structure/elements.hpp"

namespace spescreen::chem {

Fingerprint::Fingerprint(std::size_t nbits, int radius)
    : nbits_(nbits), radius_(radius), words_((nbits + 63) / 64, 0) {}

std::size_t Fingerprint::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::uint64_t stable_hash(std::span<const std::uint64_t> values) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (std::uint64_t v : values) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffU;
      h *= kPrime;
    }
  }
  return h;
}

std::vector<std::vector<std::uint64_t>> morgan_identifiers(const MolecularGraph& graph, int radius) {
  const std::size_t n = graph.atom_count();
  const auto ring = graph.ring_atoms();
  std::vector<std::vector<std::uint64_t>> ids;
  ids.reserve(static_cast<std::size_t>(radius) + 1);

  std::vector<std::uint64_t> current(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = graph.atoms()[i];
    const std::uint64_t invariant[] = {
        static_cast<std::uint64_t>(element(a.element).atomic_number),
        static_cast<std::uint64_t>(graph.degree(i)),
        static_cast<std::uint64_t>(a.hydrogens),
        static_cast<std::uint64_t>(static_cast<std::int64_t>(a.charge)),
        ring[i] ? 1U : 0U,
    };
    current[i] = stable_hash(invariant);
  }
  ids.push_back(current);

  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
      for (std::size_t k : graph.incident(i)) {
        const auto& b = graph.bonds()[k];
        env.emplace_back(static_cast<std::uint64_t>(b.order), current[b.other(i)]);
      }
      std::sort(env.begin(), env.end());
      std::vector<std::uint64_t> words{static_cast<std::uint64_t>(r), current[i]};
      for (const auto& [order, id] : env) {
        words.push_back(order);
        words.push_back(id);
      }
      next[i] = stable_hash(words);
    }
    current = std::move(next);
    ids.push_back(current);
  }
  return ids;
}

Fingerprint morgan_fingerprint(const MolecularGraph& graph, int radius, std::size_t nbits) {
  if (radius < 0) throw ValidationError("fingerprint radius must be >= 0");
  if (nbits < 8 || !std::has_single_bit(nbits)) throw ValidationError("fingerprint nbits must be a power of two >= 8");
  Fingerprint fp(nbits, radius);
  for (const auto& layer : morgan_identifiers(graph, radius)) {
    for (std::uint64_t id : layer) fp.set(static_cast<std::size_t>(id % nbits));
  }
  return fp;
}

}  // namespace spescreen::chem
