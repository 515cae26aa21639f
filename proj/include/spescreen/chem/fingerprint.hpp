#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spescreen/chem/molecular_graph.hpp"

namespace spescreen::chem {

// Fixed-length binary fingerprint.
class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(std::size_t nbits, int radius);

  std::size_t nbits() const { return nbits_; }
  int radius() const { return radius_; }
  bool test(std::size_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1U; }
  void set(std::size_t bit) { words_[bit / 64] |= std::uint64_t{1} << (bit % 64); }
  std::size_t popcount() const;
  std::span<const std::uint64_t> words() const { return words_; }

  bool operator==(const Fingerprint&) const = default;

 private:
  std::size_t nbits_ = 0;
  int radius_ = 0;
  std::vector<std::uint64_t> words_;
};

// 64-bit FNV-1a over a sequence of 64-bit little-endian words. This is the
// stable hash behind fingerprint bit positions; changing it changes every
// fingerprint.
std::uint64_t stable_hash(std::span<const std::uint64_t> values);

// Circular (Morgan/ECFP-style) fingerprint. Radius-0 identifiers hash the
// atom invariant (atomic number, heavy degree, H count, charge, ring flag);
// each further iteration hashes (iteration, own id, sorted (bond order,
// neighbor id) pairs). Every identifier from every radius sets bit
// (id mod nbits). Chirality is ignored.
// Throws ValidationError unless radius >= 0 and nbits >= 8 is a power of two.
Fingerprint morgan_fingerprint(const MolecularGraph& graph, int radius = 2, std::size_t nbits = 1024);

// Environment identifiers per radius (outer index: radius), exposed for
// testing and for counting distinct environments.
std::vector<std::vector<std::uint64_t>> morgan_identifiers(const MolecularGraph& graph, int radius);

}  // namespace spescreen::chem
