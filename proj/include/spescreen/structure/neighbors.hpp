#pragma once

#include <cstddef>
#include <array>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spescreen/exec.hpp"
#include "spescreen/structure/atomic_structure.hpp"

namespace spescreen {

// Per-atom radii: covalent radius from the element table unless overridden,
// times `multiplier`.
std::vector<double> natural_cutoffs(const AtomicStructure& s, const std::map<std::string, double>& overrides = {},
                                    double multiplier = 1.0);

struct NeighborList {
  // neighbors[i] sorted ascending, never contains i.
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t pair_count() const;
  // Unique pairs (i, j) with i < j, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
};

// Pair (i, j), i != j, is listed when some periodic image of j lies closer
// than radii[i] + radii[j] to i. Periodic images are used only along axes
// with pbc set (and a cell present). Cell-list search; the parallel and
// serial variants return identical lists.
NeighborList neighbor_list(const AtomicStructure& s, std::span<const double> radii, Exec exec = Exec::Parallel);

// One interacting pair image: atom j displaced by `shift` (= image . cell)
// relative to atom i, i.e. r_ij = r_j + shift - r_i in the input coordinates.
struct PairImage {
  std::size_t i = 0, j = 0;  // i <= j
  std::array<int, 3> image{0, 0, 0};
  Eigen::Vector3d shift = Eigen::Vector3d::Zero();
};

// Every pair image with |r_ij| < cutoff, each physical pair counted once:
// i < j over all images, plus i == j for the lexicographically positive
// half of nonzero images. Suitable for periodic pair-potential sums.
// Ordered by (i, j, image) in both variants.
std::vector<PairImage> pair_images(const AtomicStructure& s, double cutoff, Exec exec = Exec::Parallel);

struct MoleculeLabels {
  std::vector<std::size_t> labels;  // contiguous ids, numbered by first atom
  std::size_t count = 0;

  std::vector<std::vector<std::size_t>> members() const;
};

struct MoleculeOptions {
  std::map<std::string, double> radius_overrides;
  // Added to every atom's radius, so a pair gets 2*tolerance of slack.
  // Without it, bare covalent radii miss ordinary C-H bonds (1.08 A vs 1.07).
  double tolerance = 0.3;
};

// Connected components of the covalent-neighbor graph.
MoleculeLabels identify_molecules(const AtomicStructure& s, const MoleculeOptions& opts = {},
                                  Exec exec = Exec::Parallel);

// Per-atom lattice offsets o_i such that r_i + o_i . cell puts every
// molecule back together (bonded atoms at their bonded image). Zero for
// non-periodic structures. For a molecule bonded to its own image the first
// spanning-tree choice wins.
std::vector<std::array<int, 3>> molecule_offsets(const AtomicStructure& s, const MoleculeOptions& opts = {});

// Components from an explicit adjacency (union-find).
MoleculeLabels connected_components(const NeighborList& nl);

}  // namespace spescreen
