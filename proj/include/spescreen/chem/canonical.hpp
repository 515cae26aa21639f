#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spescreen/chem/molecular_graph.hpp"

namespace spescreen::chem {

// Writes SMILES for the given atom ranking (lower rank visited first).
// `ranks` must be a permutation of 0..n-1.
std::string write_smiles(const MolecularGraph& graph, const std::vector<std::size_t>& ranks);

// Canonical ranking: iterative neighborhood refinement of atom invariants,
// with ties broken by exhaustive individualization choosing the
// lexicographically smallest output string. `max_leaves` bounds the search
// for highly symmetric graphs.
std::vector<std::size_t> canonical_ranks(const MolecularGraph& graph, std::size_t max_leaves = 20000);

// Relabeling-invariant SMILES string.
std::string canonicalize(const MolecularGraph& graph);

}  // namespace spescreen::chem
