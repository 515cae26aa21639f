#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spescreen::chem {

enum class BondOrder { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
  std::string element;  // capitalized symbol, e.g. "C", "Cl"
  int charge = 0;
  int hydrogens = 0;  // total attached H (bracket count or valence-derived)
  bool aromatic = false;
  std::optional<int> isotope;
  bool bracket = false;   // written in [] in the source
  std::string chirality;  // "@", "@@" or empty; recorded, not interpreted
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::Single;
  char direction = 0;  // '/' or '\\' when given; recorded, not interpreted

  std::size_t other(std::size_t i) const { return i == a ? b : a; }
};

// Heavy-atom graph. Hydrogens are folded into Atom::hydrogens.
class MolecularGraph {
 public:
  MolecularGraph() = default;

  std::size_t add_atom(Atom atom);
  // Throws ValidationError for invalid endpoints, self-loops and duplicates.
  std::size_t add_bond(std::size_t a, std::size_t b, BondOrder order, char direction = 0);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::vector<Atom>& atoms() { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  std::vector<Bond>& bonds() { return bonds_; }
  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }

  // Bond indices incident to atom i.
  const std::vector<std::size_t>& incident(std::size_t i) const { return adjacency_[i]; }
  std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
  std::optional<std::size_t> find_bond(std::size_t a, std::size_t b) const;

  const std::string& source() const { return source_; }
  void set_source(std::string s) { source_ = std::move(s); }

  // Bond-level ring membership (bond lies on a cycle).
  std::vector<bool> ring_bonds() const;
  std::vector<bool> ring_atoms() const;
  // Number of independent rings (cyclomatic number).
  std::size_t ring_count() const;
  std::size_t component_count() const;

  // Copy with atoms reordered: new atom k is old atom order[k].
  MolecularGraph permuted(const std::vector<std::size_t>& order) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::string source_;
};

// Valence bookkeeping shared by the parser and the writer.
// Default valences for the organic subset; empty for anything else.
const std::vector<int>& default_valences(const std::string& element);
bool in_organic_subset(const std::string& element);
// Implicit H an unbracketed atom would receive given its bond sum
// (aromatic bonds count 1). Returns nullopt on valence overflow.
std::optional<int> implicit_hydrogens(const std::string& element, bool aromatic, int bond_sum,
                                      int aromatic_bonds);

}  // namespace spescreen::chem
