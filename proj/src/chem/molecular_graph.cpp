#include "spescreen/chem/molecular_graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include "spescreen/error.hpp"

namespace spescreen::chem {

std::size_t MolecularGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return atoms_.size() - 1;
}

std::size_t MolecularGraph::add_bond(std::size_t a, std::size_t b, BondOrder order, char direction) {
  if (a >= atoms_.size() || b >= atoms_.size()) throw ValidationError("bond endpoint out of range");
  if (a == b) throw ValidationError("self-loop bond on atom " + std::to_string(a));
  if (find_bond(a, b)) {
    throw ValidationError("duplicate bond between atoms " + std::to_string(a) + " and " + std::to_string(b));
  }
  bonds_.push_back(Bond{a, b, order, direction});
  adjacency_[a].push_back(bonds_.size() - 1);
  adjacency_[b].push_back(bonds_.size() - 1);
  return bonds_.size() - 1;
}

std::optional<std::size_t> MolecularGraph::find_bond(std::size_t a, std::size_t b) const {
  if (a >= adjacency_.size()) return std::nullopt;
  for (std::size_t k : adjacency_[a]) {
    if (bonds_[k].other(a) == b) return k;
  }
  return std::nullopt;
}

std::vector<bool> MolecularGraph::ring_bonds() const {
  // A bond is a ring bond iff it is not a bridge. Iterative Tarjan low-link.
  const std::size_t n = atoms_.size();
  std::vector<bool> in_ring(bonds_.size(), true);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  struct Frame {
    std::size_t atom;
    std::size_t parent_bond;
    std::size_t next;
  };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<Frame> stack{{root, kNone, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adjacency_[f.atom].size()) {
        const std::size_t bond = adjacency_[f.atom][f.next++];
        if (bond == f.parent_bond) continue;
        const std::size_t nb = bonds_[bond].other(f.atom);
        if (disc[nb] < 0) {
          disc[nb] = low[nb] = timer++;
          stack.push_back({nb, bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const std::size_t parent = stack.back().atom;
          low[parent] = std::min(low[parent], low[done.atom]);
          if (low[done.atom] > disc[parent]) in_ring[done.parent_bond] = false;
        }
      }
    }
  }
  return in_ring;
}

std::vector<bool> MolecularGraph::ring_atoms() const {
  const auto rb = ring_bonds();
  std::vector<bool> out(atoms_.size(), false);
  for (std::size_t k = 0; k < bonds_.size(); ++k) {
    if (rb[k]) out[bonds_[k].a] = out[bonds_[k].b] = true;
  }
  return out;
}

std::size_t MolecularGraph::component_count() const {
  std::vector<std::size_t> parent(atoms_.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t count = atoms_.size();
  for (const auto& b : bonds_) {
    const auto ra = find(b.a), rb = find(b.b);
    if (ra != rb) {
      parent[ra] = rb;
      --count;
    }
  }
  return count;
}

std::size_t MolecularGraph::ring_count() const {
  return bonds_.size() + component_count() - atoms_.size();
}

MolecularGraph MolecularGraph::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != atoms_.size()) throw ValidationError("permutation size mismatch");
  std::vector<std::size_t> new_index(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) new_index[order[k]] = k;
  MolecularGraph out;
  for (std::size_t k = 0; k < order.size(); ++k) out.add_atom(atoms_[order[k]]);
  for (const auto& b : bonds_) out.add_bond(new_index[b.a], new_index[b.b], b.order, b.direction);
  out.source_ = source_;
  return out;
}

const std::vector<int>& default_valences(const std::string& element) {
  static const std::map<std::string, std::vector<int>> table{
      {"B", {3}},     {"C", {4}},  {"N", {3, 5}}, {"O", {2}},  {"P", {3, 5}},
      {"S", {2, 4, 6}}, {"F", {1}}, {"Cl", {1}},  {"Br", {1}}, {"I", {1}},
  };
  static const std::vector<int> none;
  const auto it = table.find(element);
  return it == table.end() ? none : it->second;
}

bool in_organic_subset(const std::string& element) { return !default_valences(element).empty(); }

std::optional<int> implicit_hydrogens(const std::string& element, bool aromatic, int bond_sum,
                                      int aromatic_bonds) {
  const auto& valences = default_valences(element);
  if (valences.empty()) return 0;
  if (aromatic && aromatic_bonds > 0) {
    // Trivalent/tetravalent aromatic atoms donate one electron to the pi
    // system; chalcogens donate a lone pair and take no extra valence.
    const bool one_electron = element == "B" || element == "C" || element == "N" || element == "P";
    const int target = bond_sum + (one_electron ? 1 : 0);
    const int lowest = valences.front();
    if (target <= lowest) return lowest - target;
    // Tolerates pyridinium-like n and exocyclic c=O written in aromatic form.
    if (target == lowest + 1) return 0;
    return std::nullopt;
  }
  for (int v : valences) {
    if (v >= bond_sum) return v - bond_sum;
  }
  return std::nullopt;
}

}  // namespace spescreen::chem
