#include "spescreen/chem/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "spescreen/error.hpp"
#include "spescreen/structure/elements.hpp"

namespace spescreen::chem {
namespace {

int bond_code(BondOrder o) { return static_cast<int>(o); }

std::string atom_text(const MolecularGraph& g, std::size_t i) {
  const Atom& atom = g.atoms()[i];
  int bond_sum = 0;
  int aromatic_bonds = 0;
  for (std::size_t k : g.incident(i)) {
    const auto o = g.bonds()[k].order;
    if (o == BondOrder::Aromatic) {
      ++aromatic_bonds;
      ++bond_sum;
    } else {
      bond_sum += static_cast<int>(o);
    }
  }
  std::string symbol = atom.element;
  if (atom.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));

  const bool plain = in_organic_subset(atom.element) && atom.charge == 0 && !atom.isotope &&
                     implicit_hydrogens(atom.element, atom.aromatic, bond_sum, aromatic_bonds) == atom.hydrogens;
  if (plain) return symbol;

  std::string out = "[";
  if (atom.isotope) out += std::to_string(*atom.isotope);
  out += symbol;
  if (atom.hydrogens == 1) out += "H";
  if (atom.hydrogens > 1) out += "H" + std::to_string(atom.hydrogens);
  if (atom.charge > 0) out += "+";
  if (atom.charge < 0) out += "-";
  if (std::abs(atom.charge) > 1) out += std::to_string(std::abs(atom.charge));
  out += "]";
  return out;
}

std::string bond_text(const MolecularGraph& g, const Bond& b) {
  switch (b.order) {
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return "";
    case BondOrder::Single:
      return g.atoms()[b.a].aromatic && g.atoms()[b.b].aromatic ? "-" : "";
  }
  return "";
}

std::string ring_label(int d) { return d < 10 ? std::to_string(d) : "%" + std::to_string(d); }

class Writer {
 public:
  Writer(const MolecularGraph& g, const std::vector<std::size_t>& ranks) : g_(g), ranks_(ranks) {
    const std::size_t n = g.atom_count();
    order_.assign(n, kUnvisited);
    children_.resize(n);
    ring_edges_.resize(n);
    edge_is_tree_.assign(g.bond_count(), false);
    edge_seen_.assign(g.bond_count(), false);
  }

  std::string run() {
    std::vector<std::size_t> by_rank(g_.atom_count());
    std::iota(by_rank.begin(), by_rank.end(), 0);
    std::sort(by_rank.begin(), by_rank.end(), [&](auto a, auto b) { return ranks_[a] < ranks_[b]; });
    std::string out;
    for (std::size_t start : by_rank) {
      if (order_[start] != kUnvisited) continue;
      explore(start, kNone);
      if (!out.empty()) out += '.';
      emit(start, out);
    }
    return out;
  }

 private:
  static constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<std::size_t> sorted_neighbor_bonds(std::size_t u) const {
    std::vector<std::size_t> bonds = g_.incident(u);
    std::sort(bonds.begin(), bonds.end(),
              [&](auto x, auto y) { return ranks_[g_.bonds()[x].other(u)] < ranks_[g_.bonds()[y].other(u)]; });
    return bonds;
  }

  void explore(std::size_t u, std::size_t parent_bond) {
    order_[u] = counter_++;
    for (std::size_t k : sorted_neighbor_bonds(u)) {
      if (k == parent_bond || edge_seen_[k]) continue;
      edge_seen_[k] = true;
      const std::size_t v = g_.bonds()[k].other(u);
      if (order_[v] == kUnvisited) {
        edge_is_tree_[k] = true;
        children_[u].push_back(k);
        explore(v, k);
      } else {
        ring_edges_[u].push_back(k);
        ring_edges_[v].push_back(k);
      }
    }
  }

  void emit(std::size_t u, std::string& out) {
    out += atom_text(g_, u);
    auto rings = ring_edges_[u];
    std::sort(rings.begin(), rings.end(), [&](auto x, auto y) {
      return order_[g_.bonds()[x].other(u)] < order_[g_.bonds()[y].other(u)];
    });
    std::vector<int> to_free;
    for (std::size_t k : rings) {
      const std::size_t v = g_.bonds()[k].other(u);
      if (order_[v] < order_[u] && digit_.count(k)) {
        out += ring_label(digit_[k]);
        to_free.push_back(digit_[k]);
      } else {
        int d = 1;
        while (used_.count(d)) ++d;
        used_.insert(d);
        digit_[k] = d;
        out += bond_text(g_, g_.bonds()[k]) + ring_label(d);
      }
    }
    for (int d : to_free) used_.erase(d);
    for (std::size_t c = 0; c < children_[u].size(); ++c) {
      const std::size_t k = children_[u][c];
      const std::size_t v = g_.bonds()[k].other(u);
      const bool last = c + 1 == children_[u].size();
      if (!last) out += '(';
      out += bond_text(g_, g_.bonds()[k]);
      emit(v, out);
      if (!last) out += ')';
    }
  }

  const MolecularGraph& g_;
  const std::vector<std::size_t>& ranks_;
  std::vector<std::size_t> order_;
  std::size_t counter_ = 0;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> ring_edges_;
  std::vector<bool> edge_is_tree_;
  std::vector<bool> edge_seen_;
  std::map<std::size_t, int> digit_;
  std::set<int> used_;
};

// Dense relabeling of arbitrary comparable keys, preserving key order.
template <typename Key>
std::vector<std::size_t> dense_classes(const std::vector<Key>& keys) {
  std::vector<Key> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> out(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
  }
  return out;
}

std::size_t class_count(const std::vector<std::size_t>& classes) {
  return classes.empty() ? 0 : *std::max_element(classes.begin(), classes.end()) + 1;
}

std::vector<std::size_t> refine(const MolecularGraph& g, std::vector<std::size_t> classes) {
  using Key = std::pair<std::size_t, std::vector<std::pair<int, std::size_t>>>;
  std::size_t count = class_count(classes);
  while (true) {
    std::vector<Key> keys(g.atom_count());
    for (std::size_t i = 0; i < g.atom_count(); ++i) {
      keys[i].first = classes[i];
      for (std::size_t k : g.incident(i)) {
        const auto& b = g.bonds()[k];
        keys[i].second.emplace_back(bond_code(b.order), classes[b.other(i)]);
      }
      std::sort(keys[i].second.begin(), keys[i].second.end());
    }
    auto next = dense_classes(keys);
    const std::size_t next_count = class_count(next);
    classes = std::move(next);
    if (next_count == count) return classes;
    count = next_count;
  }
}

std::vector<std::size_t> initial_classes(const MolecularGraph& g) {
  using Key = std::tuple<int, int, int, int, int, std::size_t, int>;
  const auto ring = g.ring_atoms();
  std::vector<Key> keys(g.atom_count());
  for (std::size_t i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atoms()[i];
    keys[i] = Key{element(a.element).atomic_number, a.isotope.value_or(0), a.charge, a.hydrogens,
                  a.aromatic ? 1 : 0, g.degree(i), ring[i] ? 1 : 0};
  }
  return dense_classes(keys);
}

struct Search {
  const MolecularGraph& g;
  std::size_t max_leaves;
  std::size_t leaves = 0;
  std::string best;
  std::vector<std::size_t> best_ranks;

  void run(std::vector<std::size_t> classes) {
    classes = refine(g, std::move(classes));
    const std::size_t n = g.atom_count();
    if (class_count(classes) == n) {
      ++leaves;
      std::string s = write_smiles(g, classes);
      if (best_ranks.empty() || s < best) {
        best = std::move(s);
        best_ranks = classes;
      }
      return;
    }
    // Lowest class with more than one member.
    std::vector<std::size_t> sizes(class_count(classes), 0);
    for (auto c : classes) ++sizes[c];
    std::size_t target = 0;
    while (sizes[target] < 2) ++target;
    for (std::size_t a = 0; a < n; ++a) {
      if (classes[a] != target) continue;
      if (leaves >= max_leaves && !best_ranks.empty()) return;
      std::vector<std::size_t> keys(n);
      for (std::size_t i = 0; i < n; ++i) keys[i] = classes[i] * 2 + ((classes[i] == target && i != a) ? 1 : 0);
      run(dense_classes(keys));
    }
  }
};

}  // namespace

std::string write_smiles(const MolecularGraph& graph, const std::vector<std::size_t>& ranks) {
  if (ranks.size() != graph.atom_count()) throw ValidationError("rank vector size mismatch");
  return Writer(graph, ranks).run();
}

std::vector<std::size_t> canonical_ranks(const MolecularGraph& graph, std::size_t max_leaves) {
  if (graph.atom_count() == 0) return {};
  Search search{graph, max_leaves, 0, {}, {}};
  search.run(initial_classes(graph));
  return search.best_ranks;
}

std::string canonicalize(const MolecularGraph& graph) {
  if (graph.atom_count() == 0) return {};
  Search search{graph, 20000, 0, {}, {}};
  search.run(initial_classes(graph));
  return search.best;
}

}  // namespace spescreen::chem
