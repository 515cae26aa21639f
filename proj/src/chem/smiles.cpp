#include "spescreen/chem/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "spescreen/structure/elements.hpp"

namespace spescreen::chem {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Empty: return "empty input";
    case ParseErrorKind::UnbalancedParentheses: return "unbalanced parentheses";
    case ParseErrorKind::UnmatchedRingClosure: return "unmatched ring closure";
    case ParseErrorKind::UnknownElement: return "unknown element";
    case ParseErrorKind::ValenceOverflow: return "valence overflow";
    case ParseErrorKind::InvalidBond: return "invalid bond";
    case ParseErrorKind::UnexpectedCharacter: return "unexpected character";
  }
  return "parse error";
}

SmilesParseError::SmilesParseError(ParseErrorKind kind, std::size_t position, const std::string& detail)
    : ValidationError("SMILES " + std::string(to_string(kind)) + " at position " + std::to_string(position) +
                      (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      position_(position) {}

namespace {

struct PendingBond {
  std::optional<BondOrder> order;
  char direction = 0;
};

struct RingOpening {
  std::size_t atom;
  PendingBond bond;
  std::size_t position;
};

bool is_aromatic_symbol(std::string_view s) {
  return s == "b" || s == "c" || s == "n" || s == "o" || s == "p" || s == "s" || s == "se" || s == "as" ||
         s == "te";
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  MolecularGraph run() {
    if (text_.empty()) throw SmilesParseError(ParseErrorKind::Empty, 0, "");
    std::vector<std::size_t> branch_stack;
    std::optional<std::size_t> prev;
    PendingBond pending;
    bool have_pending = false;

    while (pos_ < text_.size()) {
      const char ch = text_[pos_];
      const std::size_t here = pos_;
      if (ch == '(') {
        if (!prev) throw SmilesParseError(ParseErrorKind::UnbalancedParentheses, here, "branch without atom");
        branch_stack.push_back(*prev);
        ++pos_;
      } else if (ch == ')') {
        if (branch_stack.empty()) throw SmilesParseError(ParseErrorKind::UnbalancedParentheses, here, "unopened ')'");
        if (have_pending) throw SmilesParseError(ParseErrorKind::InvalidBond, here, "dangling bond");
        prev = branch_stack.back();
        branch_stack.pop_back();
        ++pos_;
      } else if (ch == '-' || ch == '=' || ch == '#' || ch == ':' || ch == '/' || ch == '\\') {
        if (have_pending || !prev) throw SmilesParseError(ParseErrorKind::InvalidBond, here, "misplaced bond symbol");
        pending = read_bond();
        have_pending = true;
      } else if (ch == '.') {
        if (have_pending) throw SmilesParseError(ParseErrorKind::InvalidBond, here, "bond before '.'");
        if (!branch_stack.empty())
          throw SmilesParseError(ParseErrorKind::UnbalancedParentheses, here, "'.' inside branch");
        prev.reset();
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '%') {
        if (!prev) throw SmilesParseError(ParseErrorKind::UnmatchedRingClosure, here, "ring bond without atom");
        const int digit = read_ring_number();
        handle_ring(digit, *prev, have_pending ? pending : PendingBond{}, here);
        have_pending = false;
        pending = {};
      } else {
        const std::size_t atom = read_atom();
        if (prev) {
          connect(*prev, atom, have_pending ? pending : PendingBond{}, here);
        } else if (have_pending) {
          throw SmilesParseError(ParseErrorKind::InvalidBond, here, "bond without preceding atom");
        }
        have_pending = false;
        pending = {};
        prev = atom;
      }
    }
    if (have_pending) throw SmilesParseError(ParseErrorKind::InvalidBond, text_.size(), "dangling bond");
    if (!branch_stack.empty())
      throw SmilesParseError(ParseErrorKind::UnbalancedParentheses, text_.size(), "unclosed '('");
    if (!rings_.empty()) {
      const auto& open = rings_.begin()->second;
      throw SmilesParseError(ParseErrorKind::UnmatchedRingClosure, open.position,
                             "ring bond " + std::to_string(rings_.begin()->first) + " never closed");
    }
    if (graph_.atom_count() == 0) throw SmilesParseError(ParseErrorKind::Empty, 0, "no atoms");
    finish();
    graph_.set_source(std::string(text_));
    return std::move(graph_);
  }

 private:
  PendingBond read_bond() {
    const char ch = text_[pos_++];
    switch (ch) {
      case '-': return {BondOrder::Single, 0};
      case '=': return {BondOrder::Double, 0};
      case '#': return {BondOrder::Triple, 0};
      case ':': return {BondOrder::Aromatic, 0};
      default: return {BondOrder::Single, ch};  // '/' or '\'
    }
  }

  int read_ring_number() {
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        throw SmilesParseError(ParseErrorKind::UnexpectedCharacter, pos_, "'%' must be followed by two digits");
      }
      const int n = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
      return n;
    }
    return text_[pos_++] - '0';
  }

  void handle_ring(int number, std::size_t atom, PendingBond bond, std::size_t here) {
    const auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, RingOpening{atom, bond, here});
      return;
    }
    RingOpening open = it->second;
    rings_.erase(it);
    if (open.bond.order && bond.order && *open.bond.order != *bond.order) {
      throw SmilesParseError(ParseErrorKind::InvalidBond, here, "conflicting ring-closure bond orders");
    }
    PendingBond merged = open.bond.order ? open.bond : bond;
    if (!merged.direction) merged.direction = bond.direction;
    connect(open.atom, atom, merged, here);
  }

  void connect(std::size_t a, std::size_t b, PendingBond bond, std::size_t here) {
    if (a == b) throw SmilesParseError(ParseErrorKind::InvalidBond, here, "atom bonded to itself");
    if (graph_.find_bond(a, b)) throw SmilesParseError(ParseErrorKind::InvalidBond, here, "duplicate bond");
    const bool both_aromatic = graph_.atoms()[a].aromatic && graph_.atoms()[b].aromatic;
    BondOrder order = bond.order.value_or(both_aromatic ? BondOrder::Aromatic : BondOrder::Single);
    if (order == BondOrder::Aromatic && !both_aromatic) {
      throw SmilesParseError(ParseErrorKind::InvalidBond, here, "aromatic bond between non-aromatic atoms");
    }
    graph_.add_bond(a, b, order, bond.direction);
  }

  std::size_t read_atom() {
    const std::size_t start = pos_;
    Atom atom;
    if (text_[pos_] == '[') {
      read_bracket_atom(atom);
    } else {
      // Two-letter organic symbols first.
      std::string symbol;
      if (text_.compare(pos_, 2, "Cl") == 0 || text_.compare(pos_, 2, "Br") == 0) {
        symbol = std::string(text_.substr(pos_, 2));
        pos_ += 2;
      } else {
        symbol = std::string(1, text_[pos_]);
        ++pos_;
      }
      const bool aromatic = std::islower(static_cast<unsigned char>(symbol[0])) && symbol.size() == 1;
      if (aromatic) {
        if (!is_aromatic_symbol(symbol) || symbol == "se" || symbol == "as" || symbol == "te") {
          throw SmilesParseError(ParseErrorKind::UnknownElement, start, "'" + symbol + "'");
        }
        symbol = capitalize(symbol);
      }
      if (!in_organic_subset(symbol)) {
        if (std::isalpha(static_cast<unsigned char>(symbol[0])) || symbol == "*") {
          throw SmilesParseError(ParseErrorKind::UnknownElement, start, "'" + symbol + "'");
        }
        throw SmilesParseError(ParseErrorKind::UnexpectedCharacter, start, "'" + symbol + "'");
      }
      atom.element = symbol;
      atom.aromatic = aromatic;
    }
    positions_.push_back(start);
    return graph_.add_atom(std::move(atom));
  }

  void read_bracket_atom(Atom& atom) {
    const std::size_t open = pos_++;
    auto peek = [&]() -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; };
    atom.bracket = true;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      int iso = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) iso = iso * 10 + (text_[pos_++] - '0');
      atom.isotope = iso;
    }
    const std::size_t sym_start = pos_;
    if (!std::isalpha(static_cast<unsigned char>(peek()))) {
      throw SmilesParseError(ParseErrorKind::UnknownElement, sym_start, "missing element in bracket atom");
    }
    std::string symbol;
    if (std::islower(static_cast<unsigned char>(peek()))) {
      // Aromatic: try two-letter forms first.
      const std::string two(text_.substr(pos_, 2));
      if (two.size() == 2 && is_aromatic_symbol(two)) {
        symbol = two;
      } else {
        symbol = std::string(1, peek());
        if (!is_aromatic_symbol(symbol)) {
          throw SmilesParseError(ParseErrorKind::UnknownElement, sym_start, "'" + symbol + "'");
        }
      }
      pos_ += symbol.size();
      atom.aromatic = true;
      symbol = capitalize(symbol);
    } else {
      symbol = std::string(1, text_[pos_++]);
      // A following lowercase letter belongs to the symbol only if that
      // forms a known element (e.g. "Cl", but "CH" is carbon + H count).
      if (std::islower(static_cast<unsigned char>(peek())) && find_element(symbol + peek())) {
        symbol += text_[pos_++];
      }
    }
    if (!find_element(symbol)) throw SmilesParseError(ParseErrorKind::UnknownElement, sym_start, "'" + symbol + "'");
    atom.element = symbol;
    if (peek() == '@') {
      ++pos_;
      atom.chirality = "@";
      if (peek() == '@') {
        ++pos_;
        atom.chirality = "@@";
      }
    }
    if (peek() == 'H') {
      ++pos_;
      int h = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) h = text_[pos_++] - '0';
      atom.hydrogens = h;
    }
    if (peek() == '+' || peek() == '-') {
      const char sign = text_[pos_++];
      int magnitude = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) magnitude = magnitude * 10 + (text_[pos_++] - '0');
      } else {
        while (peek() == sign) {
          ++pos_;
          ++magnitude;
        }
      }
      atom.charge = sign == '+' ? magnitude : -magnitude;
    }
    if (peek() == ':') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() != ']') {
      if (pos_ >= text_.size()) throw SmilesParseError(ParseErrorKind::UnexpectedCharacter, open, "unclosed '['");
      throw SmilesParseError(ParseErrorKind::UnexpectedCharacter, pos_, std::string("'") + peek() + "' in bracket atom");
    }
    ++pos_;
  }

  void finish() {
    // Aromatic bonds outside rings (e.g. the biphenyl link written without
    // '-') are single bonds.
    const auto ring = graph_.ring_bonds();
    for (std::size_t k = 0; k < graph_.bond_count(); ++k) {
      auto& b = graph_.bonds()[k];
      if (b.order == BondOrder::Aromatic && !ring[k]) b.order = BondOrder::Single;
    }
    // An atom written aromatic must sit on a ring.
    const auto ring_atoms = graph_.ring_atoms();
    for (std::size_t i = 0; i < graph_.atom_count(); ++i) {
      if (graph_.atoms()[i].aromatic && !ring_atoms[i]) {
        throw SmilesParseError(ParseErrorKind::InvalidBond, positions_[i], "aromatic atom outside a ring");
      }
    }
    for (std::size_t i = 0; i < graph_.atom_count(); ++i) {
      auto& atom = graph_.atoms()[i];
      if (atom.bracket) continue;
      int bond_sum = 0;
      int aromatic = 0;
      for (std::size_t k : graph_.incident(i)) {
        const auto order = graph_.bonds()[k].order;
        if (order == BondOrder::Aromatic) {
          ++aromatic;
          ++bond_sum;
        } else {
          bond_sum += static_cast<int>(order);
        }
      }
      const auto h = implicit_hydrogens(atom.element, atom.aromatic, bond_sum, aromatic);
      if (!h) {
        throw SmilesParseError(ParseErrorKind::ValenceOverflow, positions_[i],
                               atom.element + " with bond order sum " + std::to_string(bond_sum));
      }
      atom.hydrogens = *h;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  MolecularGraph graph_;
  std::map<int, RingOpening> rings_;
  std::vector<std::size_t> positions_;
};

// Shortest cycle through bond k: BFS between its endpoints over the other
// ring bonds.
std::vector<std::size_t> smallest_ring_through(const MolecularGraph& g, std::size_t k, const std::vector<bool>& ring) {
  const auto& bond = g.bonds()[k];
  std::vector<long> prev(g.atom_count(), -1);
  std::deque<std::size_t> queue{bond.a};
  prev[bond.a] = static_cast<long>(bond.a);
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    if (u == bond.b) break;
    for (std::size_t e : g.incident(u)) {
      if (e == k || !ring[e]) continue;
      const std::size_t v = g.bonds()[e].other(u);
      if (prev[v] >= 0) continue;
      prev[v] = static_cast<long>(u);
      queue.push_back(v);
    }
  }
  std::vector<std::size_t> path;
  if (prev[bond.b] < 0) return path;
  for (std::size_t v = bond.b;; v = static_cast<std::size_t>(prev[v])) {
    path.push_back(v);
    if (v == bond.a) break;
  }
  return path;
}

// Pi electrons an atom contributes to a ring, or -1 if it cannot be part of
// an aromatic ring.
int pi_electrons(const MolecularGraph& g, std::size_t i, const std::vector<bool>& ring) {
  const Atom& atom = g.atoms()[i];
  if (atom.aromatic) {
    if (atom.element == "O" || atom.element == "S" || atom.element == "Se" || atom.element == "Te") return 2;
    if ((atom.element == "N" || atom.element == "P") && (atom.hydrogens > 0 || g.degree(i) == 3) &&
        atom.charge == 0) {
      return 2;
    }
    return 1;
  }
  int doubles_in_ring = 0;
  int doubles_exo = 0;
  int exo_partner_z = 0;
  for (std::size_t k : g.incident(i)) {
    const auto& b = g.bonds()[k];
    if (b.order == BondOrder::Double) {
      if (ring[k]) {
        ++doubles_in_ring;
      } else {
        ++doubles_exo;
        exo_partner_z = element(g.atoms()[b.other(i)].element).atomic_number;
      }
    } else if (b.order == BondOrder::Triple) {
      return -1;
    }
  }
  if (doubles_in_ring == 1 && doubles_exo == 0) return 1;
  if (doubles_in_ring > 0) return -1;
  if (doubles_exo == 1) {
    // Exocyclic C=O / C=N / C=S contributes an empty p orbital.
    return (exo_partner_z == 7 || exo_partner_z == 8 || exo_partner_z == 16) && atom.element == "C" ? 0 : -1;
  }
  const std::string& e = atom.element;
  const int valence = static_cast<int>(g.degree(i)) + atom.hydrogens;
  if ((e == "N" || e == "P") && valence == 3 && atom.charge == 0) return 2;
  if ((e == "O" || e == "S" || e == "Se") && valence == 2 && atom.charge == 0) return 2;
  if (e == "C" && atom.charge == -1 && valence == 3) return 2;
  return -1;
}

}  // namespace

std::size_t perceive_aromaticity(MolecularGraph& graph) {
  const auto ring = graph.ring_bonds();
  std::set<std::vector<std::size_t>> rings;
  std::vector<std::vector<std::size_t>> ordered_rings;
  for (std::size_t k = 0; k < graph.bond_count(); ++k) {
    if (!ring[k]) continue;
    auto cycle = smallest_ring_through(graph, k, ring);
    if (cycle.size() < 3) continue;
    auto key = cycle;
    std::sort(key.begin(), key.end());
    if (rings.insert(key).second) ordered_rings.push_back(std::move(cycle));
  }

  std::vector<int> electrons(graph.atom_count());
  for (std::size_t i = 0; i < graph.atom_count(); ++i) electrons[i] = pi_electrons(graph, i, ring);

  std::size_t aromatic_rings = 0;
  std::vector<bool> mark_atom(graph.atom_count(), false);
  std::vector<std::pair<std::size_t, std::size_t>> mark_bonds;
  for (const auto& cycle : ordered_rings) {
    int total = 0;
    bool ok = true;
    for (std::size_t a : cycle) {
      if (electrons[a] < 0) {
        ok = false;
        break;
      }
      total += electrons[a];
    }
    if (!ok || total < 2 || (total - 2) % 4 != 0) continue;
    ++aromatic_rings;
    for (std::size_t n = 0; n < cycle.size(); ++n) {
      mark_atom[cycle[n]] = true;
      mark_bonds.emplace_back(cycle[n], cycle[(n + 1) % cycle.size()]);
    }
  }
  for (std::size_t i = 0; i < graph.atom_count(); ++i) {
    if (mark_atom[i]) graph.atoms()[i].aromatic = true;
  }
  for (const auto& [a, b] : mark_bonds) graph.bonds()[*graph.find_bond(a, b)].order = BondOrder::Aromatic;
  for (std::size_t k = 0; k < graph.bond_count(); ++k) {
    auto& b = graph.bonds()[k];
    if (ring[k] && graph.atoms()[b.a].aromatic && graph.atoms()[b.b].aromatic) b.order = BondOrder::Aromatic;
  }
  return aromatic_rings;
}

MolecularGraph parse_smiles(std::string_view text, const ParseOptions& options) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c >= 0x80 || std::isspace(c)) {
      throw SmilesParseError(ParseErrorKind::UnexpectedCharacter, i, "non-ASCII or whitespace character");
    }
  }
  MolecularGraph graph = Parser(text).run();
  if (options.perceive_aromaticity) perceive_aromaticity(graph);
  return graph;
}

}  // namespace spescreen::chem
