#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "spescreen/chem/molecular_graph.hpp"
#include "spescreen/error.hpp"

namespace spescreen::chem {

enum class ParseErrorKind {
  Empty,
  UnbalancedParentheses,
  UnmatchedRingClosure,
  UnknownElement,
  ValenceOverflow,
  InvalidBond,
  UnexpectedCharacter,
};

std::string_view to_string(ParseErrorKind kind);

class SmilesParseError : public ValidationError {
 public:
  SmilesParseError(ParseErrorKind kind, std::size_t position, const std::string& detail);
  ParseErrorKind kind() const { return kind_; }
  // Zero-based character offset into the input.
  std::size_t position() const { return position_; }

 private:
  ParseErrorKind kind_;
  std::size_t position_;
};

struct ParseOptions {
  // Run simple-ring Hueckel perception so Kekule and aromatic spellings of
  // the same ring system produce the same graph.
  bool perceive_aromaticity = true;
};

// Organic subset, bracket atoms (isotope, chirality, H count, charge, atom
// class), bonds - = # : / \, branches, ring closures incl. %nn, and '.'.
MolecularGraph parse_smiles(std::string_view text, const ParseOptions& options = {});

// Marks atoms and bonds of rings passing the 4n+2 test as aromatic, then
// turns every ring bond between two aromatic atoms aromatic. Hydrogen counts
// are left untouched. Returns the number of rings found aromatic.
std::size_t perceive_aromaticity(MolecularGraph& graph);

}  // namespace spescreen::chem
