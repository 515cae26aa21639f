#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "spescreen/chem/molecular_graph.hpp"

namespace spescreen::chem {

struct SmilesEntry {
  std::string id;
  std::string smiles;
  MolecularGraph graph;
};

struct SkippedRow {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct SmilesTable {
  std::vector<SmilesEntry> entries;
  std::vector<SkippedRow> skipped;
  bool empty() const { return entries.empty(); }
};

// Reads a TSV or CSV file (delimiter sniffed from the header: tab if
// present, otherwise comma) whose header names an `id` and a `smiles`
// column, in any order and case. Rows whose SMILES fails to parse, or that
// have too few fields, are skipped and counted. A file without rows yields
// an empty table. Throws ValidationError for an unreadable file or a header
// lacking either column.
SmilesTable load_smiles_table(const std::filesystem::path& path);

}  // namespace spescreen::chem
