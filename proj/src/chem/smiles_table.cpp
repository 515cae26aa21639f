#include "spescreen/chem/smiles_table.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>

#include "spescreen/chem/smiles.hpp"
#include "spescreen/error.hpp"

namespace spescreen::chem {
namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == delim) {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

SmilesTable load_smiles_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open SMILES table '" + path.string() + "'");

  SmilesTable table;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> id_col, smiles_col;
  char delim = ',';
  bool header_seen = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!header_seen) {
      delim = line.find('\t') != std::string::npos ? '\t' : ',';
      const auto cols = split(line, delim);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto name = lower(trim(cols[c]));
        if (name == "id") id_col = c;
        if (name == "smiles") smiles_col = c;
      }
      if (!id_col || !smiles_col) {
        throw ValidationError("SMILES table '" + path.string() + "' header must name 'id' and 'smiles' columns");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(line, delim);
    if (fields.size() <= std::max(*id_col, *smiles_col)) {
      table.skipped.push_back({line_no, "missing fields"});
      continue;
    }
    SmilesEntry entry{trim(fields[*id_col]), trim(fields[*smiles_col]), {}};
    try {
      entry.graph = parse_smiles(entry.smiles);
    } catch (const ValidationError& e) {
      table.skipped.push_back({line_no, e.what()});
      continue;
    }
    table.entries.push_back(std::move(entry));
  }
  return table;
}

}  // namespace spescreen::chem
