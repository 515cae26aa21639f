#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace spescreen {

struct ElementData {
  std::string_view symbol;
  int atomic_number;
  double mass_amu;          // IUPAC standard atomic weight (conventional value)
  double covalent_radius;   // Cordero et al. single-bond covalent radius, Angstrom
};

// Lookup by symbol, case-sensitive ("Cl", not "CL"). nullopt if unknown.
std::optional<ElementData> find_element(std::string_view symbol);
// Throws ValidationError for unknown symbols.
const ElementData& element(std::string_view symbol);

}  // namespace spescreen
