#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spescreen {

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Atoms in Cartesian Angstrom. cell rows are the lattice vectors a, b, c.
struct AtomicStructure {
  std::vector<std::string> elements;
  Positions positions;
  Eigen::VectorXd masses;  // amu
  std::optional<Eigen::Matrix3d> cell;
  std::array<bool, 3> pbc{false, false, false};

  AtomicStructure() = default;
  // Masses default from the element table. Throws for unknown elements.
  AtomicStructure(std::vector<std::string> elements, Positions positions);

  std::size_t size() const { return elements.size(); }
  bool periodic() const { return cell && (pbc[0] || pbc[1] || pbc[2]); }

  // Checks shapes, finiteness, masses > 0 and cell volume. A left-handed
  // cell is replaced by its negation (same lattice, positive volume).
  // Throws ValidationError.
  void validate();

  Eigen::Vector3d center_of_mass() const;
  // Component-wise min/max over atom positions.
  Eigen::Vector3d bbox_min() const;
  Eigen::Vector3d bbox_max() const;

  // Keeps atoms whose index appears in `keep`, in the given order.
  AtomicStructure subset(const std::vector<std::size_t>& keep) const;
  // Appends the atoms of `other`; cell and pbc of *this are kept.
  void append(const AtomicStructure& other);
};

// Extended XYZ: count line, comment line optionally carrying
// Lattice="ax ay az bx by bz cx cy cz" and pbc="T T T", then one row per
// atom with symbol and three coordinates (extra columns ignored).
AtomicStructure parse_xyz(const std::filesystem::path& path);
AtomicStructure parse_xyz_string(const std::string& text);
std::string format_xyz(const AtomicStructure& s, const std::string& comment = {});
void write_xyz(const AtomicStructure& s, const std::filesystem::path& path, const std::string& comment = {});

// Repeats the unit cell na x nb x nc times. Image blocks are ordered with
// the a index slowest; atoms within a block keep their order.
AtomicStructure make_supercell(const AtomicStructure& unit, std::array<int, 3> repeats);

}  // namespace spescreen
