#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/structure/atomic_structure.hpp"

namespace spescreen::vibronic {

// CODATA 2018
namespace units {
inline constexpr double eV_J = 1.602176634e-19;
inline constexpr double amu_kg = 1.66053906660e-27;
inline constexpr double angstrom_m = 1e-10;
inline constexpr double c_m_s = 299792458.0;
inline constexpr double hbar_Js = 1.054571817e-34;
inline constexpr double hartree_J = 4.3597447222071e-18;
inline constexpr double bohr_angstrom = 0.529177210903;
inline constexpr double amu_me = 1822.888486209;  // amu in electron masses

// sqrt(eV / (A^2 amu)) in rad/s
double omega_si_per_unit();
// sqrt(eV / (A^2 amu)) expressed in cm^-1 (about 521.47)
double cm1_per_unit();
double cm1_to_hartree(double cm1);
}  // namespace units

enum class ModeConvention {
  MassWeightedOrthonormal,      // nu_k = u_k, eigenvectors of M^-1/2 K M^-1/2
  InverseMassNormalized,        // ASE style: M^-1/2 u_k / |u_k|
  MassWeightedThenNormalized,   // ORCA style: M^-1/2 u_k / |M^-1/2 u_k|
};

const char* to_string(ModeConvention c);
ModeConvention convention_from_string(const std::string& s);

struct NormalModeSet {
  Eigen::VectorXd frequencies_cm1;  // signed: negative marks an imaginary mode
  Eigen::MatrixXd modes;            // 3N x 3N, column k is mode k
  Eigen::VectorXd masses;           // amu, one per atom
  ModeConvention convention = ModeConvention::MassWeightedOrthonormal;

  std::size_t atoms() const { return static_cast<std::size_t>(masses.size()); }
  std::size_t size() const { return static_cast<std::size_t>(modes.cols()); }
  bool imaginary(std::size_t k) const { return frequencies_cm1[static_cast<Eigen::Index>(k)] < 0.0; }
  // |omega_k| in Hartree atomic units
  double omega_au(std::size_t k) const;
  // real modes at or above the floor
  bool vibrational(std::size_t k, double floor_cm1) const;
  void validate() const;  // shapes, finiteness
};

// Diagonalizes M^-1/2 K M^-1/2 (K in eV/A^2, masses in amu). Modes sorted
// ascending by eigenvalue, phase fixed so the largest-magnitude component
// (first on ties) is positive.
NormalModeSet normal_modes(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& masses, double sym_tol = 1e-6);

// Converts any convention to mass-weighted orthonormal: multiply by sqrt(M)
// then normalize each mode. Identity on sets already in that convention.
NormalModeSet reweight_external_modes(const NormalModeSet& raw);

// Largest |U^T U - I| entry.
double orthonormality_error(const Eigen::MatrixXd& modes);

// Per-atom masses repeated for x, y, z.
Eigen::VectorXd coordinate_masses(const Eigen::VectorXd& masses);

// S_k = (omega_k / 2) ((R_S0 - R_S1) . sqrt(M) . u_k)^2 in atomic units.
// Modes that are imaginary or below floor_cm1 get 0.
Eigen::VectorXd huang_rhys(const Positions& r_ground, const Positions& r_excited, const NormalModeSet& modes,
                           double floor_cm1 = 10.0);

struct WeightedHR {
  Eigen::VectorXd weighted;  // omega_k^2 S_k / omega_max^2
  double sum = 0.0;
  double omega_max_cm1 = 0.0;
};

WeightedHR weighted_hr(const Eigen::VectorXd& s, const Eigen::VectorXd& frequencies_cm1);

// JSON: frequencies_cm1, modes (list of 3N-vectors, one per mode), masses_amu, convention
NormalModeSet load_modes(const std::filesystem::path& path);
void save_modes(const NormalModeSet& m, const std::filesystem::path& path);
std::string modes_to_json(const NormalModeSet& m);
NormalModeSet modes_from_json(const std::string& text);

}  // namespace spescreen::vibronic
