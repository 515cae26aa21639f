#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/structure/atomic_structure.hpp"

namespace spescreen::potential {

struct Evaluation {
  double energy = 0.0;  // eV
  Positions forces;     // eV/A, N x 3
};

// Stateless energy/force provider. evaluate() must be safe to call
// concurrently from several threads.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual Evaluation evaluate(const AtomicStructure& s) const = 0;
  virtual std::string name() const = 0;
  // Analytic or tabulated Hessian (eV/A^2, 3N x 3N) when available.
  virtual std::optional<Eigen::MatrixXd> hessian(const AtomicStructure&) const { return std::nullopt; }

  double energy(const AtomicStructure& s) const { return evaluate(s).energy; }
  Positions forces(const AtomicStructure& s) const { return evaluate(s).forces; }
};

using PotentialPtr = std::shared_ptr<const Potential>;

struct LJParams {
  double epsilon = 0.0;  // eV
  double sigma = 0.0;    // A
};

// Per-element LJ parameters combined by Lorentz-Berthelot unless a pair
// override exists. Pair keys are stored with the symbols sorted.
class LJTable {
 public:
  void set_element(const std::string& el, LJParams p);
  void set_pair(const std::string& a, const std::string& b, LJParams p);
  // Throws ValidationError when neither a pair nor both element entries exist.
  LJParams lookup(const std::string& a, const std::string& b) const;

  // UFF van der Waals parameters for a handful of elements (H C N O S Ar),
  // sigma = x / 2^(1/6).
  static LJTable uff();

 private:
  std::map<std::string, LJParams> elements_;
  std::map<std::pair<std::string, std::string>, LJParams> pairs_;
};

// 12-6 Lennard-Jones with a per-pair cutoff rc = cutoff_factor * sigma and
// energy shifted to zero at rc. Periodic images are honored. When
// `molecule_of` is given, pairs inside the same molecule are skipped (their
// interaction is left to a bonded term); with `offsets` (see
// molecule_offsets) only the bonded image is skipped, so a molecule still
// feels its own periodic images.
class LennardJones : public Potential {
 public:
  LennardJones(LJTable table, double cutoff_factor = 2.5, std::vector<std::size_t> molecule_of = {},
               std::vector<std::array<int, 3>> offsets = {});
  Evaluation evaluate(const AtomicStructure& s) const override;
  std::string name() const override { return "lennard-jones"; }

 private:
  LJTable table_;
  double cutoff_factor_;
  std::vector<std::size_t> molecule_of_;
  std::vector<std::array<int, 3>> offsets_;
};

struct Spring {
  std::size_t i = 0, j = 0;
  double k = 0.0;   // eV/A^2
  double r0 = 0.0;  // A
};

// Sum of harmonic springs 1/2 k (r - r0)^2 (minimum-image distance when the
// structure is periodic) plus an optional purely repulsive
// epsilon (sigma/r)^12 between atoms of different spring-connected
// molecules, truncated and shifted at the repulsion cutoff. A molecule does
// not repel its own periodic images.
class HarmonicRepulsion : public Potential {
 public:
  struct Repulsion {
    double epsilon = 0.0;  // eV
    double sigma = 0.0;    // A
    double cutoff = 0.0;   // A
  };

  explicit HarmonicRepulsion(std::vector<Spring> springs, std::optional<Repulsion> repulsion = std::nullopt);

  // Springs between covalent neighbors (radii + tolerance) at their current
  // lengths. With network_cutoff > 0, every pair inside one molecule closer
  // than network_cutoff also gets a spring (elastic network; stiffens angles).
  static std::vector<Spring> springs_from_geometry(const AtomicStructure& s, double k, double tolerance = 0.3,
                                                   double network_cutoff = 0.0);

  Evaluation evaluate(const AtomicStructure& s) const override;
  std::optional<Eigen::MatrixXd> hessian(const AtomicStructure& s) const override;
  std::string name() const override { return "harmonic-repulsion"; }

  const std::vector<Spring>& springs() const { return springs_; }

 private:
  std::vector<Spring> springs_;
  std::optional<Repulsion> repulsion_;
};

class SumPotential : public Potential {
 public:
  explicit SumPotential(std::vector<PotentialPtr> terms);
  Evaluation evaluate(const AtomicStructure& s) const override;
  std::optional<Eigen::MatrixXd> hessian(const AtomicStructure& s) const override;
  std::string name() const override;

 private:
  std::vector<PotentialPtr> terms_;
};

// Externally computed data for a single geometry: JSON with `energy_eV`,
// `forces_eV_per_A` (N x 3), optional `hessian_eV_per_A2` (3N x 3N, rows)
// and `n_atoms`. Evaluating a structure of another size throws.
class TabulatedPotential : public Potential {
 public:
  TabulatedPotential(double energy, Positions forces, std::optional<Eigen::MatrixXd> hessian = std::nullopt);
  static TabulatedPotential load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  Evaluation evaluate(const AtomicStructure& s) const override;
  std::optional<Eigen::MatrixXd> hessian(const AtomicStructure& s) const override;
  std::string name() const override { return "tabulated"; }

 private:
  double energy_;
  Positions forces_;
  std::optional<Eigen::MatrixXd> hessian_;
};

// Writes an Evaluation (and optional Hessian) in the tabulated JSON format.
void save_evaluation(const std::filesystem::path& path, const Evaluation& e,
                     const std::optional<Eigen::MatrixXd>& hessian = std::nullopt);

enum class PotentialKind { HarmonicRepulsion, LennardJones, Tabulated };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::LennardJones;
  // harmonic springs (also used for intramolecular bonds with LJ)
  double spring_k = 30.0;           // eV/A^2
  double bond_tolerance = 0.3;      // A added to each covalent radius
  double network_cutoff = 0.0;      // A, 0 = bonds only
  // repulsion for the harmonic kind
  double repulsion_epsilon = 0.01;  // eV
  double repulsion_sigma = 2.5;     // A
  double repulsion_cutoff = 5.0;    // A
  // Lennard-Jones
  LJTable lj = LJTable::uff();
  double lj_cutoff_factor = 2.5;
  // LJ only between molecules, with harmonic bonds inside them
  bool lj_molecular = true;
  std::filesystem::path tabulated_file;
};

// Builds a provider for `s`. Bonded terms take the geometry of `s` as their
// reference. Throws ValidationError for non-positive parameters.
PotentialPtr build_potential(const PotentialSpec& spec, const AtomicStructure& s);

}  // namespace spescreen::potential
