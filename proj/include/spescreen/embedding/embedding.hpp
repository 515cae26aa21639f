#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/exec.hpp"
#include "spescreen/potential/potential.hpp"
#include "spescreen/potential/relax.hpp"
#include "spescreen/structure/atomic_structure.hpp"
#include "spescreen/structure/neighbors.hpp"

namespace spescreen::embedding {

struct EmbeddingConfig {
  double cutoff = 1.0;              // A, host-emitter overlap distance
  double translation_scale = 0.05;  // fraction of each cell length per trial
  int min_removed = 2;
  int max_removed = 5;
  int per_count = 25;               // structures kept per removal count
  int max_trials = 10000;
  std::uint64_t seed = 0;
  // true: rotations and shifts accumulate on one emitter (random walk);
  // false: every trial starts again from the initial placement.
  bool cumulative = true;
  MoleculeOptions molecules;

  void validate() const;
};

struct EmbeddingTrial {
  std::size_t index = 0;                    // trial number, 0-based
  AtomicStructure complex;                  // kept host atoms, then emitter
  std::vector<std::size_t> kept_host_atoms; // host indices, in order
  std::vector<std::size_t> removed_molecules;
  std::size_t emitter_offset = 0;           // first emitter atom in complex
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double angle_deg = 0.0;
  Eigen::Vector3d shift = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // net, about the emitter COM
  Eigen::Vector3d displacement = Eigen::Vector3d::Zero();  // net COM shift from host COM

  int removed() const { return static_cast<int>(removed_molecules.size()); }
  std::vector<std::size_t> emitter_atoms() const;
};

struct EmbeddingRun {
  std::vector<EmbeddingTrial> accepted;
  std::size_t trials = 0;
  std::size_t rejected_containment = 0;
  std::size_t rejected_count = 0;  // removal count outside [min, max]
  std::size_t rejected_full = 0;   // quota for that count already met
  std::map<int, int> histogram;    // removal count -> accepted structures
  MoleculeLabels host_molecules;
};

// Host molecules with any atom closer than `cutoff` to any emitter atom
// (plain Cartesian distances). Sorted, unique.
std::vector<std::size_t> overlapping_molecules(const Positions& host, const std::vector<std::size_t>& labels,
                                               const Positions& emitter, double cutoff, Exec exec = Exec::Parallel);

// Stochastic insertion of `emitter` into `host`: the emitter COM starts at
// the host COM; each trial rotates it about its COM by a random angle
// around a random unit axis and shifts it by translation_scale * cell
// lengths * U(-1,1) per axis; whole host molecules within `cutoff` are
// deleted (from a fresh copy of the host) and the result is kept when the
// emitter bounding box lies strictly inside the remaining host's box and
// the removal count is in [min_removed, max_removed] with quota left.
// Stops at max_trials or once every count has per_count structures.
EmbeddingRun embed_emitter(const AtomicStructure& host, const AtomicStructure& emitter, const EmbeddingConfig& cfg,
                           Exec exec = Exec::Parallel);

// E_complex - E_emitter - ((N_complex - N_emitter) / N_supercell) * E_supercell
double binding_energy(double e_complex, double e_emitter, std::size_t n_complex, std::size_t n_emitter,
                      std::size_t n_supercell, double e_supercell);

// Index of the smallest finite value, earliest on ties. Throws
// NumericalError when none is finite.
std::size_t argmin_finite(std::span<const double> values);

using PotentialFactory = std::function<potential::PotentialPtr(const AtomicStructure&)>;

struct StabilityResult {
  std::size_t best = 0;                   // position in the trial list
  double best_binding_energy = 0.0;
  std::vector<double> binding_energies;   // NaN where the relaxation failed
  std::vector<potential::RelaxStatus> status;
  double emitter_energy = 0.0;            // relaxed
  double supercell_energy = 0.0;          // relaxed
  AtomicStructure relaxed_best;
};

// Relaxes every complex, the free emitter and the pristine host, then
// applies binding_energy and picks the minimum.
StabilityResult select_most_stable(const std::vector<EmbeddingTrial>& trials, const AtomicStructure& host,
                                   const AtomicStructure& emitter, const PotentialFactory& factory,
                                   const potential::RelaxOptions& relax_opts = {});

// Numbered XYZ files (trial_0000.xyz, ...) plus manifest.json. Binding
// energies are written when `stability` is given.
void write_embedding_outputs(const std::filesystem::path& dir, const EmbeddingRun& run, const EmbeddingConfig& cfg,
                             const StabilityResult* stability = nullptr);

std::string manifest_json(const EmbeddingRun& run, const EmbeddingConfig& cfg,
                          const StabilityResult* stability = nullptr);

}  // namespace spescreen::embedding
