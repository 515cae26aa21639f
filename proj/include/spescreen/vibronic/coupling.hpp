#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/exec.hpp"
#include "spescreen/vibronic/modes.hpp"

namespace spescreen::vibronic {

// rho(i, j) = |<nu_i^isolated | nu_j^embedded>|^2; rows = isolated modes,
// columns = embedded modes. emitter_atoms[a] is the complex index of
// isolated atom a.
struct ProjectionMatrix {
  Eigen::MatrixXd rho;
  std::vector<std::size_t> emitter_atoms;
};

// Raw amplitudes <nu_i | nu_j> (before squaring).
Eigen::MatrixXd mode_overlaps(const NormalModeSet& isolated, const NormalModeSet& embedded,
                              const std::vector<std::size_t>& emitter_atoms, Exec exec = Exec::Parallel);

ProjectionMatrix mode_overlap_matrix(const NormalModeSet& isolated, const NormalModeSet& embedded,
                                     const std::vector<std::size_t>& emitter_atoms, Exec exec = Exec::Parallel);

// -sum rho ln rho, 0 ln 0 = 0
double projection_entropy(const Eigen::Ref<const Eigen::VectorXd>& row);
Eigen::VectorXd projection_entropies(const ProjectionMatrix& p);

enum class ForceWeighting { Raw, InverseSqrtMass };

// g_i = |<F | nu_i>|^2, F given per emitter atom (eV/A)
Eigen::VectorXd force_projection(const Positions& forces, const NormalModeSet& isolated,
                                 ForceWeighting w = ForceWeighting::Raw);

// sum_i g_i S^P_i
double vibronic_coupling_entropy(const Eigen::VectorXd& g, const Eigen::VectorXd& sp);

struct DirectFC {
  double direct = 0.0;         // |sum_j <F | nu_j^embedded>|
  double unity_inserted = 0.0; // |sum_ij <F | nu_i> <nu_i | nu_j^embedded>|
};

// Both forms; throws NumericalError when they differ by more than
// tol * (1 + |direct|) (the isolated set must then be incomplete).
DirectFC direct_fc_metric(const Positions& forces, const NormalModeSet& isolated, const NormalModeSet& embedded,
                          const std::vector<std::size_t>& emitter_atoms, ForceWeighting w = ForceWeighting::Raw,
                          double tol = 1e-8);

struct VibronicInputs {
  const NormalModeSet* isolated = nullptr;
  const NormalModeSet* embedded = nullptr;  // optional: no S^P / direct FC without it
  std::vector<std::size_t> emitter_atoms;
  Positions forces;                        // emission forces on the emitter atoms
  std::optional<Positions> r_ground, r_excited;  // for Huang-Rhys
  double floor_cm1 = 10.0;
  ForceWeighting weighting = ForceWeighting::Raw;
};

struct VibronicReport {
  std::vector<char> included;   // isolated modes above the floor
  Eigen::VectorXd g;            // per isolated mode, rigid modes zeroed
  Eigen::VectorXd sp;           // per isolated mode, rigid modes zeroed
  Eigen::VectorXd hr;           // Huang-Rhys, empty without geometries
  Eigen::VectorXd weighted_hr;
  double s_vc = 0.0;
  double sum_g = 0.0;
  double sum_weighted_hr = 0.0;
  double sum_hr = 0.0;
  std::optional<DirectFC> direct_fc;
};

VibronicReport vibronic_report(const VibronicInputs& in, Exec exec = Exec::Parallel);

// Toy two-surface harmonic model: the excited minimum is the ground one
// displaced by d, both surfaces share Hessian K. Emission forces at the
// excited minimum on the ground surface are F = -K d.
struct ToyTransition {
  Positions r_ground, r_excited, forces;
};
ToyTransition toy_two_surface(const Positions& r_ground, const Eigen::MatrixXd& hessian, const Positions& displacement);

}  // namespace spescreen::vibronic
