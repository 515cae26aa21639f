#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/exec.hpp"
#include "spescreen/potential/potential.hpp"

namespace spescreen::potential {

enum class RelaxStatus { Converged, MaxSteps, Diverged, Stalled };

const char* to_string(RelaxStatus s);

struct RelaxOptions {
  double fmax = 0.01;      // eV/A, max per-atom force norm
  int max_steps = 1000;
  int memory = 20;         // L-BFGS history
  double max_step = 0.2;   // A, largest per-atom displacement per step
  int max_halvings = 30;   // backtracking budget per step
};

struct RelaxationResult {
  AtomicStructure structure;   // last accepted geometry
  double energy = 0.0;
  double fmax = 0.0;           // final max force norm
  int iterations = 0;          // accepted steps
  bool converged = false;
  RelaxStatus status = RelaxStatus::MaxSteps;
  std::vector<double> energies;  // initial + every accepted step
};

// L-BFGS on atomic positions (cell frozen), backtracking by halving until
// the energy decreases. A NaN energy at the start throws NumericalError;
// later NaNs are treated as failed trial steps, and if no finite decrease
// is found the result reports Diverged with the last valid state.
RelaxationResult relax(const AtomicStructure& s, const Potential& pot, const RelaxOptions& opts = {});

// Largest per-atom force norm.
double max_force(const Positions& f);

struct HessianResult {
  Eigen::MatrixXd hessian;       // symmetrized, eV/A^2
  double max_asymmetry = 0.0;    // max |K - K^T| before symmetrization
};

// Central differences of forces with displacement h (A):
// K[:, c] = -(F(x + h e_c) - F(x - h e_c)) / 2h, then (K + K^T)/2.
// The parallel variant distributes columns over threads.
HessianResult hessian_finite_difference(const AtomicStructure& s, const Potential& pot, double h = 0.01,
                                        Exec exec = Exec::Parallel);

}  // namespace spescreen::potential
