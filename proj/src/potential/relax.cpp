#include "spescreen/potential/relax.hpp"

#include <cmath>
#include <deque>

#include "spescreen/error.hpp"

namespace spescreen::potential {
namespace {

Eigen::VectorXd flat(const Positions& p) { return Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()); }

void unflat(const Eigen::VectorXd& x, Positions& p) { Eigen::Map<Eigen::VectorXd>(p.data(), p.size()) = x; }

double max_atom_norm(const Eigen::VectorXd& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.size(); i += 3) m = std::max(m, v.segment<3>(i).norm());
  return m;
}

}  // namespace

const char* to_string(RelaxStatus s) {
  switch (s) {
    case RelaxStatus::Converged: return "converged";
    case RelaxStatus::MaxSteps: return "max-steps";
    case RelaxStatus::Diverged: return "diverged";
    case RelaxStatus::Stalled: return "stalled";
  }
  return "unknown";
}

double max_force(const Positions& f) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) m = std::max(m, f.row(i).norm());
  return m;
}

RelaxationResult relax(const AtomicStructure& s, const Potential& pot, const RelaxOptions& opts) {
  if (!(opts.fmax > 0.0)) throw ValidationError("fmax must be positive");
  if (opts.max_steps < 0 || opts.memory < 1 || !(opts.max_step > 0.0) || opts.max_halvings < 1) {
    throw ValidationError("invalid relaxation options");
  }
  RelaxationResult res;
  res.structure = s;
  auto ev = pot.evaluate(s);
  if (!std::isfinite(ev.energy) || !ev.forces.allFinite()) throw NumericalError("non-finite energy at the start");
  res.energy = ev.energy;
  res.fmax = max_force(ev.forces);
  res.energies.push_back(ev.energy);

  Eigen::VectorXd x = flat(s.positions);
  Eigen::VectorXd g = -flat(ev.forces);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  AtomicStructure trial = s;

  while (true) {
    if (res.fmax <= opts.fmax) {
      res.converged = true;
      res.status = RelaxStatus::Converged;
      return res;
    }
    if (res.iterations >= opts.max_steps) {
      res.status = RelaxStatus::MaxSteps;
      return res;
    }

    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * S[k].dot(q);
      q -= alpha[k] * Y[k];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    else q *= 0.01;  // first step: modest steepest descent
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * Y[k].dot(q);
      q += (alpha[k] - beta) * S[k];
    }
    Eigen::VectorXd d = -q;
    if (d.dot(g) >= 0.0) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -0.01 * g;
    }
    const double longest = max_atom_norm(d);
    if (longest > opts.max_step) d *= opts.max_step / longest;

    // backtracking
    bool accepted = false;
    bool saw_nan = false;
    double step = 1.0;
    Evaluation next;
    Eigen::VectorXd xn;
    for (int h = 0; h < opts.max_halvings; ++h, step *= 0.5) {
      xn = x + step * d;
      unflat(xn, trial.positions);
      next = pot.evaluate(trial);
      if (!std::isfinite(next.energy) || !next.forces.allFinite()) {
        saw_nan = true;
        continue;
      }
      if (next.energy < res.energy) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!S.empty()) {
        // history may be stale; retry from steepest descent
        S.clear();
        Y.clear();
        rho.clear();
        continue;
      }
      res.status = saw_nan ? RelaxStatus::Diverged : RelaxStatus::Stalled;
      return res;
    }

    const Eigen::VectorXd gn = -flat(next.forces);
    const Eigen::VectorXd sk = xn - x, yk = gn - g;
    const double sy = sk.dot(yk);
    if (sy > 1e-12) {
      S.push_back(sk);
      Y.push_back(yk);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    x = xn;
    g = gn;
    res.structure.positions = trial.positions;
    res.energy = next.energy;
    res.fmax = max_force(next.forces);
    res.energies.push_back(next.energy);
    ++res.iterations;
  }
}

HessianResult hessian_finite_difference(const AtomicStructure& s, const Potential& pot, double h, Exec exec) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  const auto n3 = static_cast<Eigen::Index>(3 * s.size());
  Eigen::MatrixXd k(n3, n3);
  // surfaces parameter errors here rather than inside the parallel region
  pot.evaluate(s);

  auto column = [&](Eigen::Index c, AtomicStructure& work) {
    const auto atom = c / 3, axis = c % 3;
    const double x0 = work.positions(atom, axis);
    work.positions(atom, axis) = x0 + h;
    const Positions fp = pot.evaluate(work).forces;
    work.positions(atom, axis) = x0 - h;
    const Positions fm = pot.evaluate(work).forces;
    work.positions(atom, axis) = x0;
    const Positions diff = (fp - fm) / (2.0 * h);
    k.col(c) = -Eigen::Map<const Eigen::VectorXd>(diff.data(), diff.size());
  };

  if (exec == Exec::Serial) {
    AtomicStructure work = s;
    for (Eigen::Index c = 0; c < n3; ++c) column(c, work);
  } else {
#pragma omp parallel
    {
      AtomicStructure work = s;
#pragma omp for schedule(dynamic, 1)
      for (Eigen::Index c = 0; c < n3; ++c) column(c, work);
    }
  }
  if (!k.allFinite()) throw NumericalError("non-finite forces while building the Hessian");
  HessianResult out;
  out.max_asymmetry = n3 ? (k - k.transpose()).cwiseAbs().maxCoeff() : 0.0;
  out.hessian = 0.5 * (k + k.transpose());
  return out;
}

}  // namespace spescreen::potential
