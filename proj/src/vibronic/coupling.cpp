#include "spescreen/vibronic/coupling.hpp"

#include <cmath>
#include <set>

#include "spescreen/error.hpp"

namespace spescreen::vibronic {
namespace {

void check_pair(const NormalModeSet& isolated, const NormalModeSet& embedded,
                const std::vector<std::size_t>& emitter_atoms) {
  isolated.validate();
  embedded.validate();
  if (isolated.convention != ModeConvention::MassWeightedOrthonormal ||
      embedded.convention != ModeConvention::MassWeightedOrthonormal) {
    throw ValidationError("mode sets must be mass-weighted orthonormal; reweight external modes first");
  }
  if (emitter_atoms.size() != isolated.atoms()) throw ValidationError("emitter map must cover every isolated atom");
  std::set<std::size_t> seen;
  for (std::size_t a = 0; a < emitter_atoms.size(); ++a) {
    const auto c = emitter_atoms[a];
    if (c >= embedded.atoms()) throw ValidationError("emitter atom index out of range");
    if (!seen.insert(c).second) throw ValidationError("emitter atom mapped twice");
    const double mi = isolated.masses[static_cast<Eigen::Index>(a)];
    const double me = embedded.masses[static_cast<Eigen::Index>(c)];
    if (std::abs(mi - me) > 1e-6 * mi) throw ValidationError("emitter masses differ between mode sets");
  }
}

Eigen::VectorXd flat_forces(const Positions& f, const NormalModeSet& isolated, ForceWeighting w) {
  if (static_cast<std::size_t>(f.rows()) != isolated.atoms()) throw ValidationError("force rows must match the emitter");
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
  if (w == ForceWeighting::InverseSqrtMass) v = v.cwiseQuotient(coordinate_masses(isolated.masses).cwiseSqrt());
  return v;
}

}  // namespace

Eigen::MatrixXd mode_overlaps(const NormalModeSet& isolated, const NormalModeSet& embedded,
                              const std::vector<std::size_t>& emitter_atoms, Exec exec) {
  check_pair(isolated, embedded, emitter_atoms);
  const auto ni = static_cast<Eigen::Index>(isolated.size());
  const auto nj = static_cast<Eigen::Index>(embedded.size());
  // embedded rows restricted to emitter coordinates, in isolated order
  Eigen::MatrixXd sub(ni, nj);
  for (std::size_t a = 0; a < emitter_atoms.size(); ++a) {
    for (int c = 0; c < 3; ++c) {
      sub.row(static_cast<Eigen::Index>(3 * a + c)) = embedded.modes.row(static_cast<Eigen::Index>(3 * emitter_atoms[a] + c));
    }
  }
  Eigen::MatrixXd out(ni, nj);
  const auto& iso = isolated.modes;
  auto row = [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < nj; ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < ni; ++r) s += iso(r, i) * sub(r, j);
      out(i, j) = s;
    }
  };
  if (exec == Exec::Serial) {
    for (Eigen::Index i = 0; i < ni; ++i) row(i);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index i = 0; i < ni; ++i) row(i);
  }
  return out;
}

ProjectionMatrix mode_overlap_matrix(const NormalModeSet& isolated, const NormalModeSet& embedded,
                                     const std::vector<std::size_t>& emitter_atoms, Exec exec) {
  ProjectionMatrix p;
  p.rho = mode_overlaps(isolated, embedded, emitter_atoms, exec).array().square().matrix();
  p.emitter_atoms = emitter_atoms;
  return p;
}

double projection_entropy(const Eigen::Ref<const Eigen::VectorXd>& row) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double r = row[j];
    if (r > 0.0) s -= r * std::log(r);
  }
  return s;
}

Eigen::VectorXd projection_entropies(const ProjectionMatrix& p) {
  Eigen::VectorXd s(p.rho.rows());
  for (Eigen::Index i = 0; i < p.rho.rows(); ++i) s[i] = projection_entropy(p.rho.row(i).transpose());
  return s;
}

Eigen::VectorXd force_projection(const Positions& forces, const NormalModeSet& isolated, ForceWeighting w) {
  isolated.validate();
  if (isolated.convention != ModeConvention::MassWeightedOrthonormal) {
    throw ValidationError("force projection needs mass-weighted orthonormal modes");
  }
  const Eigen::VectorXd f = flat_forces(forces, isolated, w);
  return (isolated.modes.transpose() * f).array().square().matrix();
}

double vibronic_coupling_entropy(const Eigen::VectorXd& g, const Eigen::VectorXd& sp) {
  if (g.size() != sp.size()) throw ValidationError("g and S^P must have equal length");
  return g.dot(sp);
}

DirectFC direct_fc_metric(const Positions& forces, const NormalModeSet& isolated, const NormalModeSet& embedded,
                          const std::vector<std::size_t>& emitter_atoms, ForceWeighting w, double tol) {
  check_pair(isolated, embedded, emitter_atoms);
  const Eigen::VectorXd f = flat_forces(forces, isolated, w);
  Eigen::VectorXd pad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * embedded.atoms()));
  for (std::size_t a = 0; a < emitter_atoms.size(); ++a) {
    pad.segment<3>(static_cast<Eigen::Index>(3 * emitter_atoms[a])) = f.segment<3>(static_cast<Eigen::Index>(3 * a));
  }
  DirectFC out;
  out.direct = std::abs((embedded.modes.transpose() * pad).sum());
  const Eigen::MatrixXd a = mode_overlaps(isolated, embedded, emitter_atoms);
  const Eigen::VectorXd fi = isolated.modes.transpose() * f;
  out.unity_inserted = std::abs(fi.dot(a.rowwise().sum()));
  if (std::abs(out.direct - out.unity_inserted) > tol * (1.0 + out.direct)) {
    throw NumericalError("direct and unity-inserted Franck-Condon metrics disagree");
  }
  return out;
}

VibronicReport vibronic_report(const VibronicInputs& in, Exec exec) {
  if (!in.isolated) throw ValidationError("isolated modes required");
  const auto& iso = *in.isolated;
  const auto n = static_cast<Eigen::Index>(iso.size());
  VibronicReport r;
  r.included.assign(iso.size(), 0);
  for (std::size_t k = 0; k < iso.size(); ++k) r.included[k] = iso.vibrational(k, in.floor_cm1);
  auto mask = [&](Eigen::VectorXd v) {
    for (Eigen::Index k = 0; k < n; ++k)
      if (!r.included[static_cast<std::size_t>(k)]) v[k] = 0.0;
    return v;
  };

  r.g = mask(force_projection(in.forces, iso, in.weighting));
  r.sum_g = r.g.sum();
  r.sp = Eigen::VectorXd::Zero(n);
  if (in.embedded) {
    const auto p = mode_overlap_matrix(iso, *in.embedded, in.emitter_atoms, exec);
    r.sp = mask(projection_entropies(p));
    r.s_vc = vibronic_coupling_entropy(r.g, r.sp);
    r.direct_fc = direct_fc_metric(in.forces, iso, *in.embedded, in.emitter_atoms, in.weighting);
  }
  if (in.r_ground && in.r_excited) {
    r.hr = huang_rhys(*in.r_ground, *in.r_excited, iso, in.floor_cm1);
    const auto w = weighted_hr(r.hr, iso.frequencies_cm1);
    r.weighted_hr = w.weighted;
    r.sum_weighted_hr = w.sum;
    r.sum_hr = r.hr.sum();
  }
  const bool finite = r.g.allFinite() && r.sp.allFinite() && std::isfinite(r.s_vc) && r.hr.allFinite();
  if (!finite) throw NumericalError("non-finite vibronic quantities");
  return r;
}

ToyTransition toy_two_surface(const Positions& r_ground, const Eigen::MatrixXd& hessian, const Positions& displacement) {
  const auto n3 = r_ground.size();
  if (displacement.rows() != r_ground.rows() || hessian.rows() != n3 || hessian.cols() != n3) {
    throw ValidationError("toy model sizes do not match");
  }
  ToyTransition t;
  t.r_ground = r_ground;
  t.r_excited = r_ground + displacement;
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(displacement.data(), displacement.size());
  const Eigen::VectorXd f = -hessian * d;
  t.forces.resize(r_ground.rows(), 3);
  Eigen::Map<Eigen::VectorXd>(t.forces.data(), t.forces.size()) = f;
  return t;
}

}  // namespace spescreen::vibronic
