#include "spescreen/vibronic/modes.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "spescreen/error.hpp"

namespace spescreen::vibronic {

namespace units {

double omega_si_per_unit() { return std::sqrt(eV_J / (angstrom_m * angstrom_m * amu_kg)); }

double cm1_per_unit() { return omega_si_per_unit() / (2.0 * std::numbers::pi * c_m_s * 100.0); }

double cm1_to_hartree(double cm1) { return cm1 * 100.0 * 2.0 * std::numbers::pi * c_m_s * hbar_Js / hartree_J; }

}  // namespace units

const char* to_string(ModeConvention c) {
  switch (c) {
    case ModeConvention::MassWeightedOrthonormal: return "mass-weighted-orthonormal";
    case ModeConvention::InverseMassNormalized: return "inverse-mass-normalized";
    case ModeConvention::MassWeightedThenNormalized: return "mass-weighted-then-normalized";
  }
  return "unknown";
}

ModeConvention convention_from_string(const std::string& s) {
  if (s == "mass-weighted-orthonormal") return ModeConvention::MassWeightedOrthonormal;
  if (s == "inverse-mass-normalized" || s == "ase") return ModeConvention::InverseMassNormalized;
  if (s == "mass-weighted-then-normalized" || s == "orca") return ModeConvention::MassWeightedThenNormalized;
  throw ValidationError("unknown mode convention '" + s + "'");
}

double NormalModeSet::omega_au(std::size_t k) const {
  return units::cm1_to_hartree(std::abs(frequencies_cm1[static_cast<Eigen::Index>(k)]));
}

bool NormalModeSet::vibrational(std::size_t k, double floor_cm1) const {
  return frequencies_cm1[static_cast<Eigen::Index>(k)] >= floor_cm1;
}

void NormalModeSet::validate() const {
  const auto n3 = 3 * masses.size();
  if (modes.rows() != n3 || modes.cols() != n3 || frequencies_cm1.size() != n3) {
    throw ValidationError("mode set needs 3N frequencies and a 3N x 3N mode matrix");
  }
  if ((masses.array() <= 0.0).any()) throw ValidationError("masses must be positive");
  if (!modes.allFinite() || !frequencies_cm1.allFinite()) throw ValidationError("non-finite mode data");
}

Eigen::VectorXd coordinate_masses(const Eigen::VectorXd& masses) {
  Eigen::VectorXd m(3 * masses.size());
  for (Eigen::Index a = 0; a < masses.size(); ++a) m.segment<3>(3 * a).setConstant(masses[a]);
  return m;
}

NormalModeSet normal_modes(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& masses, double sym_tol) {
  const auto n3 = 3 * masses.size();
  if (hessian.rows() != n3 || hessian.cols() != n3) throw ValidationError("Hessian must be 3N x 3N");
  if ((masses.array() <= 0.0).any()) throw ValidationError("masses must be positive");
  if (!hessian.allFinite()) throw NumericalError("non-finite Hessian");
  const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
  if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) {
    throw ValidationError("Hessian is not symmetric");
  }
  const Eigen::VectorXd inv_sqrt = coordinate_masses(masses).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd d = inv_sqrt.asDiagonal() * (0.5 * (hessian + hessian.transpose())) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
  if (es.info() != Eigen::Success) throw NumericalError("Hessian diagonalization failed");

  NormalModeSet out;
  out.masses = masses;
  out.modes = es.eigenvectors();
  out.frequencies_cm1.resize(n3);
  const double f = units::cm1_per_unit();
  for (Eigen::Index k = 0; k < n3; ++k) {
    const double lam = es.eigenvalues()[k];
    out.frequencies_cm1[k] = (lam < 0.0 ? -1.0 : 1.0) * f * std::sqrt(std::abs(lam));
    Eigen::Index at = 0;
    double big = -1.0;
    for (Eigen::Index r = 0; r < n3; ++r) {
      // first largest, with a little slack against round-off ties
      if (std::abs(out.modes(r, k)) > big + 1e-12) {
        big = std::abs(out.modes(r, k));
        at = r;
      }
    }
    if (out.modes(at, k) < 0.0) out.modes.col(k) *= -1.0;
  }
  out.convention = ModeConvention::MassWeightedOrthonormal;
  return out;
}

NormalModeSet reweight_external_modes(const NormalModeSet& raw) {
  raw.validate();
  if (raw.convention == ModeConvention::MassWeightedOrthonormal) return raw;
  NormalModeSet out = raw;
  const Eigen::VectorXd sq = coordinate_masses(raw.masses).cwiseSqrt();
  // both external conventions are M^-1/2 u up to a per-mode scale
  for (Eigen::Index k = 0; k < out.modes.cols(); ++k) {
    Eigen::VectorXd v = sq.asDiagonal() * raw.modes.col(k);
    const double n = v.norm();
    if (!(n > 0.0)) throw NumericalError("zero mode vector");
    out.modes.col(k) = v / n;
  }
  out.convention = ModeConvention::MassWeightedOrthonormal;
  return out;
}

double orthonormality_error(const Eigen::MatrixXd& modes) {
  const Eigen::MatrixXd g = modes.transpose() * modes;
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

Eigen::VectorXd huang_rhys(const Positions& r_ground, const Positions& r_excited, const NormalModeSet& modes,
                           double floor_cm1) {
  modes.validate();
  if (modes.convention != ModeConvention::MassWeightedOrthonormal) {
    throw ValidationError("Huang-Rhys factors need mass-weighted orthonormal modes");
  }
  const auto n = static_cast<Eigen::Index>(modes.atoms());
  if (r_ground.rows() != n || r_excited.rows() != n) throw ValidationError("geometry sizes do not match the modes");
  const Positions d = r_ground - r_excited;
  const Eigen::VectorXd dv = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
  const Eigen::VectorXd delta = coordinate_masses(modes.masses).cwiseSqrt().cwiseProduct(dv);
  // A sqrt(amu) -> bohr sqrt(m_e)
  const double to_au = std::sqrt(units::amu_me) / units::bohr_angstrom;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(modes.size()));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (!modes.vibrational(k, floor_cm1)) continue;
    const double dk = delta.dot(modes.modes.col(static_cast<Eigen::Index>(k))) * to_au;
    s[static_cast<Eigen::Index>(k)] = 0.5 * modes.omega_au(k) * dk * dk;
  }
  return s;
}

WeightedHR weighted_hr(const Eigen::VectorXd& s, const Eigen::VectorXd& frequencies_cm1) {
  if (s.size() != frequencies_cm1.size()) throw ValidationError("one Huang-Rhys factor per frequency required");
  WeightedHR out;
  out.omega_max_cm1 = frequencies_cm1.size() ? frequencies_cm1.maxCoeff() : 0.0;
  if (!(out.omega_max_cm1 > 0.0)) throw ValidationError("no real frequency to normalize by");
  out.weighted = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (frequencies_cm1[k] <= 0.0) continue;
    const double r = frequencies_cm1[k] / out.omega_max_cm1;
    out.weighted[k] = r * r * s[k];
  }
  out.sum = out.weighted.sum();
  return out;
}

std::string modes_to_json(const NormalModeSet& m) {
  m.validate();
  nlohmann::ordered_json j;
  j["convention"] = to_string(m.convention);
  j["masses_amu"] = std::vector<double>(m.masses.data(), m.masses.data() + m.masses.size());
  j["frequencies_cm1"] = std::vector<double>(m.frequencies_cm1.data(), m.frequencies_cm1.data() + m.frequencies_cm1.size());
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < m.modes.cols(); ++k) {
    const Eigen::VectorXd c = m.modes.col(k);
    rows.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  }
  j["modes"] = rows;
  return j.dump(1) + "\n";
}

NormalModeSet modes_from_json(const std::string& text) {
  NormalModeSet m;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto masses = j.at("masses_amu").get<std::vector<double>>();
    const auto freqs = j.at("frequencies_cm1").get<std::vector<double>>();
    const auto modes = j.at("modes").get<std::vector<std::vector<double>>>();
    m.convention = convention_from_string(j.value("convention", std::string("mass-weighted-orthonormal")));
    m.masses = Eigen::Map<const Eigen::VectorXd>(masses.data(), static_cast<Eigen::Index>(masses.size()));
    m.frequencies_cm1 = Eigen::Map<const Eigen::VectorXd>(freqs.data(), static_cast<Eigen::Index>(freqs.size()));
    const auto n3 = static_cast<Eigen::Index>(3 * masses.size());
    if (static_cast<Eigen::Index>(modes.size()) != n3) throw ValidationError("mode file needs 3N modes");
    m.modes.resize(n3, n3);
    for (Eigen::Index k = 0; k < n3; ++k) {
      const auto& v = modes[static_cast<std::size_t>(k)];
      if (static_cast<Eigen::Index>(v.size()) != n3) throw ValidationError("every mode needs 3N components");
      for (Eigen::Index r = 0; r < n3; ++r) m.modes(r, k) = v[static_cast<std::size_t>(r)];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad mode file: ") + e.what());
  }
  m.validate();
  return m;
}

NormalModeSet load_modes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mode file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return modes_from_json(ss.str());
}

void save_modes(const NormalModeSet& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << modes_to_json(m);
}

}  // namespace spescreen::vibronic
