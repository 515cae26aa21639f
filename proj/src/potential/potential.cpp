#include "spescreen/potential/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "spescreen/error.hpp"
#include "spescreen/structure/neighbors.hpp"

namespace spescreen::potential {
namespace {

std::pair<std::string, std::string> key(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

// Component label per atom of the graph formed by the springs.
std::vector<std::size_t> spring_components(const std::vector<Spring>& springs, std::size_t n) {
  NeighborList nl;
  nl.neighbors.resize(n);
  for (const auto& sp : springs) {
    if (sp.i >= n || sp.j >= n) throw ValidationError("spring index outside the structure");
    nl.neighbors[sp.i].push_back(sp.j);
    nl.neighbors[sp.j].push_back(sp.i);
  }
  return connected_components(nl).labels;
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be positive");
}

// r_j - r_i reduced to the nearest image along periodic axes.
struct MinImage {
  bool active = false;
  Eigen::Matrix3d h, hinv;
  std::array<bool, 3> pbc{};

  explicit MinImage(const AtomicStructure& s) {
    if (s.periodic()) {
      active = true;
      h = *s.cell;
      hinv = h.inverse();
      pbc = s.pbc;
    }
  }
  Eigen::RowVector3d operator()(Eigen::RowVector3d d) const {
    if (!active) return d;
    Eigen::RowVector3d f = d * hinv;
    for (int a = 0; a < 3; ++a) {
      if (pbc[static_cast<std::size_t>(a)]) f[a] -= std::round(f[a]);
    }
    return f * h;
  }
};

// 3x3 second-derivative block of a radial pair term phi(r).
Eigen::Matrix3d pair_block(const Eigen::Vector3d& d, double dphi, double d2phi) {
  const double r = d.norm();
  const Eigen::Vector3d u = d / r;
  const Eigen::Matrix3d uu = u * u.transpose();
  return d2phi * uu + (dphi / r) * (Eigen::Matrix3d::Identity() - uu);
}

void add_block(Eigen::MatrixXd& hess, std::size_t i, std::size_t j, const Eigen::Matrix3d& b) {
  const auto I = static_cast<Eigen::Index>(3 * i), J = static_cast<Eigen::Index>(3 * j);
  hess.block<3, 3>(I, I) += b;
  hess.block<3, 3>(J, J) += b;
  hess.block<3, 3>(I, J) -= b;
  hess.block<3, 3>(J, I) -= b;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ValidationError(std::string(what) + " must be a non-empty 2D array");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(std::string(what) + " is ragged");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ValidationError(std::string(what) + " has a non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  if (!m.allFinite()) throw ValidationError(std::string(what) + " has a non-finite entry");
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace

// ---- LJ table -----------------------------------------------------------

void LJTable::set_element(const std::string& el, LJParams p) {
  check_positive(p.epsilon, "LJ epsilon");
  check_positive(p.sigma, "LJ sigma");
  elements_[el] = p;
}

void LJTable::set_pair(const std::string& a, const std::string& b, LJParams p) {
  check_positive(p.epsilon, "LJ epsilon");
  check_positive(p.sigma, "LJ sigma");
  pairs_[key(a, b)] = p;
}

LJParams LJTable::lookup(const std::string& a, const std::string& b) const {
  if (auto it = pairs_.find(key(a, b)); it != pairs_.end()) return it->second;
  auto ia = elements_.find(a), ib = elements_.find(b);
  if (ia == elements_.end() || ib == elements_.end()) {
    throw ValidationError("no Lennard-Jones parameters for pair " + a + "-" + b);
  }
  return {std::sqrt(ia->second.epsilon * ib->second.epsilon), 0.5 * (ia->second.sigma + ib->second.sigma)};
}

LJTable LJTable::uff() {
  constexpr double kcal = 0.0433641;  // eV per kcal/mol
  const double to_sigma = std::pow(2.0, -1.0 / 6.0);
  LJTable t;
  t.set_element("H", {0.044 * kcal, 2.886 * to_sigma});
  t.set_element("C", {0.105 * kcal, 3.851 * to_sigma});
  t.set_element("N", {0.069 * kcal, 3.660 * to_sigma});
  t.set_element("O", {0.060 * kcal, 3.500 * to_sigma});
  t.set_element("S", {0.274 * kcal, 4.035 * to_sigma});
  t.set_element("Ar", {0.185 * kcal, 3.868 * to_sigma});
  return t;
}

// ---- Lennard-Jones ----------------------------------------------------------

LennardJones::LennardJones(LJTable table, double cutoff_factor, std::vector<std::size_t> molecule_of,
                           std::vector<std::array<int, 3>> offsets)
    : table_(std::move(table)),
      cutoff_factor_(cutoff_factor),
      molecule_of_(std::move(molecule_of)),
      offsets_(std::move(offsets)) {
  check_positive(cutoff_factor_, "LJ cutoff factor");
  if (!offsets_.empty() && offsets_.size() != molecule_of_.size()) {
    throw ValidationError("molecule offsets need matching molecule labels");
  }
}

Evaluation LennardJones::evaluate(const AtomicStructure& s) const {
  Evaluation out;
  out.forces = Positions::Zero(static_cast<Eigen::Index>(s.size()), 3);
  if (!molecule_of_.empty() && molecule_of_.size() != s.size()) {
    throw ValidationError("molecule labels do not match the structure size");
  }
  if (s.size() == 0) return out;

  // parameters for every element pair present
  std::vector<std::string> kinds(s.elements.begin(), s.elements.end());
  std::sort(kinds.begin(), kinds.end());
  kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
  std::vector<std::size_t> kind_of(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    kind_of[i] = static_cast<std::size_t>(std::lower_bound(kinds.begin(), kinds.end(), s.elements[i]) - kinds.begin());
  }
  const auto nk = kinds.size();
  struct Pair {
    double eps, sigma, rc, shift;
  };
  std::vector<Pair> params(nk * nk);
  double rc_max = 0.0;
  for (std::size_t a = 0; a < nk; ++a) {
    for (std::size_t b = 0; b < nk; ++b) {
      const auto p = table_.lookup(kinds[a], kinds[b]);
      const double rc = cutoff_factor_ * p.sigma;
      const double sr6 = std::pow(p.sigma / rc, 6);
      params[a * nk + b] = {p.epsilon, p.sigma, rc, 4.0 * p.epsilon * (sr6 * sr6 - sr6)};
      rc_max = std::max(rc_max, rc);
    }
  }

  for (const auto& pi : pair_images(s, rc_max, Exec::Serial)) {
    if (!molecule_of_.empty() && molecule_of_[pi.i] == molecule_of_[pi.j]) {
      bool bonded_image = true;
      if (!offsets_.empty()) {
        for (std::size_t a = 0; a < 3; ++a) bonded_image &= pi.image[a] == offsets_[pi.j][a] - offsets_[pi.i][a];
      }
      if (bonded_image) continue;
    }
    const auto& p = params[kind_of[pi.i] * nk + kind_of[pi.j]];
    const Eigen::RowVector3d d = s.positions.row(static_cast<Eigen::Index>(pi.j)) + pi.shift.transpose() -
                                 s.positions.row(static_cast<Eigen::Index>(pi.i));
    const double r2 = d.squaredNorm();
    if (r2 >= p.rc * p.rc) continue;
    const double sr2 = p.sigma * p.sigma / r2;
    const double sr6 = sr2 * sr2 * sr2;
    out.energy += 4.0 * p.eps * (sr6 * sr6 - sr6) - p.shift;
    if (pi.i == pi.j) continue;
    // -dphi/dr / r
    const double f_over_r = 24.0 * p.eps * (2.0 * sr6 * sr6 - sr6) / r2;
    out.forces.row(static_cast<Eigen::Index>(pi.j)) += f_over_r * d;
    out.forces.row(static_cast<Eigen::Index>(pi.i)) -= f_over_r * d;
  }
  return out;
}

// ---- Harmonic springs + repulsion -------------------------------------------

HarmonicRepulsion::HarmonicRepulsion(std::vector<Spring> springs, std::optional<Repulsion> repulsion)
    : springs_(std::move(springs)), repulsion_(repulsion) {
  for (const auto& sp : springs_) {
    check_positive(sp.k, "spring constant");
    check_positive(sp.r0, "spring equilibrium length");
    if (sp.i == sp.j) throw ValidationError("spring connects an atom to itself");
  }
  if (repulsion_) {
    check_positive(repulsion_->epsilon, "repulsion epsilon");
    check_positive(repulsion_->sigma, "repulsion sigma");
    check_positive(repulsion_->cutoff, "repulsion cutoff");
  }
}

std::vector<Spring> HarmonicRepulsion::springs_from_geometry(const AtomicStructure& s, double k, double tolerance,
                                                              double network_cutoff) {
  check_positive(k, "spring constant");
  auto radii = natural_cutoffs(s);
  for (auto& r : radii) r += tolerance;
  const auto nl = neighbor_list(s, radii, Exec::Serial);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (auto p : nl.pairs()) pairs.insert(p);
  if (network_cutoff > 0.0) {
    const auto mol = connected_components(nl);
    std::vector<double> half(s.size(), 0.5 * network_cutoff);
    for (auto p : neighbor_list(s, half, Exec::Serial).pairs()) {
      if (mol.labels[p.first] == mol.labels[p.second]) pairs.insert(p);
    }
  }
  const MinImage mi(s);
  std::vector<Spring> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    const double r = mi(s.positions.row(static_cast<Eigen::Index>(j)) - s.positions.row(static_cast<Eigen::Index>(i))).norm();
    out.push_back({i, j, k, r});
  }
  return out;
}

Evaluation HarmonicRepulsion::evaluate(const AtomicStructure& s) const {
  Evaluation out;
  out.forces = Positions::Zero(static_cast<Eigen::Index>(s.size()), 3);
  const MinImage mi(s);
  for (const auto& sp : springs_) {
    if (sp.i >= s.size() || sp.j >= s.size()) throw ValidationError("spring index outside the structure");
    const Eigen::RowVector3d d =
        mi(s.positions.row(static_cast<Eigen::Index>(sp.j)) - s.positions.row(static_cast<Eigen::Index>(sp.i)));
    const double r = d.norm();
    const double dr = r - sp.r0;
    out.energy += 0.5 * sp.k * dr * dr;
    const Eigen::RowVector3d f = -sp.k * dr * d / r;  // force on j
    out.forces.row(static_cast<Eigen::Index>(sp.j)) += f;
    out.forces.row(static_cast<Eigen::Index>(sp.i)) -= f;
  }
  if (repulsion_ && s.size() > 0) {
    const auto mol = spring_components(springs_, s.size());
    const auto& rp = *repulsion_;
    const double shift = rp.epsilon * std::pow(rp.sigma / rp.cutoff, 12);
    for (const auto& pi : pair_images(s, rp.cutoff, Exec::Serial)) {
      if (mol[pi.i] == mol[pi.j]) continue;
      const Eigen::RowVector3d d = s.positions.row(static_cast<Eigen::Index>(pi.j)) + pi.shift.transpose() -
                                   s.positions.row(static_cast<Eigen::Index>(pi.i));
      const double r2 = d.squaredNorm();
      const double sr2 = rp.sigma * rp.sigma / r2;
      const double sr12 = std::pow(sr2, 6);
      out.energy += rp.epsilon * sr12 - shift;
      if (pi.i == pi.j) continue;
      const double f_over_r = 12.0 * rp.epsilon * sr12 / r2;
      out.forces.row(static_cast<Eigen::Index>(pi.j)) += f_over_r * d;
      out.forces.row(static_cast<Eigen::Index>(pi.i)) -= f_over_r * d;
    }
  }
  return out;
}

std::optional<Eigen::MatrixXd> HarmonicRepulsion::hessian(const AtomicStructure& s) const {
  const auto n3 = static_cast<Eigen::Index>(3 * s.size());
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n3, n3);
  const MinImage mi(s);
  for (const auto& sp : springs_) {
    const Eigen::Vector3d d =
        mi(s.positions.row(static_cast<Eigen::Index>(sp.j)) - s.positions.row(static_cast<Eigen::Index>(sp.i)))
            .transpose();
    const double r = d.norm();
    add_block(hess, sp.i, sp.j, pair_block(d, sp.k * (r - sp.r0), sp.k));
  }
  if (repulsion_ && s.size() > 0) {
    const auto mol = spring_components(springs_, s.size());
    const auto& rp = *repulsion_;
    for (const auto& pi : pair_images(s, rp.cutoff, Exec::Serial)) {
      if (mol[pi.i] == mol[pi.j]) continue;
      const Eigen::Vector3d d = (s.positions.row(static_cast<Eigen::Index>(pi.j)) + pi.shift.transpose() -
                                 s.positions.row(static_cast<Eigen::Index>(pi.i)))
                                    .transpose();
      const double r = d.norm();
      const double sr12 = std::pow(rp.sigma / r, 12);
      add_block(hess, pi.i, pi.j, pair_block(d, -12.0 * rp.epsilon * sr12 / r, 156.0 * rp.epsilon * sr12 / (r * r)));
    }
  }
  return hess;
}

// ---- Sum ----------------------------------------------------------------------

SumPotential::SumPotential(std::vector<PotentialPtr> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw ValidationError("sum potential needs at least one term");
}

Evaluation SumPotential::evaluate(const AtomicStructure& s) const {
  Evaluation out = terms_.front()->evaluate(s);
  for (std::size_t t = 1; t < terms_.size(); ++t) {
    const auto e = terms_[t]->evaluate(s);
    out.energy += e.energy;
    out.forces += e.forces;
  }
  return out;
}

std::optional<Eigen::MatrixXd> SumPotential::hessian(const AtomicStructure& s) const {
  std::optional<Eigen::MatrixXd> out;
  for (const auto& t : terms_) {
    auto h = t->hessian(s);
    if (!h) return std::nullopt;
    if (out) *out += *h;
    else out = std::move(h);
  }
  return out;
}

std::string SumPotential::name() const {
  std::string n;
  for (const auto& t : terms_) n += (n.empty() ? "" : "+") + t->name();
  return n;
}

// ---- Tabulated ----------------------------------------------------------------

TabulatedPotential::TabulatedPotential(double energy, Positions forces, std::optional<Eigen::MatrixXd> hessian)
    : energy_(energy), forces_(std::move(forces)), hessian_(std::move(hessian)) {
  if (!std::isfinite(energy_) || !forces_.allFinite()) throw ValidationError("tabulated data must be finite");
  if (hessian_ && (hessian_->rows() != 3 * forces_.rows() || hessian_->cols() != 3 * forces_.rows())) {
    throw ValidationError("tabulated Hessian must be 3N x 3N");
  }
}

TabulatedPotential TabulatedPotential::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
  if (!j.contains("energy_eV") || !j["energy_eV"].is_number()) throw ValidationError("missing numeric energy_eV");
  if (!j.contains("forces_eV_per_A")) throw ValidationError("missing forces_eV_per_A");
  const Eigen::MatrixXd f = matrix_from_json(j["forces_eV_per_A"], "forces_eV_per_A");
  if (f.cols() != 3) throw ValidationError("forces_eV_per_A must have 3 columns");
  if (j.contains("n_atoms") && j["n_atoms"].get<long long>() != f.rows()) {
    throw ValidationError("n_atoms does not match the force rows");
  }
  std::optional<Eigen::MatrixXd> h;
  if (j.contains("hessian_eV_per_A2")) h = matrix_from_json(j["hessian_eV_per_A2"], "hessian_eV_per_A2");
  return TabulatedPotential(j["energy_eV"].get<double>(), Positions(f), std::move(h));
}

void save_evaluation(const std::filesystem::path& path, const Evaluation& e,
                     const std::optional<Eigen::MatrixXd>& hessian) {
  nlohmann::json j;
  j["n_atoms"] = e.forces.rows();
  j["energy_eV"] = e.energy;
  j["forces_eV_per_A"] = matrix_to_json(e.forces);
  if (hessian) j["hessian_eV_per_A2"] = matrix_to_json(*hessian);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << j.dump(1) << '\n';
}

void TabulatedPotential::save(const std::filesystem::path& path) const {
  save_evaluation(path, {energy_, forces_}, hessian_);
}

Evaluation TabulatedPotential::evaluate(const AtomicStructure& s) const {
  if (static_cast<Eigen::Index>(s.size()) != forces_.rows()) {
    throw ValidationError("tabulated data is for " + std::to_string(forces_.rows()) + " atoms, structure has " +
                          std::to_string(s.size()));
  }
  return {energy_, forces_};
}

std::optional<Eigen::MatrixXd> TabulatedPotential::hessian(const AtomicStructure& s) const {
  evaluate(s);
  return hessian_;
}

// ---- factory ------------------------------------------------------------------

PotentialPtr build_potential(const PotentialSpec& spec, const AtomicStructure& s) {
  switch (spec.kind) {
    case PotentialKind::HarmonicRepulsion: {
      auto springs = HarmonicRepulsion::springs_from_geometry(s, spec.spring_k, spec.bond_tolerance, spec.network_cutoff);
      return std::make_shared<HarmonicRepulsion>(
          std::move(springs),
          HarmonicRepulsion::Repulsion{spec.repulsion_epsilon, spec.repulsion_sigma, spec.repulsion_cutoff});
    }
    case PotentialKind::LennardJones: {
      if (!spec.lj_molecular) return std::make_shared<LennardJones>(spec.lj, spec.lj_cutoff_factor);
      MoleculeOptions mo;
      mo.tolerance = spec.bond_tolerance;
      auto labels = identify_molecules(s, mo, Exec::Serial).labels;
      auto offsets = molecule_offsets(s, mo);
      auto springs = HarmonicRepulsion::springs_from_geometry(s, spec.spring_k, spec.bond_tolerance, spec.network_cutoff);
      std::vector<PotentialPtr> terms{std::make_shared<LennardJones>(spec.lj, spec.lj_cutoff_factor, std::move(labels),
                                                                     std::move(offsets))};
      if (!springs.empty()) terms.push_back(std::make_shared<HarmonicRepulsion>(std::move(springs)));
      return std::make_shared<SumPotential>(std::move(terms));
    }
    case PotentialKind::Tabulated:
      return std::make_shared<TabulatedPotential>(TabulatedPotential::load(spec.tabulated_file));
  }
  throw ValidationError("unknown potential kind");
}

}  // namespace spescreen::potential
