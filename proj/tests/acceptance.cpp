// End-to-end acceptance checks. One line per criterion; exit status is
// nonzero when any gating criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "spescreen/chem/fingerprint.hpp"
#include "spescreen/chem/similarity.hpp"
#include "spescreen/chem/smiles.hpp"
#include "spescreen/chem/smiles_table.hpp"
#include "spescreen/embedding/embedding.hpp"
#include "spescreen/error.hpp"
#include "spescreen/ml/features.hpp"
#include "spescreen/ml/gpc.hpp"
#include "spescreen/ml/tsne.hpp"
#include "spescreen/potential/potential.hpp"
#include "spescreen/rng.hpp"
#include "spescreen/spectro/spectro.hpp"
#include "spescreen/vibronic/coupling.hpp"
#include "spescreen/vibronic/modes.hpp"

using namespace spescreen;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string advisory;  // reported, never gating

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

// SI constants, typed in here rather than taken from the library
constexpr double kEV = 1.602176634e-19, kAMU = 1.66053906660e-27, kC = 299792458.0, kHBAR = 1.054571817e-34;

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double wavenumber_to_omega(double cm1) { return 2 * std::numbers::pi * kC * 100 * cm1; }

Positions random_positions(Eigen::Index n, Rng& rng, double scale) {
  Positions p(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = scale * rng.normal();
  return p;
}

Eigen::MatrixXd random_orthogonal(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// connected random molecule: each new atom bonded to an earlier one
AtomicStructure random_molecule(int n, Rng& rng) {
  static const std::vector<std::string> pool{"C", "N", "O", "H"};
  std::vector<std::string> el;
  Positions p(n, 3);
  for (int i = 0; i < n; ++i) {
    el.push_back(pool[rng.below(pool.size())]);
    if (i == 0) {
      p.row(0).setZero();
      continue;
    }
    for (;;) {
      Eigen::RowVector3d dir(rng.normal(), rng.normal(), rng.normal());
      const Eigen::RowVector3d cand = p.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i)))) + 1.2 * dir.normalized();
      bool clash = false;
      for (int j = 0; j < i; ++j) clash = clash || (cand - p.row(j)).norm() < 1.0;
      if (!clash) {
        p.row(i) = cand;
        break;
      }
    }
  }
  return AtomicStructure(el, p);
}

// simple cubic lattice of H2 dimers
AtomicStructure h2_lattice(int nx, int ny, int nz, double a) {
  std::vector<std::string> el;
  Positions p(2 * nx * ny * nz, 3);
  Eigen::Index k = 0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        const Eigen::RowVector3d c(a * x, a * y, a * z);
        p.row(k++) = c;
        p.row(k++) = c + Eigen::RowVector3d(0.74, 0, 0);
        el.insert(el.end(), {"H", "H"});
      }
  AtomicStructure s(el, p);
  s.cell = Eigen::Vector3d(a * nx, a * ny, a * nz).asDiagonal();
  s.pbc = {true, true, true};
  return s;
}

// ---- 1 ----------------------------------------------------------------------

Outcome stark() {
  Outcome o;
  struct Row {
    const char* name;
    double mu, alpha, a, b;
  };
  const Row rows[] = {{"PBE D3", 0.0458, 644.28, 58.58, -0.0801},
                      {"B3LYP D3", 0.0616, 612.15, 78.84, -0.0761},
                      {"r2SCAN D4", 0.0668, 617.43, 85.44, -0.0768}};
  double worst = 0;
  for (const auto& r : rows) {
    const auto c = spectro::stark_coefficients({r.mu, r.alpha});
    worst = std::max({worst, rel(c.a, r.a), rel(c.b, r.b)});
    o.require(rel(c.a, r.a) < 0.01 && rel(c.b, r.b) < 0.01,
              fmt::format("{}: a={:.4g} b={:.4g}", r.name, c.a, c.b));
  }
  if (o.pass) o.detail = fmt::format("3 rows, worst relative deviation {:.2e}", worst);
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome huang_rhys_oracle() {
  Outcome o;
  Rng rng(2);
  double worst = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const double m = rng.uniform(1.0, 250.0);        // amu
    const double nu = rng.uniform(50.0, 3500.0);     // cm^-1
    const double d = rng.uniform(1e-4, 0.3);         // A
    // single atom, oscillator along a random axis, other axes stiff and undisplaced
    vibronic::NormalModeSet nm;
    nm.masses = Eigen::VectorXd::Constant(1, m);
    nm.modes = random_orthogonal(3, rng);
    nm.frequencies_cm1 = Eigen::Vector3d(nu, nu + 100, nu + 200);
    const Eigen::Vector3d axis = nm.modes.col(0);
    Positions g = Positions::Zero(1, 3), e(1, 3);
    e.row(0) = d * axis.transpose();
    const auto s = vibronic::huang_rhys(g, e, nm, 10.0);
    const double expect = m * kAMU * wavenumber_to_omega(nu) * std::pow(d * 1e-10, 2) / (2 * kHBAR);
    worst = std::max(worst, rel(s[0], expect));
    o.require(rel(s[0], expect) < 1e-8, fmt::format("draw {}: S={:.10g}, oscillator {:.10g}", rep, s[0], expect));
    o.require(std::abs(s[1]) + std::abs(s[2]) <= 1e-12 * expect, "undisplaced modes picked up a factor");
  }
  if (o.pass) o.detail = fmt::format("100 draws, worst relative error {:.2e}", worst);
  return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome projection_completeness() {
  Outcome o;
  Rng rng(3);
  double worst_row = 0, worst_fc = 0;
  int max_atoms = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int ng = 3 + static_cast<int>(rng.below(6));
    auto guest = random_molecule(ng, rng);
    auto host = h2_lattice(2 + static_cast<int>(rng.below(2)), 2, 2 + static_cast<int>(rng.below(2)), 4.2);
    host.cell.reset();
    host.pbc = {false, false, false};
    const Eigen::RowVector3d shift =
        host.positions.colwise().mean() - guest.positions.colwise().mean();
    guest.positions.rowwise() += shift;

    // complex with shuffled atom order
    AtomicStructure joined = host;
    joined.append(guest);
    std::vector<std::size_t> order(joined.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto cpx = joined.subset(order);
    std::vector<std::size_t> where(joined.size());
    for (std::size_t k = 0; k < order.size(); ++k) where[order[k]] = k;
    std::vector<std::size_t> emitter_atoms;
    for (std::size_t a = 0; a < guest.size(); ++a) emitter_atoms.push_back(where[host.size() + a]);
    max_atoms = std::max(max_atoms, static_cast<int>(cpx.size()));

    using potential::HarmonicRepulsion;
    const HarmonicRepulsion iso_pot(HarmonicRepulsion::springs_from_geometry(guest, 30.0, 0.3, 2.6));
    const HarmonicRepulsion cpx_pot(HarmonicRepulsion::springs_from_geometry(cpx, 30.0, 0.3, 2.6),
                                    HarmonicRepulsion::Repulsion{0.01, 2.5, 6.0});
    const auto iso = vibronic::normal_modes(*iso_pot.hessian(guest), guest.masses);
    const auto emb = vibronic::normal_modes(*cpx_pot.hessian(cpx), cpx.masses);
    const auto p = vibronic::mode_overlap_matrix(iso, emb, emitter_atoms);
    const double row = (p.rho.rowwise().sum().array() - 1.0).abs().maxCoeff();
    worst_row = std::max(worst_row, row);
    o.require(row < 1e-8, fmt::format("fixture {}: row sum off by {:.2e}", rep, row));

    const Positions f = random_positions(static_cast<Eigen::Index>(guest.size()), rng, 0.5);
    for (auto w : {vibronic::ForceWeighting::Raw, vibronic::ForceWeighting::InverseSqrtMass}) {
      const auto fc = vibronic::direct_fc_metric(f, iso, emb, emitter_atoms, w, 1e300);
      const double err = std::abs(fc.direct - fc.unity_inserted) / std::max(1.0, fc.direct);
      worst_fc = std::max(worst_fc, err);
      o.require(err < 1e-8, fmt::format("fixture {}: direct {:.12g} vs unity-inserted {:.12g}", rep, fc.direct,
                                        fc.unity_inserted));
    }
  }
  if (o.pass)
    o.detail = fmt::format("20 fixtures (<= {} atoms), row error {:.1e}, direct FC error {:.1e}", max_atoms,
                           worst_row, worst_fc);
  return o;
}

// ---- 4 ----------------------------------------------------------------------

// Molecules by brute force: union of atom pairs closer than `bond` (no
// periodic images; the dimers never bond across the cell boundary).
std::vector<std::size_t> brute_molecules(const Positions& p, double bond) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::size_t> lab(n);
  std::iota(lab.begin(), lab.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if ((p.row(static_cast<Eigen::Index>(i)) - p.row(static_cast<Eigen::Index>(j))).norm() < bond) {
          const auto m = std::min(lab[i], lab[j]);
          if (lab[i] != m || lab[j] != m) changed = true;
          lab[i] = lab[j] = m;
        }
  }
  return lab;
}

Outcome embedding_contract() {
  Outcome o;
  const auto host = h2_lattice(5, 5, 4, 3.2);
  // CO2, 2.32 A long
  const AtomicStructure co2({"O", "C", "O"}, (Positions(3, 3) << -1.16, 0, 0, 0, 0, 0, 1.16, 0, 0).finished());
  embedding::EmbeddingConfig cfg;
  cfg.cutoff = 1.0;
  cfg.min_removed = 1;
  cfg.max_removed = 6;
  cfg.per_count = 1000;
  cfg.max_trials = 1000;
  cfg.seed = 44;

  const auto run = embedding::embed_emitter(host, co2, cfg);
  o.require(host.size() == 200, "host is not 200 atoms");
  o.require(run.trials == 1000, fmt::format("{} trials run", run.trials));
  o.require(!run.accepted.empty(), "nothing accepted");

  const auto lab = brute_molecules(host.positions, 1.0);
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < lab.size(); ++i) members[lab[i]].push_back(i);
  o.require(members.size() == 100, "host should hold 100 dimers");

  std::size_t good = 0;
  for (const auto& t : run.accepted) {
    const auto nh = t.kept_host_atoms.size();
    const Positions em = t.complex.positions.bottomRows(3);
    const Positions kept = t.complex.positions.topRows(static_cast<Eigen::Index>(nh));
    bool ok = t.complex.size() == nh + 3;
    // every kept atom really is that host atom
    for (std::size_t k = 0; ok && k < nh; ++k)
      ok = (kept.row(static_cast<Eigen::Index>(k)) - host.positions.row(static_cast<Eigen::Index>(t.kept_host_atoms[k])))
               .norm() == 0.0;
    // separation
    double dmin = INFINITY;
    for (Eigen::Index i = 0; i < kept.rows(); ++i)
      for (Eigen::Index j = 0; j < 3; ++j) dmin = std::min(dmin, (kept.row(i) - em.row(j)).norm());
    ok = ok && dmin >= 1.0;
    // containment in the remaining host's box
    for (int a = 0; a < 3; ++a)
      ok = ok && em.col(a).minCoeff() > kept.col(a).minCoeff() && em.col(a).maxCoeff() < kept.col(a).maxCoeff();
    // whole molecules: each is kept entirely or removed entirely, and a
    // molecule is removed only if it touched the emitter
    const std::set<std::size_t> keptset(t.kept_host_atoms.begin(), t.kept_host_atoms.end());
    int removed = 0;
    for (const auto& [id, atoms] : members) {
      const auto in = std::count_if(atoms.begin(), atoms.end(), [&](std::size_t a) { return keptset.count(a) > 0; });
      if (in == 0) {
        ++removed;
        double dm = INFINITY;
        for (auto a : atoms)
          for (Eigen::Index j = 0; j < 3; ++j)
            dm = std::min(dm, (host.positions.row(static_cast<Eigen::Index>(a)) - em.row(j)).norm());
        ok = ok && dm < 1.0;
      } else {
        ok = ok && in == static_cast<long>(atoms.size());
      }
    }
    ok = ok && removed == t.removed() && removed >= cfg.min_removed && removed <= cfg.max_removed;
    good += ok;
  }
  o.require(good == run.accepted.size(),
            fmt::format("{} of {} accepted structures violate the contract", run.accepted.size() - good,
                        run.accepted.size()));

  const auto m1 = embedding::manifest_json(run, cfg);
  const auto m2 = embedding::manifest_json(embedding::embed_emitter(host, co2, cfg), cfg);
  const auto m3 = embedding::manifest_json(embedding::embed_emitter(host, co2, cfg, Exec::Serial), cfg);
  o.require(m1 == m2 && m1 == m3, "manifests differ between identical runs");
  if (o.pass)
    o.detail = fmt::format("{} accepted of 1000 trials, all verified; manifests byte-identical ({} bytes)",
                           run.accepted.size(), m1.size());
  return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome binding_identities() {
  Outcome o;
  Rng rng(5);
  double worst_null = 0, worst_lin = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t ne = 3 + rng.below(40), ns = 50 + rng.below(400);
    const std::size_t nc = ne + ns - rng.below(30);
    const double ee = rng.uniform(-500, 0), es = rng.uniform(-5000, 0);
    // complex energy equal to the reference sum
    const double ec = ee + (static_cast<double>(nc - ne) / static_cast<double>(ns)) * es;
    const double b0 = embedding::binding_energy(ec, ee, nc, ne, ns, es);
    worst_null = std::max(worst_null, std::abs(b0));
    o.require(std::abs(b0) <= 1e-12 * std::max(1.0, std::abs(ec)), fmt::format("null case gives {:.3e}", b0));
    const double delta = rng.uniform(-3, 3);
    const double b1 = embedding::binding_energy(ec + delta, ee, nc, ne, ns, es);
    worst_lin = std::max(worst_lin, std::abs(b1 - b0 - delta));
    o.require(std::abs(b1 - b0 - delta) <= 1e-12 * std::max(1.0, std::abs(ec)),
              fmt::format("linearity off by {:.3e}", b1 - b0 - delta));
    // exact on representable inputs
    o.require(embedding::binding_energy(-10.0, -4.0, 10, 2, 8, -6.0) == 0.0, "integer null case not exact");
  }
  if (o.pass) o.detail = fmt::format("1000 draws, largest absolute null {:.1e}, linearity {:.1e} (tolerance 1e-12 * max(1, |E_complex|))", worst_null, worst_lin);
  return o;
}

// ---- 6 ----------------------------------------------------------------------

Outcome soc_aggregation() {
  Outcome o;
  Rng rng(6);
  int cases = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    spectro::ExcitedStateTable t;
    const double es1 = rng.uniform(1.0, 3.0);
    t.singlets = {{es1, 0.5, 0.0, 1239.84 / es1}};
    const auto n = rng.below(11);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double e = rng.below(8) == 0 ? es1 : rng.uniform(0.5, 4.0);  // some exactly degenerate
      t.triplets.push_back({e, rng.uniform(0.0, 6.0)});
    }
    t.gs_soc_t1 = rng.uniform(0.0, 2.0);
    t.normalize();
    // enumerate every triplet and assign it by energy
    double lo = 0, hi = 0, all = 0;
    bool degenerate = false;
    for (const auto& x : t.triplets) {
      const double e2 = x.soc_s1 * x.soc_s1;
      all += e2;
      if (x.energy_eV == es1) degenerate = true;
      (x.energy_eV <= es1 ? lo : hi) += e2;
    }
    o.require(spectro::soc_metric(t) == std::sqrt(lo), "SOC differs from enumeration");
    o.require(spectro::rsoc_metric(t) == std::sqrt(hi), "rSOC differs from enumeration");
    o.require(spectro::gssoc_metric(t) == *t.gs_soc_t1, "GS SOC differs");
    if (!degenerate) {
      const double s = spectro::soc_metric(t), r = spectro::rsoc_metric(t);
      o.require(std::abs(s * s + r * r - all) <= 1e-12 * std::max(1.0, all), "partition identity");
    }
    ++cases;
  }
  if (o.pass) o.detail = fmt::format("{} random tables (<= 10 triplets) exact", cases);
  return o;
}

// ---- 7 ----------------------------------------------------------------------

chem::Fingerprint with_bits(std::size_t nbits, std::initializer_list<std::size_t> bits) {
  chem::Fingerprint f(nbits, 0);
  for (auto b : bits) f.set(b);
  return f;
}

Outcome fingerprints() {
  Outcome o;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    chem::Fingerprint a(1024, 2), b(1024, 2);
    const double da = rng.uniform(0.01, 0.3), db = rng.uniform(0.01, 0.3);
    for (std::size_t k = 0; k < 1024; ++k) {
      if (rng.uniform() < da) a.set(k);
      if (rng.uniform() < db) b.set(k);
    }
    o.require(chem::tanimoto(a, a) == 1.0, "identity");
    o.require(chem::tanimoto(a, b) == chem::tanimoto(b, a), "symmetry");
    // brute-force count
    std::size_t na = 0, nb = 0, nc = 0;
    for (std::size_t k = 0; k < 1024; ++k) {
      na += a.test(k);
      nb += b.test(k);
      nc += a.test(k) && b.test(k);
    }
    const double s = na + nb - nc == 0 ? 1.0 : static_cast<double>(nc) / static_cast<double>(na + nb - nc);
    o.require(chem::tanimoto(a, b) == s, "tanimoto differs from bit counting");
  }
  // hand-counted: a=4, b=6, c=2 -> 2/8
  o.require(chem::tanimoto(with_bits(64, {0, 1, 2, 3}), with_bits(64, {2, 3, 10, 11, 12, 13})) == 0.25, "a/b/c fixture");
  o.require(chem::tanimoto(with_bits(64, {5}), with_bits(64, {5, 6, 7})) == 1.0 / 3.0, "a/b/c fixture 2");
  o.require(chem::tanimoto(with_bits(64, {1, 2}), with_bits(64, {3})) == 0.0, "disjoint fixture");

  const auto table = chem::load_smiles_table(SPESCREEN_TEST_DATA "/reference_emitters.tsv");
  std::map<std::string, chem::Fingerprint> fp;
  const chem::MolecularGraph* dbt = nullptr;
  for (const auto& e : table.entries) {
    fp[e.id] = chem::morgan_fingerprint(e.graph);
    if (e.id == "DBT") dbt = &e.graph;
  }
  o.require(dbt != nullptr && fp.count("terrylene") && fp.count("4127216") && fp.count("2000909"),
            "reference emitters missing");
  if (!o.pass) return o;
  const std::vector<const chem::MolecularGraph*> mols{dbt, &table.entries.back().graph, &table.entries[1].graph};
  for (int i = 0; i < 1000; ++i) {
    const auto& g = *mols[static_cast<std::size_t>(i) % mols.size()];
    std::vector<std::size_t> order(g.atom_count());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    o.require(chem::morgan_fingerprint(g.permuted(order)) == chem::morgan_fingerprint(g), "atom order changed the fingerprint");
  }
  const double terry = chem::tanimoto(fp["DBT"], fp["terrylene"]);
  const double t1 = chem::tanimoto(fp["DBT"], fp["4127216"]), t2 = chem::tanimoto(fp["DBT"], fp["2000909"]);
  const bool soft = std::abs(terry - 0.78) <= 0.10 && t1 > 0.75 && t2 > 0.75;
  o.advisory = fmt::format("soft target {}: T(DBT,terrylene)={:.4f} (0.78 +/- 0.10), T(DBT,4127216)={:.4f}, "
                           "T(DBT,2000909)={:.4f} (> 0.75)",
                           soft ? "met" : "MISSED", terry, t1, t2);
  if (o.pass) o.detail = "3000 random property cases, 1000 permutations, hand-counted fixtures exact";
  return o;
}

// ---- 8 ----------------------------------------------------------------------

double sig(double f) { return 1.0 / (1.0 + std::exp(-f)); }

// Dense Laplace classifier with explicit inverses, independent of the library.
struct DenseGPC {
  Eigen::MatrixXd x, kinv, kk;
  Eigen::VectorXd f, w;
  double amp, len;

  double k(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
    return amp * std::exp(-(a - b).squaredNorm() / (2 * len * len));
  }

  DenseGPC(const Eigen::MatrixXd& xx, const std::vector<int>& y, double a, double l) : x(xx), amp(a), len(l) {
    const auto n = x.rows();
    kk.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) kk(i, j) = k(x.row(i), x.row(j));
    kinv = kk.inverse();
    f = Eigen::VectorXd::Zero(n);
    w.resize(n);
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd g(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        g[i] = y[static_cast<std::size_t>(i)] - sig(f[i]);
        w[i] = sig(f[i]) * (1 - sig(f[i]));
      }
      g -= kinv * f;
      const Eigen::MatrixXd h = -Eigen::MatrixXd(w.asDiagonal()) - kinv;
      const Eigen::VectorXd step = h.fullPivLu().solve(g);
      f -= step;
      if (step.norm() < 1e-14) break;
    }
    for (Eigen::Index i = 0; i < n; ++i) w[i] = sig(f[i]) * (1 - sig(f[i]));
  }

  double predict(const Eigen::RowVectorXd& xs) const {
    const auto n = x.rows();
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks[i] = k(x.row(i), xs);
    const double mean = ks.dot(kinv * f);
    const Eigen::MatrixXd kw = kk + Eigen::MatrixXd(w.cwiseInverse().asDiagonal());
    const double var = amp - ks.dot(kw.inverse() * ks);
    return sig(mean / std::sqrt(1 + std::numbers::pi * var / 8));
  }
};

Outcome gpc_oracle() {
  Outcome o;
  const Eigen::MatrixXd x = (Eigen::MatrixXd(10, 2) << -1.2, 0.3, -0.8, -0.5, -1.5, -0.9, -0.3, 0.8, -0.6, 0.1,  //
                             0.9, 0.4, 1.3, -0.2, 0.2, -0.7, 1.1, 1.0, 0.5, 0.2)
                                .finished();
  const std::vector<int> y{0, 0, 0, 1, 0, 1, 1, 0, 1, 1};
  const auto model = ml::gpc_train(x, y);
  const DenseGPC ref(x, y, model.amp, model.len);
  Eigen::MatrixXd grid(21 * 21, 2);
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) grid.row(21 * i + j) << -2.0 + 0.2 * i, -2.0 + 0.2 * j;
  const Eigen::MatrixXd all = (Eigen::MatrixXd(grid.rows() + 10, 2) << grid, x).finished();
  const auto p = model.predict(all);
  double worst = 0;
  for (Eigen::Index r = 0; r < all.rows(); ++r) worst = std::max(worst, std::abs(p[r] - ref.predict(all.row(r))));
  o.require(worst < 1e-6, fmt::format("largest deviation from the dense oracle {:.2e}", worst));

  // two symmetric points, opposite labels
  const Eigen::MatrixXd x2 = (Eigen::MatrixXd(2, 2) << -1.0, 0.5, 1.0, 0.5).finished();
  const auto m2 = ml::gpc_train(x2, {0, 1});
  const double mid = m2.predict((Eigen::MatrixXd(1, 2) << 0.0, 0.5).finished())[0];
  o.require(std::abs(mid - 0.5) < 1e-6, fmt::format("p(midpoint) = {:.9f}", mid));
  if (o.pass)
    o.detail = fmt::format("amp={:.4g} len={:.4g}, {} points within {:.1e}; p(midpoint)-0.5 = {:.1e}", model.amp,
                           model.len, all.rows(), worst, mid - 0.5);
  return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome tsne_calibration() {
  Outcome o;
  Rng rng(9);
  Eigen::MatrixXd pts(500, 5);
  for (Eigen::Index i = 0; i < 500; ++i)
    for (int d = 0; d < 5; ++d) pts(i, d) = rng.normal() * (d + 1);
  const auto c = ml::calibrate(ml::euclidean_distances(pts), 30.0);
  // recompute each row's perplexity from the returned conditionals
  double worst = 0;
  for (Eigen::Index i = 0; i < 500; ++i) {
    double h = 0;
    for (Eigen::Index j = 0; j < 500; ++j)
      if (c.p(i, j) > 0) h -= c.p(i, j) * std::log(c.p(i, j));
    worst = std::max(worst, std::abs(std::exp(h) - 30.0));
  }
  o.require(worst < 1e-4, fmt::format("perplexity error {:.2e}", worst));

  Eigen::MatrixXd x(120, 6);
  for (Eigen::Index i = 0; i < 120; ++i)
    for (int d = 0; d < 6; ++d) x(i, d) = (i < 60 ? 0.0 : 8.0) + rng.normal();
  const auto dist = ml::euclidean_distances(x);
  ml::TSNEOptions opt;
  opt.perplexity = 30;
  opt.seed = 5;
  const auto m = ml::tsne(dist, opt);
  const Eigen::RowVector2d a = m.y.topRows(60).colwise().mean(), b = m.y.bottomRows(60).colwise().mean();
  double intra = 0;
  for (Eigen::Index i = 0; i < 120; ++i) intra += (m.y.row(i) - (i < 60 ? a : b)).norm();
  intra /= 120;
  const double ratio = (a - b).norm() / intra;
  o.require(ratio > 2.0, fmt::format("separation ratio {:.3f}", ratio));
  const auto again = ml::tsne(dist, opt);
  const auto serial = ml::tsne(dist, opt, Exec::Serial);
  o.require(again.y == m.y && serial.y == m.y, "same seed gave a different map");
  if (o.pass)
    o.detail = fmt::format("500 points, perplexity error {:.1e}; separation ratio {:.2f}; reruns identical", worst, ratio);
  return o;
}

// ---- 10 ---------------------------------------------------------------------

Outcome labeling_monotone() {
  Outcome o;
  Rng rng(10);
  int with = 0, without = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(60));
    std::vector<spectro::CandidateRecord> recs;
    for (int i = 0; i < n; ++i) {
      spectro::CandidateRecord r;
      r.id = std::to_string(i);
      r.fosc_em = rng.uniform(0, 1);
      r.lambda_abs_nm = rng.uniform(300, 700);
      r.s_vc = rng.uniform(0, 2);
      r.soc = rng.uniform(0, 5);
      recs.push_back(r);
    }
    ml::LabelOptions lo;
    lo.lambda_host_abs_nm = rng.uniform(350, 500);
    const auto a = ml::label_good(recs, lo);
    lo.include_soc = false;
    const auto b = ml::label_good(recs, lo);
    for (int i = 0; i < n; ++i) {
      o.require(!a[static_cast<std::size_t>(i)] || b[static_cast<std::size_t>(i)],
                fmt::format("set {}: record {} good only with SOC", rep, i));
      with += a[static_cast<std::size_t>(i)];
      without += b[static_cast<std::size_t>(i)];
    }
  }
  if (o.pass) o.detail = fmt::format("200 sets; {} good with SOC, {} without", with, without);
  return o;
}

// ---- 11 ---------------------------------------------------------------------

Outcome normal_mode_suite() {
  Outcome o;
  Rng rng(11);
  double worst = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const double m1 = rng.uniform(1, 200), m2 = rng.uniform(1, 200), r = rng.uniform(0.7, 2.5);
    const double k = rng.uniform(1, 100);
    AtomicStructure d({"H", "H"}, (Positions(2, 3) << 0, 0, 0, r, 0, 0).finished());
    d.masses = Eigen::Vector2d(m1, m2);
    // arbitrary orientation
    d.positions = d.positions * random_orthogonal(3, rng).transpose();
    const potential::HarmonicRepulsion pot({{0, 1, k, r}});
    const auto nm = vibronic::normal_modes(*pot.hessian(d), d.masses);
    const double mu = m1 * m2 / (m1 + m2) * kAMU;
    const double expect = std::sqrt(k * kEV / 1e-20 / mu) / (2 * std::numbers::pi * kC * 100);
    worst = std::max(worst, rel(nm.frequencies_cm1[5], expect));
    o.require(rel(nm.frequencies_cm1[5], expect) < 1e-6,
              fmt::format("dimer {:.8g} vs {:.8g} cm^-1", nm.frequencies_cm1[5], expect));
  }

  int molecules = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto mol = random_molecule(3 + static_cast<int>(rng.below(6)), rng);
    // skip accidental collinear draws
    const Positions c = mol.positions.rowwise() - mol.positions.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
    if (svd.singularValues()[1] < 0.1) continue;
    ++molecules;
    using potential::HarmonicRepulsion;
    // springs between every pair: a rigid network, so only translations and rotations are free
    const HarmonicRepulsion pot(HarmonicRepulsion::springs_from_geometry(mol, 30.0, 0.3, 100.0));
    const auto nm = vibronic::normal_modes(*pot.hessian(mol), mol.masses);
    int zeros = 0;
    for (Eigen::Index q = 0; q < nm.frequencies_cm1.size(); ++q) zeros += std::abs(nm.frequencies_cm1[q]) < 1.0;
    o.require(zeros == 6, fmt::format("{} near-zero modes for a {}-atom molecule", zeros, mol.size()));
    o.require(nm.frequencies_cm1[6] > 20.0, "lowest vibration too soft");

    // convention round trips
    const Eigen::VectorXd sq = vibronic::coordinate_masses(nm.masses).cwiseSqrt();
    auto ase = nm, orca = nm;
    ase.convention = vibronic::ModeConvention::InverseMassNormalized;
    orca.convention = vibronic::ModeConvention::MassWeightedThenNormalized;
    for (Eigen::Index q = 0; q < nm.modes.cols(); ++q) {
      const Eigen::VectorXd v = sq.cwiseInverse().cwiseProduct(nm.modes.col(q));
      ase.modes.col(q) = v;
      orca.modes.col(q) = v / v.norm();
    }
    for (const vibronic::NormalModeSet* raw : std::vector<const vibronic::NormalModeSet*>{&ase, &orca, &nm}) {
      const auto back = vibronic::reweight_external_modes(*raw);
      o.require((back.modes - nm.modes).cwiseAbs().maxCoeff() < 1e-12, "conversion does not recover the modes");
      o.require(vibronic::reweight_external_modes(back).modes == back.modes, "conversion is not idempotent");
    }
    const auto file = vibronic::modes_from_json(vibronic::modes_to_json(nm));
    o.require(file.modes == nm.modes && file.frequencies_cm1 == nm.frequencies_cm1 && file.masses == nm.masses,
              "mode file round trip is lossy");
  }
  if (o.pass)
    o.detail = fmt::format("dimer worst {:.1e}; {} free molecules with 6 rigid modes; round trips exact", worst, molecules);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "Stark coefficients", 1, stark},
      {2, "Huang-Rhys displaced oscillator", 1, huang_rhys_oracle},
      {3, "projection completeness", 30, projection_completeness},
      {4, "embedding contract", 120, embedding_contract},
      {5, "binding energy identities", 1, binding_identities},
      {6, "SOC aggregation", 1, soc_aggregation},
      {7, "fingerprint / Tanimoto", 10, fingerprints},
      {8, "GPC oracle equivalence", 5, gpc_oracle},
      {9, "t-SNE calibration", 60, tsne_calibration},
      {10, "labeling monotonicity", 5, labeling_monotone},
      {11, "normal modes", 10, normal_mode_suite},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format(" [over time budget {} s]", c.budget_s);
    }
    failed += !o.pass;
    fmt::print("{} {:2d} {:<34} {:7.3f}s  {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail);
    if (!o.advisory.empty()) fmt::print("     {:2d} advisory: {}\n", c.id, o.advisory);
  }
  fmt::print("{} of {} criteria passed\n", all.size() - static_cast<std::size_t>(failed), all.size());
  return failed == 0 ? 0 : 1;
}
