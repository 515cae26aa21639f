#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "spescreen/embedding/embedding.hpp"
#include "spescreen/error.hpp"
#include "spescreen/potential/potential.hpp"
#include "spescreen/rng.hpp"
#include "spescreen/structure/atomic_structure.hpp"

using namespace spescreen;
using namespace spescreen::embedding;

namespace {

AtomicStructure anthracene_unit() { return parse_xyz(SPESCREEN_TEST_DATA "/anthracene_unit.xyz"); }

// first molecule of the unit cell, as a free emitter
AtomicStructure anthracene_molecule() {
  const auto unit = anthracene_unit();
  const auto mols = identify_molecules(unit);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < unit.size(); ++i)
    if (mols.labels[i] == mols.labels[0]) keep.push_back(i);
  auto m = unit.subset(keep);
  m.cell.reset();
  m.pbc = {false, false, false};
  return m;
}

// simple cubic lattice of H2 dimers
AtomicStructure h2_lattice(int n, double a) {
  std::vector<std::string> el;
  Positions p(2 * n * n * n, 3);
  Eigen::Index k = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        const Eigen::RowVector3d c(a * x, a * y, a * z);
        p.row(k++) = c;
        p.row(k++) = c + Eigen::RowVector3d(0.74, 0, 0);
        el.insert(el.end(), {"H", "H"});
      }
  AtomicStructure s(el, p);
  s.cell = Eigen::Matrix3d::Identity() * (a * n);
  s.pbc = {true, true, true};
  return s;
}

double min_dist(const Positions& a, const Positions& b) {
  double m = INFINITY;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) m = std::min(m, (a.row(i) - b.row(j)).norm());
  return m;
}

// Independent check of one accepted structure against the rules.
void check_trial(const EmbeddingTrial& t, const AtomicStructure& host, const AtomicStructure& emitter,
                 const MoleculeLabels& mols, const EmbeddingConfig& cfg) {
  const std::size_t nh = t.kept_host_atoms.size();
  REQUIRE(t.emitter_offset == nh);
  REQUIRE(t.complex.size() == nh + emitter.size());
  CHECK(t.removed() >= cfg.min_removed);
  CHECK(t.removed() <= cfg.max_removed);

  const std::set<std::size_t> removed(t.removed_molecules.begin(), t.removed_molecules.end());
  CHECK(removed.size() == t.removed_molecules.size());
  // whole molecules only: kept atoms are exactly the atoms of non-removed molecules
  std::vector<std::size_t> expect;
  for (std::size_t i = 0; i < host.size(); ++i)
    if (!removed.count(mols.labels[i])) expect.push_back(i);
  CHECK(expect == t.kept_host_atoms);

  Positions kept(nh, 3);
  for (std::size_t k = 0; k < nh; ++k) {
    kept.row(static_cast<Eigen::Index>(k)) = host.positions.row(static_cast<Eigen::Index>(t.kept_host_atoms[k]));
    CHECK(t.complex.elements[k] == host.elements[t.kept_host_atoms[k]]);
  }
  CHECK((t.complex.positions.topRows(static_cast<Eigen::Index>(nh)) - kept).cwiseAbs().maxCoeff() == 0.0);
  const Positions em = t.complex.positions.bottomRows(static_cast<Eigen::Index>(emitter.size()));

  // no surviving host atom closer than the cutoff
  CHECK(min_dist(kept, em) >= cfg.cutoff);
  // every removed molecule had at least one atom within the cutoff
  for (auto m : removed) {
    double d = INFINITY;
    for (std::size_t i = 0; i < host.size(); ++i)
      if (mols.labels[i] == m) d = std::min(d, min_dist(host.positions.row(static_cast<Eigen::Index>(i)), em));
    CHECK(d < cfg.cutoff);
  }
  // containment in the remaining host's bounding box
  for (int a = 0; a < 3; ++a) {
    CHECK(em.col(a).minCoeff() > kept.col(a).minCoeff());
    CHECK(em.col(a).maxCoeff() < kept.col(a).maxCoeff());
  }
  // emitter moved rigidly
  for (Eigen::Index i = 0; i < em.rows(); ++i)
    for (Eigen::Index j = i + 1; j < em.rows(); ++j)
      CHECK(std::abs((em.row(i) - em.row(j)).norm() - (emitter.positions.row(i) - emitter.positions.row(j)).norm()) <
            1e-9);
  // recorded net rotation reproduces the placement about the COM
  const Eigen::RowVector3d c0 = emitter.center_of_mass().transpose();
  const Eigen::RowVector3d c1 = (em.transpose() * emitter.masses / emitter.masses.sum()).transpose();
  const Positions rebuilt = ((emitter.positions.rowwise() - c0) * t.rotation.transpose()).rowwise() + c1;
  CHECK((rebuilt - em).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((c1.transpose() - host.center_of_mass() - t.displacement).norm() < 1e-9);
}

}  // namespace

TEST_CASE("overlapping molecules") {
  const auto host = h2_lattice(3, 3.0);
  const auto mols = identify_molecules(host);
  REQUIRE(mols.count == 27);
  // a point sitting on atom 7 picks up its whole molecule only
  Positions e(1, 3);
  e.row(0) = host.positions.row(7);
  auto hit = overlapping_molecules(host.positions, mols.labels, e, 1.0);
  REQUIRE(hit.size() == 1);
  CHECK(hit[0] == mols.labels[7]);
  // far away: nothing
  e.row(0) << 100, 100, 100;
  CHECK(overlapping_molecules(host.positions, mols.labels, e, 1.0).empty());
  // strict inequality at exactly the cutoff
  e.row(0) = host.positions.row(0) + Eigen::RowVector3d(0, 0, 1.0);
  CHECK(overlapping_molecules(host.positions, mols.labels, e, 1.0).empty());

  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Positions em(5, 3);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (int a = 0; a < 3; ++a) em(i, a) = rng.uniform(-1.0, 8.0);
    const double cut = rng.uniform(0.5, 2.5);
    auto s = overlapping_molecules(host.positions, mols.labels, em, cut, Exec::Serial);
    auto p = overlapping_molecules(host.positions, mols.labels, em, cut, Exec::Parallel);
    CHECK(s == p);
    std::set<std::size_t> brute;
    for (std::size_t i = 0; i < host.size(); ++i)
      for (Eigen::Index k = 0; k < 5; ++k)
        if ((host.positions.row(static_cast<Eigen::Index>(i)) - em.row(k)).norm() < cut) brute.insert(mols.labels[i]);
    CHECK(std::vector<std::size_t>(brute.begin(), brute.end()) == s);
  }
  CHECK_THROWS_AS(overlapping_molecules(host.positions, {0, 1}, e, 1.0), ValidationError);
}

TEST_CASE("embedding anthracene in its own crystal") {
  const auto host = make_supercell(anthracene_unit(), {3, 3, 3});
  const auto emitter = anthracene_molecule();
  REQUIRE(emitter.size() == 24);
  EmbeddingConfig cfg;
  cfg.seed = 11;
  cfg.per_count = 3;
  cfg.max_trials = 3000;
  const auto run = embed_emitter(host, emitter, cfg);
  CHECK(run.host_molecules.count == 54);
  CHECK(run.trials <= 3000);
  CHECK(run.trials == run.accepted.size() + run.rejected_containment + run.rejected_count + run.rejected_full);
  REQUIRE(!run.accepted.empty());
  std::map<int, int> hist;
  std::size_t last = 0;
  for (std::size_t k = 0; k < run.accepted.size(); ++k) {
    const auto& t = run.accepted[k];
    if (k) CHECK(t.index > last);
    last = t.index;
    ++hist[t.removed()];
    check_trial(t, host, emitter, run.host_molecules, cfg);
  }
  CHECK(hist == run.histogram);
  for (auto [c, n] : hist) CHECK(n <= cfg.per_count);
  // stopping rule: quotas all met or the trial cap hit
  bool all_full = true;
  for (int c = cfg.min_removed; c <= cfg.max_removed; ++c) all_full &= hist[c] == cfg.per_count;
  CHECK((all_full || run.trials == static_cast<std::size_t>(cfg.max_trials)));
  if (all_full) CHECK(run.accepted.back().index + 1 == run.trials);

  SUBCASE("deterministic, serial equals parallel") {
    const auto again = embed_emitter(host, emitter, cfg, Exec::Serial);
    CHECK(manifest_json(again, cfg) == manifest_json(run, cfg));
    cfg.seed = 12;
    CHECK(manifest_json(embed_emitter(host, emitter, cfg), cfg) != manifest_json(run, cfg));
  }
}

TEST_CASE("fresh placements stay within one step of the host COM") {
  const auto host = make_supercell(anthracene_unit(), {3, 3, 3});
  const auto emitter = anthracene_molecule();
  EmbeddingConfig cfg;
  cfg.cumulative = false;
  cfg.seed = 5;
  cfg.per_count = 2;
  cfg.max_trials = 500;
  const auto run = embed_emitter(host, emitter, cfg);
  Eigen::Vector3d lim;
  for (int a = 0; a < 3; ++a) lim[a] = cfg.translation_scale * host.cell->row(a).norm();
  for (const auto& t : run.accepted) {
    CHECK((t.displacement.cwiseAbs().array() <= lim.array() + 1e-9).all());
    CHECK((t.displacement - t.shift).norm() < 1e-9);
    check_trial(t, host, emitter, run.host_molecules, cfg);
  }
}

TEST_CASE("embedding input validation") {
  const auto host = h2_lattice(3, 3.0);
  const auto emitter = anthracene_molecule();
  EmbeddingConfig cfg;
  CHECK_THROWS_AS(embed_emitter(host, emitter, cfg), ValidationError);  // emitter larger than host
  AtomicStructure small({"H"}, Positions::Zero(1, 3));
  auto nocell = host;
  nocell.cell.reset();
  CHECK_THROWS_AS(embed_emitter(nocell, small, cfg), ValidationError);
  cfg.min_removed = 4;
  cfg.max_removed = 2;
  CHECK_THROWS_AS(embed_emitter(host, small, cfg), ValidationError);
  cfg = {};
  cfg.cutoff = 0;
  CHECK_THROWS_AS(embed_emitter(host, small, cfg), ValidationError);
}

TEST_CASE("binding energy arithmetic") {
  // -10 - (-2) - (120 - 20)/200 * (-16) = -8 + 8 = 0
  CHECK(binding_energy(-10, -2, 120, 20, 200, -16) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(binding_energy(-10, -2, 20, 20, 200, -16) == doctest::Approx(-8.0));
  // linear in each energy
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const double ec = rng.uniform(-100, 0), ee = rng.uniform(-10, 0), es = rng.uniform(-200, 0);
    const double d = rng.uniform(-1, 1);
    const double b0 = binding_energy(ec, ee, 150, 30, 200, es);
    CHECK(binding_energy(ec + d, ee, 150, 30, 200, es) - b0 == doctest::Approx(d));
    CHECK(binding_energy(ec, ee + d, 150, 30, 200, es) - b0 == doctest::Approx(-d));
    CHECK(binding_energy(ec, ee, 150, 30, 200, es + d) - b0 == doctest::Approx(-0.6 * d));
  }
  CHECK_THROWS_AS(binding_energy(0, 0, 10, 20, 100, 0), ValidationError);
  CHECK_THROWS_AS(binding_energy(0, 0, 10, 2, 0, 0), ValidationError);
}

TEST_CASE("argmin over binding energies") {
  const std::vector<double> two{-0.5, -0.6};
  CHECK(argmin_finite(two) == 1);
  const std::vector<double> ties{1.0, -2.0, -2.0, NAN};
  CHECK(argmin_finite(ties) == 1);
  const std::vector<double> nan_first{NAN, 3.0, 2.0};
  CHECK(argmin_finite(nan_first) == 2);
  const std::vector<double> none{NAN, INFINITY};
  CHECK_THROWS_AS(argmin_finite(none), NumericalError);
  // permutation invariance of the selected value
  Rng rng(9);
  std::vector<double> v(30);
  for (auto& x : v) x = rng.uniform(-5, 5);
  const double best = v[argmin_finite(v)];
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[rng.below(i + 1)]);
    CHECK(v[argmin_finite(v)] == best);
  }
}

TEST_CASE("most stable complex after relaxation") {
  const auto host = h2_lattice(4, 3.2);
  AtomicStructure emitter({"C", "O"}, (Positions(2, 3) << 0, 0, 0, 1.13, 0, 0).finished());
  EmbeddingConfig cfg;
  cfg.cutoff = 2.0;
  cfg.min_removed = 1;
  cfg.max_removed = 2;
  cfg.per_count = 2;
  cfg.max_trials = 2000;
  cfg.seed = 4;
  const auto run = embed_emitter(host, emitter, cfg);
  REQUIRE(run.accepted.size() >= 2);

  potential::PotentialSpec spec;
  const PotentialFactory factory = [&](const AtomicStructure& s) { return potential::build_potential(spec, s); };
  potential::RelaxOptions ro;
  ro.fmax = 0.01;
  ro.max_steps = 5000;  // the H2 lattice is soft; one complex needs ~1000 steps
  const auto res = select_most_stable(run.accepted, host, emitter, factory, ro);
  REQUIRE(res.binding_energies.size() == run.accepted.size());
  CHECK(res.best == argmin_finite(res.binding_energies));
  CHECK(res.best_binding_energy == res.binding_energies[res.best]);
  for (auto st : res.status) CHECK(st == potential::RelaxStatus::Converged);

  // recompute the chosen value from scratch
  const auto em = potential::relax(emitter, *factory(emitter), ro);
  const auto sc = potential::relax(host, *factory(host), ro);
  const auto& t = run.accepted[res.best];
  const auto cx = potential::relax(t.complex, *factory(t.complex), ro);
  CHECK(res.emitter_energy == doctest::Approx(em.energy));
  CHECK(res.supercell_energy == doctest::Approx(sc.energy));
  CHECK(res.best_binding_energy ==
        doctest::Approx(cx.energy - em.energy - double(t.complex.size() - 2) / double(host.size()) * sc.energy));
  CHECK(res.relaxed_best.size() == t.complex.size());

  const auto manifest = manifest_json(run, cfg, &res);
  CHECK(manifest.find("binding_energy_eV") != std::string::npos);
  CHECK(manifest == manifest_json(run, cfg, &res));
}
