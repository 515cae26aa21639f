#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "spescreen/error.hpp"
#include "spescreen/potential/potential.hpp"
#include "spescreen/potential/relax.hpp"
#include "spescreen/rng.hpp"
#include "spescreen/structure/neighbors.hpp"

using namespace spescreen;
using namespace spescreen::potential;

namespace {

AtomicStructure atoms(std::vector<std::string> els, std::vector<Eigen::Vector3d> xyz) {
  Positions p(static_cast<Eigen::Index>(xyz.size()), 3);
  for (std::size_t i = 0; i < xyz.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = xyz[i].transpose();
  return AtomicStructure(std::move(els), std::move(p));
}

LJTable argon() {
  LJTable t;
  t.set_element("Ar", {0.0104, 3.40});
  return t;
}

// Central differences of the energy, the oracle for forces.
Positions numeric_forces(const Potential& pot, AtomicStructure s, double h = 1e-5) {
  Positions f(s.positions.rows(), 3);
  for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double x0 = s.positions(i, c);
      s.positions(i, c) = x0 + h;
      const double ep = pot.energy(s);
      s.positions(i, c) = x0 - h;
      const double em = pot.energy(s);
      s.positions(i, c) = x0;
      f(i, c) = -(ep - em) / (2 * h);
    }
  }
  return f;
}

double rel_err(const Positions& a, const Positions& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-3, b.cwiseAbs().maxCoeff());
}

AtomicStructure random_cluster(Rng& rng, std::size_t n, const std::string& el, double min_sep, double box) {
  std::vector<Eigen::Vector3d> xyz;
  while (xyz.size() < n) {
    Eigen::Vector3d p(rng.uniform(0, box), rng.uniform(0, box), rng.uniform(0, box));
    bool ok = true;
    for (const auto& q : xyz) ok &= (p - q).norm() > min_sep;
    if (ok) xyz.push_back(p);
  }
  return atoms(std::vector<std::string>(n, el), xyz);
}

}  // namespace

TEST_CASE("Lennard-Jones: minimum and force consistency") {
  const LennardJones lj(argon());
  const double rmin = std::pow(2.0, 1.0 / 6.0) * 3.40;
  const auto dimer = atoms({"Ar", "Ar"}, {{0, 0, 0}, {rmin, 0, 0}});
  CHECK(max_force(lj.forces(dimer)) < 1e-10);
  // shifted pair energy at the minimum: -eps - phi(rc)
  const double sr6 = std::pow(1 / 2.5, 6);
  CHECK(lj.energy(dimer) == doctest::Approx(-0.0104 - 4 * 0.0104 * (sr6 * sr6 - sr6)).epsilon(1e-12));

  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto s = random_cluster(rng, 10, "Ar", 3.0, 9.0);
    const auto f = lj.forces(s);
    CHECK(rel_err(f, numeric_forces(lj, s)) < 1e-6);
    CHECK(f.colwise().sum().norm() < 1e-12);
  }
  CHECK_THROWS_AS(LennardJones(LJTable::uff()).energy(atoms({"Xe"}, {{0, 0, 0}})), ValidationError);
}

TEST_CASE("Lennard-Jones: periodic images") {
  // simple cubic argon, a = 3.8 A: every atom has 6 nearest neighbors at a.
  auto unit = atoms({"Ar"}, {{0, 0, 0}});
  unit.cell = Eigen::Matrix3d::Identity() * 3.8;
  unit.pbc = {true, true, true};
  const auto big = make_supercell(unit, {3, 3, 3});
  const LennardJones lj(argon());
  // energy per atom is size independent, forces vanish by symmetry
  CHECK(lj.energy(big) / 27.0 == doctest::Approx(lj.energy(unit)).epsilon(1e-10));
  CHECK(max_force(lj.forces(big)) < 1e-12);

  Rng rng(8);
  auto shaken = big;
  for (Eigen::Index i = 0; i < shaken.positions.rows(); ++i) {
    shaken.positions.row(i) += Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal()) * 0.1;
  }
  CHECK(rel_err(lj.forces(shaken), numeric_forces(lj, shaken)) < 1e-6);
}

TEST_CASE("harmonic springs") {
  const HarmonicRepulsion bond({{0, 1, 10.0, 1.5}});
  const auto eq = atoms({"C", "C"}, {{0, 0, 0}, {1.5, 0, 0}});
  CHECK(bond.energy(eq) == 0.0);
  CHECK(max_force(bond.forces(eq)) == 0.0);
  const auto stretched = atoms({"C", "C"}, {{0, 0, 0}, {1.7, 0, 0}});
  CHECK(bond.energy(stretched) == doctest::Approx(0.5 * 10 * 0.04));
  CHECK(bond.forces(stretched)(1, 0) == doctest::Approx(-2.0));

  CHECK_THROWS_AS(HarmonicRepulsion({{0, 1, -1.0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(HarmonicRepulsion({{0, 0, 1.0, 1.0}}), ValidationError);
}

TEST_CASE("harmonic + repulsion: force and Hessian consistency") {
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    // two random "molecules" of 5 atoms, springs inside each
    auto s = random_cluster(rng, 10, "C", 2.2, 7.0);
    std::vector<Spring> springs;
    for (std::size_t m = 0; m < 2; ++m) {
      for (std::size_t a = 0; a < 4; ++a) {
        const auto i = 5 * m + a, j = i + 1;
        springs.push_back({i, j, rng.uniform(5, 40), rng.uniform(1.0, 2.0)});
      }
    }
    const HarmonicRepulsion pot(springs, HarmonicRepulsion::Repulsion{0.02, 2.0, 6.0});
    const auto f = pot.forces(s);
    CHECK(rel_err(f, numeric_forces(pot, s)) < 1e-6);
    CHECK(f.colwise().sum().norm() < 1e-10);

    const auto fd = hessian_finite_difference(s, pot, 1e-4, Exec::Serial);
    const auto an = *pot.hessian(s);
    CHECK((fd.hessian - an).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(fd.max_asymmetry < 1e-6);
    // translational invariance: each row sums to zero per Cartesian direction
    for (Eigen::Index r = 0; r < an.rows(); ++r) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0;
        for (Eigen::Index col = c; col < an.cols(); col += 3) sum += fd.hessian(r, col);
        REQUIRE(std::abs(sum) < 1e-6);
      }
    }
  }
}

TEST_CASE("hessian_finite_difference: analytic dimer and rigid-body modes") {
  const double k = 7.3;
  const HarmonicRepulsion bond({{0, 1, k, 1.2}});
  const auto s = atoms({"C", "C"}, {{0, 0, 0}, {1.2, 0, 0}});
  const auto hr = hessian_finite_difference(s, bond);
  CHECK(hr.hessian(0, 0) == doctest::Approx(k).epsilon(1e-6));
  CHECK(hr.hessian(0, 3) == doctest::Approx(-k).epsilon(1e-6));
  // transverse element is zero analytically; central differences leave
  // O(k h^2 / r0^2)
  CHECK(std::abs(hr.hessian(1, 1)) < k * 0.01 * 0.01 / (1.2 * 1.2));
  CHECK(std::abs(hessian_finite_difference(s, bond, 1e-4).hessian(1, 1)) < 1e-7);

  // nonlinear triangle: exactly 6 zero eigenvalues of 9
  const auto tri = atoms({"O", "H", "H"}, {{0, 0, 0}, {0.96, 0, 0}, {-0.24, 0.93, 0}});
  const HarmonicRepulsion water(HarmonicRepulsion::springs_from_geometry(tri, 30.0, 0.3, 2.0));
  CHECK(water.springs().size() == 3);
  for (double h : {0.01, 1e-4}) {
    const auto hw = hessian_finite_difference(tri, water, h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hw.hessian);
    // near zero: below the O(k h^2) truncation scale, far below the vibrations
    const double tol = std::max(1e-6, 30.0 * h * h * 10);
    int zeros = 0;
    for (int i = 0; i < 9; ++i) zeros += std::abs(es.eigenvalues()[i]) < tol ? 1 : 0;
    CAPTURE(h);
    CHECK(zeros == 6);
    CHECK(es.eigenvalues()[6] > 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> exact(*water.hessian(tri));
  CHECK(exact.eigenvalues().head(6).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hessian_finite_difference: parallel equals serial") {
  Rng rng(2);
  const auto s = random_cluster(rng, 20, "Ar", 3.0, 10.0);
  const LennardJones lj(argon());
  const auto a = hessian_finite_difference(s, lj, 0.01, Exec::Serial);
  const auto b = hessian_finite_difference(s, lj, 0.01, Exec::Parallel);
  CHECK(a.hessian == b.hessian);
  CHECK_THROWS_AS(hessian_finite_difference(s, lj, 0.0), ValidationError);
}

TEST_CASE("relax") {
  SUBCASE("already at a minimum") {
    const HarmonicRepulsion bond({{0, 1, 10.0, 1.5}});
    const auto r = relax(atoms({"C", "C"}, {{0, 0, 0}, {1.5, 0, 0}}), bond);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
  }
  SUBCASE("stretched dimer reaches the analytic length") {
    const HarmonicRepulsion bond({{0, 1, 10.0, 1.5}});
    RelaxOptions o;
    o.fmax = 1e-5;
    const auto r = relax(atoms({"C", "C"}, {{0, 0, 0}, {2.3, 0.4, -0.1}}), bond, o);
    CHECK(r.converged);
    CHECK(r.status == RelaxStatus::Converged);
    const double len = (r.structure.positions.row(1) - r.structure.positions.row(0)).norm();
    CHECK(std::abs(len - 1.5) < 1e-4);
  }
  SUBCASE("step budget") {
    const HarmonicRepulsion bond({{0, 1, 10.0, 1.5}});
    RelaxOptions o;
    o.max_steps = 1;
    const auto r = relax(atoms({"C", "C"}, {{0, 0, 0}, {4.0, 0, 0}}), bond, o);
    CHECK_FALSE(r.converged);
    CHECK(r.status == RelaxStatus::MaxSteps);
    CHECK(r.iterations == 1);
  }
  SUBCASE("LJ cluster: monotone energies and converged forces") {
    Rng rng(21);
    const LennardJones lj(argon());
    for (int t = 0; t < 5; ++t) {
      const auto s = random_cluster(rng, 13, "Ar", 3.3, 8.0);
      const auto r = relax(s, lj, {});
      CHECK(r.converged);
      CHECK(max_force(lj.forces(r.structure)) <= 0.01);
      for (std::size_t k = 1; k < r.energies.size(); ++k) REQUIRE(r.energies[k] <= r.energies[k - 1]);
      CHECK(r.energies.size() == static_cast<std::size_t>(r.iterations) + 1);
    }
  }
  SUBCASE("validation") {
    const HarmonicRepulsion bond({{0, 1, 10.0, 1.5}});
    RelaxOptions o;
    o.fmax = 0;
    CHECK_THROWS_AS(relax(atoms({"C", "C"}, {{0, 0, 0}, {1.5, 0, 0}}), bond, o), ValidationError);
  }
}

TEST_CASE("tabulated adapter round trip") {
  Positions f(2, 3);
  f << 0.1, 0.2, 0.3, -0.1, -0.2, -0.3;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(6, 6);
  const TabulatedPotential t(-3.5, f, h);
  const auto path = std::filesystem::temp_directory_path() / "spescreen_tab.json";
  t.save(path);
  const auto back = TabulatedPotential::load(path);
  const auto s = atoms({"C", "C"}, {{0, 0, 0}, {1, 0, 0}});
  CHECK(back.energy(s) == -3.5);
  CHECK(back.forces(s) == f);
  CHECK(*back.hessian(s) == h);
  CHECK_THROWS_AS(back.energy(atoms({"C"}, {{0, 0, 0}})), ValidationError);
  CHECK_THROWS_AS(TabulatedPotential::load("/nonexistent.json"), ValidationError);
}

TEST_CASE("build_potential: molecular LJ on the anthracene cell") {
  const auto unit = parse_xyz(std::filesystem::path(SPESCREEN_TEST_DATA) / "anthracene_unit.xyz");
  PotentialSpec spec;
  const auto pot = build_potential(spec, unit);
  const auto ev = pot->evaluate(unit);
  CHECK(std::isfinite(ev.energy));
  CHECK(ev.energy < 0.0);  // cohesive crystal, bonds at rest
  CHECK(ev.forces.colwise().sum().norm() < 1e-10);
  Rng rng(3);
  auto shaken = unit;
  for (Eigen::Index i = 0; i < shaken.positions.rows(); ++i) {
    shaken.positions.row(i) += Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal()) * 0.02;
  }
  CHECK(rel_err(pot->forces(shaken), numeric_forces(*pot, shaken)) < 1e-6);

  // wrapping atoms into the cell must not change the energy
  auto wrapped = unit;
  const Eigen::Matrix3d hinv = unit.cell->inverse();
  for (Eigen::Index i = 0; i < wrapped.positions.rows(); ++i) {
    Eigen::RowVector3d fr = wrapped.positions.row(i) * hinv;
    fr = fr.array() - fr.array().floor();
    wrapped.positions.row(i) = fr * *unit.cell;
  }
  const auto pot_wrapped = build_potential(spec, wrapped);
  CHECK(pot_wrapped->energy(wrapped) == doctest::Approx(ev.energy).epsilon(1e-9));
}
