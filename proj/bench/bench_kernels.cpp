// Serial reference vs OpenMP for every parallel kernel.
// Argument 0 = Exec::Serial, 1 = Exec::Parallel.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "spescreen/chem/fingerprint.hpp"
#include "spescreen/chem/similarity.hpp"
#include "spescreen/embedding/embedding.hpp"
#include "spescreen/ml/gpc.hpp"
#include "spescreen/ml/tsne.hpp"
#include "spescreen/potential/potential.hpp"
#include "spescreen/potential/relax.hpp"
#include "spescreen/rng.hpp"
#include "spescreen/structure/neighbors.hpp"
#include "spescreen/vibronic/coupling.hpp"

using namespace spescreen;

namespace {

Exec mode(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

std::vector<chem::Fingerprint> random_fps(std::size_t n, Rng& rng) {
  std::vector<chem::Fingerprint> out;
  for (std::size_t i = 0; i < n; ++i) {
    chem::Fingerprint f(1024, 2);
    for (std::size_t b = 0; b < 1024; ++b)
      if (rng.uniform() < 0.1) f.set(b);
    out.push_back(std::move(f));
  }
  return out;
}

AtomicStructure dimer_lattice(int n, double a) {
  std::vector<std::string> el;
  Positions p(2 * n * n * n, 3);
  Eigen::Index k = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        p.row(k++) << a * x, a * y, a * z;
        p.row(k++) << a * x + 0.74, a * y, a * z;
        el.insert(el.end(), {"H", "H"});
      }
  AtomicStructure s(el, p);
  s.cell = Eigen::Matrix3d::Identity() * (a * n);
  s.pbc = {true, true, true};
  return s;
}

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

vibronic::NormalModeSet random_modes(Eigen::Index atoms, Rng& rng) {
  vibronic::NormalModeSet m;
  m.masses = Eigen::VectorXd::Constant(atoms, 12.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(3 * atoms, 3 * atoms, rng));
  m.modes = qr.householderQ() * Eigen::MatrixXd::Identity(3 * atoms, 3 * atoms);
  m.frequencies_cm1 = Eigen::VectorXd::LinSpaced(3 * atoms, 50, 3000);
  return m;
}

}  // namespace

static void BM_tanimoto_batch(benchmark::State& st) {
  Rng rng(1);
  const auto fps = random_fps(20000, rng);
  std::vector<chem::IdentifiedFingerprint> db;
  for (std::size_t i = 0; i < fps.size(); ++i) db.push_back({std::to_string(i), fps[i]});
  for (auto _ : st) benchmark::DoNotOptimize(chem::tanimoto_batch(fps[0], db, mode(st)));
}
BENCHMARK(BM_tanimoto_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_jaccard_distances(benchmark::State& st) {
  Rng rng(2);
  const auto fps = random_fps(800, rng);
  for (auto _ : st) benchmark::DoNotOptimize(ml::jaccard_distances(fps, mode(st)));
}
BENCHMARK(BM_jaccard_distances)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_neighbor_list(benchmark::State& st) {
  const auto s = dimer_lattice(12, 3.2);
  const auto radii = natural_cutoffs(s, {}, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(neighbor_list(s, radii, mode(st)));
}
BENCHMARK(BM_neighbor_list)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_pair_images(benchmark::State& st) {
  const auto s = dimer_lattice(8, 3.2);
  for (auto _ : st) benchmark::DoNotOptimize(pair_images(s, 7.0, mode(st)));
}
BENCHMARK(BM_pair_images)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_fd_hessian(benchmark::State& st) {
  const auto s = dimer_lattice(3, 3.2);
  auto t = potential::LJTable::uff();
  const potential::LennardJones lj(t, 2.5);
  for (auto _ : st) benchmark::DoNotOptimize(potential::hessian_finite_difference(s, lj, 0.01, mode(st)));
}
BENCHMARK(BM_fd_hessian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_mode_overlaps(benchmark::State& st) {
  Rng rng(3);
  const auto iso = random_modes(40, rng), emb = random_modes(200, rng);
  std::vector<std::size_t> map;
  for (std::size_t i = 0; i < 40; ++i) map.push_back(160 + i);
  for (auto _ : st) benchmark::DoNotOptimize(vibronic::mode_overlaps(iso, emb, map, mode(st)));
}
BENCHMARK(BM_mode_overlaps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_calibrate(benchmark::State& st) {
  Rng rng(4);
  const auto d = ml::euclidean_distances(gaussian(1000, 10, rng));
  for (auto _ : st) benchmark::DoNotOptimize(ml::calibrate(d, 30.0, mode(st)));
}
BENCHMARK(BM_calibrate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_tsne_gradient(benchmark::State& st) {
  Rng rng(5);
  const auto c = ml::calibrate(ml::euclidean_distances(gaussian(1500, 10, rng)), 30.0);
  const Eigen::MatrixXd p = (c.p + c.p.transpose()) / (2.0 * 1500);
  const Eigen::MatrixXd y = gaussian(1500, 2, rng);
  for (auto _ : st) benchmark::DoNotOptimize(ml::tsne_gradient(p, y, mode(st)));
}
BENCHMARK(BM_tsne_gradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_rbf_kernel(benchmark::State& st) {
  Rng rng(6);
  const auto a = gaussian(2500, 2, rng), b = gaussian(300, 2, rng);
  for (auto _ : st) benchmark::DoNotOptimize(ml::rbf_kernel(a, b, 1.5, 0.8, mode(st)));
}
BENCHMARK(BM_rbf_kernel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_overlapping_molecules(benchmark::State& st) {
  const auto s = dimer_lattice(14, 3.2);
  std::vector<std::size_t> labels(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) labels[i] = i / 2;
  Rng rng(7);
  const Positions em = gaussian(40, 3, rng).array() * 3.0 + 20.0;
  for (auto _ : st) benchmark::DoNotOptimize(embedding::overlapping_molecules(s.positions, labels, em, 1.0, mode(st)));
}
BENCHMARK(BM_overlapping_molecules)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
