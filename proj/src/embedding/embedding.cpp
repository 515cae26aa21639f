#include "spescreen/embedding/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "spescreen/error.hpp"
#include "spescreen/rng.hpp"

namespace spescreen::embedding {

void EmbeddingConfig::validate() const {
  if (!(cutoff > 0.0)) throw ValidationError("embedding cutoff must be positive");
  if (!(translation_scale >= 0.0)) throw ValidationError("translation scale must be non-negative");
  if (min_removed < 0 || min_removed > max_removed) throw ValidationError("need 0 <= min_removed <= max_removed");
  if (per_count < 1 || max_trials < 1) throw ValidationError("per_count and max_trials must be >= 1");
}

std::vector<std::size_t> EmbeddingTrial::emitter_atoms() const {
  std::vector<std::size_t> out;
  for (std::size_t i = emitter_offset; i < complex.size(); ++i) out.push_back(i);
  return out;
}

std::vector<std::size_t> overlapping_molecules(const Positions& host, const std::vector<std::size_t>& labels,
                                               const Positions& emitter, double cutoff, Exec exec) {
  if (labels.size() != static_cast<std::size_t>(host.rows())) throw ValidationError("one label per host atom required");
  const double c2 = cutoff * cutoff;
  const auto n = static_cast<std::ptrdiff_t>(host.rows());
  std::vector<char> hit(static_cast<std::size_t>(n), 0);
  auto test = [&](std::ptrdiff_t i) {
    const Eigen::RowVector3d p = host.row(i);
    for (Eigen::Index k = 0; k < emitter.rows(); ++k) {
      if ((emitter.row(k) - p).squaredNorm() < c2) {
        hit[static_cast<std::size_t>(i)] = 1;
        return;
      }
    }
  };
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) test(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) test(i);
  }
  std::vector<std::size_t> out;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (hit[static_cast<std::size_t>(i)]) out.push_back(labels[static_cast<std::size_t>(i)]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EmbeddingRun embed_emitter(const AtomicStructure& host, const AtomicStructure& emitter, const EmbeddingConfig& cfg,
                           Exec exec) {
  cfg.validate();
  if (!host.cell) throw ValidationError("host needs a cell");
  if (host.size() == 0 || emitter.size() == 0) throw ValidationError("host and emitter must be non-empty");
  const Eigen::Vector3d host_extent = host.bbox_max() - host.bbox_min();
  const Eigen::Vector3d em_extent = emitter.bbox_max() - emitter.bbox_min();
  if ((em_extent.array() >= host_extent.array()).any()) throw ValidationError("emitter is not smaller than the host");

  EmbeddingRun run;
  run.host_molecules = identify_molecules(host, cfg.molecules, exec);
  const auto& labels = run.host_molecules.labels;
  Eigen::Vector3d lengths;
  for (int a = 0; a < 3; ++a) lengths[a] = host.cell->row(a).norm();

  // initial placement: emitter COM on host COM
  const Eigen::Vector3d host_com = host.center_of_mass();
  const Eigen::Vector3d em_com = emitter.center_of_mass();
  const Positions start = emitter.positions.rowwise() + (host_com - em_com).transpose();
  Positions current = start;
  Eigen::Matrix3d net_rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d net_shift = Eigen::Vector3d::Zero();

  const int counts = cfg.max_removed - cfg.min_removed + 1;
  int full = 0;
  Rng rng(cfg.seed);
  for (int trial = 0; trial < cfg.max_trials && full < counts; ++trial) {
    ++run.trials;
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    while (axis.norm() < 1e-12) axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = rng.uniform(0.0, 360.0);
    Eigen::Vector3d shift;
    for (int a = 0; a < 3; ++a) shift[a] = cfg.translation_scale * lengths[a] * rng.uniform(-1.0, 1.0);

    if (!cfg.cumulative) {
      current = start;
      net_rot.setIdentity();
      net_shift.setZero();
    }
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle * std::numbers::pi / 180.0, axis).toRotationMatrix();
    // rotate about the (mass-weighted) emitter COM
    const Eigen::RowVector3d mcom = (current.transpose() * emitter.masses / emitter.masses.sum()).transpose();
    current = ((current.rowwise() - mcom) * rot.transpose()).rowwise() + mcom;
    current.rowwise() += shift.transpose();
    net_rot = rot * net_rot;
    net_shift += shift;

    const auto removed = overlapping_molecules(host.positions, labels, current, cfg.cutoff, exec);
    std::vector<char> drop(run.host_molecules.count, 0);
    for (auto m : removed) drop[m] = 1;
    std::vector<std::size_t> kept;
    kept.reserve(host.size());
    for (std::size_t i = 0; i < host.size(); ++i) {
      if (!drop[labels[i]]) kept.push_back(i);
    }
    if (kept.empty()) {
      ++run.rejected_containment;
      continue;
    }
    Eigen::Vector3d hmin = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hmax = -hmin;
    for (auto i : kept) {
      hmin = hmin.cwiseMin(host.positions.row(static_cast<Eigen::Index>(i)).transpose());
      hmax = hmax.cwiseMax(host.positions.row(static_cast<Eigen::Index>(i)).transpose());
    }
    const Eigen::Vector3d emin = current.colwise().minCoeff().transpose();
    const Eigen::Vector3d emax = current.colwise().maxCoeff().transpose();
    if (!((emin.array() > hmin.array()).all() && (emax.array() < hmax.array()).all())) {
      ++run.rejected_containment;
      continue;
    }
    const int nrem = static_cast<int>(removed.size());
    if (nrem < cfg.min_removed || nrem > cfg.max_removed) {
      ++run.rejected_count;
      continue;
    }
    if (run.histogram[nrem] >= cfg.per_count) {
      ++run.rejected_full;
      continue;
    }

    EmbeddingTrial t;
    t.index = static_cast<std::size_t>(trial);
    t.complex = host.subset(kept);
    t.emitter_offset = kept.size();
    AtomicStructure placed = emitter;
    placed.positions = current;
    t.complex.append(placed);
    t.kept_host_atoms = std::move(kept);
    t.removed_molecules = removed;
    t.axis = axis;
    t.angle_deg = angle;
    t.shift = shift;
    t.rotation = net_rot;
    t.displacement = (current.transpose() * emitter.masses / emitter.masses.sum()) - host_com;
    run.accepted.push_back(std::move(t));
    if (++run.histogram[nrem] == cfg.per_count) ++full;
  }
  return run;
}

double binding_energy(double e_complex, double e_emitter, std::size_t n_complex, std::size_t n_emitter,
                      std::size_t n_supercell, double e_supercell) {
  if (n_supercell == 0) throw ValidationError("supercell atom count must be positive");
  if (n_complex < n_emitter) throw ValidationError("complex has fewer atoms than the emitter");
  const double frac = static_cast<double>(n_complex - n_emitter) / static_cast<double>(n_supercell);
  return e_complex - e_emitter - frac * e_supercell;
}

std::size_t argmin_finite(std::span<const double> values) {
  std::size_t best = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    if (best == values.size() || values[i] < values[best]) best = i;
  }
  if (best == values.size()) throw NumericalError("no finite binding energy");
  return best;
}

StabilityResult select_most_stable(const std::vector<EmbeddingTrial>& trials, const AtomicStructure& host,
                                   const AtomicStructure& emitter, const PotentialFactory& factory,
                                   const potential::RelaxOptions& relax_opts) {
  if (trials.empty()) throw ValidationError("no accepted trials to select from");
  StabilityResult out;
  const auto em = potential::relax(emitter, *factory(emitter), relax_opts);
  const auto sc = potential::relax(host, *factory(host), relax_opts);
  if (em.status == potential::RelaxStatus::Diverged || sc.status == potential::RelaxStatus::Diverged) {
    throw NumericalError("reference relaxation diverged");
  }
  out.emitter_energy = em.energy;
  out.supercell_energy = sc.energy;

  const auto n = static_cast<std::ptrdiff_t>(trials.size());
  out.binding_energies.assign(trials.size(), std::numeric_limits<double>::quiet_NaN());
  out.status.assign(trials.size(), potential::RelaxStatus::Diverged);
  std::vector<AtomicStructure> relaxed(trials.size());
  std::vector<PotentialFactory::result_type> pots(trials.size());
  // potentials are built serially: the factory need not be thread safe
  for (std::ptrdiff_t k = 0; k < n; ++k) pots[static_cast<std::size_t>(k)] = factory(trials[static_cast<std::size_t>(k)].complex);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto u = static_cast<std::size_t>(k);
    try {
      auto r = potential::relax(trials[u].complex, *pots[u], relax_opts);
      out.status[u] = r.status;
      if (r.status != potential::RelaxStatus::Diverged) {
        out.binding_energies[u] =
            binding_energy(r.energy, em.energy, trials[u].complex.size(), emitter.size(), host.size(), sc.energy);
      }
      relaxed[u] = std::move(r.structure);
    } catch (const std::exception&) {
      out.status[u] = potential::RelaxStatus::Diverged;
    }
  }
  out.best = argmin_finite(out.binding_energies);
  out.best_binding_energy = out.binding_energies[out.best];
  out.relaxed_best = std::move(relaxed[out.best]);
  return out;
}

namespace {

nlohmann::json vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

}  // namespace

std::string manifest_json(const EmbeddingRun& run, const EmbeddingConfig& cfg, const StabilityResult* stability) {
  nlohmann::ordered_json j;
  j["config"] = {{"cutoff", cfg.cutoff},       {"translation_scale", cfg.translation_scale},
                 {"min_removed", cfg.min_removed}, {"max_removed", cfg.max_removed},
                 {"per_count", cfg.per_count}, {"max_trials", cfg.max_trials},
                 {"seed", cfg.seed},           {"cumulative", cfg.cumulative}};
  j["trials_made"] = run.trials;
  j["host_molecules"] = run.host_molecules.count;
  j["rejected"] = {{"containment", run.rejected_containment},
                   {"removal_count", run.rejected_count},
                   {"quota_full", run.rejected_full}};
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (auto [k, v] : run.histogram) hist[std::to_string(k)] = v;
  j["histogram"] = hist;
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < run.accepted.size(); ++k) {
    const auto& t = run.accepted[k];
    nlohmann::ordered_json e;
    e["file"] = fmt::format("trial_{:04d}.xyz", k);
    e["trial"] = t.index;
    e["removed"] = t.removed();
    e["removed_molecules"] = t.removed_molecules;
    e["n_atoms"] = t.complex.size();
    e["emitter_offset"] = t.emitter_offset;
    e["axis"] = vec(t.axis);
    e["angle_deg"] = t.angle_deg;
    e["shift"] = vec(t.shift);
    e["displacement"] = vec(t.displacement);
    if (stability) {
      const double be = stability->binding_energies[k];
      e["binding_energy_eV"] = std::isfinite(be) ? nlohmann::ordered_json(be) : nlohmann::ordered_json(nullptr);
      e["relax_status"] = potential::to_string(stability->status[k]);
    }
    arr.push_back(e);
  }
  j["accepted"] = arr;
  if (stability) {
    j["best"] = {{"index", stability->best},
                 {"file", fmt::format("trial_{:04d}.xyz", stability->best)},
                 {"binding_energy_eV", stability->best_binding_energy},
                 {"emitter_energy_eV", stability->emitter_energy},
                 {"supercell_energy_eV", stability->supercell_energy}};
  }
  return j.dump(2) + "\n";
}

void write_embedding_outputs(const std::filesystem::path& dir, const EmbeddingRun& run, const EmbeddingConfig& cfg,
                             const StabilityResult* stability) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < run.accepted.size(); ++k) {
    const auto& t = run.accepted[k];
    write_xyz(t.complex, dir / fmt::format("trial_{:04d}.xyz", k),
              fmt::format("trial={} removed={} emitter_offset={}", t.index, t.removed(), t.emitter_offset));
  }
  if (stability) write_xyz(stability->relaxed_best, dir / "best_relaxed.xyz", "relaxed=T");
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ValidationError("cannot write manifest in '" + dir.string() + "'");
  out << manifest_json(run, cfg, stability);
}

}  // namespace spescreen::embedding
