#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/tokenizer.hpp>
#include <fmt/format.h>

#include "spescreen/chem/fingerprint.hpp"
#include "spescreen/chem/similarity.hpp"
#include "spescreen/chem/smiles.hpp"
#include "spescreen/chem/smiles_table.hpp"
#include "spescreen/cli/pipeline.hpp"
#include "spescreen/embedding/embedding.hpp"
#include "spescreen/error.hpp"
#include "spescreen/ml/features.hpp"
#include "spescreen/ml/gpc.hpp"
#include "spescreen/ml/tsne.hpp"
#include "spescreen/potential/potential.hpp"
#include "spescreen/potential/relax.hpp"
#include "spescreen/spectro/spectro.hpp"
#include "spescreen/structure/atomic_structure.hpp"
#include "spescreen/vibronic/coupling.hpp"
#include "spescreen/vibronic/modes.hpp"

namespace spescreen::cli {
namespace {

using json = nlohmann::ordered_json;

std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_file(const fs::path& p, const std::string& flag) {
  require(!p.empty(), flag + " is required");
  require(fs::is_regular_file(p), flag + ": no such file '" + p.string() + "'");
}

std::vector<chem::IdentifiedFingerprint> fingerprints(const chem::SmilesTable& t, int radius, int nbits) {
  std::vector<chem::IdentifiedFingerprint> out(t.entries.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    out[i] = {t.entries[i].id,
              chem::morgan_fingerprint(t.entries[i].graph, radius, static_cast<std::size_t>(nbits))};
  }
  return out;
}

json skipped_json(const chem::SmilesTable& t) {
  json a = json::array();
  for (const auto& s : t.skipped) a.push_back({{"line", s.line}, {"reason", s.reason}});
  return a;
}

void check_fp_params(int nbits, int radius) {
  require(nbits >= 64 && nbits % 64 == 0, "--nbits must be a positive multiple of 64");
  require(radius >= 0 && radius <= 6, "--radius must be in [0, 6]");
}

potential::PotentialSpec potential_spec(const std::string& kind) {
  potential::PotentialSpec s;
  if (kind == "lj") {
    s.kind = potential::PotentialKind::LennardJones;
  } else if (kind == "harmonic") {
    s.kind = potential::PotentialKind::HarmonicRepulsion;
  } else if (kind == "tabulated") {
    s.kind = potential::PotentialKind::Tabulated;
  } else {
    throw ValidationError("unknown potential '" + kind + "' (lj, harmonic, tabulated)");
  }
  return s;
}

std::vector<spectro::CandidateRecord> records_or_throw(const fs::path& p) {
  require_file(p, "--records");
  auto r = spectro::load_records(p);
  require(!r.empty(), "no candidate records in '" + p.string() + "'");
  return r;
}

// PC scores, labels and the GPC surface shared by classify and report.
struct Classification {
  std::vector<bool> good;
  ml::PCAResult pca;
  std::optional<ml::GPCModel> model;
  Eigen::VectorXd p;      // at the records
  Eigen::MatrixXd grid;   // rows: pc1, pc2, p_good
  std::vector<std::string> warnings;
};

Classification classify(const std::vector<spectro::CandidateRecord>& recs, double lambda_host, bool soc, int grid) {
  require(grid >= 2 && grid <= 1000, "--grid must be in [2, 1000]");
  Classification c;
  c.good = ml::label_good(recs, {lambda_host, soc});
  const auto x = ml::feature_matrix(recs);
  c.pca = ml::pca(x, 2);
  for (int d : c.pca.scaling.dropped) {
    c.warnings.push_back("constant feature dropped: " + ml::feature_names()[static_cast<std::size_t>(d)]);
  }
  std::vector<int> y(recs.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = c.good[i] ? 1 : 0;
  const bool both = std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
  if (!both) {
    c.warnings.push_back("all records share one label; no classifier trained");
    return c;
  }
  c.model = ml::gpc_train(c.pca.scores, y);
  c.p = c.model->predict(c.pca.scores);
  const auto& s = c.pca.scores;
  Eigen::Vector2d lo = s.colwise().minCoeff(), hi = s.colwise().maxCoeff();
  const Eigen::Vector2d pad = ((hi - lo) * 0.1).cwiseMax(0.5);
  lo -= pad;
  hi += pad;
  Eigen::MatrixXd pts(grid * grid, 2);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      pts.row(i * grid + j) << lo[0] + (hi[0] - lo[0]) * i / (grid - 1), lo[1] + (hi[1] - lo[1]) * j / (grid - 1);
    }
  c.grid.resize(pts.rows(), 3);
  c.grid.leftCols(2) = pts;
  c.grid.col(2) = c.model->predict(pts);
  return c;
}

std::string scores_csv(const std::vector<spectro::CandidateRecord>& recs, const Classification& c) {
  std::string out = "id,pc1,pc2,good,p_good\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += fmt::format("{},{},{},{},{}\n", csv_quote(recs[i].id), c.pca.scores(r, 0), c.pca.scores(r, 1), c.good[i] ? 1 : 0,
                       c.model ? fmt::format("{}", c.p[r]) : std::string());
  }
  return out;
}

std::string grid_csv(const Classification& c) {
  std::string out = "pc1,pc2,p_good,p_bad\n";
  for (Eigen::Index i = 0; i < c.grid.rows(); ++i) {
    out += fmt::format("{},{},{},{}\n", c.grid(i, 0), c.grid(i, 1), c.grid(i, 2), 1.0 - c.grid(i, 2));
  }
  return out;
}

json classification_json(const Classification& c) {
  json j;
  j["explained_ratio"] = {c.pca.explained_ratio[0], c.pca.explained_ratio[1]};
  json names = json::array();
  for (int k : c.pca.scaling.kept) names.push_back(ml::feature_names()[static_cast<std::size_t>(k)]);
  j["features"] = names;
  j["loadings"] = json::array();
  for (Eigen::Index r = 0; r < c.pca.components.rows(); ++r) {
    j["loadings"].push_back({c.pca.components(r, 0), c.pca.components(r, 1)});
  }
  j["good"] = std::count(c.good.begin(), c.good.end(), true);
  if (c.model) {
    j["gpc"] = {{"amplitude", c.model->amp},
                {"length_scale", c.model->len},
                {"log_marginal", c.model->state.log_marginal}};
  }
  j["warnings"] = c.warnings;
  return j;
}

}  // namespace

std::vector<fs::path> run_similarity(const GlobalOptions& g, const SimilarityParams& p) {
  require_file(p.smiles, "--smiles");
  check_fp_params(p.nbits, p.radius);
  require(p.bins >= 1 && p.bins <= 10000, "--bins must be in [1, 10000]");
  require(p.reference.empty() != p.reference_id.empty(), "give exactly one of --reference or --reference-id");
  const auto table = chem::load_smiles_table(p.smiles);
  require(!table.empty(), "no parsable SMILES in '" + p.smiles.string() + "'");
  const auto db = fingerprints(table, p.radius, p.nbits);
  chem::Fingerprint ref;
  std::string ref_smiles = p.reference;
  if (!p.reference_id.empty()) {
    const auto it = std::find_if(table.entries.begin(), table.entries.end(),
                                 [&](const auto& e) { return e.id == p.reference_id; });
    require(it != table.entries.end(), "reference id '" + p.reference_id + "' not in the table");
    ref = db[static_cast<std::size_t>(it - table.entries.begin())].fingerprint;
    ref_smiles = it->smiles;
  } else {
    ref = chem::morgan_fingerprint(chem::parse_smiles(p.reference), p.radius, static_cast<std::size_t>(p.nbits));
  }
  const auto ranking = chem::rank_by_similarity(ref, db);

  std::string csv = "rank,id,tanimoto,smiles\n";
  for (std::size_t k = 0; k < ranking.entries.size(); ++k) {
    const auto& e = ranking.entries[k];
    csv += fmt::format("{},{},{},{}\n", k + 1, csv_quote(e.id), e.similarity, csv_quote(table.entries[e.index].smiles));
  }

  std::vector<std::size_t> counts(static_cast<std::size_t>(p.bins), 0);
  for (const auto& e : ranking.entries) {
    const auto b = std::min(static_cast<std::size_t>(e.similarity * p.bins), counts.size() - 1);
    ++counts[b];
  }
  json hist;
  hist["reference"] = ref_smiles;
  hist["entries"] = ranking.entries.size();
  auto& bins = hist["bins"] = json::array();
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double lo = static_cast<double>(b) / p.bins, hi = static_cast<double>(b + 1) / p.bins;
    json row = {{"lo", lo}, {"hi", hi}, {"count", counts[b]}};
    row["log10_count"] = counts[b] ? json(std::log10(static_cast<double>(counts[b]))) : json(nullptr);
    bins.push_back(row);
  }
  const auto& s = ranking.summary;
  hist["summary"] = {{"total", s.total},
                     {"at_or_below_0_4", s.at_or_below_0_4},
                     {"fraction_at_or_below_0_4", s.fraction_at_or_below_0_4},
                     {"at_or_above_0_5", s.at_or_above_0_5},
                     {"fraction_at_or_above_0_5", s.fraction_at_or_above_0_5},
                     {"above_0_85", s.above_0_85},
                     {"identical", s.identical}};
  hist["skipped"] = skipped_json(table);

  StageOutput out("similarity", {{"smiles", p.smiles.string()},
                                 {"reference", p.reference},
                                 {"reference_id", p.reference_id},
                                 {"nbits", p.nbits},
                                 {"radius", p.radius},
                                 {"bins", p.bins}});
  out.input(p.smiles);
  out.add("similarity.csv", csv);
  out.add("similarity_histogram.json", hist.dump(2) + "\n");
  return out.commit(g);
}

std::vector<fs::path> run_map(const GlobalOptions& g, const MapParams& p) {
  require_file(p.smiles, "--smiles");
  check_fp_params(p.nbits, p.radius);
  require(p.selection == "leaf" || p.selection == "eom", "--selection must be leaf or eom");
  const auto table = chem::load_smiles_table(p.smiles);
  require(table.entries.size() >= 2, "need at least two parsable SMILES to map");
  const auto db = fingerprints(table, p.radius, p.nbits);
  std::vector<chem::Fingerprint> fps;
  for (const auto& e : db) fps.push_back(e.fingerprint);
  const auto d = ml::jaccard_distances(fps);
  ml::TSNEOptions to;
  to.perplexity = p.perplexity;
  to.seed = g.seed;
  to.iterations = p.iterations;
  to.exaggeration_iters = std::min(250, p.iterations / 4);
  to.refine_iters = std::min(100, p.iterations / 10);
  const auto m = ml::tsne(d, to);
  ml::HDBSCANOptions ho;
  ho.min_cluster_size = p.min_cluster_size;
  ho.selection = p.selection == "eom" ? ml::ClusterSelection::ExcessOfMass : ml::ClusterSelection::Leaf;
  const auto cl = ml::hdbscan(m.y, ho);

  std::string csv = "x,y,cluster,id\n";
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    csv += fmt::format("{},{},{},{}\n", m.y(r, 0), m.y(r, 1), cl.labels[i], csv_quote(db[i].id));
  }
  json info = {{"items", db.size()},
               {"perplexity", m.perplexity},
               {"kl", m.kl},
               {"max_entropy_error", m.max_entropy_error},
               {"clusters", cl.clusters},
               {"noise", std::count(cl.labels.begin(), cl.labels.end(), -1)},
               {"warnings", m.warnings},
               {"skipped", skipped_json(table)}};
  StageOutput out("map", {{"smiles", p.smiles.string()},
                          {"perplexity", p.perplexity},
                          {"iterations", p.iterations},
                          {"min_cluster_size", p.min_cluster_size},
                          {"selection", p.selection},
                          {"nbits", p.nbits},
                          {"radius", p.radius}});
  out.input(p.smiles);
  out.add(p.out, csv);
  out.add("map.json", info.dump(2) + "\n");
  return out.commit(g);
}

std::vector<fs::path> run_embed(const GlobalOptions& g, const EmbedParams& p) {
  require_file(p.host, "--host");
  require_file(p.emitter, "--emitter");
  auto host = parse_xyz(p.host);
  auto emitter = parse_xyz(p.emitter);
  host.validate();
  emitter.validate();
  embedding::EmbeddingConfig cfg;
  cfg.cutoff = p.cutoff;
  cfg.translation_scale = p.translation_scale;
  cfg.min_removed = p.min_removed;
  cfg.max_removed = p.max_removed;
  cfg.per_count = p.per_count;
  cfg.max_trials = p.max_trials;
  cfg.seed = g.seed;
  cfg.cumulative = !p.fresh;
  cfg.molecules.tolerance = p.bond_tolerance;
  cfg.validate();
  auto spec = potential_spec(p.potential);
  spec.bond_tolerance = p.bond_tolerance;
  require(!p.relax || spec.kind != potential::PotentialKind::Tabulated,
          "a tabulated potential cannot relax embedded structures");

  const auto run = embedding::embed_emitter(host, emitter, cfg);
  std::optional<embedding::StabilityResult> stab;
  if (p.relax) {
    require(!run.accepted.empty(), "no accepted embeddings to relax");
    potential::RelaxOptions ro;
    ro.fmax = p.fmax;
    ro.max_steps = p.max_steps;
    stab = embedding::select_most_stable(
        run.accepted, host, emitter, [&](const AtomicStructure& s) { return potential::build_potential(spec, s); },
        ro);
  }
  StageOutput out("embed", {{"host", p.host.string()},
                            {"emitter", p.emitter.string()},
                            {"cutoff", p.cutoff},
                            {"translation_scale", p.translation_scale},
                            {"min_removed", p.min_removed},
                            {"max_removed", p.max_removed},
                            {"per_count", p.per_count},
                            {"max_trials", p.max_trials},
                            {"cumulative", !p.fresh},
                            {"bond_tolerance", p.bond_tolerance},
                            {"relax", p.relax},
                            {"potential", p.potential},
                            {"fmax", p.fmax},
                            {"max_steps", p.max_steps}});
  out.input(p.host);
  out.input(p.emitter);
  out.add("embed/manifest.json", embedding::manifest_json(run, cfg, stab ? &*stab : nullptr));
  for (std::size_t k = 0; k < run.accepted.size(); ++k) {
    const auto& t = run.accepted[k];
    out.add(fmt::format("embed/trial_{:04d}.xyz", k),
            format_xyz(t.complex, fmt::format("trial={} removed={}", t.index, t.removed())));
  }
  if (stab) {
    out.add("embed/best_relaxed.xyz",
            format_xyz(stab->relaxed_best, fmt::format("E_bind={} eV", stab->best_binding_energy)));
  }
  return out.commit(g);
}

std::vector<fs::path> run_modes(const GlobalOptions& g, const ModesParams& p) {
  vibronic::NormalModeSet modes;
  std::optional<AtomicStructure> relaxed;
  json params = {{"potential", p.potential}, {"fd_step", p.fd_step},         {"finite_difference", p.finite_difference},
                 {"relax", p.relax},         {"spring_k", p.spring_k},       {"network_cutoff", p.network_cutoff},
                 {"convention", p.convention}};
  StageOutput out("modes", params);
  if (!p.external.empty()) {
    require(p.structure.empty(), "give either --structure or --external, not both");
    require_file(p.external, "--external");
    auto raw = vibronic::load_modes(p.external);
    if (!p.convention.empty()) raw.convention = vibronic::convention_from_string(p.convention);
    modes = vibronic::reweight_external_modes(raw);
    out.input(p.external);
  } else {
    require_file(p.structure, "--structure");
    require(p.fd_step > 0 && p.fd_step < 0.5, "--fd-step must be in (0, 0.5) A");
    auto s = parse_xyz(p.structure);
    s.validate();
    auto spec = potential_spec(p.potential);
    spec.spring_k = p.spring_k;
    spec.network_cutoff = p.network_cutoff;
    if (spec.kind == potential::PotentialKind::Tabulated) {
      require_file(p.tabulated, "--tabulated");
      spec.tabulated_file = p.tabulated;
      out.input(p.tabulated);
    }
    auto pot = potential::build_potential(spec, s);
    if (p.relax) {
      const auto r = potential::relax(s, *pot);
      if (!r.converged) throw NumericalError(fmt::format("relaxation ended with status {}", to_string(r.status)));
      s = r.structure;
      relaxed = s;
    }
    std::optional<Eigen::MatrixXd> h;
    if (!p.finite_difference) h = pot->hessian(s);
    if (!h) h = potential::hessian_finite_difference(s, *pot, p.fd_step).hessian;
    modes = vibronic::normal_modes(*h, s.masses);
    out.input(p.structure);
  }
  std::string freq = "mode,frequency_cm1,imaginary\n";
  for (std::size_t k = 0; k < modes.size(); ++k) {
    freq += fmt::format("{},{},{}\n", k, modes.frequencies_cm1[static_cast<Eigen::Index>(k)], modes.imaginary(k) ? 1 : 0);
  }
  out.add(p.out, vibronic::modes_to_json(modes));
  out.add("frequencies.csv", freq);
  if (relaxed) out.add("relaxed.xyz", format_xyz(*relaxed, "relaxed before the Hessian"));
  return out.commit(g);
}

std::vector<fs::path> run_vibronic(const GlobalOptions& g, const VibronicParams& p) {
  require_file(p.isolated, "--isolated");
  require_file(p.forces, "--forces");
  require(p.weighting == "raw" || p.weighting == "mass", "--weighting must be raw or mass");
  require(p.ground.empty() == p.excited.empty(), "--ground and --excited go together");
  StageOutput out("vibronic", {{"id", p.id},
                               {"emitter_atoms", p.emitter_atoms},
                               {"floor_cm1", p.floor_cm1},
                               {"weighting", p.weighting}});
  const auto iso = vibronic::reweight_external_modes(vibronic::load_modes(p.isolated));
  out.input(p.isolated);
  std::optional<vibronic::NormalModeSet> emb;
  vibronic::VibronicInputs in;
  in.isolated = &iso;
  if (!p.embedded.empty()) {
    require_file(p.embedded, "--embedded");
    require(!p.emitter_atoms.empty(), "--emitter-atoms is required with --embedded");
    emb = vibronic::reweight_external_modes(vibronic::load_modes(p.embedded));
    in.embedded = &*emb;
    in.emitter_atoms = parse_index_ranges(p.emitter_atoms);
    out.input(p.embedded);
  }
  const auto fj = json::parse(read_text(p.forces), nullptr, false);
  require(!fj.is_discarded() && fj.contains("forces_eV_per_A"), "--forces: expected JSON with forces_eV_per_A");
  const auto& rows = fj["forces_eV_per_A"];
  in.forces.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].is_array() && rows[i].size() == 3, "--forces: each row needs three components");
    for (std::size_t c = 0; c < 3; ++c) in.forces(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c].get<double>();
  }
  out.input(p.forces);
  if (!p.ground.empty()) {
    require_file(p.ground, "--ground");
    require_file(p.excited, "--excited");
    in.r_ground = parse_xyz(p.ground).positions;
    in.r_excited = parse_xyz(p.excited).positions;
    out.input(p.ground);
    out.input(p.excited);
  }
  in.floor_cm1 = p.floor_cm1;
  in.weighting = p.weighting == "mass" ? vibronic::ForceWeighting::InverseSqrtMass : vibronic::ForceWeighting::Raw;
  const auto r = vibronic::vibronic_report(in);

  json j;
  j["id"] = p.id;
  j["s_vc"] = in.embedded ? json(r.s_vc) : json(nullptr);
  j["sum_g"] = r.sum_g;
  j["sum_hr"] = r.hr.size() ? json(r.sum_hr) : json(nullptr);
  j["sum_weighted_hr"] = r.hr.size() ? json(r.sum_weighted_hr) : json(nullptr);
  if (r.direct_fc) j["direct_fc"] = {{"direct", r.direct_fc->direct}, {"unity_inserted", r.direct_fc->unity_inserted}};
  j["modes_included"] = std::count(r.included.begin(), r.included.end(), 1);
  std::string csv = "mode,frequency_cm1,included,g,sp,hr,weighted_hr\n";
  for (Eigen::Index k = 0; k < r.g.size(); ++k) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", k, iso.frequencies_cm1[k], int(r.included[static_cast<std::size_t>(k)]),
                       r.g[k], r.sp[k], r.hr.size() ? fmt::format("{}", r.hr[k]) : "",
                       r.hr.size() ? fmt::format("{}", r.weighted_hr[k]) : "");
  }
  out.add(p.out, j.dump(2) + "\n");
  out.add("vibronic_modes.csv", csv);
  return out.commit(g);
}

std::vector<fs::path> run_spin(const GlobalOptions& g, const SpinParams& p) {
  require_file(p.table, "--table");
  auto t = spectro::load_table(p.table);
  const double e1 = t.s1().energy_eV;
  json j;
  j["s1_eV"] = e1;
  j["soc"] = spectro::soc_metric(t);
  j["rsoc"] = spectro::rsoc_metric(t);
  j["gs_soc"] = t.gs_soc_t1 ? json(spectro::gssoc_metric(t)) : json(nullptr);
  auto& tr = j["triplets"] = json::array();
  for (const auto& x : t.triplets) {
    tr.push_back({{"energy_eV", x.energy_eV}, {"soc_s1_cm1", x.soc_s1}, {"channel", x.energy_eV <= e1 ? "soc" : "rsoc"}});
  }
  StageOutput out("spin", {{"table", p.table.string()}, {"record", p.record}, {"id", p.id}});
  out.input(p.table);
  out.add("spin.json", j.dump(2) + "\n");
  if (p.record) {
    spectro::CandidateInputs ci;
    ci.id = p.id;
    ci.tanimoto = p.tanimoto;
    ci.table = t;
    ci.s_vc = p.s_vc;
    ci.e_bind = p.e_bind;
    out.add("record.csv", spectro::records_to_csv({spectro::assemble_candidate(ci)}));
  }
  return out.commit(g);
}

std::vector<fs::path> run_stark(const GlobalOptions& g, const StarkParams& p) {
  std::vector<std::tuple<std::string, double, double>> rows;
  StageOutput out("stark", {{"delta_mu", p.delta_mu ? json(*p.delta_mu) : json(nullptr)},
                            {"delta_alpha", p.delta_alpha ? json(*p.delta_alpha) : json(nullptr)},
                            {"table", p.table.string()},
                            {"fields_kV_cm", p.fields}});
  if (!p.table.empty()) {
    require(!p.delta_mu && !p.delta_alpha, "give --table or --delta-mu/--delta-alpha, not both");
    require_file(p.table, "--table");
    std::istringstream in(read_text(p.table));
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "name,delta_mu_au,delta_alpha_au", "--table header must be name,delta_mu_au,delta_alpha_au");
    using Tok = boost::tokenizer<boost::escaped_list_separator<char>>;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> f;
      for (const auto& t : Tok(line, boost::escaped_list_separator<char>('\0', ',', '"'))) f.push_back(t);
      require(f.size() == 3, "stark table row needs three fields: " + line);
      try {
        rows.emplace_back(f[0], std::stod(f[1]), std::stod(f[2]));
      } catch (const std::exception&) {
        throw ValidationError("non-numeric stark table row: " + line);
      }
    }
    out.input(p.table);
  } else {
    require(p.delta_mu && p.delta_alpha, "--delta-mu and --delta-alpha are required without --table");
    rows.emplace_back("input", *p.delta_mu, *p.delta_alpha);
  }
  require(!rows.empty(), "no stark rows");
  std::string csv = "name,delta_mu_au,delta_alpha_au,a_MHz_cm_per_kV,b_MHz_cm2_per_kV2";
  for (double e : p.fields) csv += fmt::format(",shift_MHz_at_{}_kV_cm", e);
  csv += "\n";
  for (const auto& [name, mu, alpha] : rows) {
    const auto c = spectro::stark_coefficients({mu, alpha});
    csv += fmt::format("{},{},{},{},{}", csv_quote(name), mu, alpha, c.a, c.b);
    for (double e : p.fields) csv += fmt::format(",{}", c.shift_MHz(e));
    csv += "\n";
  }
  out.add("stark.csv", csv);
  return out.commit(g);
}

std::vector<fs::path> run_label(const GlobalOptions& g, const LabelParams& p) {
  const auto recs = records_or_throw(p.records);
  const auto good = ml::label_good(recs, {p.lambda_host, !p.no_soc});
  std::string csv = "id,good\n";
  for (std::size_t i = 0; i < recs.size(); ++i) csv += fmt::format("{},{}\n", csv_quote(recs[i].id), good[i] ? 1 : 0);
  StageOutput out("label", {{"records", p.records.string()}, {"lambda_host_nm", p.lambda_host}, {"include_soc", !p.no_soc}});
  out.input(p.records);
  out.add(p.out, csv);
  return out.commit(g);
}

std::vector<fs::path> run_classify(const GlobalOptions& g, const ClassifyParams& p) {
  const auto recs = records_or_throw(p.records);
  const auto c = classify(recs, p.lambda_host, !p.no_soc, p.grid);
  require(c.model.has_value(), "classification needs both good and bad records");
  StageOutput out("classify", {{"records", p.records.string()},
                               {"lambda_host_nm", p.lambda_host},
                               {"include_soc", !p.no_soc},
                               {"grid", p.grid}});
  out.input(p.records);
  out.add(p.out, scores_csv(recs, c));
  out.add("gpc_grid.csv", grid_csv(c));
  out.add("classify.json", classification_json(c).dump(2) + "\n");
  return out.commit(g);
}

std::vector<fs::path> run_report(const GlobalOptions& g, const ReportParams& p) {
  const auto recs = records_or_throw(p.records);
  StageOutput out("report", {{"records", p.records.string()},
                             {"lambda_host_nm", p.lambda_host ? json(*p.lambda_host) : json(nullptr)},
                             {"include_soc", !p.no_soc},
                             {"grid", p.grid}});
  out.input(p.records);
  json summary;
  summary["records"] = recs.size();
  summary["warnings"] = json::array();

  // candidate table, as CSV and as JSON
  out.add("candidates.csv", spectro::records_to_csv(recs));
  json rows = json::array();
  for (const auto& r : recs) {
    rows.push_back({{"id", r.id},
                    {"tanimoto", r.tanimoto},
                    {"fosc_abs", r.fosc_abs},
                    {"fosc_em", r.fosc_em},
                    {"lambda_abs_nm", r.lambda_abs_nm},
                    {"lambda_em_nm", r.lambda_em_nm},
                    {"rotary_1e40cgs", r.rotary},
                    {"soc", r.soc},
                    {"rsoc", r.rsoc},
                    {"gs_soc", r.gs_soc},
                    {"s_vc", r.s_vc},
                    {"e_bind_eV", r.e_bind_eV}});
  }
  out.add("candidates.json", rows.dump(2) + "\n");

  // each metric against the Tanimoto index
  std::string vs_tan = "id,tanimoto,metric,value\n";
  for (const auto& r : recs) {
    const std::pair<const char*, double> m[] = {{"fosc_abs", r.fosc_abs}, {"fosc_em", r.fosc_em},
                                                {"lambda_abs_nm", r.lambda_abs_nm}, {"lambda_em_nm", r.lambda_em_nm},
                                                {"rotary_1e40cgs", r.rotary}, {"soc", r.soc}, {"rsoc", r.rsoc},
                                                {"gs_soc", r.gs_soc}, {"s_vc", r.s_vc}, {"e_bind_eV", r.e_bind_eV}};
    for (const auto& [name, v] : m) vs_tan += fmt::format("{},{},{},{}\n", csv_quote(r.id), r.tanimoto, name, v);
  }
  out.add("metrics_vs_tanimoto.csv", vs_tan);

  if (p.lambda_host) {
    const auto c = classify(recs, *p.lambda_host, !p.no_soc, p.grid);
    out.add("classification_scores.csv", scores_csv(recs, c));
    if (c.model) out.add("classification_grid.csv", grid_csv(c));
    out.add("classification.json", classification_json(c).dump(2) + "\n");
    for (const auto& w : c.warnings) summary["warnings"].push_back(w);
  } else {
    summary["warnings"].push_back("no --lambda-host: PCA/GPC data not written");
  }

  if (!p.vibronic.empty()) {
    std::string svc = "id,s_vc,sum_hr,sum_weighted_hr,sum_g\n";
    auto num = [](const json& v) { return v.is_null() ? std::string() : fmt::format("{}", v.get<double>()); };
    for (const auto& f : p.vibronic) {
      require_file(f, "--vibronic");
      const auto j = json::parse(read_text(f), nullptr, false);
      require(!j.is_discarded() && j.contains("s_vc") && j.contains("sum_g") && j.contains("sum_hr"),
              "'" + f.string() + "' is not a vibronic summary");
      svc += fmt::format("{},{},{},{},{}\n", csv_quote(j.value("id", "")), num(j["s_vc"]), num(j["sum_hr"]),
                           num(j["sum_weighted_hr"]), num(j["sum_g"]));
      out.input(f);
    }
    out.add("svc_correlations.csv", svc);
  }
  json names = json::array();
  for (const auto& [n, c] : out.files()) names.push_back(n);
  summary["files"] = names;
  out.add("report.json", summary.dump(2) + "\n");
  return out.commit(g);
}

}  // namespace spescreen::cli
