#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spescreen/cli/pipeline.hpp"
#include "spescreen/error.hpp"
#include "spescreen/exec.hpp"

namespace spescreen::cli {

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"spescreen: single-photon emitter screening pipeline"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file; [section] per subcommand, flags override it");
  app.require_subcommand(1);

  GlobalOptions g;
  std::string out_dir = ".";
  app.add_option("--seed", g.seed, "seed for every stochastic stage");
  app.add_option("--threads", g.threads, "OpenMP threads (0: default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", out_dir, "directory for outputs and manifests");

  SimilarityParams sim;
  auto* s_sim = app.add_subcommand("similarity", "Tanimoto ranking and histogram against a reference");
  s_sim->add_option("--smiles", sim.smiles, "TSV/CSV with id and smiles columns");
  s_sim->add_option("--reference", sim.reference, "reference SMILES");
  s_sim->add_option("--reference-id", sim.reference_id, "reference taken from the table by id");
  s_sim->add_option("--nbits", sim.nbits);
  s_sim->add_option("--radius", sim.radius);
  s_sim->add_option("--bins", sim.bins);

  MapParams map;
  auto* s_map = app.add_subcommand("map", "t-SNE map of fingerprints with density clusters");
  s_map->add_option("--smiles", map.smiles);
  s_map->add_option("--perplexity", map.perplexity);
  s_map->add_option("--iterations", map.iterations);
  s_map->add_option("--min-cluster-size", map.min_cluster_size);
  s_map->add_option("--selection", map.selection, "leaf or eom");
  s_map->add_option("--nbits", map.nbits);
  s_map->add_option("--radius", map.radius);
  s_map->add_option("--out", map.out);

  EmbedParams emb;
  auto* s_emb = app.add_subcommand("embed", "random emitter insertion into a host supercell");
  s_emb->add_option("--host", emb.host, "periodic host supercell (extended XYZ)");
  s_emb->add_option("--emitter", emb.emitter);
  s_emb->add_option("--cutoff", emb.cutoff, "overlap distance (A)");
  s_emb->add_option("--translation-scale", emb.translation_scale);
  s_emb->add_option("--min-removed", emb.min_removed);
  s_emb->add_option("--max-removed", emb.max_removed);
  s_emb->add_option("--per-count", emb.per_count);
  s_emb->add_option("--max-trials", emb.max_trials);
  s_emb->add_flag("--fresh", emb.fresh, "draw each trial from the start pose");
  s_emb->add_option("--bond-tolerance", emb.bond_tolerance);
  s_emb->add_flag("--relax", emb.relax, "relax candidates and report binding energies");
  s_emb->add_option("--potential", emb.potential, "lj or harmonic");
  s_emb->add_option("--fmax", emb.fmax);
  s_emb->add_option("--max-steps", emb.max_steps);

  ModesParams md;
  auto* s_md = app.add_subcommand("modes", "normal modes from a potential, or reweighting of external ones");
  s_md->add_option("--structure", md.structure);
  s_md->add_option("--potential", md.potential, "harmonic, lj or tabulated");
  s_md->add_option("--tabulated", md.tabulated, "JSON with energy, forces and Hessian");
  s_md->add_option("--fd-step", md.fd_step);
  s_md->add_flag("--fd", md.finite_difference, "finite differences even if an analytic Hessian exists");
  s_md->add_flag("--relax", md.relax);
  s_md->add_option("--spring-k", md.spring_k);
  s_md->add_option("--network-cutoff", md.network_cutoff);
  s_md->add_option("--external", md.external, "mode JSON from another code");
  s_md->add_option("--convention", md.convention, "ase, orca or orthonormal");
  s_md->add_option("--out", md.out);

  VibronicParams vib;
  auto* s_vib = app.add_subcommand("vibronic", "force projections, mode entropies, S_VC and Huang-Rhys sums");
  s_vib->add_option("--id", vib.id);
  s_vib->add_option("--isolated", vib.isolated, "isolated emitter modes");
  s_vib->add_option("--embedded", vib.embedded, "guest-host complex modes");
  s_vib->add_option("--emitter-atoms", vib.emitter_atoms, "complex indices of the emitter atoms, e.g. 0-23");
  s_vib->add_option("--forces", vib.forces, "JSON with forces_eV_per_A on the emitter");
  s_vib->add_option("--ground", vib.ground);
  s_vib->add_option("--excited", vib.excited);
  s_vib->add_option("--floor", vib.floor_cm1, "rigid-mode floor (cm^-1)");
  s_vib->add_option("--weighting", vib.weighting, "raw or mass");
  s_vib->add_option("--out", vib.out);

  SpinParams spin;
  auto* s_spin = app.add_subcommand("spin", "SOC, rSOC and GS SOC from an excited-state table");
  s_spin->add_option("--table", spin.table);
  s_spin->add_flag("--record", spin.record, "also assemble a candidate record");
  s_spin->add_option("--id", spin.id);
  s_spin->add_option("--tanimoto", spin.tanimoto);
  s_spin->add_option("--s-vc", spin.s_vc);
  s_spin->add_option("--e-bind", spin.e_bind);

  StarkParams st;
  auto* s_st = app.add_subcommand("stark", "linear and quadratic Stark coefficients");
  s_st->add_option("--delta-mu", st.delta_mu, "|dipole change| (au)");
  s_st->add_option("--delta-alpha", st.delta_alpha, "polarizability change (au)");
  s_st->add_option("--table", st.table, "CSV name,delta_mu_au,delta_alpha_au");
  s_st->add_option("--field", st.fields, "fields (kV/cm) for shift columns")->delimiter(',');

  LabelParams lab;
  auto* s_lab = app.add_subcommand("label", "good/bad labels from the averaged criteria");
  s_lab->add_option("--records", lab.records);
  s_lab->add_option("--lambda-host", lab.lambda_host, "host absorption wavelength (nm)");
  s_lab->add_flag("--no-soc", lab.no_soc);
  s_lab->add_option("--out", lab.out);

  ClassifyParams cls;
  auto* s_cls = app.add_subcommand("classify", "PCA plus Gaussian-process classification");
  s_cls->add_option("--records", cls.records);
  s_cls->add_option("--lambda-host", cls.lambda_host);
  s_cls->add_flag("--no-soc", cls.no_soc);
  s_cls->add_option("--grid", cls.grid, "probability grid points per axis");
  s_cls->add_option("--out", cls.out);

  ReportParams rep;
  auto* s_rep = app.add_subcommand("report", "table and figure data from candidate records");
  s_rep->add_option("--records", rep.records);
  s_rep->add_option("--lambda-host", rep.lambda_host);
  s_rep->add_flag("--no-soc", rep.no_soc);
  s_rep->add_option("--grid", rep.grid);
  s_rep->add_option("--vibronic", rep.vibronic, "vibronic summaries for the S_VC correlations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.out_dir = out_dir;
  set_thread_count(g.threads);

  std::string stage;
  try {
    std::vector<fs::path> written;
    if (*s_sim) {
      stage = "similarity";
      written = run_similarity(g, sim);
    } else if (*s_map) {
      stage = "map";
      written = run_map(g, map);
    } else if (*s_emb) {
      stage = "embed";
      written = run_embed(g, emb);
    } else if (*s_md) {
      stage = "modes";
      written = run_modes(g, md);
    } else if (*s_vib) {
      stage = "vibronic";
      written = run_vibronic(g, vib);
    } else if (*s_spin) {
      stage = "spin";
      written = run_spin(g, spin);
    } else if (*s_st) {
      stage = "stark";
      written = run_stark(g, st);
    } else if (*s_lab) {
      stage = "label";
      written = run_label(g, lab);
    } else if (*s_cls) {
      stage = "classify";
      written = run_classify(g, cls);
    } else if (*s_rep) {
      stage = "report";
      written = run_report(g, rep);
    }
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << fmt::format("spescreen {}: invalid input: {}\n", stage, e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << fmt::format("spescreen {}: numerical failure: {}\n", stage, e.what());
    return 3;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("spescreen {}: {}\n", stage, e.what());
    return 1;
  }
}

}  // namespace spescreen::cli
