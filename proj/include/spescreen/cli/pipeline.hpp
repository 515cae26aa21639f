#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace spescreen::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
  fs::path out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default
};

// Files of one stage, held in memory until every computation succeeded.
// commit() writes each through a temporary name and adds
// <stage>.manifest.json with input/output hashes and the parameter hash.
class StageOutput {
 public:
  StageOutput(std::string stage, nlohmann::ordered_json params);
  void add(const std::string& name, std::string content);
  void input(const fs::path& path);
  std::vector<fs::path> commit(const GlobalOptions& g) const;
  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  std::string stage_;
  nlohmann::ordered_json params_;
  std::map<std::string, std::string> files_;
  std::vector<fs::path> inputs_;
};

std::string fnv1a_hex(const std::string& bytes);
std::string read_text(const fs::path& path);
// Writes to path.tmp, then renames.
void write_text_atomic(const fs::path& path, const std::string& content);

// "0-3,7" -> {0, 1, 2, 3, 7}
std::vector<std::size_t> parse_index_ranges(const std::string& text);

struct SimilarityParams {
  fs::path smiles;
  std::string reference;     // SMILES
  std::string reference_id;  // or an id from the table
  int nbits = 1024;
  int radius = 2;
  int bins = 20;
};
std::vector<fs::path> run_similarity(const GlobalOptions& g, const SimilarityParams& p);

struct MapParams {
  fs::path smiles;
  double perplexity = 50.0;
  int iterations = 1000;
  int min_cluster_size = 10;
  std::string selection = "leaf";
  int nbits = 1024;
  int radius = 2;
  std::string out = "map.csv";
};
std::vector<fs::path> run_map(const GlobalOptions& g, const MapParams& p);

struct EmbedParams {
  fs::path host, emitter;
  double cutoff = 1.0;
  double translation_scale = 0.05;
  int min_removed = 2, max_removed = 5, per_count = 25, max_trials = 10000;
  bool fresh = false;
  double bond_tolerance = 0.3;
  bool relax = false;
  std::string potential = "lj";
  double fmax = 0.01;
  int max_steps = 1000;
};
std::vector<fs::path> run_embed(const GlobalOptions& g, const EmbedParams& p);

struct ModesParams {
  fs::path structure;
  std::string potential = "harmonic";
  fs::path tabulated;
  double fd_step = 0.01;
  bool finite_difference = false;
  bool relax = false;
  double spring_k = 30.0;
  double network_cutoff = 0.0;
  fs::path external;  // reweight external vectors instead
  std::string convention;  // empty: as stored in the file
  std::string out = "modes.json";
};
std::vector<fs::path> run_modes(const GlobalOptions& g, const ModesParams& p);

struct VibronicParams {
  std::string id;
  fs::path isolated, embedded, forces, ground, excited;
  std::string emitter_atoms;
  double floor_cm1 = 10.0;
  std::string weighting = "raw";
  std::string out = "vibronic.json";
};
std::vector<fs::path> run_vibronic(const GlobalOptions& g, const VibronicParams& p);

struct SpinParams {
  fs::path table;
  // assembling a candidate record is optional
  std::string id;
  std::optional<double> tanimoto, s_vc, e_bind;
  bool record = false;
};
std::vector<fs::path> run_spin(const GlobalOptions& g, const SpinParams& p);

struct StarkParams {
  std::optional<double> delta_mu, delta_alpha;
  fs::path table;  // name,delta_mu_au,delta_alpha_au
  std::vector<double> fields;
};
std::vector<fs::path> run_stark(const GlobalOptions& g, const StarkParams& p);

struct LabelParams {
  fs::path records;
  double lambda_host = 0.0;
  bool no_soc = false;
  std::string out = "labels.csv";
};
std::vector<fs::path> run_label(const GlobalOptions& g, const LabelParams& p);

struct ClassifyParams {
  fs::path records;
  double lambda_host = 0.0;
  bool no_soc = false;
  int grid = 50;
  std::string out = "labels.csv";
};
std::vector<fs::path> run_classify(const GlobalOptions& g, const ClassifyParams& p);

struct ReportParams {
  fs::path records;
  std::optional<double> lambda_host;
  bool no_soc = false;
  int grid = 50;
  std::vector<fs::path> vibronic;
};
std::vector<fs::path> run_report(const GlobalOptions& g, const ReportParams& p);

// Parses argv and dispatches. Returns the process exit code:
// 0 success, 2 validation error, 3 numerical failure, 1 anything else.
int run_cli(int argc, const char* const* argv);

}  // namespace spescreen::cli
