#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spescreen::spectro {

struct Singlet {
  double energy_eV = 0.0;
  double fosc = 0.0;
  double rotary = 0.0;     // 1e-40 cgs, signed
  double lambda_nm = 0.0;
};

struct Triplet {
  double energy_eV = 0.0;
  double soc_s1 = 0.0;     // |<T_i|H_SO|S_1>|, cm^-1 as ingested
};

// Emission from the relaxed S1 geometry.
struct Emission {
  double fosc = 0.0;
  double lambda_nm = 0.0;
};

struct ExcitedStateTable {
  std::vector<Singlet> singlets;   // ascending energy, singlets[0] is S1
  std::vector<Triplet> triplets;   // ascending energy
  std::optional<double> gs_soc_t1; // |<T_1|H_SO|S_0>|
  std::optional<Emission> emission;

  // Sorts states by energy, then checks positivity / non-negativity.
  void normalize();
  void validate() const;
  const Singlet& s1() const;
};

ExcitedStateTable table_from_json(const std::string& text);
ExcitedStateTable load_table(const std::filesystem::path& path);
std::string table_to_json(const ExcitedStateTable& t);

// sqrt(sum |<T_i|H_SO|S_1>|^2) over triplets with E_T <= E_S1 (a triplet
// degenerate with S1 counts here).
double soc_metric(const ExcitedStateTable& t);
// same over triplets with E_T > E_S1
double rsoc_metric(const ExcitedStateTable& t);
double gssoc_metric(const ExcitedStateTable& t);

// Conversion constants from CODATA 2018:
// C1 = e a0 (1 kV/cm) / h in MHz per atomic unit of dipole
// C2 = (e a0)^2 / E_h (1 kV/cm)^2 / h in MHz per atomic unit of polarizability
double stark_c1();
double stark_c2();

struct StarkInput {
  double delta_mu_au = 0.0;     // |delta mu|
  double delta_alpha_au = 0.0;  // may be negative
};

struct StarkCoefficients {
  double a = 0.0;  // MHz kV^-1 cm
  double b = 0.0;  // MHz kV^-2 cm^2
  double shift_MHz(double field_kV_cm) const;  // a|E| + b E^2
};

StarkCoefficients stark_coefficients(const StarkInput& in);

struct CandidateRecord {
  std::string id;
  double tanimoto = 0.0;
  double fosc_abs = 0.0;
  double fosc_em = 0.0;
  double lambda_abs_nm = 0.0;
  double lambda_em_nm = 0.0;
  double rotary = 0.0;
  double soc = 0.0;
  double rsoc = 0.0;
  double gs_soc = 0.0;
  double s_vc = 0.0;
  double e_bind_eV = 0.0;

  void validate() const;  // all finite
};

struct CandidateInputs {
  std::string id;
  std::optional<double> tanimoto;
  std::optional<ExcitedStateTable> table;
  std::optional<double> s_vc;
  std::optional<double> e_bind;
};

// Throws ValidationError listing every missing field by name.
CandidateRecord assemble_candidate(const CandidateInputs& in);

inline constexpr const char* kCandidateHeader =
    "id,tanimoto,fosc_abs,fosc_em,lambda_abs_nm,lambda_em_nm,rotary_1e40cgs,soc,rsoc,gs_soc,s_vc,e_bind_eV";

std::string records_to_csv(const std::vector<CandidateRecord>& rows);
std::vector<CandidateRecord> records_from_csv(const std::string& text);
std::vector<CandidateRecord> load_records(const std::filesystem::path& path);
void save_records(const std::vector<CandidateRecord>& rows, const std::filesystem::path& path);

}  // namespace spescreen::spectro
