#include "spescreen/spectro/spectro.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string/join.hpp>
#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "spescreen/error.hpp"

namespace spescreen::spectro {
namespace {

constexpr double kE = 1.602176634e-19;       // C
constexpr double kA0 = 5.29177210903e-11;    // m
constexpr double kH = 6.62607015e-34;        // J s
constexpr double kEh = 4.3597447222071e-18;  // J
constexpr double kKVcm = 1e5;                // V/m per kV/cm

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(const std::string& s, const char* field) {
  double v = 0.0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) throw ValidationError(fmt::format("bad number '{}' in column {}", s, field));
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void ExcitedStateTable::normalize() {
  std::stable_sort(singlets.begin(), singlets.end(),
                   [](const Singlet& a, const Singlet& b) { return a.energy_eV < b.energy_eV; });
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) { return a.energy_eV < b.energy_eV; });
  validate();
}

void ExcitedStateTable::validate() const {
  auto fin = [](double x) { return std::isfinite(x); };
  for (std::size_t i = 0; i < singlets.size(); ++i) {
    const auto& s = singlets[i];
    if (!(s.energy_eV > 0.0) || !fin(s.energy_eV)) throw ValidationError("singlet energies must be positive");
    if (!(s.fosc >= 0.0) || !fin(s.fosc)) throw ValidationError("oscillator strengths must be >= 0");
    if (!fin(s.rotary) || !(s.lambda_nm >= 0.0) || !fin(s.lambda_nm)) throw ValidationError("bad singlet entry");
    if (i && singlets[i - 1].energy_eV > s.energy_eV) throw ValidationError("singlets not sorted by energy");
  }
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (!(t.energy_eV > 0.0) || !fin(t.energy_eV)) throw ValidationError("triplet energies must be positive");
    if (!(t.soc_s1 >= 0.0) || !fin(t.soc_s1)) throw ValidationError("SOC magnitudes must be >= 0");
    if (i && triplets[i - 1].energy_eV > t.energy_eV) throw ValidationError("triplets not sorted by energy");
  }
  if (gs_soc_t1 && (!(*gs_soc_t1 >= 0.0) || !fin(*gs_soc_t1))) throw ValidationError("GS SOC magnitude must be >= 0");
  if (emission && (!(emission->fosc >= 0.0) || !(emission->lambda_nm >= 0.0))) {
    throw ValidationError("bad emission entry");
  }
}

const Singlet& ExcitedStateTable::s1() const {
  if (singlets.empty()) throw ValidationError("excited-state table has no S1");
  return singlets.front();
}

ExcitedStateTable table_from_json(const std::string& text) {
  ExcitedStateTable t;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& s : j.at("singlets")) {
      t.singlets.push_back({s.at("energy_eV").get<double>(), s.value("fosc", 0.0), s.value("rotary_1e40cgs", 0.0),
                            s.value("lambda_nm", 0.0)});
    }
    for (const auto& s : j.value("triplets", nlohmann::json::array())) {
      t.triplets.push_back({s.at("energy_eV").get<double>(), s.at("soc_s1_cm1").get<double>()});
    }
    if (j.contains("gs_soc_t1_cm1") && !j["gs_soc_t1_cm1"].is_null()) t.gs_soc_t1 = j["gs_soc_t1_cm1"].get<double>();
    if (j.contains("emission") && !j["emission"].is_null()) {
      t.emission = Emission{j["emission"].at("fosc").get<double>(), j["emission"].at("lambda_nm").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad excited-state table: ") + e.what());
  }
  t.normalize();
  return t;
}

ExcitedStateTable load_table(const std::filesystem::path& path) { return table_from_json(read_file(path)); }

std::string table_to_json(const ExcitedStateTable& t) {
  nlohmann::ordered_json j;
  auto s = nlohmann::ordered_json::array();
  for (const auto& x : t.singlets) {
    s.push_back({{"energy_eV", x.energy_eV}, {"fosc", x.fosc}, {"rotary_1e40cgs", x.rotary}, {"lambda_nm", x.lambda_nm}});
  }
  j["singlets"] = s;
  auto tr = nlohmann::ordered_json::array();
  for (const auto& x : t.triplets) tr.push_back({{"energy_eV", x.energy_eV}, {"soc_s1_cm1", x.soc_s1}});
  j["triplets"] = tr;
  if (t.gs_soc_t1) j["gs_soc_t1_cm1"] = *t.gs_soc_t1;
  if (t.emission) j["emission"] = {{"fosc", t.emission->fosc}, {"lambda_nm", t.emission->lambda_nm}};
  return j.dump(2) + "\n";
}

double soc_metric(const ExcitedStateTable& t) {
  const double e1 = t.s1().energy_eV;
  double s = 0.0;
  for (const auto& x : t.triplets)
    if (x.energy_eV <= e1) s += x.soc_s1 * x.soc_s1;
  return std::sqrt(s);
}

double rsoc_metric(const ExcitedStateTable& t) {
  const double e1 = t.s1().energy_eV;
  double s = 0.0;
  for (const auto& x : t.triplets)
    if (x.energy_eV > e1) s += x.soc_s1 * x.soc_s1;
  return std::sqrt(s);
}

double gssoc_metric(const ExcitedStateTable& t) {
  if (!t.gs_soc_t1) throw ValidationError("missing T1-S0 SOC element");
  if (!(*t.gs_soc_t1 >= 0.0)) throw ValidationError("GS SOC magnitude must be >= 0");
  return *t.gs_soc_t1;
}

double stark_c1() { return kE * kA0 * kKVcm / kH / 1e6; }

double stark_c2() { return (kE * kA0) * (kE * kA0) / kEh * kKVcm * kKVcm / kH / 1e6; }

double StarkCoefficients::shift_MHz(double field_kV_cm) const {
  const double e = std::abs(field_kV_cm);
  return a * e + b * e * e;
}

StarkCoefficients stark_coefficients(const StarkInput& in) {
  if (!std::isfinite(in.delta_mu_au) || !std::isfinite(in.delta_alpha_au)) throw ValidationError("non-finite Stark input");
  return {std::abs(in.delta_mu_au) * stark_c1(), -0.5 * in.delta_alpha_au * stark_c2()};
}

void CandidateRecord::validate() const {
  for (double v : {tanimoto, fosc_abs, fosc_em, lambda_abs_nm, lambda_em_nm, rotary, soc, rsoc, gs_soc, s_vc, e_bind_eV}) {
    if (!std::isfinite(v)) throw ValidationError("candidate '" + id + "' has a non-finite value");
  }
}

CandidateRecord assemble_candidate(const CandidateInputs& in) {
  std::vector<std::string> missing;
  if (in.id.empty()) missing.push_back("id");
  if (!in.tanimoto) missing.push_back("tanimoto");
  if (!in.table) missing.push_back("excited_states");
  if (in.table && in.table->singlets.empty()) missing.push_back("S1");
  if (in.table && !in.table->emission) missing.push_back("emission");
  if (in.table && !in.table->gs_soc_t1) missing.push_back("gs_soc_t1_cm1");
  if (!in.s_vc) missing.push_back("S_VC");
  if (!in.e_bind) missing.push_back("E_bind");
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw ValidationError("candidate '" + in.id + "' is missing: " + names);
  }
  const auto& t = *in.table;
  t.validate();
  CandidateRecord r;
  r.id = in.id;
  r.tanimoto = *in.tanimoto;
  r.fosc_abs = t.s1().fosc;
  r.lambda_abs_nm = t.s1().lambda_nm;
  r.rotary = t.s1().rotary;
  r.fosc_em = t.emission->fosc;
  r.lambda_em_nm = t.emission->lambda_nm;
  r.soc = soc_metric(t);
  r.rsoc = rsoc_metric(t);
  r.gs_soc = gssoc_metric(t);
  r.s_vc = *in.s_vc;
  r.e_bind_eV = *in.e_bind;
  r.validate();
  return r;
}

std::string records_to_csv(const std::vector<CandidateRecord>& rows) {
  std::string out = std::string(kCandidateHeader) + "\n";
  for (const auto& r : rows) {
    r.validate();
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.id), r.tanimoto, r.fosc_abs, r.fosc_em,
                       r.lambda_abs_nm, r.lambda_em_nm, r.rotary, r.soc, r.rsoc, r.gs_soc, r.s_vc, r.e_bind_eV);
  }
  return out;
}

std::vector<CandidateRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty candidate table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  using Tok = boost::tokenizer<boost::escaped_list_separator<char>>;
  const boost::escaped_list_separator<char> sep('\0', ',', '"');
  // columns are found by name; order is free and extra columns are ignored
  static const char* names[] = {"id",     "tanimoto", "fosc_abs", "fosc_em", "lambda_abs_nm", "lambda_em_nm",
                                "rotary_1e40cgs", "soc", "rsoc",  "gs_soc",  "s_vc",          "e_bind_eV"};
  std::vector<std::string> header;
  for (const auto& h : Tok(line, sep)) header.push_back(boost::algorithm::trim_copy(h));
  std::array<std::size_t, 12> col{};
  std::vector<std::string> missing;
  for (std::size_t c = 0; c < 12; ++c) {
    const auto it = std::find(header.begin(), header.end(), names[c]);
    if (it == header.end()) missing.emplace_back(names[c]);
    col[c] = static_cast<std::size_t>(it - header.begin());
  }
  if (!missing.empty()) {
    throw ValidationError("candidate table lacks column(s): " + boost::algorithm::join(missing, ", "));
  }
  std::vector<CandidateRecord> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    for (const auto& t : Tok(line, sep)) f.push_back(t);
    if (f.size() != header.size()) {
      throw ValidationError(fmt::format("line {}: expected {} columns, got {}", lineno, header.size(), f.size()));
    }
    CandidateRecord r;
    r.id = f[col[0]];
    double* dst[] = {&r.tanimoto, &r.fosc_abs, &r.fosc_em, &r.lambda_abs_nm, &r.lambda_em_nm, &r.rotary,
                     &r.soc,      &r.rsoc,     &r.gs_soc,  &r.s_vc,          &r.e_bind_eV};
    for (std::size_t c = 1; c < 12; ++c) *dst[c - 1] = parse_double(f[col[c]], names[c]);
    r.validate();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CandidateRecord> load_records(const std::filesystem::path& path) {
  return records_from_csv(read_file(path));
}

void save_records(const std::vector<CandidateRecord>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << records_to_csv(rows);
}

}  // namespace spescreen::spectro
