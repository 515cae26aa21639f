#include "spescreen/structure/atomic_structure.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "spescreen/error.hpp"
#include "spescreen/structure/elements.hpp"

namespace spescreen {
namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

double to_double(const std::string& t, std::size_t line_no) {
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ValidationError(fmt::format("xyz line {}: '{}' is not a finite number", line_no, t));
  }
  return v;
}

// key="quoted value" or key=value pairs from the comment line
std::optional<std::string> comment_value(const std::string& comment, const std::string& key) {
  std::size_t pos = 0;
  while ((pos = comment.find(key + "=", pos)) != std::string::npos) {
    const bool boundary = pos == 0 || std::isspace(static_cast<unsigned char>(comment[pos - 1]));
    std::size_t v = pos + key.size() + 1;
    if (!boundary) {
      pos = v;
      continue;
    }
    if (v < comment.size() && comment[v] == '"') {
      const auto end = comment.find('"', v + 1);
      if (end == std::string::npos) throw ValidationError("xyz comment: unterminated quote after " + key);
      return comment.substr(v + 1, end - v - 1);
    }
    auto end = v;
    while (end < comment.size() && !std::isspace(static_cast<unsigned char>(comment[end]))) ++end;
    return comment.substr(v, end - v);
  }
  return std::nullopt;
}

std::string normalize_symbol(std::string s) {
  if (!s.empty()) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    for (std::size_t i = 1; i < s.size(); ++i) s[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  }
  return s;
}

}  // namespace

AtomicStructure::AtomicStructure(std::vector<std::string> els, Positions pos)
    : elements(std::move(els)), positions(std::move(pos)) {
  if (static_cast<std::size_t>(positions.rows()) != elements.size()) {
    throw ValidationError("element count does not match position rows");
  }
  masses.resize(static_cast<Eigen::Index>(elements.size()));
  for (std::size_t i = 0; i < elements.size(); ++i) masses[static_cast<Eigen::Index>(i)] = element(elements[i]).mass_amu;
}

void AtomicStructure::validate() {
  const auto n = static_cast<Eigen::Index>(elements.size());
  if (positions.rows() != n) throw ValidationError("element count does not match position rows");
  if (masses.size() != n) throw ValidationError("mass count does not match atom count");
  if (!positions.allFinite()) throw ValidationError("non-finite atomic position");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) throw ValidationError("atomic masses must be positive");
  }
  for (const auto& e : elements) element(e);
  if (cell) {
    if (!cell->allFinite()) throw ValidationError("non-finite cell");
    double det = cell->determinant();
    if (std::abs(det) < 1e-9) throw ValidationError("cell volume is zero");
    if (det < 0.0) *cell = -*cell;
  }
}

Eigen::Vector3d AtomicStructure::center_of_mass() const {
  if (size() == 0) throw ValidationError("center of mass of an empty structure");
  return (positions.transpose() * masses) / masses.sum();
}

Eigen::Vector3d AtomicStructure::bbox_min() const { return positions.colwise().minCoeff().transpose(); }
Eigen::Vector3d AtomicStructure::bbox_max() const { return positions.colwise().maxCoeff().transpose(); }

AtomicStructure AtomicStructure::subset(const std::vector<std::size_t>& keep) const {
  AtomicStructure out;
  out.cell = cell;
  out.pbc = pbc;
  out.elements.reserve(keep.size());
  out.positions.resize(static_cast<Eigen::Index>(keep.size()), 3);
  out.masses.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = keep[k];
    if (i >= size()) throw ValidationError("subset index out of range");
    out.elements.push_back(elements[i]);
    out.positions.row(static_cast<Eigen::Index>(k)) = positions.row(static_cast<Eigen::Index>(i));
    out.masses[static_cast<Eigen::Index>(k)] = masses[static_cast<Eigen::Index>(i)];
  }
  return out;
}

void AtomicStructure::append(const AtomicStructure& other) {
  const auto n = positions.rows();
  const auto m = other.positions.rows();
  elements.insert(elements.end(), other.elements.begin(), other.elements.end());
  positions.conservativeResize(n + m, 3);
  positions.bottomRows(m) = other.positions;
  masses.conservativeResize(n + m);
  masses.tail(m) = other.masses;
}

AtomicStructure parse_xyz_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw ValidationError(fmt::format("xyz: missing {}", what));
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next("count line");
  const auto count_tok = tokens(line);
  std::size_t count = 0;
  if (count_tok.size() != 1) throw ValidationError("xyz: first line must hold the atom count");
  {
    auto [ptr, ec] = std::from_chars(count_tok[0].data(), count_tok[0].data() + count_tok[0].size(), count);
    if (ec != std::errc() || ptr != count_tok[0].data() + count_tok[0].size()) {
      throw ValidationError("xyz: bad atom count '" + count_tok[0] + "'");
    }
  }
  next("comment line");
  const std::string comment = line;

  std::vector<std::string> els;
  std::vector<Eigen::Vector3d> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    if (tok.size() < 4) throw ValidationError(fmt::format("xyz line {}: expected symbol and 3 coordinates", line_no));
    const auto sym = normalize_symbol(tok[0]);
    if (!find_element(sym)) throw ValidationError(fmt::format("xyz line {}: unknown element '{}'", line_no, tok[0]));
    els.push_back(sym);
    rows.emplace_back(to_double(tok[1], line_no), to_double(tok[2], line_no), to_double(tok[3], line_no));
    if (els.size() > count) break;
  }
  if (els.size() != count) {
    throw ValidationError(fmt::format("xyz: count line says {} atoms but {} rows found", count, els.size()));
  }

  Positions pos(static_cast<Eigen::Index>(count), 3);
  for (std::size_t i = 0; i < count; ++i) pos.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  AtomicStructure s(std::move(els), std::move(pos));

  if (auto lat = comment_value(comment, "Lattice")) {
    const auto v = tokens(*lat);
    if (v.size() != 9) throw ValidationError("xyz: Lattice needs 9 numbers");
    Eigen::Matrix3d c;
    for (int k = 0; k < 9; ++k) c(k / 3, k % 3) = to_double(v[static_cast<std::size_t>(k)], 2);
    s.cell = c;
    s.pbc = {true, true, true};
  }
  if (auto p = comment_value(comment, "pbc")) {
    const auto v = tokens(*p);
    if (v.size() != 3) throw ValidationError("xyz: pbc needs 3 flags");
    for (std::size_t k = 0; k < 3; ++k) {
      if (v[k] == "T" || v[k] == "t" || v[k] == "True" || v[k] == "1") {
        s.pbc[k] = true;
      } else if (v[k] == "F" || v[k] == "f" || v[k] == "False" || v[k] == "0") {
        s.pbc[k] = false;
      } else {
        throw ValidationError("xyz: bad pbc flag '" + v[k] + "'");
      }
    }
  }
  if (!s.cell) s.pbc = {false, false, false};
  s.validate();
  return s;
}

AtomicStructure parse_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open xyz file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_xyz_string(buf.str());
}

std::string format_xyz(const AtomicStructure& s, const std::string& comment) {
  std::string out = fmt::format("{}\n", s.size());
  std::string c;
  if (s.cell) {
    const auto& m = *s.cell;
    c = fmt::format("Lattice=\"{:.8f} {:.8f} {:.8f} {:.8f} {:.8f} {:.8f} {:.8f} {:.8f} {:.8f}\" pbc=\"{} {} {}\"",
                    m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2),
                    s.pbc[0] ? 'T' : 'F', s.pbc[1] ? 'T' : 'F', s.pbc[2] ? 'T' : 'F');
  }
  if (!comment.empty()) {
    if (comment.find('\n') != std::string::npos) throw ValidationError("xyz comment must be a single line");
    c += c.empty() ? comment : " " + comment;
  }
  out += c + "\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = s.positions.row(static_cast<Eigen::Index>(i));
    out += fmt::format("{:<2} {:16.8f} {:16.8f} {:16.8f}\n", s.elements[i], r(0), r(1), r(2));
  }
  return out;
}

void write_xyz(const AtomicStructure& s, const std::filesystem::path& path, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write xyz file '" + path.string() + "'");
  out << format_xyz(s, comment);
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

AtomicStructure make_supercell(const AtomicStructure& unit, std::array<int, 3> repeats) {
  if (!unit.cell) throw ValidationError("supercell requires a cell");
  for (int r : repeats) {
    if (r < 1) throw ValidationError("supercell repeats must be >= 1");
  }
  const auto& h = *unit.cell;
  const auto n = static_cast<Eigen::Index>(unit.size());
  const auto blocks = static_cast<Eigen::Index>(repeats[0]) * repeats[1] * repeats[2];

  AtomicStructure out;
  out.pbc = unit.pbc;
  out.positions.resize(n * blocks, 3);
  out.masses.resize(n * blocks);
  out.elements.reserve(static_cast<std::size_t>(n * blocks));
  Eigen::Index b = 0;
  for (int i = 0; i < repeats[0]; ++i) {
    for (int j = 0; j < repeats[1]; ++j) {
      for (int k = 0; k < repeats[2]; ++k, ++b) {
        const Eigen::RowVector3d shift = i * h.row(0) + j * h.row(1) + k * h.row(2);
        out.positions.middleRows(b * n, n) = unit.positions.rowwise() + shift;
        out.masses.segment(b * n, n) = unit.masses;
        out.elements.insert(out.elements.end(), unit.elements.begin(), unit.elements.end());
      }
    }
  }
  Eigen::Matrix3d c = h;
  for (int k = 0; k < 3; ++k) c.row(k) *= repeats[static_cast<std::size_t>(k)];
  out.cell = c;
  return out;
}

}  // namespace spescreen
