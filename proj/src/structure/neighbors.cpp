#include "spescreen/structure/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "spescreen/error.hpp"
#include "spescreen/structure/elements.hpp"

namespace spescreen {

std::vector<double> natural_cutoffs(const AtomicStructure& s, const std::map<std::string, double>& overrides,
                                    double multiplier) {
  if (!(multiplier > 0.0)) throw ValidationError("cutoff multiplier must be positive");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto it = overrides.find(s.elements[i]);
    const double r = it != overrides.end() ? it->second : element(s.elements[i]).covalent_radius;
    if (!(r > 0.0)) throw ValidationError("cutoff radius for " + s.elements[i] + " must be positive");
    out[i] = r * multiplier;
  }
  return out;
}

std::size_t NeighborList::pair_count() const {
  std::size_t n = 0;
  for (const auto& v : neighbors) n += v.size();
  return n / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> NeighborList::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    for (auto j : neighbors[i]) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

// Binning of atoms in fractional coordinates. Periodic axes wrap into
// [0,1); open axes are binned over the occupied range.
struct CellGrid {
  Eigen::Matrix3d h;
  std::array<bool, 3> periodic{};
  std::array<int, 3> nbins{1, 1, 1};
  std::array<int, 3> reach{1, 1, 1};   // bin offsets to scan per axis
  std::array<double, 3> lo{0, 0, 0};   // fractional origin of the bins
  std::array<double, 3> width{1, 1, 1};
  Positions wrapped;                   // Cartesian, after wrapping
  std::vector<std::array<int, 3>> bin_of;
  std::vector<std::array<int, 3>> wrap_of;  // lattice shift applied by wrapping
  std::vector<std::vector<std::size_t>> members;

  int flat(int a, int b, int c) const { return (a * nbins[1] + b) * nbins[2] + c; }
};

CellGrid build_grid(const AtomicStructure& s, double rmax) {
  CellGrid g;
  const auto n = static_cast<Eigen::Index>(s.size());
  if (s.cell) {
    g.h = *s.cell;
    g.periodic = s.pbc;
  } else {
    // open box spanning the atoms; only its shape matters
    Eigen::Vector3d ext = (s.bbox_max() - s.bbox_min()).cwiseMax(rmax);
    g.h = ext.asDiagonal();
    g.periodic = {false, false, false};
  }
  const Eigen::Matrix3d hinv = g.h.inverse();
  const double vol = std::abs(g.h.determinant());
  Positions frac = s.positions * hinv;
  g.wrap_of.assign(static_cast<std::size_t>(n), {0, 0, 0});

  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const double perp = vol / g.h.row(b).cross(g.h.row(c)).norm();  // Angstrom per unit fraction
    auto col = frac.col(a);
    double span = 1.0;
    if (g.periodic[static_cast<std::size_t>(a)]) {
      for (Eigen::Index i = 0; i < n; ++i) {
        g.wrap_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = -static_cast<int>(std::floor(col(i)));
      }
      col = col.array() - col.array().floor();
      g.lo[static_cast<std::size_t>(a)] = 0.0;
    } else {
      const double mn = col.minCoeff(), mx = col.maxCoeff();
      g.lo[static_cast<std::size_t>(a)] = mn;
      span = std::max(mx - mn, 1e-12);
    }
    const double len = span * perp;
    int nb = std::max(1, static_cast<int>(std::floor(len / rmax)));
    nb = std::min(nb, 1 << 10);
    g.nbins[static_cast<std::size_t>(a)] = nb;
    g.width[static_cast<std::size_t>(a)] = span / nb;
    // a displacement shorter than rmax moves at most rmax/perp in fraction
    g.reach[static_cast<std::size_t>(a)] =
        static_cast<int>(std::ceil(rmax / perp / g.width[static_cast<std::size_t>(a)] - 1e-12));
    if (g.reach[static_cast<std::size_t>(a)] < 1) g.reach[static_cast<std::size_t>(a)] = 1;
  }
  g.wrapped = frac * g.h;

  g.bin_of.resize(static_cast<std::size_t>(n));
  g.members.assign(static_cast<std::size_t>(g.nbins[0] * g.nbins[1] * g.nbins[2]), {});
  for (Eigen::Index i = 0; i < n; ++i) {
    std::array<int, 3> bin{};
    for (std::size_t a = 0; a < 3; ++a) {
      int k = static_cast<int>(std::floor((frac(i, static_cast<Eigen::Index>(a)) - g.lo[a]) / g.width[a]));
      bin[a] = std::clamp(k, 0, g.nbins[a] - 1);
    }
    g.bin_of[static_cast<std::size_t>(i)] = bin;
    g.members[static_cast<std::size_t>(g.flat(bin[0], bin[1], bin[2]))].push_back(static_cast<std::size_t>(i));
  }
  return g;
}

// Visits every (j, image) with j >= i whose image lies within the scanned
// bins of atom i; image is the lattice shift relative to the unwrapped input
// positions. fn(j, image, r_ij) with r_ij in Cartesian Angstrom.
template <class Fn>
void visit_images(const CellGrid& g, std::size_t i, Fn&& fn) {
  const auto& bi = g.bin_of[i];
  const Eigen::RowVector3d ri = g.wrapped.row(static_cast<Eigen::Index>(i));
  for (int da = -g.reach[0]; da <= g.reach[0]; ++da) {
    for (int db = -g.reach[1]; db <= g.reach[1]; ++db) {
      for (int dc = -g.reach[2]; dc <= g.reach[2]; ++dc) {
        const std::array<int, 3> d{da, db, dc};
        std::array<int, 3> bin{}, image{};
        bool skip = false;
        for (std::size_t a = 0; a < 3 && !skip; ++a) {
          const int k = bi[a] + d[a];
          if (g.periodic[a]) {
            const int nb = g.nbins[a];
            image[a] = static_cast<int>(std::floor(static_cast<double>(k) / nb));
            bin[a] = k - image[a] * nb;
          } else {
            if (k < 0 || k >= g.nbins[a]) skip = true;
            bin[a] = k;
          }
        }
        if (skip) continue;
        const Eigen::RowVector3d shift = image[0] * g.h.row(0) + image[1] * g.h.row(1) + image[2] * g.h.row(2);
        for (auto j : g.members[static_cast<std::size_t>(g.flat(bin[0], bin[1], bin[2]))]) {
          if (j < i) continue;
          const Eigen::RowVector3d rij = g.wrapped.row(static_cast<Eigen::Index>(j)) + shift - ri;
          // image relative to the original (unwrapped) coordinates
          std::array<int, 3> orig{};
          for (std::size_t a = 0; a < 3; ++a) orig[a] = image[a] + g.wrap_of[j][a] - g.wrap_of[i][a];
          fn(j, orig, rij);
        }
      }
    }
  }
}

void scan_atom(const CellGrid& g, std::span<const double> radii, std::size_t i, std::vector<std::size_t>& out) {
  visit_images(g, i, [&](std::size_t j, const std::array<int, 3>&, const Eigen::RowVector3d& rij) {
    if (j == i) return;
    const double rc = radii[i] + radii[j];
    if (rij.squaredNorm() < rc * rc) out.push_back(j);
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

bool positive_image(const std::array<int, 3>& s) {
  if (s[0] != 0) return s[0] > 0;
  if (s[1] != 0) return s[1] > 0;
  return s[2] > 0;
}

}  // namespace

NeighborList neighbor_list(const AtomicStructure& s, std::span<const double> radii, Exec exec) {
  if (radii.size() != s.size()) throw ValidationError("one cutoff radius per atom required");
  NeighborList nl;
  nl.neighbors.resize(s.size());
  if (s.size() == 0) return nl;
  for (double r : radii) {
    if (!(r > 0.0)) throw ValidationError("cutoff radii must be positive");
  }
  const double rmax = 2.0 * *std::max_element(radii.begin(), radii.end());
  const CellGrid g = build_grid(s, rmax);

  std::vector<std::vector<std::size_t>> upper(s.size());
  const auto n = static_cast<std::ptrdiff_t>(s.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) scan_atom(g, radii, static_cast<std::size_t>(i), upper[static_cast<std::size_t>(i)]);
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) scan_atom(g, radii, static_cast<std::size_t>(i), upper[static_cast<std::size_t>(i)]);
  }
  // mirror; symmetry holds by construction
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (auto j : upper[i]) {
      nl.neighbors[i].push_back(j);
      nl.neighbors[j].push_back(i);
    }
  }
  for (auto& v : nl.neighbors) std::sort(v.begin(), v.end());
  return nl;
}

std::vector<std::vector<std::size_t>> MoleculeLabels::members() const {
  std::vector<std::vector<std::size_t>> out(count);
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

MoleculeLabels connected_components(const NeighborList& nl) {
  const auto n = nl.neighbors.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : nl.neighbors[i]) {
      auto a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  MoleculeLabels out;
  out.labels.assign(n, 0);
  std::vector<std::size_t> id(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (id[r] == n) id[r] = out.count++;
    out.labels[i] = id[r];
  }
  return out;
}

MoleculeLabels identify_molecules(const AtomicStructure& s, const MoleculeOptions& opts, Exec exec) {
  if (opts.tolerance < 0.0) throw ValidationError("bond tolerance must be non-negative");
  auto radii = natural_cutoffs(s, opts.radius_overrides);
  for (auto& r : radii) r += opts.tolerance;
  return connected_components(neighbor_list(s, radii, exec));
}

}  // namespace spescreen

namespace spescreen {

std::vector<PairImage> pair_images(const AtomicStructure& s, double cutoff, Exec exec) {
  if (!(cutoff > 0.0)) throw ValidationError("pair cutoff must be positive");
  std::vector<PairImage> out;
  if (s.size() == 0) return out;
  const CellGrid g = build_grid(s, cutoff);
  const double rc2 = cutoff * cutoff;
  std::vector<std::vector<PairImage>> per(s.size());
  auto work = [&](std::size_t i) {
    auto& v = per[i];
    visit_images(g, i, [&](std::size_t j, const std::array<int, 3>& img, const Eigen::RowVector3d& rij) {
      if (j == i && !positive_image(img)) return;
      const double d2 = rij.squaredNorm();
      if (d2 >= rc2) return;
      const Eigen::RowVector3d shift = img[0] * g.h.row(0) + img[1] * g.h.row(1) + img[2] * g.h.row(2);
      v.push_back({i, j, img, shift.transpose()});
    });
    std::sort(v.begin(), v.end(), [](const PairImage& a, const PairImage& b) {
      return std::tie(a.j, a.image) < std::tie(b.j, b.image);
    });
  };
  const auto n = static_cast<std::ptrdiff_t>(s.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  }
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<std::array<int, 3>> molecule_offsets(const AtomicStructure& s, const MoleculeOptions& opts) {
  std::vector<std::array<int, 3>> off(s.size(), {0, 0, 0});
  if (!s.periodic() || s.size() == 0) return off;
  auto radii = natural_cutoffs(s, opts.radius_overrides);
  for (auto& r : radii) r += opts.tolerance;
  const double rmax = 2.0 * *std::max_element(radii.begin(), radii.end());
  struct Edge {
    std::size_t to;
    std::array<int, 3> image;  // image of `to` as seen from the source
  };
  std::vector<std::vector<Edge>> adj(s.size());
  for (const auto& p : pair_images(s, rmax, Exec::Serial)) {
    if (p.i == p.j) continue;
    const double d = (s.positions.row(static_cast<Eigen::Index>(p.j)) + p.shift.transpose() -
                      s.positions.row(static_cast<Eigen::Index>(p.i))).norm();
    if (d >= radii[p.i] + radii[p.j]) continue;
    adj[p.i].push_back({p.j, p.image});
    adj[p.j].push_back({p.i, {-p.image[0], -p.image[1], -p.image[2]}});
  }
  std::vector<bool> seen(s.size(), false);
  for (std::size_t start = 0; start < s.size(); ++start) {
    if (seen[start]) continue;
    seen[start] = true;
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& e : adj[u]) {
        if (seen[e.to]) continue;
        seen[e.to] = true;
        for (std::size_t a = 0; a < 3; ++a) off[e.to][a] = off[u][a] + e.image[a];
        stack.push_back(e.to);
      }
    }
  }
  return off;
}

}  // namespace spescreen
