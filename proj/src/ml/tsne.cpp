#include "spescreen/ml/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "spescreen/chem/similarity.hpp"
#include "spescreen/error.hpp"
#include "spescreen/rng.hpp"

namespace spescreen::ml {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

template <class F>
void rows(Eigen::Index n, Exec exec, F&& body) {
  if (exec == Exec::Serial) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
  } else {
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < n; ++i) body(i);
  }
}

void check_distances(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols()) throw ValidationError("distance matrix must be square");
  if (!d.allFinite() || (d.array() < 0.0).any()) throw ValidationError("distances must be finite and >= 0");
  if ((d - d.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + d.cwiseAbs().maxCoeff())) {
    throw ValidationError("distance matrix must be symmetric");
  }
}

// unnormalized Student-t kernel and its total
double student(const Eigen::MatrixXd& y, Eigen::MatrixXd& num, Exec exec) {
  const auto n = y.rows();
  num.resize(n, n);
  rows(n, exec, [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < n; ++j) num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
  });
  double z = 0.0;  // fixed order, so serial and parallel agree bitwise
  for (Eigen::Index i = 0; i < n; ++i) z += num.row(i).sum();
  return z;
}

}  // namespace

Eigen::MatrixXd jaccard_distances(std::span<const chem::Fingerprint> fps, Exec exec) {
  const auto n = static_cast<Eigen::Index>(fps.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  rows(n, exec, [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) d(i, j) = 1.0 - chem::tanimoto(fps[static_cast<std::size_t>(i)], fps[static_cast<std::size_t>(j)]);
    }
  });
  return d;
}

Eigen::MatrixXd euclidean_distances(const Eigen::MatrixXd& x, Exec exec) {
  const auto n = x.rows();
  Eigen::MatrixXd d(n, n);
  rows(n, exec, [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  });
  return d;
}

Calibration calibrate(const Eigen::MatrixXd& distances, double perplexity, Exec exec) {
  check_distances(distances);
  const auto n = distances.rows();
  if (!(perplexity > 0.0)) throw ValidationError("perplexity must be positive");
  if (n < 2 || perplexity >= static_cast<double>(n)) throw ValidationError("perplexity must be below the item count");
  Calibration c;
  c.p = Eigen::MatrixXd::Zero(n, n);
  c.beta.resize(n);
  c.entropy_error.resize(n);
  c.perplexity_error.resize(n);
  const double target = std::log(perplexity);
  rows(n, exec, [&](Eigen::Index i) {
    Eigen::VectorXd d2 = distances.row(i).transpose().array().square();
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d2[j]);
    Eigen::VectorXd p(n);
    auto entropy = [&](double beta) {
      double sum = 0.0, acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double e = j == i ? 0.0 : std::exp(-beta * (d2[j] - dmin));
        p[j] = e;
        sum += e;
        acc += e * (d2[j] - dmin);
      }
      p /= sum;
      return std::log(sum) + beta * acc / sum;
    };
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = entropy(beta);
    for (int it = 0; it < 200 && std::abs(h - target) > 1e-13; ++it) {
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      h = entropy(beta);
      if (!std::isinf(hi) && hi - lo <= 1e-15 * hi) break;
    }
    c.p.row(i) = p.transpose();
    c.beta[i] = beta;
    c.entropy_error[i] = std::abs(h - target);
    c.perplexity_error[i] = std::abs(std::exp(h) - perplexity);
  });
  return c;
}

double kl_divergence(const Eigen::MatrixXd& p_joint, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd num;
  const double z = student(y, num, Exec::Serial);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      const double p = p_joint(i, j);
      if (i == j || p <= 0.0) continue;
      kl += p * std::log(p / std::max(num(i, j) / z, kEps));
    }
  return kl;
}

Eigen::MatrixXd tsne_gradient(const Eigen::MatrixXd& p_joint, const Eigen::MatrixXd& y, Exec exec) {
  const auto n = y.rows();
  Eigen::MatrixXd num;
  const double z = student(y, num, exec);
  Eigen::MatrixXd g(n, y.cols());
  rows(n, exec, [&](Eigen::Index i) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(y.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double q = std::max(num(i, j) / z, kEps);
      acc += (p_joint(i, j) - q) * num(i, j) * (y.row(i) - y.row(j));
    }
    g.row(i) = 4.0 * acc;
  });
  return g;
}

EmbeddingMap tsne(const Eigen::MatrixXd& distances, const TSNEOptions& opts, Exec exec) {
  check_distances(distances);
  const auto n = distances.rows();
  if (distances.maxCoeff() <= 0.0) throw ValidationError("all pairwise distances are zero");
  if (opts.iterations < 1 || opts.exaggeration_iters < 0 || opts.refine_iters < 0 ||
      opts.exaggeration_iters + opts.refine_iters > opts.iterations) {
    throw ValidationError("inconsistent t-SNE iteration schedule");
  }
  EmbeddingMap out;
  out.perplexity = opts.perplexity;
  if (static_cast<double>(n) < 3.0 * opts.perplexity) {
    out.warnings.push_back(fmt::format("{} items for perplexity {}: fewer than 3x perplexity", n, opts.perplexity));
  }
  const auto cal = calibrate(distances, opts.perplexity, exec);
  out.max_entropy_error = cal.entropy_error.maxCoeff();
  Eigen::MatrixXd p = (cal.p + cal.p.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(kEps);
  p.diagonal().setZero();

  Rng rng(opts.seed);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) y(i, c) = 1e-4 * rng.normal();

  const double lr = opts.learning_rate > 0 ? opts.learning_rate
                                           : std::max(static_cast<double>(n) / opts.exaggeration / 4.0, 50.0);
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2), gains = Eigen::MatrixXd::Ones(n, 2);
  const int main_iters = opts.iterations - opts.refine_iters;
  for (int it = 0; it < main_iters; ++it) {
    const bool early = it < opts.exaggeration_iters;
    const double mom = early ? 0.5 : 0.8;
    const Eigen::MatrixXd g = tsne_gradient(early ? Eigen::MatrixXd(p * opts.exaggeration) : p, y, exec);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) {
        const bool same = (g(i, c) > 0) == (update(i, c) > 0);
        gains(i, c) = std::max(same ? gains(i, c) * 0.8 : gains(i, c) + 0.2, 0.01);
        update(i, c) = mom * update(i, c) - lr * gains(i, c) * g(i, c);
      }
    y += update;
    if (!y.allFinite()) throw NumericalError("t-SNE diverged");
  }

  // monotone refinement: steepest descent with backtracking
  double kl = kl_divergence(p, y);
  double eta = lr;
  for (int it = 0; it < opts.refine_iters; ++it) {
    const Eigen::MatrixXd g = tsne_gradient(p, y, exec);
    bool moved = false;
    for (int h = 0; h < 40; ++h, eta *= 0.5) {
      const Eigen::MatrixXd yt = y - eta * g;
      const double kt = kl_divergence(p, yt);
      if (kt <= kl) {
        y = yt;
        kl = kt;
        moved = true;
        eta *= 2.0;
        break;
      }
    }
    out.refine_kl.push_back(kl);
    if (!moved) break;
  }
  out.kl = kl;
  out.y = y;
  return out;
}

namespace {

struct CondensedCluster {
  int parent = -1;
  double birth = 0.0;      // lambda at which the cluster appears
  double stability = 0.0;
  std::vector<int> children;
};

}  // namespace

Clustering hdbscan(const Eigen::MatrixXd& points, const HDBSCANOptions& opts) {
  if (opts.min_cluster_size < 2) throw ValidationError("min_cluster_size must be >= 2");
  if (!points.allFinite()) throw ValidationError("non-finite coordinates");
  const auto n = static_cast<int>(points.rows());
  Clustering out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  if (n < opts.min_cluster_size) return out;
  const int mcs = opts.min_cluster_size;
  const int k = std::min(n, opts.min_samples > 0 ? opts.min_samples : mcs);

  const Eigen::MatrixXd d = euclidean_distances(points);
  Eigen::VectorXd core(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = d.col(i);  // symmetric; self at distance 0 counts
    std::nth_element(row.data(), row.data() + (k - 1), row.data() + n);
    core[i] = row[k - 1];
  }
  auto mreach = [&](int a, int b) { return std::max({core[a], core[b], d(a, b)}); };

  // Prim on the dense mutual-reachability graph
  struct Edge {
    int a, b;
    double w;
  };
  std::vector<Edge> mst;
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<std::size_t>(n), -1);
  int cur = 0;
  in[0] = 1;
  for (int step = 1; step < n; ++step) {
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (in[static_cast<std::size_t>(j)]) continue;
      const double w = mreach(cur, j);
      if (w < best[static_cast<std::size_t>(j)]) {
        best[static_cast<std::size_t>(j)] = w;
        from[static_cast<std::size_t>(j)] = cur;
      }
      if (next < 0 || best[static_cast<std::size_t>(j)] < best[static_cast<std::size_t>(next)]) next = j;
    }
    in[static_cast<std::size_t>(next)] = 1;
    mst.push_back({from[static_cast<std::size_t>(next)], next, best[static_cast<std::size_t>(next)]});
    cur = next;
  }
  std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  // single-linkage dendrogram: nodes n..2n-2
  const int total = 2 * n - 1;
  std::vector<int> left(static_cast<std::size_t>(total), -1), right(static_cast<std::size_t>(total), -1),
      size(static_cast<std::size_t>(total), 1);
  std::vector<double> height(static_cast<std::size_t>(total), 0.0);
  std::vector<int> uf(static_cast<std::size_t>(total));
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[static_cast<std::size_t>(x)] != x) x = uf[static_cast<std::size_t>(x)];
    return x;
  };
  int node = n;
  for (const auto& e : mst) {
    const int ra = find(e.a), rb = find(e.b);
    const auto u = static_cast<std::size_t>(node);
    left[u] = ra;
    right[u] = rb;
    size[u] = size[static_cast<std::size_t>(ra)] + size[static_cast<std::size_t>(rb)];
    height[u] = e.w;
    uf[static_cast<std::size_t>(ra)] = uf[static_cast<std::size_t>(rb)] = node;
    ++node;
  }

  // condense
  std::vector<CondensedCluster> cl(1);
  std::vector<int> fell_from(static_cast<std::size_t>(n), 0);
  std::vector<double> fell_at(static_cast<std::size_t>(n), 0.0);
  auto lambda_of = [&](int nd) { return 1.0 / std::max(height[static_cast<std::size_t>(nd)], 1e-300); };
  auto drop_all = [&](int nd, int c, double lam) {
    std::vector<int> st{nd};
    while (!st.empty()) {
      const int x = st.back();
      st.pop_back();
      if (x < n) {
        fell_from[static_cast<std::size_t>(x)] = c;
        fell_at[static_cast<std::size_t>(x)] = lam;
        cl[static_cast<std::size_t>(c)].stability += lam - cl[static_cast<std::size_t>(c)].birth;
      } else {
        st.push_back(left[static_cast<std::size_t>(x)]);
        st.push_back(right[static_cast<std::size_t>(x)]);
      }
    }
  };
  std::vector<std::pair<int, int>> work{{total - 1, 0}};
  while (!work.empty()) {
    const auto [nd, c] = work.back();
    work.pop_back();
    if (nd < n) {  // a lone point reached while its cluster carries on
      drop_all(nd, c, cl[static_cast<std::size_t>(c)].birth);
      continue;
    }
    const double lam = lambda_of(nd);
    const int l = left[static_cast<std::size_t>(nd)], r = right[static_cast<std::size_t>(nd)];
    const bool lbig = size[static_cast<std::size_t>(l)] >= mcs, rbig = size[static_cast<std::size_t>(r)] >= mcs;
    if (lbig && rbig) {
      for (int ch : {l, r}) {
        const int id = static_cast<int>(cl.size());
        cl.push_back({c, lam, 0.0, {}});
        cl[static_cast<std::size_t>(c)].children.push_back(id);
        cl[static_cast<std::size_t>(c)].stability +=
            (lam - cl[static_cast<std::size_t>(c)].birth) * size[static_cast<std::size_t>(ch)];
        work.push_back({ch, id});
      }
    } else if (lbig) {
      drop_all(r, c, lam);
      work.push_back({l, c});
    } else if (rbig) {
      drop_all(l, c, lam);
      work.push_back({r, c});
    } else {
      drop_all(l, c, lam);
      drop_all(r, c, lam);
    }
  }
  // children are created after parents, so descending ids is bottom-up
  const auto nc = static_cast<int>(cl.size());
  std::vector<char> selected(static_cast<std::size_t>(nc), 0);
  if (opts.selection == ClusterSelection::Leaf) {
    for (int c = 1; c < nc; ++c) selected[static_cast<std::size_t>(c)] = cl[static_cast<std::size_t>(c)].children.empty();
  } else {
    std::vector<double> value(static_cast<std::size_t>(nc), 0.0);
    for (int c = nc - 1; c >= 1; --c) {
      double sub = 0.0;
      for (int ch : cl[static_cast<std::size_t>(c)].children) sub += value[static_cast<std::size_t>(ch)];
      const double own = cl[static_cast<std::size_t>(c)].stability;
      if (cl[static_cast<std::size_t>(c)].children.empty() || own >= sub) {
        selected[static_cast<std::size_t>(c)] = 1;
        value[static_cast<std::size_t>(c)] = own;
        std::vector<int> st(cl[static_cast<std::size_t>(c)].children);
        while (!st.empty()) {
          const int x = st.back();
          st.pop_back();
          selected[static_cast<std::size_t>(x)] = 0;
          for (int y : cl[static_cast<std::size_t>(x)].children) st.push_back(y);
        }
      } else {
        value[static_cast<std::size_t>(c)] = sub;
      }
    }
  }
  std::vector<int> label_of(static_cast<std::size_t>(nc), -1);
  for (int c = 0; c < nc; ++c)
    if (selected[static_cast<std::size_t>(c)]) label_of[static_cast<std::size_t>(c)] = out.clusters++;
  for (int i = 0; i < n; ++i) {
    int c = fell_from[static_cast<std::size_t>(i)];
    while (c > 0 && !selected[static_cast<std::size_t>(c)]) c = cl[static_cast<std::size_t>(c)].parent;
    out.labels[static_cast<std::size_t>(i)] = c > 0 ? label_of[static_cast<std::size_t>(c)] : -1;
  }
  return out;
}

}  // namespace spescreen::ml
