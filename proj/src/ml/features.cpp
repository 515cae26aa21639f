#include "spescreen/ml/features.hpp"

#include <cmath>

#include "spescreen/error.hpp"

namespace spescreen::ml {

std::vector<std::string> feature_names() {
  return {"tanimoto", "fosc_abs", "fosc_em", "lambda_abs_nm", "lambda_em_nm",
          "soc",      "rsoc",     "gs_soc",  "s_vc",          "e_bind_eV"};
}

Eigen::MatrixXd feature_matrix(const std::vector<spectro::CandidateRecord>& records) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), 10);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    r.validate();
    x.row(static_cast<Eigen::Index>(i)) << r.tanimoto, r.fosc_abs, r.fosc_em, r.lambda_abs_nm, r.lambda_em_nm, r.soc,
        r.rsoc, r.gs_soc, r.s_vc, r.e_bind_eV;
  }
  return x;
}

std::vector<bool> label_good(const std::vector<spectro::CandidateRecord>& records, const LabelOptions& opts) {
  if (records.empty()) throw ValidationError("no records to label");
  if (!(opts.lambda_host_abs_nm > 0.0)) throw ValidationError("host absorption wavelength must be set (> 0 nm)");
  double fem = 0, svc = 0, soc = 0;
  for (const auto& r : records) {
    r.validate();
    fem += r.fosc_em;
    svc += r.s_vc;
    soc += r.soc;
  }
  const double n = static_cast<double>(records.size());
  fem /= n;
  svc /= n;
  soc /= n;
  std::vector<bool> good(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    bool g = r.fosc_em > fem && r.lambda_abs_nm > opts.lambda_host_abs_nm && r.s_vc < svc;
    if (opts.include_soc) g = g && r.soc < soc;
    good[i] = g;
  }
  return good;
}

Standardized standardize(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw ValidationError("need at least two rows to standardize");
  if (!x.allFinite()) throw ValidationError("feature matrix has non-finite entries");
  Standardized s;
  const double n = static_cast<double>(x.rows());
  std::vector<double> means, sds;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double m = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - m).square().sum() / n);
    if (sd <= 1e-12 * (1.0 + std::abs(m))) {
      s.dropped.push_back(static_cast<int>(c));
      continue;
    }
    s.kept.push_back(static_cast<int>(c));
    means.push_back(m);
    sds.push_back(sd);
  }
  const auto k = static_cast<Eigen::Index>(s.kept.size());
  s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), k);
  s.stddev = Eigen::Map<Eigen::VectorXd>(sds.data(), k);
  s.z.resize(x.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    s.z.col(c) = (x.col(s.kept[static_cast<std::size_t>(c)]).array() - s.mean[c]) / s.stddev[c];
  }
  return s;
}

PCAResult pca(const Eigen::MatrixXd& x, int k) {
  PCAResult out;
  out.scaling = standardize(x);
  const auto& z = out.scaling.z;
  const auto p = z.cols();
  if (k < 1 || k > p) throw ValidationError("number of components must be in [1, retained columns]");
  const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(z.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("covariance diagonalization failed");
  Eigen::MatrixXd v(p, p);
  out.explained_variance.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index src = p - 1 - j;
    v.col(j) = es.eigenvectors().col(src);
    out.explained_variance[j] = std::max(0.0, es.eigenvalues()[src]);
    Eigen::Index at = 0;
    v.col(j).cwiseAbs().maxCoeff(&at);
    if (v(at, j) < 0.0) v.col(j) *= -1.0;
  }
  out.explained_ratio = out.explained_variance / out.explained_variance.sum();
  out.components = v.leftCols(k);
  out.scores = z * out.components;
  return out;
}

}  // namespace spescreen::ml
