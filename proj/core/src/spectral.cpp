#include "finsler/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace finsler {

SpectralData spectral_of_matrix(const Eigen::MatrixXd& phi,
                                const Eigen::VectorXd& y) {
  int n = static_cast<int>(phi.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> solver(phi);
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  double radius = 0.0;
  for (int i = 0; i < n; ++i) radius = std::max(radius, std::abs(values[i]));

  SpectralData data;
  data.complex_flag = false;
  for (int i = 0; i < n; ++i)
    if (std::abs(values[i].imag()) > 1e-7 * std::max(radius, 1e-300))
      data.complex_flag = true;

  // order by real part, then find the distinguished zero along y
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return values[a].real() < values[b].real();
  });

  data.eigenvalues.resize(n);
  data.eigenvectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    data.eigenvalues[k] = values[order[k]].real();
    Eigen::VectorXd col = vectors.col(order[k]).real();
    double norm = col.norm();
    if (norm > 0) col /= norm;
    data.eigenvectors.col(k) = col;
  }

  Eigen::VectorXd yhat = y / y.norm();
  double zero_tol = std::max(1e-7 * radius, 1e-9);
  int best = -1;
  double best_alignment = -1.0;
  for (int k = 0; k < n; ++k) {
    if (std::abs(data.eigenvalues[k]) > zero_tol) continue;
    double alignment = std::abs(data.eigenvectors.col(k).dot(yhat));
    if (alignment > best_alignment) {
      best_alignment = alignment;
      best = k;
    }
  }
  if (best < 0) {
    // fall back to the smallest magnitude (a contract violation upstream)
    best = 0;
    for (int k = 1; k < n; ++k)
      if (std::abs(data.eigenvalues[k]) < std::abs(data.eigenvalues[best]))
        best = k;
  }
  data.spray_index = best;

  for (int k = 0; k < n; ++k)
    if (k != best) data.principal.push_back(data.eigenvalues[k]);
  std::sort(data.principal.begin(), data.principal.end());

  double scale = std::max(1.0, radius);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd v = data.eigenvectors.col(k);
    data.residual = std::max(
        data.residual,
        (phi * v - data.eigenvalues[k] * v).norm() / scale);
  }
  return data;
}

SpectralData principal_curvatures(const SprayGeometry& geo,
                                  const ChartPoint& p, const Expr* factor) {
  SpectralData data = spectral_of_matrix(geo.jacobi(p), p.y());
  if (factor) {
    // push non-spray eigenvectors into the adapted horizontal span:
    // X -> X - (d_J P(X) / P) S, which leaves members of that span fixed
    int n = geo.dim();
    double Pv = eval(*factor, p);
    if (std::abs(Pv) <= 1e-12)
      throw DomainError("projective factor vanishes at the point",
                        factor->str());
    Eigen::VectorXd Py(n);
    for (int i = 0; i < n; ++i)
      Py[i] = eval(differentiate(*factor, Var::y(i)), p);
    for (int k = 0; k < n; ++k) {
      if (k == data.spray_index) continue;
      Eigen::VectorXd v = data.eigenvectors.col(k);
      Eigen::VectorXd corrected = v - (Py.dot(v) / Pv) * p.y();
      double norm = corrected.norm();
      if (norm > 1e-12) data.eigenvectors.col(k) = corrected / norm;
    }
  }
  return data;
}

FlagConstancyReport flag_constancy_check(const SprayGeometry& geo,
                                         std::span<const ChartPoint> points,
                                         double tol) {
  if (points.size() < 2)
    throw std::invalid_argument("flag constancy needs at least two points");
  if (!geo.has_finsler())
    throw std::invalid_argument("flag constancy needs a Finsler spray");

  FlagConstancyReport report;
  report.tol = tol;
  const Expr& F = geo.finsler().F;
  for (const ChartPoint& p : points) {
    double f2 = eval(F, p);
    f2 *= f2;
    SpectralData data = principal_curvatures(geo, p);
    for (double kappa : data.principal) report.ratios.push_back(kappa / f2);
  }
  auto [lo, hi] = std::minmax_element(report.ratios.begin(), report.ratios.end());
  report.spread = *hi - *lo;
  report.kappa =
      std::accumulate(report.ratios.begin(), report.ratios.end(), 0.0) /
      static_cast<double>(report.ratios.size());
  report.passed = report.spread < tol;
  return report;
}

ShiftReport eigen_shift_check(const DeformedSpray& d, const ChartPoint& p,
                              double tol) {
  ShiftReport report;
  report.tol = tol;

  SpectralData base = principal_curvatures(d.base_geometry, p);
  double Pv = eval(d.P, p);
  double shift = d.lambda * d.lambda * Pv * Pv;

  report.predicted.push_back(0.0);
  double scale = 1e-9;
  for (double kappa : base.principal) {
    report.predicted.push_back(kappa + shift);
    scale = std::max(scale, std::abs(kappa) + shift);
  }
  std::sort(report.predicted.begin(), report.predicted.end());

  Eigen::MatrixXd phi_tilde = d.deformed_geometry.jacobi(p);
  SpectralData deformed = spectral_of_matrix(phi_tilde, p.y());
  for (int k = 0; k < deformed.eigenvalues.size(); ++k)
    report.measured.push_back(deformed.eigenvalues[k]);
  std::sort(report.measured.begin(), report.measured.end());

  for (std::size_t k = 0; k < report.measured.size(); ++k)
    report.max_mismatch =
        std::max(report.max_mismatch,
                 std::abs(report.measured[k] - report.predicted[k]) / scale);
  report.passed = report.max_mismatch < tol;
  return report;
}

NecessaryConditionReport necessary_condition_check(const SprayGeometry& geo,
                                                   const Expr& Ptilde,
                                                   const ChartPoint& p,
                                                   double tol) {
  NecessaryConditionReport report;
  report.tol = tol;
  double Pv = eval(Ptilde, p);
  if (std::abs(Pv) <= 1e-12)
    throw DomainError("projective factor vanishes at the point", Ptilde.str());

  SpectralData data = principal_curvatures(geo, p);
  double scale = std::max(1.0, Pv * Pv);
  report.best = std::numeric_limits<double>::infinity();
  report.all_curvatures_nonnegative = true;
  for (double kappa : data.principal) {
    report.residuals.push_back(Pv * Pv + kappa);
    report.best = std::min(report.best, std::abs(report.residuals.back()));
    scale = std::max(scale, std::abs(kappa));
    if (kappa < -tol) report.all_curvatures_nonnegative = false;
  }
  report.satisfied = report.best / scale < tol;
  if (report.satisfied) {
    report.verdict = "metrizability not excluded: P~^2 + kappa_alpha = 0 holds";
  } else if (report.all_curvatures_nonnegative) {
    report.verdict =
        "not metrizable: principal curvatures are all non-negative, so no "
        "nontrivial invariant factor can satisfy P~^2 + kappa_alpha = 0";
  } else {
    report.verdict =
        "not metrizable: P~^2 + kappa_alpha != 0 for every principal "
        "curvature";
  }
  return report;
}

BadLambdaSet bad_lambda_set(const SprayGeometry& geo, const Expr& P,
                            const ChartPoint& p) {
  double Pv = eval(P, p);
  if (std::abs(Pv) <= 1e-12)
    throw DomainError("projective factor vanishes at the point", P.str());

  SpectralData data = principal_curvatures(geo, p);
  double radius = 0.0;
  for (double kappa : data.principal)
    radius = std::max(radius, std::abs(kappa));
  double zero_tol = std::max(1e-12, 1e-9 * radius);

  BadLambdaSet set;
  std::vector<double> raw;
  for (double kappa : data.principal) {
    if (std::abs(kappa) <= zero_tol) {
      // kappa = 0 forces lambda = 0: the undeformed case, flagged trivial
      set.includes_trivial_zero = true;
      raw.push_back(0.0);
    } else if (kappa < 0.0) {
      double root = std::sqrt(-kappa) / std::abs(Pv);
      raw.push_back(root);
      raw.push_back(-root);
    }
  }
  std::sort(raw.begin(), raw.end());
  for (double v : raw) {
    if (!set.values.empty() &&
        std::abs(v - set.values.back()) <= 1e-9 * std::max(1.0, std::abs(v)))
      continue;
    set.values.push_back(v);
  }
  return set;
}

}  // namespace finsler
