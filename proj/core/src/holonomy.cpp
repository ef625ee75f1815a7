#include "finsler/holonomy.hpp"

#include "finsler/deform.hpp"
#include "finsler/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace finsler {

VectorFieldTM lie_bracket(const VectorFieldTM& X, const VectorFieldTM& Y) {
  if (X.dim() != Y.dim())
    throw std::invalid_argument("bracket of fields with different dimensions");
  int n = X.dim();
  VectorFieldTM out;
  out.a.resize(n);
  out.b.resize(n);
  for (int i = 0; i < n; ++i) {
    out.a[i] = X.apply(Y.a[i]) - Y.apply(X.a[i]);
    out.b[i] = X.apply(Y.b[i]) - Y.apply(X.b[i]);
  }
  return out;
}

InvarianceReport is_holonomy_invariant(const SprayGeometry& geo, const Expr& P,
                                       std::span<const ChartPoint> samples,
                                       double tol) {
  InvarianceReport report;
  report.tol = tol;
  report.samples = static_cast<int>(samples.size());
  report.note =
      "pointwise surrogate: d_h P = 0 tested on the sample set only";

  std::vector<Expr> deltas;
  for (const VectorFieldTM& d : geo.horizontal_frame())
    deltas.push_back(d.apply(P));

  for (const ChartPoint& p : samples) {
    double scale = std::max(1.0, std::abs(eval(P, p)));
    for (const Expr& dP : deltas)
      report.max_residual =
          std::max(report.max_residual, std::abs(eval(dP, p)) / scale);
  }
  report.passed = report.max_residual < tol;
  return report;
}

// ---------------------------------------------------------------------------
// Bracket closure
// ---------------------------------------------------------------------------

namespace {

struct SpanBuilder {
  Eigen::MatrixXd stacked;  // ambient x rank, accepted vectors
  double tol;

  SpanBuilder(int ambient, double tol_) : stacked(ambient, 0), tol(tol_) {}

  int rank() const { return static_cast<int>(stacked.cols()); }

  bool would_increase(const Eigen::VectorXd& v) const {
    if (v.norm() == 0.0) return false;
    Eigen::MatrixXd trial(stacked.rows(), stacked.cols() + 1);
    if (stacked.cols() > 0) trial.leftCols(stacked.cols()) = stacked;
    trial.col(stacked.cols()) = v;
    return numeric_rank(trial, tol) > rank();
  }

  void push(const Eigen::VectorXd& v) {
    Eigen::MatrixXd grown(stacked.rows(), stacked.cols() + 1);
    if (stacked.cols() > 0) grown.leftCols(stacked.cols()) = stacked;
    grown.col(stacked.cols()) = v;
    stacked = std::move(grown);
  }
};

}  // namespace

DistributionSpan holonomy_closure(std::vector<VectorFieldTM> generators,
                                  std::vector<std::string> names,
                                  const ChartPoint& p, int max_depth,
                                  double tol) {
  if (generators.empty())
    throw std::invalid_argument("closure needs at least one generator");
  if (names.size() != generators.size())
    throw std::invalid_argument("one name per generator");
  int n = generators.front().dim();
  int ambient = 2 * n;
  if (max_depth < 1) max_depth = ambient;

  DistributionSpan span{p, {}, {}, 0, tol, false, false};
  SpanBuilder builder(ambient, tol);

  struct Entry {
    VectorFieldTM field;
    std::string name;
    int depth;
  };
  std::vector<Entry> all;
  std::vector<std::size_t> frontier;

  for (std::size_t i = 0; i < generators.size(); ++i) {
    Eigen::VectorXd v = generators[i].value(p);
    if (builder.would_increase(v)) {
      builder.push(v);
      span.vectors.push_back(v);
      span.provenance.push_back(names[i]);
    }
    all.push_back({std::move(generators[i]), names[i], 1});
    frontier.push_back(i);
  }

  // Breadth-first over bracket words. Every produced field stays available
  // for deeper bracketing; only values that grow the span are kept in it.
  for (int depth = 2; depth <= max_depth && builder.rank() < ambient; ++depth) {
    bool grew = false;
    std::vector<std::size_t> next;
    std::size_t known = all.size();
    for (std::size_t fi : frontier) {
      for (std::size_t gi = 0; gi < known; ++gi) {
        if (fi == gi) continue;
        if (all[gi].depth > all[fi].depth) continue;  // climb once per pair
        if (all[fi].depth == 1 && all[gi].depth == 1 && gi > fi) continue;
        VectorFieldTM bracket = lie_bracket(all[fi].field, all[gi].field);
        std::string name = "[" + all[fi].name + "," + all[gi].name + "]";
        Eigen::VectorXd v = bracket.value(p);
        if (builder.would_increase(v)) {
          builder.push(v);
          span.vectors.push_back(v);
          span.provenance.push_back(name);
          grew = true;
        }
        all.push_back({std::move(bracket), std::move(name), depth});
        next.push_back(all.size() - 1);
        if (builder.rank() >= ambient) break;
      }
      if (builder.rank() >= ambient) break;
    }
    frontier = std::move(next);
    if (builder.rank() >= ambient) break;
    if (!grew) {
      span.saturated = true;
      break;
    }
  }
  span.rank = builder.rank();
  if (span.rank >= ambient) span.saturated = true;
  // stopped by the depth cap without stabilizing: rank is only a lower bound
  if (!span.saturated) span.depth_exhausted = true;
  return span;
}

DistributionSpan holonomy_rank(const SprayGeometry& geo, const ChartPoint& p,
                               int max_depth, double tol) {
  require_in_domain(geo.domain(), p);
  std::vector<VectorFieldTM> generators = geo.horizontal_frame();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < generators.size(); ++i)
    names.push_back("d" + std::to_string(i + 1));
  return holonomy_closure(std::move(generators), std::move(names), p,
                          max_depth, tol);
}

ImageInvarianceReport curvature_image_invariance(const SprayGeometry& geo,
                                                 const Expr& P,
                                                 const ChartPoint& p,
                                                 double tol) {
  ImageInvarianceReport report;
  report.tol = tol;
  int n = geo.dim();

  std::vector<double> Py(n);
  double grad_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    Py[i] = eval(differentiate(P, Var::y(i)), p);
    grad_scale = std::max(grad_scale, std::abs(Py[i]));
  }

  Eigen::MatrixXd phi = geo.jacobi(p);
  CurvatureValue R = geo.curvature(p);

  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    double dP = 0.0;
    for (int i = 0; i < n; ++i) dP += phi(i, j) * Py[i];
    double scale = std::max(1.0, phi.col(j).norm() * std::max(1.0, grad_scale));
    worst = std::max(worst, std::abs(dP) / scale);
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      double dP = 0.0, norm2 = 0.0;
      for (int i = 0; i < n; ++i) {
        dP += R.R[i](j, k) * Py[i];
        norm2 += R.R[i](j, k) * R.R[i](j, k);
      }
      double scale =
          std::max(1.0, std::sqrt(norm2) * std::max(1.0, grad_scale));
      worst = std::max(worst, std::abs(dP) / scale);
    }
  report.max_residual = worst;
  report.passed = worst < tol;
  return report;
}

EnergyObstructionReport energy_obstruction_test(const SprayGeometry& geo,
                                                const Expr& candidate_energy,
                                                const DistributionSpan& span,
                                                double tol) {
  EnergyObstructionReport report;
  report.tol = tol;
  int n = geo.dim();
  const ChartPoint& p = span.point;

  Eigen::VectorXd grad(2 * n);
  for (int s = 0; s < 2 * n; ++s)
    grad[s] = eval(differentiate(candidate_energy, Var::from_slot(s, n)), p);
  double scale = std::max(1.0, std::abs(eval(candidate_energy, p)));

  for (const Eigen::VectorXd& v : span.vectors) {
    double unit = std::max(1.0, v.norm());
    report.derivatives.push_back(grad.dot(v) / (scale * unit));
    report.max_derivative =
        std::max(report.max_derivative, std::abs(report.derivatives.back()));
  }
  report.full_rank = (span.rank == 2 * n);
  report.not_metrizable = report.full_rank && report.max_derivative > tol;
  return report;
}

DegeneracyReport linear_factor_degeneracy(std::span<const Expr> a,
                                          const Expr& theta,
                                          const ChartPoint& p) {
  int n = p.dim();
  if (n < 2)
    throw std::invalid_argument(
        "linear factor degeneracy needs dimension >= 2");
  if (static_cast<int>(a.size()) != n)
    throw std::invalid_argument("need one coefficient a_i per dimension");

  Expr P = Expr::constant(0.0, n);
  for (int i = 0; i < n; ++i)
    P = P + a[i] * Expr::variable(Var::y(i), n);
  if (std::abs(eval(P, p)) <= 1e-12)
    throw DomainError("linear factor vanishes at the probe point", P.str());

  Expr candidate = P.squared() * exp(theta);
  MetricValue m = metric_tensor_of_energy(candidate, p);
  DegeneracyReport report;
  report.g = m.g;
  report.rank = m.rank;
  report.rank_is_one = (m.rank == 1);
  return report;
}

FullRankReport full_rank_obstruction(const SprayGeometry& base, const Expr& P,
                                     double lambda, const ChartPoint& p,
                                     int max_depth, double lambda_margin) {
  FullRankReport report;
  int n = base.dim();

  // nonlinearity witness: some second fiber derivative of P is nonzero at p
  double scale = std::max(1.0, std::abs(eval(P, p)));
  double pij_max = 0.0;
  for (int i = 0; i < n; ++i) {
    Expr Pi = differentiate(P, Var::y(i));
    for (int j = 0; j < n; ++j)
      pij_max = std::max(
          pij_max, std::abs(eval(differentiate(Pi, Var::y(j)), p)) / scale);
  }
  report.nonlinear_ok = pij_max > 1e-9;

  BadLambdaSet bad = bad_lambda_set(base, P, p);
  report.bad_lambdas = bad.values;
  report.lambda_distance = std::numeric_limits<double>::infinity();
  for (double b : bad.values)
    report.lambda_distance =
        std::min(report.lambda_distance, std::abs(lambda - b));
  report.lambda_ok = report.lambda_distance > lambda_margin;

  if (!report.nonlinear_ok || !report.lambda_ok) return report;

  DeformedSpray d = deform_spray(base, P, lambda);
  report.span = holonomy_rank(d.deformed_geometry, p, max_depth);
  report.full_rank = (report.span->rank == 2 * n);
  if (base.has_finsler()) {
    report.energy_obstruction = energy_obstruction_test(
        d.deformed_geometry, base.energy(), *report.span);
    report.not_metrizable = report.energy_obstruction.not_metrizable;
  } else {
    report.not_metrizable = report.full_rank;
  }
  return report;
}

}  // namespace finsler
