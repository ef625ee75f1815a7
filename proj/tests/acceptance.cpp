// Acceptance suite: one line per criterion, nonzero exit when any fails.
#include "finsler/deform.hpp"
#include "finsler/holonomy.hpp"
#include "finsler/spectral.hpp"
#include "finsler/zoo.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace finsler;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

const SprayGeometry& klein2() {
  static SprayGeometry geo =
      SprayGeometry::geodesic(catalog_get("klein", 2).metric);
  return geo;
}

// 1. Klein spray formula at 100 seeded points within 1e-9, under 5 s.
Outcome spray_formula() {
  auto begin = std::chrono::steady_clock::now();
  CatalogEntry entry = catalog_get("klein", 2);
  SprayGeometry geo = SprayGeometry::geodesic(entry.metric);
  auto points = sample_chart_points(2, entry.metric.domain, 100, 42, 0.7);
  double worst = 0.0;
  for (const ChartPoint& p : points) {
    Eigen::VectorXd expected =
        p.x().dot(p.y()) / (1.0 - p.x().squaredNorm()) * p.y();
    Eigen::VectorXd computed = geo.spray_values(p);
    worst = std::max(worst, (computed - expected).norm() /
                                std::max(1.0, expected.norm()));
  }
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
          .count();
  return {worst < 1e-9 && seconds < 5.0,
          "max rel err " + fmt(worst) + " over 100 points, " + fmt(seconds) +
              " s"};
}

// 2. kappa_alpha = -F^2 with spread < 1e-5 over 20 points, n in {2, 3}.
Outcome constant_flag_curvature() {
  std::string detail;
  bool ok = true;
  for (int n : {2, 3}) {
    CatalogEntry entry = catalog_get("klein", n);
    SprayGeometry geo = SprayGeometry::geodesic(entry.metric);
    auto points = sample_chart_points(n, entry.metric.domain, 20, 42, 0.7);
    FlagConstancyReport report = flag_constancy_check(geo, points, 1e-5);
    ok = ok && report.passed && std::abs(report.kappa + 1.0) < 1e-5;
    detail += "n=" + std::to_string(n) + ": kappa " + fmt(report.kappa) +
              " spread " + fmt(report.spread) + "  ";
  }
  return {ok, detail};
}

// 3. Deformation by P = F at lambda = 1 is flat; both Phi~ routes agree.
Outcome deformation_flatness() {
  const SprayGeometry& geo = klein2();
  DeformedSpray d = deform_spray(geo, geo.finsler().F, 1.0);
  auto points = sample_chart_points(2, geo.domain(), 20, 42, 0.7);
  double worst_norm = 0.0, worst_gap = 0.0;
  for (const ChartPoint& p : points) {
    JacobiPair pair = deformed_jacobi(d, p);
    worst_norm = std::max(worst_norm, pair.direct.cwiseAbs().maxCoeff());
    worst_gap = std::max(worst_gap, pair.discrepancy);
  }
  return {worst_norm < 1e-6 && worst_gap < 1e-7,
          "||Phi~||_max " + fmt(worst_norm) + ", route gap " + fmt(worst_gap)};
}

// 4. Sorted eigenvalues of Phi~ match {0} u {-F^2 + lambda^2 F^2}.
Outcome eigenvalue_shift() {
  const SprayGeometry& geo = klein2();
  auto points = sample_chart_points(2, geo.domain(), 10, 42, 0.7);
  double worst = 0.0;
  for (double lambda : {0.5, 2.0}) {
    DeformedSpray d = deform_spray(geo, geo.finsler().F, lambda);
    for (const ChartPoint& p : points) {
      ShiftReport report = eigen_shift_check(d, p, 1e-6);
      worst = std::max(worst, report.max_mismatch);
      if (!report.passed) return {false, "mismatch " + fmt(report.max_mismatch)};
    }
  }
  return {true, "max mismatch " + fmt(worst) + " for lambda in {0.5, 2}"};
}

// 5. Exceptional scalars at x = 0, y = (1, 0) are exactly {-1, +1}.
Outcome exceptional_lambdas() {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2), y(2);
  y << 1.0, 0.0;
  BadLambdaSet set =
      bad_lambda_set(klein2(), klein2().finsler().F, ChartPoint(x, y));
  bool ok = set.values.size() == 2 && std::abs(set.values[0] + 1.0) < 1e-9 &&
            std::abs(set.values[1] - 1.0) < 1e-9;
  std::string values;
  for (double v : set.values) values += fmt(v) + " ";
  return {ok, "set { " + values + "}"};
}

// 6. lambda = 2 deformation reaches rank 2n within depth 4 in under 60 s and
//    the energy obstruction certifies non-metrizability.
Outcome full_rank() {
  auto begin = std::chrono::steady_clock::now();
  Eigen::VectorXd x(2), y(2);
  x << 0.3, -0.2;
  y << 1.1, 0.4;
  ChartPoint p(x, y);
  FullRankReport report =
      full_rank_obstruction(klein2(), klein2().finsler().F, 2.0, p, 4);
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
          .count();
  bool ok = report.nonlinear_ok && report.lambda_ok && report.span &&
            report.span->rank == 4 && report.not_metrizable && seconds < 60.0;
  return {ok, "rank " + std::to_string(report.span ? report.span->rank : -1) +
                  " of 4, verdict " +
                  (report.not_metrizable ? "not metrizable" : "inconclusive") +
                  ", " + fmt(seconds) + " s"};
}

// 7. (a_i(x) y^i)^2 e^theta has fiber Hessian of rank exactly 1, n in {2, 3}.
Outcome linear_degeneracy() {
  bool ok = true;
  std::string detail;
  {
    std::vector<Expr> a = {parse("1 + x[2]", 2), Expr::constant(0.5, 2)};
    Eigen::VectorXd x(2), y(2);
    x << 0.2, 0.3;
    y << 1.0, 0.4;
    DegeneracyReport r =
        linear_factor_degeneracy(a, parse("x[1]", 2), ChartPoint(x, y));
    ok = ok && r.rank_is_one;
    detail += "n=2 rank " + std::to_string(r.rank) + "  ";
  }
  {
    std::vector<Expr> a = {parse("1 + x[2]", 3), Expr::constant(0.5, 3),
                           parse("x[1] - 2", 3)};
    Eigen::VectorXd x(3), y(3);
    x << 0.2, 0.3, -0.1;
    y << 1.0, 0.4, 0.7;
    DegeneracyReport r =
        linear_factor_degeneracy(a, parse("x[3]", 3), ChartPoint(x, y));
    ok = ok && r.rank_is_one;
    detail += "n=3 rank " + std::to_string(r.rank);
  }
  return {ok, detail};
}

// 8. Adapted-frame checks at 10 seeded Klein points with P = F, tol 1e-7.
Outcome frame_checks() {
  const SprayGeometry& geo = klein2();
  auto points = sample_chart_points(2, geo.domain(), 10, 42, 0.7);
  int failures = 0;
  double worst = 0.0;
  for (const ChartPoint& p : points) {
    FrameCheckReport report =
        verify_adapted_frame(geo, geo.finsler().F, p, 1e-7);
    for (const FrameCheck& check : report.checks) {
      if (!check.passed) ++failures;
      worst = std::max(worst, check.measured / std::max(check.tol, 1e-300));
    }
  }
  return {failures == 0,
          failures == 0 ? "all sub-checks at 10 points"
                        : std::to_string(failures) + " sub-check failures"};
}

// 9. Geodesic traces of S and S~ agree as point sets from 5 seeded starts.
Outcome projective_equivalence() {
  const SprayGeometry& geo = klein2();
  DeformedSpray d = deform_spray(geo, geo.finsler().F, 1.0);
  auto starts = sample_chart_points(2, geo.domain(), 5, 42, 0.5);
  double worst = 0.0;
  for (const ChartPoint& start : starts) {
    EquivalenceReport report = projective_equivalence_check(d, start, 1.0, 400);
    if (!report.base_completed || !report.deformed_completed)
      return {false, "a trace left the domain"};
    worst = std::max(worst, report.distance);
  }
  return {worst < 1e-5, "max trace distance " + fmt(worst)};
}

// 10. Property battery on every catalog metric.
Outcome property_battery() {
  std::vector<CatalogEntry> entries = {catalog_get("euclidean", 2),
                                       catalog_get("klein", 2),
                                       catalog_get("mu_family", 2, 2.0)};
  for (const CatalogEntry& entry : entries) {
    SprayGeometry geo = SprayGeometry::geodesic(entry.metric);
    int n = entry.dim;
    auto points = entry.probes;

    // symbolic vs finite differences on F
    for (const ChartPoint& p : points)
      for (int s = 0; s < 2 * n; ++s) {
        Var v = Var::from_slot(s, n);
        double sym = eval(differentiate(entry.metric.F, v), p);
        double fd = oracles::fd_partial(entry.metric.F, p, v);
        if (!almost_equal(sym, fd, 1e-5, 1e-6))
          return {false, entry.name + ": finite-difference mismatch"};
      }

    // Euler homogeneity of F and of the spray jet
    const double scales[] = {0.5, 2.0, 3.0};
    if (!check_homogeneity(entry.metric.F, 1, points, scales).passed)
      return {false, entry.name + ": homogeneity"};
    for (const ChartPoint& p : points)
      if (spray_homogeneity_residual(geo.jet(p), p.y()) > 1e-9)
        return {false, entry.name + ": spray homogeneity chain"};

    std::vector<VectorFieldTM> frame = geo.horizontal_frame();
    for (const ChartPoint& p : points) {
      // Phi y = 0 and Phi = i_S R
      Eigen::MatrixXd phi = geo.jacobi(p);
      double scale = std::max(1.0, phi.norm());
      if ((phi * p.y()).norm() / scale > 1e-8)
        return {false, entry.name + ": Phi(S) != 0"};
      if ((phi - geo.jacobi_from_curvature(p)).norm() / scale > 1e-8)
        return {false, entry.name + ": Phi != i_S R"};

      // bracket antisymmetry (bitwise) and the Jacobi identity
      VectorFieldTM ab = lie_bracket(frame[0], frame[1]);
      VectorFieldTM ba = lie_bracket(frame[1], frame[0]);
      Eigen::VectorXd u = ab.value(p), w = ba.value(p);
      for (int i = 0; i < u.size(); ++i)
        if (u[i] != -w[i]) return {false, entry.name + ": antisymmetry"};
      VectorFieldTM S = geo.spray_field();
      Eigen::VectorXd cyclic =
          lie_bracket(frame[0], lie_bracket(frame[1], S)).value(p) +
          lie_bracket(frame[1], lie_bracket(S, frame[0])).value(p) +
          lie_bracket(S, lie_bracket(frame[0], frame[1])).value(p);
      if (cyclic.norm() > 1e-7 * std::max(1.0, u.norm()))
        return {false, entry.name + ": Jacobi identity"};

      // vertical part of [delta_j, delta_k] is the curvature
      CurvatureValue R = geo.curvature(p);
      double rscale = std::max(1.0, R.max_abs());
      if (u.head(n).norm() / rscale > 1e-7)
        return {false, entry.name + ": bracket not vertical"};
      for (int i = 0; i < n; ++i)
        if (std::abs(u[n + i] - R.at(i, 0, 1)) / rscale > 1e-7)
          return {false, entry.name + ": curvature-bracket identity"};
    }
  }
  return {true, "flat, klein, mu_family(2)"};
}

// 11. Scenario 2 completes with measured numbers and flags the tension.
Outcome scenario_two() {
  ExampleReport report = reproduce_example(2, 2, 2.0);
  bool has_tension = false;
  for (const std::string& note : report.notes)
    if (note.find("tension") != std::string::npos) has_tension = true;
  bool ok = report.completed && !report.claims.empty() && has_tension;
  return {ok, "||Phi~|| " + fmt(report.phi_tilde_norm) + ", rank " +
                  std::to_string(report.deformed_rank) + " of " +
                  std::to_string(report.tangent_dim) +
                  (has_tension ? ", tension flagged" : ", tension NOT flagged")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"Klein spray formula (rel err < 1e-9, 100 points, < 5 s)", spray_formula},
      {"constant flag curvature kappa = -F^2 (spread < 1e-5, n = 2, 3)",
       constant_flag_curvature},
      {"deformation flatness (||Phi~|| < 1e-6, route gap < 1e-7)",
       deformation_flatness},
      {"eigenvalue shift law (1e-6, lambda in {0.5, 2})", eigenvalue_shift},
      {"exceptional scalar set {-1, +1} (1e-9)", exceptional_lambdas},
      {"full-rank obstruction (rank 2n, depth <= 4, < 60 s)", full_rank},
      {"linear factor degeneracy (rank exactly 1, n = 2, 3)", linear_degeneracy},
      {"adapted frame checks (10 points, tol 1e-7)", frame_checks},
      {"projective equivalence of traces (< 1e-5, 5 starts)",
       projective_equivalence},
      {"property battery on the catalog", property_battery},
      {"scenario 2 adjudication with tension flag", scenario_two},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    auto begin = std::chrono::steady_clock::now();
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
            .count();
    std::printf("[%s] %2zu. %s  (%s; %.2f s)\n",
                outcome.passed ? "PASS" : "FAIL", i + 1, criteria[i].name,
                outcome.detail.c_str(), seconds);
    if (!outcome.passed) ++failed;
  }
  std::printf("acceptance: %zu/%zu criteria passed\n",
              criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
