#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "finsler/spectral.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace finsler;
using fixtures::euclidean;
using fixtures::klein;
using fixtures::mu_family;
using fixtures::pt;

namespace {

SprayGeometry klein_geo() {
  static SprayGeometry geo = SprayGeometry::geodesic(klein());
  return geo;
}

}  // namespace

TEST_CASE("flat metric has all principal curvatures zero") {
  SprayGeometry geo = SprayGeometry::geodesic(euclidean());
  SpectralData data = principal_curvatures(geo, pt({0.4, 0.1}, {1.0, 0.3}));
  CHECK(data.principal.size() == 1);
  CHECK(std::abs(data.principal[0]) < 1e-12);
  CHECK_FALSE(data.complex_flag);
}

TEST_CASE("Klein at the distinguished point has kappa_1 = -1") {
  SpectralData data =
      principal_curvatures(klein_geo(), pt({0.0, 0.0}, {1.0, 0.0}));
  REQUIRE(data.principal.size() == 1);
  CHECK(data.principal[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(data.eigenvalues[data.spray_index] == doctest::Approx(0.0));
  CHECK(data.residual < 1e-9);
}

TEST_CASE("Klein principal curvatures equal -F^2 everywhere") {
  SprayGeometry geo = klein_geo();
  const Expr& F = geo.finsler().F;
  for (const ChartPoint& p : sample_chart_points(2, geo.domain(), 20, 101)) {
    double f2 = eval(F, p);
    f2 *= f2;
    SpectralData data = principal_curvatures(geo, p);
    for (double kappa : data.principal)
      CHECK(rel_diff(kappa, -f2) < 1e-6);
  }
}

TEST_CASE("the fiber direction is recognized as the zero eigenvector") {
  SprayGeometry geo = klein_geo();
  ChartPoint p = pt({0.3, -0.25}, {0.8, 0.7});
  SpectralData data = principal_curvatures(geo, p);
  Eigen::VectorXd yhat = p.y().normalized();
  CHECK(std::abs(std::abs(data.eigenvectors.col(data.spray_index).dot(yhat)) -
                 1.0) < 1e-9);
  double radius = data.eigenvalues.cwiseAbs().maxCoeff();
  CHECK((geo.jacobi(p) * p.y()).norm() < 1e-8 * std::max(1.0, radius));
}

TEST_CASE("projection into the adapted span fixes eigenvectors with nonzero kappa") {
  SprayGeometry geo = klein_geo();
  ChartPoint p = pt({0.2, 0.35}, {1.2, -0.4});
  Expr F = geo.finsler().F;
  SpectralData plain = principal_curvatures(geo, p);
  SpectralData adapted = principal_curvatures(geo, p, &F);
  for (int k = 0; k < 2; ++k) {
    if (k == plain.spray_index) continue;
    // kappa != 0 here, so the correction must be (numerically) a no-op
    CHECK((plain.eigenvectors.col(k) - adapted.eigenvectors.col(k)).norm() <
          1e-7);
    // and the result satisfies d_J F(X) = 0, i.e. lies in the adapted span
    double dj = 0.0;
    for (int i = 0; i < 2; ++i)
      dj += eval(differentiate(F, Var::y(i)), p) * adapted.eigenvectors(i, k);
    CHECK(std::abs(dj) < 1e-7);
  }
}

TEST_CASE("matrix-level analysis flags complex spectra") {
  Eigen::MatrixXd rotation(2, 2);
  rotation << 0, -1, 1, 0;
  // force a zero along y by bordering the rotation block
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3, 3);
  phi.topLeftCorner(2, 2) = rotation;
  Eigen::VectorXd y(3);
  y << 0, 0, 1;
  SpectralData data = spectral_of_matrix(phi, y);
  CHECK(data.complex_flag);
  CHECK(data.spray_index >= 0);
}

TEST_CASE("flag constancy certifies the catalog curvatures") {
  SprayGeometry geo = klein_geo();
  auto points = sample_chart_points(2, geo.domain(), 20, 42);
  FlagConstancyReport report = flag_constancy_check(geo, points);
  CHECK(report.passed);
  CHECK(report.spread < 1e-5);
  CHECK(report.kappa == doctest::Approx(-1.0).epsilon(1e-7));

  SprayGeometry mu2 = SprayGeometry::geodesic(mu_family(2.0));
  auto mu_points = sample_chart_points(2, mu2.domain(), 20, 42, 0.45);
  FlagConstancyReport mu_report = flag_constancy_check(mu2, mu_points);
  CHECK(mu_report.passed);
  CHECK(mu_report.kappa == doctest::Approx(-2.0).epsilon(1e-7));

  SprayGeometry flat = SprayGeometry::geodesic(euclidean());
  auto flat_points = sample_chart_points(2, flat.domain(), 20, 42);
  FlagConstancyReport flat_report = flag_constancy_check(flat, flat_points);
  CHECK(flat_report.passed);
  CHECK(std::abs(flat_report.kappa) < 1e-10);
}

TEST_CASE("eigenvalue shift law under holonomic deformation") {
  SprayGeometry geo = klein_geo();
  const Expr& F = geo.finsler().F;
  ChartPoint p = pt({0.3, -0.1}, {0.9, 0.6});

  SUBCASE("lambda = 0 leaves the spectrum in place") {
    DeformedSpray d = deform_spray(geo, F, 0.0);
    ShiftReport report = eigen_shift_check(d, p);
    CHECK(report.passed);
    CHECK(report.max_mismatch < 1e-10);
  }
  SUBCASE("lambda = 2: predicted spectrum is {0, 3 F^2}") {
    DeformedSpray d = deform_spray(geo, F, 2.0);
    ShiftReport report = eigen_shift_check(d, p);
    CHECK(report.passed);
    double f2 = eval(F, p);
    f2 *= f2;
    REQUIRE(report.predicted.size() == 2);
    CHECK(report.predicted[0] == doctest::Approx(0.0));
    CHECK(report.predicted[1] == doctest::Approx(3.0 * f2).epsilon(1e-9));
  }
  SUBCASE("lambda = 1: every shifted eigenvalue collapses to zero") {
    DeformedSpray d = deform_spray(geo, F, 1.0);
    ShiftReport report = eigen_shift_check(d, p);
    CHECK(report.passed);
    for (double v : report.predicted) CHECK(std::abs(v) < 1e-8);
    for (double v : report.measured) CHECK(std::abs(v) < 1e-8);
  }
}

TEST_CASE("shift law holds across metrics and lambdas") {
  for (double lambda : {0.0, 0.5, -0.5, 2.0, -2.0}) {
    for (int which : {0, 1}) {
      SprayGeometry geo = which == 0
                              ? klein_geo()
                              : SprayGeometry::geodesic(mu_family(2.0));
      double radius = which == 0 ? 0.7 : 0.45;
      DeformedSpray d = deform_spray(geo, geo.finsler().F, lambda);
      for (const ChartPoint& p :
           sample_chart_points(2, geo.domain(), 5, 7, radius)) {
        ShiftReport report = eigen_shift_check(d, p);
        CHECK_MESSAGE(report.max_mismatch < 1e-6, "lambda=", lambda,
                      " metric=", which);
      }
    }
  }
}

TEST_CASE("necessary condition for metrizability of the deformation") {
  SprayGeometry geo = klein_geo();
  const Expr& F = geo.finsler().F;
  ChartPoint p = pt({0.25, 0.15}, {1.1, -0.2});

  NecessaryConditionReport ok = necessary_condition_check(geo, F, p);
  CHECK(ok.satisfied);
  CHECK(ok.best < 1e-8);

  NecessaryConditionReport twice = necessary_condition_check(geo, 2.0 * F, p);
  CHECK_FALSE(twice.satisfied);
  CHECK(twice.verdict.find("not metrizable") != std::string::npos);

  SprayGeometry flat = SprayGeometry::geodesic(euclidean());
  NecessaryConditionReport flat_report =
      necessary_condition_check(flat, parse("sqrt(dot(y,y))", 2), p);
  CHECK_FALSE(flat_report.satisfied);
  CHECK(flat_report.all_curvatures_nonnegative);
  CHECK(flat_report.verdict.find("non-negative") != std::string::npos);
}

TEST_CASE("exceptional deformation scalars at the distinguished Klein point") {
  SprayGeometry geo = klein_geo();
  const Expr& F = geo.finsler().F;
  ChartPoint p = pt({0.0, 0.0}, {1.0, 0.0});

  BadLambdaSet set = bad_lambda_set(geo, F, p);
  REQUIRE(set.values.size() == 2);
  CHECK(set.values[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(set.values[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(set.includes_trivial_zero);

  BadLambdaSet doubled = bad_lambda_set(geo, 2.0 * F, p);
  REQUIRE(doubled.values.size() == 2);
  CHECK(doubled.values[0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(doubled.values[1] == doctest::Approx(0.5).epsilon(1e-9));

  SprayGeometry flat = SprayGeometry::geodesic(euclidean());
  BadLambdaSet trivial = bad_lambda_set(flat, parse("sqrt(dot(y,y))", 2), p);
  REQUIRE(trivial.values.size() == 1);
  CHECK(trivial.values[0] == 0.0);
  CHECK(trivial.includes_trivial_zero);
}

TEST_CASE("away from the exceptional set the shift never vanishes") {
  SprayGeometry geo = klein_geo();
  const Expr& F = geo.finsler().F;
  for (const ChartPoint& p : sample_chart_points(2, geo.domain(), 5, 61)) {
    BadLambdaSet set = bad_lambda_set(geo, F, p);
    SpectralData data = principal_curvatures(geo, p);
    double Pv = eval(F, p);
    for (double lambda : {0.3, 0.9, 1.7, 2.5}) {
      double distance = std::numeric_limits<double>::infinity();
      for (double bad : set.values)
        distance = std::min(distance, std::abs(lambda - bad));
      if (distance <= 1e-3) continue;
      double smallest = std::numeric_limits<double>::infinity();
      for (double kappa : data.principal)
        smallest = std::min(smallest,
                            std::abs(kappa + lambda * lambda * Pv * Pv));
      CHECK(smallest > 0.0);
      CHECK(smallest > 1e-4 * distance);
    }
  }
}
