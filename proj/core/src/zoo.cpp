#include "finsler/zoo.hpp"

#include "finsler/deform.hpp"
#include "finsler/holonomy.hpp"
#include "finsler/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

namespace finsler {

std::vector<ChartPoint> default_probes(int dim, const Expr& domain,
                                       double radius, int count,
                                       unsigned seed) {
  return sample_chart_points(dim, domain, count, seed, 0.7 * radius);
}

namespace {

std::string format_mu(double mu) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", mu);
  return buf;
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

CatalogEntry make_entry(std::string name, int dim, double mu,
                        std::string source, std::string domain_source,
                        double radius, std::optional<double> kappa) {
  CatalogEntry entry;
  entry.name = std::move(name);
  entry.dim = dim;
  entry.mu = mu;
  entry.source = std::move(source);
  entry.domain_source = std::move(domain_source);
  entry.metric = {parse(entry.source, dim), parse(entry.domain_source, dim)};
  entry.domain_radius = radius;
  entry.expected_flag_curvature = kappa;
  entry.probes = default_probes(dim, entry.metric.domain, radius);
  return entry;
}

}  // namespace

CatalogEntry catalog_get(std::string_view name, int dim, double mu) {
  if (dim < 2) throw std::invalid_argument("catalog metrics need dim >= 2");
  if (name == "euclidean")
    return make_entry("euclidean", dim, 1.0, "sqrt(dot(y,y))", "1", 1.0, 0.0);
  if (name == "klein")
    return make_entry(
        "klein", dim, 1.0,
        "sqrt(((1 - dot(x,x))*dot(y,y) + dot(x,y)^2) / (1 - dot(x,x))^2)",
        "1 - dot(x,x)", 1.0, -1.0);
  if (name == "mu_family") {
    if (!(mu > 0.0))
      throw std::invalid_argument(
          "mu_family needs mu > 0 (the deformation factor uses sqrt(mu))");
    std::string m = format_mu(mu);
    return make_entry(
        "mu_family", dim, mu,
        "sqrt(((1 - " + m + "*dot(x,x))*dot(y,y) + " + m +
            "*dot(x,y)^2) / (1 - " + m + "*dot(x,x))^2)",
        "1 - " + m + "*dot(x,x)", 1.0 / std::sqrt(mu), -mu);
  }
  throw std::invalid_argument("unknown catalog metric '" + std::string(name) +
                              "'");
}

// ---------------------------------------------------------------------------
// Worked scenarios
// ---------------------------------------------------------------------------

namespace {

constexpr double kValueTol = 1e-5;  // closed-form agreement
constexpr double kFlatTol = 1e-6;   // flatness norms

ClaimVerdict graded(std::string claim, std::string expected, double measured,
                    bool confirmed, std::string note = "") {
  return {std::move(claim), std::move(expected), measured,
          confirmed ? "confirmed" : "refuted", std::move(note)};
}

double spray_error(const SprayGeometry& geo,
                   std::span<const ChartPoint> probes,
                   const std::function<Eigen::VectorXd(const ChartPoint&)>&
                       reference) {
  double worst = 0.0;
  for (const ChartPoint& p : probes) {
    Eigen::VectorXd computed = geo.spray_values(p);
    Eigen::VectorXd expected = reference(p);
    worst = std::max(worst, (computed - expected).norm() /
                                std::max(1.0, expected.norm()));
  }
  return worst;
}

}  // namespace

ExampleReport reproduce_example(int which, int dim, double mu) {
  if (which != 1 && which != 2)
    throw std::invalid_argument("examples are numbered 1 and 2");

  CatalogEntry entry = which == 1 ? catalog_get("klein", dim)
                                  : catalog_get("mu_family", dim, mu);
  ExampleReport report;
  report.example = which;
  report.dim = dim;
  report.mu = which == 1 ? 1.0 : mu;
  report.lambda = 1.0;
  report.metric_name = entry.name;
  report.tangent_dim = 2 * dim;

  SprayGeometry geo = SprayGeometry::geodesic(entry.metric);
  const std::vector<ChartPoint>& probes = entry.probes;

  // projective factor of the scenario
  Expr P = which == 1 ? entry.metric.F
                      : std::sqrt(report.mu) * entry.metric.F;

  // 1. spray coefficients against the stated closed form
  if (which == 1) {
    report.spray_stated_err = spray_error(geo, probes, [](const ChartPoint& p) {
      return Eigen::VectorXd(p.x().dot(p.y()) / (1.0 - p.x().squaredNorm()) *
                             p.y());
    });
    report.claims.push_back(graded(
        "geodesic coefficients", "G^i = <x,y>/(1-|x|^2) y^i",
        report.spray_stated_err, report.spray_stated_err < kValueTol));
  } else {
    double m = report.mu;
    report.spray_stated_err = spray_error(geo, probes, [m](const ChartPoint& p) {
      return Eigen::VectorXd(-m * p.x().dot(p.y()) /
                             (1.0 - p.x().squaredNorm()) * p.y());
    });
    report.spray_rescaled_err =
        spray_error(geo, probes, [m](const ChartPoint& p) {
          return Eigen::VectorXd(m * p.x().dot(p.y()) /
                                 (1.0 - m * p.x().squaredNorm()) * p.y());
        });
    report.claims.push_back(graded(
        "stated geodesic coefficients", "G^i = -mu <x,y>/(1-|x|^2) y^i",
        report.spray_stated_err, report.spray_stated_err < kValueTol,
        "computed coefficients instead match mu <x,y>/(1-mu|x|^2) y^i with "
        "error " +
            format_g(report.spray_rescaled_err)));
  }

  // 2. constant flag curvature
  double expected_kappa = *entry.expected_flag_curvature;
  FlagConstancyReport flag = flag_constancy_check(geo, probes);
  report.kappa = flag.kappa;
  report.kappa_spread = flag.spread;
  report.claims.push_back(
      graded("constant flag curvature",
             "kappa = " + format_g(expected_kappa), flag.kappa,
             flag.passed && std::abs(flag.kappa - expected_kappa) < kValueTol,
             "spread " + format_g(flag.spread)));

  // 3. holonomy invariance of the factor
  InvarianceReport inv = is_holonomy_invariant(geo, P, probes);
  report.invariance_residual = inv.max_residual;
  report.claims.push_back(graded("projective factor is holonomy invariant",
                                 "max |delta_i P| = 0", inv.max_residual,
                                 inv.passed));

  // 4. necessary metrizability condition
  double worst_necessary = 0.0;
  bool necessary_ok = true;
  for (const ChartPoint& p : probes) {
    NecessaryConditionReport nec = necessary_condition_check(geo, P, p);
    worst_necessary = std::max(worst_necessary, nec.best);
    necessary_ok = necessary_ok && nec.satisfied;
  }
  report.necessary_residual = worst_necessary;
  report.claims.push_back(graded("necessary condition for metrizability",
                                 "P~^2 + kappa_alpha = 0", worst_necessary,
                                 necessary_ok));

  // 5/6. deformed curvature: measured flatness and the closed-form identity
  DeformedSpray deformed = deform_spray(geo, P, 1.0);
  for (const ChartPoint& p : probes) {
    JacobiPair pair = deformed_jacobi(deformed, p);
    report.phi_tilde_norm =
        std::max(report.phi_tilde_norm, pair.direct.cwiseAbs().maxCoeff());
    report.phi_closed_discrepancy =
        std::max(report.phi_closed_discrepancy, pair.discrepancy);
  }
  bool measured_flat = report.phi_tilde_norm < kFlatTol;
  if (which == 1) {
    report.claims.push_back(graded("deformed spray is curvature flat",
                                   "||Phi~|| = 0", report.phi_tilde_norm,
                                   measured_flat));
  } else {
    report.claims.push_back(graded("deformed spray is not curvature flat",
                                   "||Phi~|| > 0", report.phi_tilde_norm,
                                   !measured_flat));
  }
  report.claims.push_back(graded(
      "closed-form identity for the deformed curvature",
      "Phi~ = Phi + lambda^2 (P^2 J - P d_J P (x) C)",
      report.phi_closed_discrepancy, report.phi_closed_discrepancy < 1e-7));

  // 7. holonomy rank of the deformed spray at the first probe
  DistributionSpan span =
      holonomy_rank(deformed.deformed_geometry, probes.front(), 4);
  report.deformed_rank = span.rank;
  if (which == 2) {
    report.claims.push_back(graded(
        "holonomy distribution of the deformed spray fills T(TM)",
        "rank = " + std::to_string(2 * dim),
        static_cast<double>(span.rank), span.rank == 2 * dim,
        span.depth_exhausted ? "rank is a lower bound (depth capped)" : ""));
  } else {
    report.notes.push_back(
        "measured holonomy rank of the deformed spray: " +
        std::to_string(span.rank) + " of " + std::to_string(2 * dim));
  }

  // 8. projective equivalence of the geodesic traces
  int starts = static_cast<int>(std::min<std::size_t>(5, probes.size()));
  for (int k = 0; k < starts; ++k) {
    EquivalenceReport eq =
        projective_equivalence_check(deformed, probes[k], 1.0, 400);
    report.equivalence_distance =
        std::max(report.equivalence_distance, eq.distance);
  }
  report.claims.push_back(graded(
      "deformed geodesics trace the base geodesics",
      "max point-set distance < 1e-5", report.equivalence_distance,
      report.equivalence_distance < 1e-5));

  // internal-consistency notes
  if (which == 2) {
    report.notes.push_back(
        "catalog restricts mu > 0: the deformation factor sqrt(mu) F is real "
        "only there, so stated behavior at mu = -1 is outside this chart");
    bool flat_claim_refuted = measured_flat;
    bool rank_claim_refuted = span.rank < 2 * dim;
    if (flat_claim_refuted && rank_claim_refuted && necessary_ok) {
      report.notes.push_back(
          "tension: with P~ = sqrt(mu) F and lambda = 1 the shift "
          "kappa_alpha + P~^2 vanishes identically, which forces Phi~ = 0 by "
          "the closed-form identity (measured ||Phi~|| = " +
          format_g(report.phi_tilde_norm) +
          ", measured rank = " + std::to_string(span.rank) + " of " +
          std::to_string(2 * dim) +
          "); the stated non-flatness and full-rank claims cannot both hold "
          "with the identity, and the measurements side with the identity");
    }
  }

  report.completed = true;
  return report;
}

}  // namespace finsler
