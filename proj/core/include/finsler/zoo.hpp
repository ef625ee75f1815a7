// Built-in metric catalog and one-call reproduction of the two worked
// deformation scenarios.
#pragma once

#include "finsler/geometry.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finsler {

struct CatalogEntry {
  std::string name;
  int dim = 0;
  double mu = 1.0;  // parameter of the mu family; 1.0 otherwise
  Finsler metric;
  std::string source;              // expression text of F
  std::string domain_source;       // expression text of the domain predicate
  double domain_radius = 1.0;      // radius of the x-ball the chart covers
  std::optional<double> expected_flag_curvature;
  std::vector<ChartPoint> probes;  // 10 seeded in-domain points
};

/// Names: euclidean | klein | mu_family. The mu family needs mu > 0 and
/// reduces to the Klein metric verbatim at mu = 1.
CatalogEntry catalog_get(std::string_view name, int dim = 2, double mu = 1.0);

/// Seeded probe points for a catalog chart (|x| <= 0.7 radius, |y| in
/// [1/2, 2], fixed seed by default).
std::vector<ChartPoint> default_probes(int dim, const Expr& domain,
                                       double radius, int count = 10,
                                       unsigned seed = 42);

struct ClaimVerdict {
  std::string claim;
  std::string expected;
  double measured = 0.0;
  std::string verdict;  // "confirmed" | "refuted" | "inconclusive"
  std::string note;
};

struct ExampleReport {
  int example = 0;
  int dim = 0;
  double mu = 1.0;
  double lambda = 1.0;
  std::string metric_name;

  std::vector<ClaimVerdict> claims;
  std::vector<std::string> notes;  // restrictions and internal tensions

  // raw measurements backing the verdicts
  double spray_stated_err = 0.0;   // vs the stated closed form
  double spray_rescaled_err = 0.0; // vs the mu-rescaled Klein form (example 2)
  double kappa = 0.0;
  double kappa_spread = 0.0;
  double invariance_residual = 0.0;
  double necessary_residual = 0.0;
  double phi_tilde_norm = 0.0;
  double phi_closed_discrepancy = 0.0;
  int deformed_rank = 0;
  int tangent_dim = 0;
  double equivalence_distance = 0.0;
  bool completed = false;
};

/// Runs the full pipeline for scenario 1 (Klein, P = F) or scenario 2
/// (mu family, P = sqrt(mu) F), both at lambda = 1, and grades every stated
/// claim against the measured numbers.
ExampleReport reproduce_example(int which, int dim = 2, double mu = 2.0);

}  // namespace finsler
