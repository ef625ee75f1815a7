// finsler - command line front-end.
//
// Subcommands:
//   analyze        metric tensor, spray, curvature and principal curvatures
//   deform         holonomic projective deformation S~ = S - 2 lambda P C
//   holonomy       bracket-closure rank of the holonomy distribution
//   verify-example built-in worked scenarios 1 and 2
//
// Exit codes: 0 success, 1 failed checks, 2 parse or domain errors.

#include "finsler/deform.hpp"
#include "finsler/geometry.hpp"
#include "finsler/holonomy.hpp"
#include "finsler/spectral.hpp"
#include "finsler/version.hpp"
#include "finsler/zoo.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using json = nlohmann::ordered_json;
using namespace finsler;

namespace {

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

struct MetricInput {
  std::string name;
  int dim = 0;
  double mu = 1.0;
  std::string f_source;
  std::string domain_source;
  std::string factor_source;  // optional
  Finsler metric;
  double probe_radius = 1.0;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

MetricInput load_metric_file(const std::string& path, unsigned seed) {
  std::ifstream in(path);
  if (!in) throw ExprError("cannot open metric file '" + path + "'");

  MetricInput input;
  input.domain_source = "1";
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ExprError("metric file line " + std::to_string(lineno) +
                      ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "name")
      input.name = value;
    else if (key == "dim")
      input.dim = std::stoi(value);
    else if (key == "F")
      input.f_source = value;
    else if (key == "domain")
      input.domain_source = value;
    else if (key == "factor")
      input.factor_source = value;
    else
      throw ExprError("metric file line " + std::to_string(lineno) +
                      ": unknown key '" + key + "'");
  }
  if (input.dim < 2) throw ExprError("metric file needs dim >= 2");
  if (input.f_source.empty()) throw ExprError("metric file needs an F entry");
  if (input.name.empty()) input.name = path;

  input.metric = {parse(input.f_source, input.dim),
                  parse(input.domain_source, input.dim)};

  // load-time contract: F is 1-homogeneous on seeded probes
  auto probes = sample_chart_points(input.dim, input.metric.domain, 10, seed);
  const double scales[] = {0.5, 2.0, 3.0};
  HomogeneityReport hom = check_homogeneity(input.metric.F, 1, probes, scales);
  if (!hom.passed)
    throw ExprError("metric file F is not 1-homogeneous (scale error " +
                    std::to_string(hom.max_scale_error) + ")");
  return input;
}

MetricInput load_catalog(const std::string& name, int dim, double mu) {
  CatalogEntry entry = catalog_get(name, dim, mu);
  MetricInput input;
  input.name = entry.name;
  input.dim = entry.dim;
  input.mu = entry.mu;
  input.f_source = entry.source;
  input.domain_source = entry.domain_source;
  input.metric = entry.metric;
  input.probe_radius = entry.domain_radius;
  return input;
}

// point syntax: x=a,b,...;y=c,d,...
std::vector<double> parse_csv(const std::string& text, std::size_t base,
                              std::size_t& pos) {
  std::vector<double> values;
  while (true) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text.substr(pos), &used);
    } catch (const std::exception&) {
      throw SyntaxError("expected a number in the point string", base + pos);
    }
    pos += used;
    values.push_back(v);
    if (pos < text.size() && text[pos] == ',') {
      ++pos;
      continue;
    }
    return values;
  }
}

ChartPoint parse_point(const std::string& text, int dim) {
  std::size_t pos = 0;
  auto expect = [&](const std::string& token) {
    if (text.compare(pos, token.size(), token) != 0)
      throw SyntaxError("expected '" + token + "' in the point string", pos);
    pos += token.size();
  };
  expect("x=");
  std::vector<double> xs = parse_csv(text, 0, pos);
  expect(";");
  expect("y=");
  std::vector<double> ys = parse_csv(text, 0, pos);
  if (pos != text.size())
    throw SyntaxError("trailing input in the point string", pos);
  if (static_cast<int>(xs.size()) != dim || static_cast<int>(ys.size()) != dim)
    throw SyntaxError("point dimension does not match the metric (dim " +
                          std::to_string(dim) + ")",
                      0);
  Eigen::VectorXd x(dim), y(dim);
  for (int i = 0; i < dim; ++i) {
    x[i] = xs[i];
    y[i] = ys[i];
  }
  return ChartPoint(x, y);
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json point_json(const ChartPoint& p) {
  return json{{"x", vector_json(p.x())}, {"y", vector_json(p.y())}};
}

class Report {
 public:
  Report(std::string command, const MetricInput& input, unsigned seed,
         std::string digest_payload) {
    body_["tool"] = "finsler";
    body_["version"] = kVersion;
    body_["command"] = std::move(command);
    char digest[32];
    std::snprintf(digest, sizeof(digest), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a(digest_payload)));
    body_["input_digest"] = digest;
    body_["seed"] = seed;
    body_["metric"] = {{"name", input.name},
                       {"dim", input.dim},
                       {"F", input.f_source},
                       {"domain", input.domain_source}};
    body_["sections"] = json::object();
    start_ = clock_().count();
  }

  template <typename Fn>
  void section(const std::string& name, Fn&& fn) {
    auto begin = clock_();
    body_["sections"][name] = fn();
    auto end = clock_();
    timings_.emplace_back(name, (end - begin).count() / 1e6);
  }

  void set(const std::string& key, json value) { body_[key] = std::move(value); }

  void finish(bool passed, const std::string& json_path) {
    body_["passed"] = passed;
    json timings = json::object();
    for (const auto& [name, ms] : timings_) timings[name] = ms;
    timings["total"] = (clock_().count() - start_) / 1e6;
    body_["timings_ms"] = std::move(timings);
    if (!json_path.empty()) {
      std::ofstream out(json_path);
      if (!out) throw ExprError("cannot write report to '" + json_path + "'");
      out << body_.dump(2) << "\n";
    }
  }

  const json& body() const { return body_; }

 private:
  static std::chrono::nanoseconds clock_() {
    return std::chrono::steady_clock::now().time_since_epoch();
  }
  json body_;
  std::vector<std::pair<std::string, double>> timings_;
  double start_ = 0.0;
};

void print_kv(const char* key, const std::string& value) {
  std::printf("  %-28s %s\n", key, value.c_str());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string pass_str(bool ok) { return ok ? "pass" : "FAIL"; }

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommonOptions {
  std::string catalog;
  std::string metric_file;
  std::string point_text;
  std::string json_path;
  double mu = 1.0;
  unsigned seed = 42;
  double tol = 1e-6;
};

MetricInput resolve_metric(const CommonOptions& opts) {
  if (!opts.catalog.empty() && !opts.metric_file.empty())
    throw ExprError("choose either --catalog or --metric, not both");
  if (!opts.catalog.empty()) return load_catalog(opts.catalog, 2, opts.mu);
  if (!opts.metric_file.empty())
    return load_metric_file(opts.metric_file, opts.seed);
  throw ExprError("a metric is required: --catalog NAME or --metric FILE");
}

Expr resolve_factor(const std::string& text, const MetricInput& input) {
  if (text == "F") return input.metric.F;
  if (!text.empty()) return parse(text, input.dim);
  if (!input.factor_source.empty()) return parse(input.factor_source, input.dim);
  throw ExprError("a projective factor is required: --factor EXPR (or F)");
}

int cmd_analyze(const CommonOptions& opts) {
  MetricInput input = resolve_metric(opts);
  ChartPoint point = parse_point(opts.point_text, input.dim);
  require_in_domain(input.metric.domain, point);

  Report report("analyze", input, opts.seed,
                input.f_source + "|" + input.domain_source + "|" +
                    opts.point_text + "|" + std::to_string(opts.seed));
  report.set("point", point_json(point));

  auto probes = sample_chart_points(input.dim, input.metric.domain, 10,
                                    opts.seed, 0.7 * input.probe_radius);
  json probes_json = json::array();
  for (const ChartPoint& p : probes) probes_json.push_back(point_json(p));
  report.set("probes", probes_json);

  bool ok = true;
  std::printf("analyze: %s at %s\n", input.name.c_str(),
              opts.point_text.c_str());

  const double scales[] = {0.5, 2.0, 3.0};
  HomogeneityReport hom =
      check_homogeneity(input.metric.F, 1, probes, scales, opts.tol);
  ok = ok && hom.passed;
  report.section("homogeneity", [&] {
    return json{{"degree", 1},
                {"max_scale_error", hom.max_scale_error},
                {"max_euler_error", hom.max_euler_error},
                {"tol", hom.tol},
                {"passed", hom.passed}};
  });
  print_kv("homogeneity", pass_str(hom.passed));

  MetricValue metric = metric_tensor(input.metric, point);
  ok = ok && metric.regular;
  report.section("metric_tensor", [&] {
    return json{{"g", matrix_json(metric.g)},
                {"rank", metric.rank},
                {"regular", metric.regular}};
  });
  print_kv("metric rank", std::to_string(metric.rank) +
                              (metric.regular ? " (regular)" : " (SINGULAR)"));

  SprayGeometry geo = SprayGeometry::geodesic(input.metric);
  Eigen::VectorXd G = geo.spray_values(point);
  report.section("spray", [&] { return json{{"G", vector_json(G)}}; });
  print_kv("spray G", fmt(G.norm()) + " (norm)");

  Eigen::MatrixXd phi = geo.jacobi(point);
  Eigen::MatrixXd phi_r = geo.jacobi_from_curvature(point);
  double scale = std::max(1.0, phi.norm());
  double consistency = (phi - phi_r).norm() / scale;
  double kernel = (phi * point.y()).norm() / scale;
  bool jacobi_ok = consistency < 1e-8 && kernel < 1e-8;
  ok = ok && jacobi_ok;
  report.section("jacobi", [&] {
    return json{{"phi", matrix_json(phi)},
                {"curvature_contraction_residual", consistency},
                {"fiber_kernel_residual", kernel},
                {"passed", jacobi_ok}};
  });
  print_kv("jacobi consistency", pass_str(jacobi_ok));

  SpectralData spectral = principal_curvatures(geo, point);
  report.section("principal_curvatures", [&] {
    json values = json::array();
    for (double v : spectral.principal) values.push_back(v);
    return json{{"kappa", values},
                {"eigenvalues", vector_json(spectral.eigenvalues)},
                {"residual", spectral.residual},
                {"complex_flag", spectral.complex_flag}};
  });
  std::string kappas;
  for (double v : spectral.principal) kappas += fmt(v) + " ";
  print_kv("principal curvatures", kappas);

  FlagConstancyReport flag = flag_constancy_check(geo, probes);
  report.section("flag_constancy", [&] {
    return json{{"kappa", flag.kappa},
                {"spread", flag.spread},
                {"tol", flag.tol},
                {"passed", flag.passed}};
  });
  print_kv("flag constancy",
           (flag.passed ? "kappa = " + fmt(flag.kappa) : "not constant") +
               " (spread " + fmt(flag.spread) + ")");

  report.finish(ok, opts.json_path);
  std::printf("result: %s\n", pass_str(ok).c_str());
  return ok ? 0 : 1;
}

int cmd_deform(const CommonOptions& opts, const std::string& factor_text,
               double lambda) {
  MetricInput input = resolve_metric(opts);
  ChartPoint point = parse_point(opts.point_text, input.dim);
  require_in_domain(input.metric.domain, point);
  Expr P = resolve_factor(factor_text, input);

  Report report("deform", input, opts.seed,
                input.f_source + "|" + factor_text + "|" +
                    std::to_string(lambda) + "|" + opts.point_text + "|" +
                    std::to_string(opts.seed));
  report.set("point", point_json(point));
  report.set("lambda", lambda);
  report.set("factor", P.str());

  std::printf("deform: %s, lambda = %s\n", input.name.c_str(), fmt(lambda).c_str());

  auto probes = sample_chart_points(input.dim, input.metric.domain, 10,
                                    opts.seed, 0.7 * input.probe_radius);
  json probes_json = json::array();
  for (const ChartPoint& p : probes) probes_json.push_back(point_json(p));
  report.set("probes", probes_json);
  SprayGeometry geo = SprayGeometry::geodesic(input.metric);

  InvarianceReport inv = is_holonomy_invariant(geo, P, probes);
  report.section("invariance", [&] {
    return json{{"max_residual", inv.max_residual},
                {"tol", inv.tol},
                {"passed", inv.passed},
                {"samples", inv.samples},
                {"note", inv.note}};
  });
  print_kv("factor invariance", pass_str(inv.passed) + " (residual " +
                                    fmt(inv.max_residual) + ")");
  if (!inv.passed) {
    report.finish(false, opts.json_path);
    std::printf("refused: the projective factor is not holonomy invariant\n");
    return 1;
  }

  bool ok = true;
  DeformedSpray deformed = deform_spray(geo, P, lambda);

  if (lambda == 0.0) {
    report.section("identity_deformation", [&] {
      return json{{"note", "lambda = 0: the deformation is the identity and "
                           "the deformed spray equals the base spray"}};
    });
    print_kv("identity deformation", "lambda = 0");
  }

  BadLambdaSet bad = bad_lambda_set(geo, P, point);
  double bad_distance = std::numeric_limits<double>::infinity();
  for (double b : bad.values)
    bad_distance = std::min(bad_distance, std::abs(lambda - b));
  report.section("bad_lambda_set", [&] {
    json values = json::array();
    for (double v : bad.values) values.push_back(v);
    return json{{"values", values},
                {"includes_trivial_zero", bad.includes_trivial_zero},
                {"lambda_distance", bad_distance},
                {"lambda_exceptional", bad_distance <= 1e-9}};
  });
  std::string bads;
  for (double v : bad.values) bads += fmt(v) + " ";
  print_kv("exceptional lambdas", bads + (bad.includes_trivial_zero
                                              ? "(0 is the trivial case)"
                                              : ""));

  JacobiPair pair = deformed_jacobi(deformed, point);
  double flat_norm = pair.direct.cwiseAbs().maxCoeff();
  ok = ok && pair.discrepancy < 1e-7;
  report.section("deformed_jacobi", [&] {
    return json{{"phi_tilde", matrix_json(pair.direct)},
                {"closed_form", matrix_json(pair.closed_form)},
                {"discrepancy", pair.discrepancy},
                {"tol", 1e-7},
                {"max_abs", flat_norm},
                {"lie_derivative_residual", pair.ls_residual},
                {"d_J_lie_derivative_residual", pair.djls_residual}};
  });
  print_kv("||Phi~||_max", fmt(flat_norm));
  print_kv("closed-form agreement", pass_str(pair.discrepancy < 1e-7) +
                                        " (discrepancy " +
                                        fmt(pair.discrepancy) + ")");

  ShiftReport shift = eigen_shift_check(deformed, point);
  ok = ok && shift.passed;
  report.section("eigen_shift", [&] {
    json measured = json::array(), predicted = json::array();
    for (double v : shift.measured) measured.push_back(v);
    for (double v : shift.predicted) predicted.push_back(v);
    return json{{"measured", measured},
                {"predicted", predicted},
                {"max_mismatch", shift.max_mismatch},
                {"tol", shift.tol},
                {"passed", shift.passed}};
  });
  print_kv("eigenvalue shift law", pass_str(shift.passed));

  if (lambda != 0.0) {
    NecessaryConditionReport necessary =
        necessary_condition_check(geo, lambda * P, point);
    report.section("necessary_condition", [&] {
      json residuals = json::array();
      for (double v : necessary.residuals) residuals.push_back(v);
      return json{{"residuals", residuals},
                  {"best", necessary.best},
                  {"satisfied", necessary.satisfied},
                  {"all_curvatures_nonnegative",
                   necessary.all_curvatures_nonnegative},
                  {"verdict", necessary.verdict}};
    });
    print_kv("necessary condition", necessary.verdict);
  }

  ProjectorPair projectors = deformed_projectors(deformed, point);
  bool projector_ok = projectors.idempotency_residual < 1e-9 &&
                      projectors.spray_residual < 1e-9;
  ok = ok && projector_ok;
  report.section("projectors", [&] {
    return json{{"idempotency_residual", projectors.idempotency_residual},
                {"mixed_residual", projectors.mixed_residual},
                {"spray_residual", projectors.spray_residual},
                {"passed", projector_ok}};
  });
  print_kv("projector algebra", pass_str(projector_ok));

  report.finish(ok, opts.json_path);
  std::printf("result: %s\n", pass_str(ok).c_str());
  return ok ? 0 : 1;
}

int cmd_holonomy(const CommonOptions& opts, const std::string& factor_text,
                 std::optional<double> lambda, int depth, double rank_tol) {
  MetricInput input = resolve_metric(opts);
  ChartPoint point = parse_point(opts.point_text, input.dim);
  require_in_domain(input.metric.domain, point);

  Report report("holonomy", input, opts.seed,
                input.f_source + "|" + factor_text + "|" +
                    (lambda ? std::to_string(*lambda) : "-") + "|" +
                    opts.point_text + "|" + std::to_string(depth));
  report.set("point", point_json(point));
  report.set("depth", depth);

  SprayGeometry base = SprayGeometry::geodesic(input.metric);
  SprayGeometry target = base;
  if (lambda) {
    Expr P = resolve_factor(factor_text, input);
    DeformedSpray deformed = deform_spray(base, P, *lambda);
    target = deformed.deformed_geometry;
    report.set("lambda", *lambda);
    report.set("factor", P.str());
    std::printf("holonomy: %s deformed by lambda = %s\n", input.name.c_str(),
                fmt(*lambda).c_str());
  } else {
    std::printf("holonomy: %s\n", input.name.c_str());
  }

  DistributionSpan span = holonomy_rank(target, point, depth, rank_tol);
  report.section("holonomy_rank", [&] {
    json provenance = json::array();
    for (const std::string& word : span.provenance) provenance.push_back(word);
    return json{{"rank", span.rank},
                {"ambient_dim", 2 * input.dim},
                {"tol", span.tol},
                {"saturated", span.saturated},
                {"lower_bound", span.depth_exhausted},
                {"provenance", provenance}};
  });
  print_kv("rank", std::to_string(span.rank) + " of " +
                       std::to_string(2 * input.dim) +
                       (span.depth_exhausted ? " (lower bound: depth capped)"
                                             : ""));

  EnergyObstructionReport energy =
      energy_obstruction_test(target, base.energy(), span);
  report.section("energy_obstruction", [&] {
    json derivatives = json::array();
    for (double v : energy.derivatives) derivatives.push_back(v);
    return json{{"derivatives", derivatives},
                {"max_derivative", energy.max_derivative},
                {"full_rank", energy.full_rank},
                {"not_metrizable", energy.not_metrizable},
                {"tol", energy.tol}};
  });
  print_kv("energy obstruction",
           energy.not_metrizable
               ? "not Finsler metrizable at this point (full-rank holonomy "
                 "with nonconstant energy)"
               : "no obstruction certified at this point");

  report.finish(true, opts.json_path);
  std::printf("result: pass\n");
  return 0;
}

int cmd_verify_example(const CommonOptions& opts, int which) {
  ExampleReport example = reproduce_example(which, 2, opts.mu);

  MetricInput input =
      which == 1 ? load_catalog("klein", 2, 1.0)
                 : load_catalog("mu_family", 2, opts.mu);
  Report report("verify-example", input, opts.seed,
                std::to_string(which) + "|" + std::to_string(opts.mu));

  std::printf("verify-example %d (%s)\n", which, example.metric_name.c_str());
  report.section("probes", [&] {
    CatalogEntry entry = which == 1 ? catalog_get("klein", 2)
                                    : catalog_get("mu_family", 2, opts.mu);
    json probes = json::array();
    for (const ChartPoint& p : entry.probes) probes.push_back(point_json(p));
    return probes;
  });
  report.section("claims", [&] {
    json claims = json::array();
    for (const ClaimVerdict& claim : example.claims) {
      claims.push_back(json{{"claim", claim.claim},
                            {"expected", claim.expected},
                            {"measured", claim.measured},
                            {"verdict", claim.verdict},
                            {"note", claim.note}});
      std::printf("  [%-9s] %-52s measured %s\n", claim.verdict.c_str(),
                  claim.claim.c_str(), fmt(claim.measured).c_str());
    }
    return claims;
  });
  report.section("measurements", [&] {
    return json{{"kappa", example.kappa},
                {"kappa_spread", example.kappa_spread},
                {"spray_stated_err", example.spray_stated_err},
                {"spray_rescaled_err", example.spray_rescaled_err},
                {"invariance_residual", example.invariance_residual},
                {"necessary_residual", example.necessary_residual},
                {"phi_tilde_norm", example.phi_tilde_norm},
                {"phi_closed_discrepancy", example.phi_closed_discrepancy},
                {"deformed_holonomy_rank", example.deformed_rank},
                {"tangent_dim", example.tangent_dim},
                {"equivalence_distance", example.equivalence_distance}};
  });
  report.section("notes", [&] {
    json notes = json::array();
    for (const std::string& note : example.notes) {
      notes.push_back(note);
      std::printf("  note: %s\n", note.c_str());
    }
    return notes;
  });

  report.finish(example.completed, opts.json_path);
  std::printf("result: %s\n", example.completed ? "completed" : "FAILED");
  return example.completed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finsler: spray geometry, holonomy invariance and projective "
               "metrizability obstructions"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string factor_text;
  double lambda = 1.0;
  bool lambda_given = false;
  int depth = 0;
  double rank_tol = kRankRelTol;
  int example = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_point, bool with_tol = true) {
    cmd->add_option("--catalog", common.catalog,
                    "catalog metric: euclidean | klein | mu_family");
    cmd->add_option("--metric", common.metric_file, "metric definition file");
    auto* point =
        cmd->add_option("--point", common.point_text, "x=a,b,...;y=c,d,...");
    if (needs_point) point->required();
    cmd->add_option("--mu", common.mu, "mu_family parameter (mu > 0)");
    cmd->add_option("--seed", common.seed, "probe sampling seed");
    if (with_tol) cmd->add_option("--tol", common.tol, "numeric tolerance");
    cmd->add_option("--json", common.json_path, "write the report as JSON");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "curvature analysis");
  add_common(analyze, true);

  CLI::App* deform = app.add_subcommand("deform", "projective deformation");
  add_common(deform, true);
  deform->add_option("--factor", factor_text,
                     "projective factor expression, or F for the metric's own");
  deform->add_option("--lambda", lambda, "deformation scalar")->required();

  CLI::App* holonomy = app.add_subcommand("holonomy", "distribution rank");
  add_common(holonomy, true, /*with_tol=*/false);
  holonomy->add_option("--factor", factor_text, "deform first with this factor");
  holonomy->add_option("--lambda", lambda, "deformation scalar")
      ->each([&](const std::string&) { lambda_given = true; });
  holonomy->add_option("--depth", depth, "bracket depth cap (default 2n)");
  holonomy->add_option("--tol", rank_tol, "rank cutoff relative to the largest singular value");

  CLI::App* verify = app.add_subcommand("verify-example", "worked scenarios");
  verify->add_option("--example", example, "scenario number: 1 or 2")
      ->required();
  verify->add_option("--mu", common.mu, "mu parameter for scenario 2");
  verify->add_option("--seed", common.seed, "probe sampling seed");
  verify->add_option("--json", common.json_path, "write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(common);
    if (app.got_subcommand(deform)) return cmd_deform(common, factor_text, lambda);
    if (app.got_subcommand(holonomy))
      return cmd_holonomy(common, factor_text,
                          lambda_given ? std::optional<double>(lambda)
                                       : std::nullopt,
                          depth, rank_tol);
    if (app.got_subcommand(verify)) return cmd_verify_example(common, example);
  } catch (const ExprError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 2;
}
