#include "finsler/deform.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

// One null measurement per probe: |P| must stay away from zero for the
// deformation machinery (divisions by P) to make sense.
void require_nontrivial(const Expr& P, std::span<const ChartPoint> probes) {
  for (const ChartPoint& p : probes)
    if (std::abs(eval(P, p)) <= 1e-12)
      throw DomainError("projective factor vanishes at a probe point",
                        P.str());
}

std::vector<Expr> deformed_coefficients(const SprayGeometry& base,
                                        const Expr& P, double lambda) {
  int n = base.dim();
  std::vector<Expr> G = base.spray_coefficients();
  if (lambda == 0.0) return G;  // identity deformation, bitwise
  for (int i = 0; i < n; ++i)
    G[i] = G[i] + (lambda * P) * Expr::variable(Var::y(i), n);
  return G;
}

}  // namespace

DeformedSpray deform_spray(const SprayGeometry& base, const Expr& P,
                           double lambda, const DeformOptions& opts) {
  if (!base.has_finsler())
    throw std::invalid_argument("deformation needs a Finsler base spray");
  auto probes = sample_chart_points(base.dim(), base.domain(), opts.samples,
                                    opts.seed);
  HomogeneityReport hom =
      check_homogeneity(P, 1, probes, std::vector<double>{0.5, 2.0, 3.0});
  if (!hom.passed)
    throw ExprError("projective factor is not 1-homogeneous (scale error " +
                    std::to_string(hom.max_scale_error) + ")");
  require_nontrivial(P, probes);
  if (opts.check_invariance) {
    InvarianceReport inv = is_holonomy_invariant(base, P, probes, opts.tol);
    if (!inv.passed)
      throw ExprError(
          "projective factor failed the holonomy-invariance test (residual " +
          std::to_string(inv.max_residual) + " over " +
          std::to_string(inv.samples) + " samples)");
  }

  DeformedSpray d{base.finsler(), P, lambda, base,
                  SprayGeometry::from_coefficients(
                      deformed_coefficients(base, P, lambda), base.domain())};
  return d;
}

JacobiPair deformed_jacobi(const DeformedSpray& d, const ChartPoint& p) {
  int n = d.base_geometry.dim();
  JacobiPair pair;
  pair.direct = d.deformed_geometry.jacobi(p);

  Eigen::MatrixXd phi = d.base_geometry.jacobi(p);
  double Pv = eval(d.P, p);
  Eigen::VectorXd Py(n);
  for (int j = 0; j < n; ++j)
    Py[j] = eval(differentiate(d.P, Var::y(j)), p);
  double l2 = d.lambda * d.lambda;
  pair.closed_form =
      phi + l2 * (Pv * Pv * Eigen::MatrixXd::Identity(n, n) -
                  Pv * (p.y() * Py.transpose()));
  pair.discrepancy = (pair.direct - pair.closed_form).norm() /
                     std::max(1.0, pair.direct.norm());

  // The closed form rests on S(P) = 0 and d_J S(P) = 0; measure both.
  Expr SP = d.base_geometry.spray_field().apply(d.P);
  double scale = std::max(1.0, std::abs(Pv));
  pair.ls_residual = std::abs(eval(SP, p)) / scale;
  for (int j = 0; j < n; ++j)
    pair.djls_residual =
        std::max(pair.djls_residual,
                 std::abs(eval(differentiate(SP, Var::y(j)), p)) / scale);
  return pair;
}

ProjectorPair deformed_projectors(const DeformedSpray& d, const ChartPoint& p) {
  int n = d.base_geometry.dim();
  SprayJet jet = d.base_geometry.jet(p);
  double Pv = eval(d.P, p);
  Eigen::VectorXd Py(n);
  for (int j = 0; j < n; ++j)
    Py[j] = eval(differentiate(d.P, Var::y(j)), p);

  // h~ = h - lambda (P J + d_J P (x) C): only the lower-left block moves.
  Eigen::MatrixXd lower =
      -jet.Gy - d.lambda * (Pv * Eigen::MatrixXd::Identity(n, n) +
                            p.y() * Py.transpose());
  ProjectorPair pair;
  pair.h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  pair.h.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  pair.h.bottomLeftCorner(n, n) = lower;
  pair.v = Eigen::MatrixXd::Identity(2 * n, 2 * n) - pair.h;

  pair.idempotency_residual = (pair.h * pair.h - pair.h).norm();
  pair.mixed_residual = (pair.h * pair.v).norm();

  Eigen::VectorXd stilde(2 * n);
  stilde.head(n) = p.y();
  stilde.tail(n) = -2.0 * (jet.G + d.lambda * Pv * p.y());
  pair.spray_residual =
      (pair.h * stilde - stilde).norm() / std::max(1.0, stilde.norm());
  return pair;
}

Eigen::MatrixXd projector_from_connection(const SprayGeometry& geo,
                                          const ChartPoint& p) {
  int n = geo.dim();
  VectorFieldTM S = geo.spray_field();

  // Gamma = [J, S] evaluated on the coordinate frame:
  //   Gamma(dx_j) = [dy_j, S] - J [dx_j, S],  Gamma(dy_j) = -J [dy_j, S].
  auto coordinate_field = [&](Var v) {
    VectorFieldTM f = VectorFieldTM::zero(n);
    (v.kind == VarKind::Base ? f.a : f.b)[v.index] = Expr::constant(1.0, n);
    return f;
  };
  auto vertical_swap = [&](const Eigen::VectorXd& w) {
    // J maps (a, b) to (0, a)
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
    out.tail(n) = w.head(n);
    return out;
  };

  Eigen::MatrixXd gamma(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    VectorFieldTM dx = coordinate_field(Var::x(j));
    VectorFieldTM dy = coordinate_field(Var::y(j));
    Eigen::VectorXd col_x = lie_bracket(dy, S).value(p) -
                            vertical_swap(lie_bracket(dx, S).value(p));
    Eigen::VectorXd col_y = -vertical_swap(lie_bracket(dy, S).value(p));
    gamma.col(j) = col_x;
    gamma.col(n + j) = col_y;
  }
  return 0.5 * (Eigen::MatrixXd::Identity(2 * n, 2 * n) + gamma);
}

AdaptedFrame adapted_frames(const SprayGeometry& base, const Expr& P,
                            const ChartPoint& p) {
  int n = base.dim();
  require_in_domain(base.domain(), p);
  if (std::abs(eval(P, p)) <= 1e-12)
    throw DomainError("projective factor vanishes at the point", P.str());

  const std::vector<Expr>& G = base.spray_coefficients();
  AdaptedFrame frame;
  frame.S = base.spray_field();
  frame.C = base.liouville_field();
  frame.h.resize(n);
  frame.v.resize(n);

  for (int i = 0; i < n; ++i) {
    Expr ratio = differentiate(P, Var::y(i)) / P;  // P_i / P
    VectorFieldTM& h = frame.h[i];
    VectorFieldTM& v = frame.v[i];
    h.a.resize(n);
    h.b.resize(n);
    for (int j = 0; j < n; ++j) {
      Expr kron = Expr::constant(i == j ? 1.0 : 0.0, n);
      h.a[j] = kron - ratio * Expr::variable(Var::y(j), n);
      h.b[j] = 2.0 * (ratio * G[j]) - differentiate(G[j], Var::y(i));
    }
    // J h_i = v_i holds on the nose: the components are shared
    v.a.assign(n, Expr::constant(0.0, n));
    v.b = h.a;
  }

  frame.h_values.resize(2 * n, n);
  frame.v_values.resize(2 * n, n);
  for (int i = 0; i < n; ++i) {
    frame.h_values.col(i) = frame.h[i].value(p);
    frame.v_values.col(i) = frame.v[i].value(p);
  }
  frame.h_rank = numeric_rank(frame.h_values);
  frame.v_rank = numeric_rank(frame.v_values);
  return frame;
}

namespace {

bool in_span(const Eigen::MatrixXd& span, const Eigen::VectorXd& v,
             double tol = kRankRelTol) {
  Eigen::MatrixXd trial(span.rows(), span.cols() + 1);
  trial.leftCols(span.cols()) = span;
  trial.col(span.cols()) = v;
  return numeric_rank(trial, tol) == numeric_rank(span, tol);
}

}  // namespace

FrameCheckReport verify_adapted_frame(const SprayGeometry& base, const Expr& P,
                                      const ChartPoint& p, double tol) {
  int n = base.dim();
  // preconditions: nontrivial, 1-homogeneous, holonomy invariant
  if (std::abs(eval(P, p)) <= 1e-12)
    throw DomainError("projective factor vanishes at the point", P.str());
  const ChartPoint probe[] = {p};
  const double scales[] = {0.5, 2.0, 3.0};
  if (!check_homogeneity(P, 1, probe, scales).passed)
    throw ExprError("projective factor is not 1-homogeneous");
  if (!is_holonomy_invariant(base, P, probe, tol).passed)
    throw ExprError("projective factor is not holonomy invariant at the point");

  FrameCheckReport report;
  auto add = [&](std::string name, double measured, double bound) {
    report.checks.push_back({std::move(name), measured, bound, measured < bound});
  };

  AdaptedFrame frame = adapted_frames(base, P, p);
  SprayJet jet = base.jet(p);

  // vertical projector of the base connection: (a, b) -> (0, Gy a + b)
  Eigen::MatrixXd v_proj = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  v_proj.bottomLeftCorner(n, n) = jet.Gy;
  v_proj.bottomRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);

  double Pv = eval(P, p);
  Eigen::VectorXd Py(n);
  for (int i = 0; i < n; ++i) Py[i] = eval(differentiate(P, Var::y(i)), p);

  // v_P = v - (d_v P / P) (x) C as a matrix at p
  Eigen::VectorXd c_val = frame.C.value(p);
  Eigen::VectorXd dvP(2 * n);
  dvP.head(n) = jet.Gy.transpose() * Py;
  dvP.tail(n) = Py;
  Eigen::MatrixXd vP = v_proj - (c_val / Pv) * dvP.transpose();

  // (1i) kernel: v_P annihilates every delta_i and C
  double kernel_residual = 0.0;
  std::vector<VectorFieldTM> deltas = base.horizontal_frame();
  for (const VectorFieldTM& d : deltas) {
    Eigen::VectorXd val = d.value(p);
    kernel_residual = std::max(
        kernel_residual, (vP * val).norm() / std::max(1.0, val.norm()));
  }
  kernel_residual = std::max(
      kernel_residual, (vP * c_val).norm() / std::max(1.0, c_val.norm()));
  add("kernel(v_P) contains horizontal frame and C", kernel_residual, tol);

  // span ranks
  add("rank(span v_i) == n-1",
      std::abs(static_cast<double>(frame.v_rank - (n - 1))), 0.5);
  add("rank(span h_i) == n-1",
      std::abs(static_cast<double>(frame.h_rank - (n - 1))), 0.5);

  // (1ii) involutivity with the explicit structure functions
  double bracket_residual = 0.0;
  bool membership_ok = true;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd val = lie_bracket(frame.v[i], frame.v[j]).value(p);
      Eigen::VectorXd expected = (Py[i] / Pv) * frame.v_values.col(j) -
                                 (Py[j] / Pv) * frame.v_values.col(i);
      bracket_residual =
          std::max(bracket_residual,
                   (val - expected).norm() / std::max(1.0, expected.norm()));
      membership_ok = membership_ok && in_span(frame.v_values, val);
    }
  add("[v_i, v_j] = (P_i/P) v_j - (P_j/P) v_i", bracket_residual, tol);
  add("[v_i, v_j] stays inside span{v_k}", membership_ok ? 0.0 : 1.0, 0.5);

  // (1iii/2iii) infinitesimal symmetry of P
  double symmetry_residual = 0.0;
  double scaleP = std::max(1.0, std::abs(Pv));
  for (int i = 0; i < n; ++i) {
    symmetry_residual = std::max(
        symmetry_residual, std::abs(eval(frame.h[i].apply(P), p)) / scaleP);
    symmetry_residual = std::max(
        symmetry_residual, std::abs(eval(frame.v[i].apply(P), p)) / scaleP);
  }
  add("h_i(P) = 0 and v_i(P) = 0", symmetry_residual, tol);

  // (1iv/2iv) C escapes span{v_i} and S escapes span{h_i}
  bool c_escapes = !in_span(frame.v_values, c_val);
  Eigen::VectorXd s_val = frame.S.value(p);
  bool s_escapes = !in_span(frame.h_values, s_val);
  add("C not in span{v_i}", c_escapes ? 0.0 : 1.0, 0.5);
  add("S not in span{h_i}", s_escapes ? 0.0 : 1.0, 0.5);

  // v[h_i, v_j] lands back in span{v_k}
  bool vertical_ok = true;
  double vertical_residual = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd val =
          v_proj * lie_bracket(frame.h[i], frame.v[j]).value(p);
      if (!in_span(frame.v_values, val)) vertical_ok = false;
      // distance to the span as a residual
      Eigen::MatrixXd basis = frame.v_values;
      Eigen::VectorXd coef =
          basis.colPivHouseholderQr().solve(val);
      vertical_residual =
          std::max(vertical_residual,
                   (basis * coef - val).norm() / std::max(1.0, val.norm()));
    }
  add("v[h_i, v_j] lies in span{v_k}",
      vertical_ok ? vertical_residual : 1.0, tol);

  // y^i h_i = 0 and y^i v_i = 0
  double null_residual =
      std::max((frame.h_values * p.y()).norm(), (frame.v_values * p.y()).norm()) /
      std::max(1.0, p.y().norm());
  add("y^i h_i = 0 and y^i v_i = 0", null_residual, tol);

  report.passed = true;
  for (const FrameCheck& c : report.checks) report.passed &= c.passed;
  return report;
}

// ---------------------------------------------------------------------------
// Trace comparison
// ---------------------------------------------------------------------------

double polyline_length(const std::vector<Eigen::VectorXd>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    len += (pts[i] - pts[i - 1]).norm();
  return len;
}

std::vector<Eigen::VectorXd> resample_arclength(
    const std::vector<Eigen::VectorXd>& pts, int nodes, double length_cap) {
  if (pts.size() < 2 || nodes < 2)
    return pts;
  double total = polyline_length(pts);
  if (length_cap > 0.0) total = std::min(total, length_cap);
  std::vector<Eigen::VectorXd> out;
  out.reserve(nodes);
  double step = total / (nodes - 1);
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (int k = 0; k < nodes; ++k) {
    double target = std::min(k * step, total);
    while (seg + 1 < pts.size() - 1 &&
           seg_start + (pts[seg + 1] - pts[seg]).norm() < target) {
      seg_start += (pts[seg + 1] - pts[seg]).norm();
      ++seg;
    }
    double seg_len = (pts[seg + 1] - pts[seg]).norm();
    double t = seg_len > 0.0 ? (target - seg_start) / seg_len : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    out.push_back(pts[seg] + t * (pts[seg + 1] - pts[seg]));
  }
  return out;
}

namespace {

double point_segment_distance(const Eigen::VectorXd& q,
                              const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  Eigen::VectorXd ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (q - a).norm();
  double t = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
  return (q - (a + t * ab)).norm();
}

double one_sided(const std::vector<Eigen::VectorXd>& from,
                 const std::vector<Eigen::VectorXd>& to) {
  double worst = 0.0;
  for (const Eigen::VectorXd& q : from) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < to.size(); ++i)
      best = std::min(best, point_segment_distance(q, to[i], to[i + 1]));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

double trace_distance(const std::vector<Eigen::VectorXd>& a,
                      const std::vector<Eigen::VectorXd>& b, int nodes) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("trace comparison needs at least two points");
  // compared as point sets over the common arc length
  double cap = std::min(polyline_length(a), polyline_length(b));
  std::vector<Eigen::VectorXd> ra = resample_arclength(a, nodes, cap);
  std::vector<Eigen::VectorXd> rb = resample_arclength(b, nodes, cap);
  return std::max(one_sided(ra, rb), one_sided(rb, ra));
}

EquivalenceReport projective_equivalence_check(const DeformedSpray& d,
                                               const ChartPoint& start,
                                               double T, int steps,
                                               double tol) {
  EquivalenceReport report;
  report.tol = tol;
  GeodesicPath base = d.base_geometry.integrate_geodesic(start, T, steps);
  GeodesicPath deformed =
      d.deformed_geometry.integrate_geodesic(start, T, steps);
  report.base_completed = base.completed;
  report.deformed_completed = deformed.completed;
  report.distance = trace_distance(base.x, deformed.x);
  report.passed = report.distance < tol && base.completed && deformed.completed;
  return report;
}

}  // namespace finsler
