#include "finsler/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace finsler {

bool in_domain(const Expr& domain, const ChartPoint& p) {
  try {
    return eval(domain, p) > 0.0;
  } catch (const DomainError&) {
    return false;
  }
}

void require_in_domain(const Expr& domain, const ChartPoint& p) {
  if (!in_domain(domain, p))
    throw DomainError("point outside the metric domain", domain.str());
}

Expr energy(const Finsler& f) {
  auto probes = sample_chart_points(f.dim(), f.domain, 10, 42);
  const double scales[] = {0.5, 2.0, 3.0};
  HomogeneityReport h = check_homogeneity(f.F, 1, probes, scales);
  if (!h.passed)
    throw ExprError(
        "Finsler function is not 1-homogeneous (scale error " +
        std::to_string(h.max_scale_error) + ", Euler error " +
        std::to_string(h.max_euler_error) + ")");
  return f.F.squared() / 2.0;
}

namespace {

// Symmetric y-Hessian of an energy expression, evaluated exactly once per
// canonical index pair.
Eigen::MatrixXd energy_hessian(const Expr& E, const ChartPoint& p) {
  int n = E.dim();
  std::vector<Expr> batch;
  batch.reserve(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i) {
    Expr Ei = differentiate(E, Var::y(i));
    for (int j = i; j < n; ++j) batch.push_back(differentiate(Ei, Var::y(j)));
  }
  std::vector<double> vals = eval_many(batch, p);
  Eigen::MatrixXd g(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      g(i, j) = vals[k];
      g(j, i) = vals[k];
      ++k;
    }
  return g;
}

MetricValue metric_from_energy(const Expr& E, const ChartPoint& p) {
  MetricValue m;
  m.g = energy_hessian(E, p);
  m.rank = numeric_rank(m.g);
  m.regular = (m.rank == E.dim());
  return m;
}

std::vector<std::vector<Expr>> sym_minor(
    const std::vector<std::vector<Expr>>& m, int row, int col) {
  int n = static_cast<int>(m.size());
  std::vector<std::vector<Expr>> out;
  out.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    if (i == row) continue;
    std::vector<Expr> r;
    r.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == col) continue;
      r.push_back(m[i][j]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

Expr sym_det(const std::vector<std::vector<Expr>>& m) {
  int n = static_cast<int>(m.size());
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Expr det = Expr::constant(0.0, m[0][0].dim());
  for (int j = 0; j < n; ++j) {
    Expr term = m[0][j] * sym_det(sym_minor(m, 0, j));
    det = (j % 2 == 0) ? det + term : det - term;
  }
  return det;
}

Expr sym_cofactor(const std::vector<std::vector<Expr>>& m, int i, int j) {
  if (m.size() == 1) return Expr::constant(1.0, m[0][0].dim());
  Expr d = sym_det(sym_minor(m, i, j));
  return ((i + j) % 2 == 0) ? d : -d;
}

}  // namespace

MetricValue metric_tensor(const Finsler& f, const ChartPoint& p) {
  require_in_domain(f.domain, p);
  return metric_from_energy(f.F.squared() / 2.0, p);
}

MetricValue metric_tensor_of_energy(const Expr& E, const ChartPoint& p) {
  return metric_from_energy(E, p);
}

double spray_homogeneity_residual(const SprayJet& jet,
                                  const Eigen::VectorXd& y) {
  int n = static_cast<int>(jet.G.size());
  double worst = 0.0;
  Eigen::VectorXd radial = jet.Gy * y;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, rel_diff(radial[i], 2.0 * jet.G[i]));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = jet.Gyy[i] * y;  // sum_k d^2G^i/dy^j dy^k y^k
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, rel_diff(row[j], jet.Gy(i, j)));
  }
  return worst;
}

double CurvatureValue::max_abs() const {
  double m = 0.0;
  for (const auto& Ri : R) m = std::max(m, Ri.cwiseAbs().maxCoeff());
  return m;
}

Expr VectorFieldTM::apply(const Expr& f) const {
  Expr out = Expr::constant(0.0, f.dim());
  for (int i = 0; i < dim(); ++i) {
    if (!a[i].is_zero()) out = out + a[i] * differentiate(f, Var::x(i));
    if (!b[i].is_zero()) out = out + b[i] * differentiate(f, Var::y(i));
  }
  return out;
}

Eigen::VectorXd VectorFieldTM::value(const ChartPoint& p) const {
  std::vector<Expr> batch;
  batch.reserve(2 * dim());
  for (const Expr& e : a) batch.push_back(e);
  for (const Expr& e : b) batch.push_back(e);
  std::vector<double> vals = eval_many(batch, p);
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

VectorFieldTM VectorFieldTM::zero(int dim) {
  VectorFieldTM f;
  f.a.assign(dim, Expr::constant(0.0, dim));
  f.b.assign(dim, Expr::constant(0.0, dim));
  return f;
}

// ---------------------------------------------------------------------------
// SprayGeometry
// ---------------------------------------------------------------------------

struct SprayGeometry::Data {
  int dim = 0;
  Expr domain;
  std::optional<Finsler> finsler;
  Expr E;
  std::vector<Expr> G;
};

SprayGeometry::SprayGeometry(std::shared_ptr<const Data> data)
    : data_(std::move(data)) {}

SprayGeometry SprayGeometry::geodesic(const Finsler& f) {
  int n = f.dim();
  auto data = std::make_shared<Data>();
  data->dim = n;
  data->domain = f.domain;
  data->finsler = f;
  data->E = finsler::energy(f);  // includes the 1-homogeneity check

  const Expr& E = data->E;

  std::vector<Expr> Ey(n);
  for (int i = 0; i < n; ++i) Ey[i] = differentiate(E, Var::y(i));

  std::vector<std::vector<Expr>> g(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      g[i][j] = differentiate(Ey[i], Var::y(j));
      g[j][i] = g[i][j];
    }

  // Euler-Lagrange force covector: q_l = y^k d^2E/dy^l dx^k - dE/dx^l.
  std::vector<Expr> q(n);
  for (int l = 0; l < n; ++l) {
    Expr acc = -differentiate(E, Var::x(l));
    for (int k = 0; k < n; ++k) {
      Expr mixed = differentiate(Ey[l], Var::x(k));
      if (!mixed.is_zero())
        acc = acc + Expr::variable(Var::y(k), n) * mixed;
    }
    q[l] = acc;
  }

  // G^i = g^{il} q_l / 2 with the inverse expanded through cofactors, so the
  // coefficients stay closed-form expressions.
  Expr det = sym_det(g);
  data->G.resize(n);
  for (int i = 0; i < n; ++i) {
    Expr num = Expr::constant(0.0, n);
    for (int l = 0; l < n; ++l) num = num + sym_cofactor(g, l, i) * q[l];
    data->G[i] = num / (2.0 * det);
  }
  return SprayGeometry(std::move(data));
}

SprayGeometry SprayGeometry::from_coefficients(std::vector<Expr> G,
                                               Expr domain) {
  if (G.empty()) throw std::invalid_argument("spray needs coefficients");
  auto data = std::make_shared<Data>();
  data->dim = static_cast<int>(G.size());
  data->domain = std::move(domain);
  data->G = std::move(G);
  return SprayGeometry(std::move(data));
}

int SprayGeometry::dim() const { return data_->dim; }
const Expr& SprayGeometry::domain() const { return data_->domain; }
bool SprayGeometry::has_finsler() const { return data_->finsler.has_value(); }

const Finsler& SprayGeometry::finsler() const {
  if (!has_finsler())
    throw std::logic_error("spray was not built from a Finsler function");
  return *data_->finsler;
}

const Expr& SprayGeometry::energy() const {
  if (!has_finsler())
    throw std::logic_error("spray was not built from a Finsler function");
  return data_->E;
}

const std::vector<Expr>& SprayGeometry::spray_coefficients() const {
  return data_->G;
}

Eigen::VectorXd SprayGeometry::spray_values(const ChartPoint& p) const {
  require_in_domain(domain(), p);
  std::vector<double> vals = eval_many(data_->G, p);
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

SprayJet SprayGeometry::jet(const ChartPoint& p) const {
  require_in_domain(domain(), p);
  int n = dim();
  const auto& G = data_->G;

  std::vector<Expr> batch;
  batch.reserve(n + n * n * 2 + n * n * n * 2);
  for (int i = 0; i < n; ++i) batch.push_back(G[i]);

  std::vector<Expr> Gy(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Gy[i * n + j] = differentiate(G[i], Var::y(j));
      batch.push_back(Gy[i * n + j]);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        batch.push_back(differentiate(Gy[i * n + j], Var::y(k)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) batch.push_back(differentiate(G[i], Var::x(j)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        batch.push_back(differentiate(Gy[i * n + j], Var::x(k)));

  std::vector<double> v = eval_many(batch, p);

  SprayJet jet;
  std::size_t at = 0;
  jet.G = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) jet.G[i] = v[at++];
  jet.Gy = Eigen::MatrixXd(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) jet.Gy(i, j) = v[at++];
  jet.Gyy.assign(n, Eigen::MatrixXd(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) jet.Gyy[i](j, k) = v[at++];
  jet.Gx = Eigen::MatrixXd(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) jet.Gx(i, j) = v[at++];
  jet.Gyx.assign(n, Eigen::MatrixXd(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) jet.Gyx[i](j, k) = v[at++];
  return jet;
}

CurvatureValue SprayGeometry::curvature(const ChartPoint& p) const {
  SprayJet j = jet(p);
  int n = dim();
  // delta_k(G^i_j) = dG^i_j/dx^k - G^l_k dG^i_j/dy^l
  auto horizontal_deriv = [&](int i, int jj, int k) {
    double s = j.Gyx[i](jj, k);
    for (int l = 0; l < n; ++l) s -= j.Gy(l, k) * j.Gyy[i](jj, l);
    return s;
  };
  CurvatureValue out;
  out.R.assign(n, Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      for (int k = jj + 1; k < n; ++k) {
        double val = horizontal_deriv(i, jj, k) - horizontal_deriv(i, k, jj);
        out.R[i](jj, k) = val;
        out.R[i](k, jj) = -val;
      }
  return out;
}

Eigen::MatrixXd SprayGeometry::jacobi(const ChartPoint& p) const {
  SprayJet jt = jet(p);
  int n = dim();
  Eigen::MatrixXd phi(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double sGij = 0.0;  // S(G^i_j) = y^k dG^i_j/dx^k - 2 G^k dG^i_j/dy^k
      for (int k = 0; k < n; ++k)
        sGij += p.y()[k] * jt.Gyx[i](j, k) - 2.0 * jt.G[k] * jt.Gyy[i](j, k);
      double quad = 0.0;
      for (int k = 0; k < n; ++k) quad += jt.Gy(i, k) * jt.Gy(k, j);
      phi(i, j) = 2.0 * jt.Gx(i, j) - sGij - quad;
    }
  return phi;
}

Eigen::MatrixXd SprayGeometry::jacobi_from_curvature(const ChartPoint& p) const {
  CurvatureValue R = curvature(p);
  int n = dim();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) phi(i, j) += p.y()[k] * R.R[i](k, j);
  return phi;
}

std::vector<VectorFieldTM> SprayGeometry::horizontal_frame() const {
  int n = dim();
  std::vector<VectorFieldTM> frame(n);
  for (int i = 0; i < n; ++i) {
    VectorFieldTM& d = frame[i];
    d.a.assign(n, Expr::constant(0.0, n));
    d.a[i] = Expr::constant(1.0, n);
    d.b.resize(n);
    for (int j = 0; j < n; ++j)
      d.b[j] = -differentiate(data_->G[j], Var::y(i));
  }
  return frame;
}

VectorFieldTM SprayGeometry::spray_field() const {
  int n = dim();
  VectorFieldTM s;
  s.a.resize(n);
  s.b.resize(n);
  for (int i = 0; i < n; ++i) {
    s.a[i] = Expr::variable(Var::y(i), n);
    s.b[i] = -2.0 * data_->G[i];
  }
  return s;
}

VectorFieldTM SprayGeometry::liouville_field() const {
  int n = dim();
  VectorFieldTM c = VectorFieldTM::zero(n);
  for (int i = 0; i < n; ++i) c.b[i] = Expr::variable(Var::y(i), n);
  return c;
}

GeodesicPath SprayGeometry::integrate_geodesic(const ChartPoint& start,
                                               double T, int steps) const {
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  require_in_domain(domain(), start);

  int n = dim();
  double h = T / steps;

  auto accel = [&](const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) -> Eigen::VectorXd {
    ChartPoint p(x, y);  // throws when y hits zero
    std::vector<double> g = eval_many(data_->G, p);
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = -2.0 * g[i];
    return out;
  };

  GeodesicPath path;
  path.x.push_back(start.x());
  path.y.push_back(start.y());
  path.t.push_back(0.0);

  Eigen::VectorXd x = start.x(), y = start.y();
  for (int s = 1; s <= steps; ++s) {
    try {
      Eigen::VectorXd k1x = y, k1y = accel(x, y);
      Eigen::VectorXd k2x = y + 0.5 * h * k1y,
                      k2y = accel(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
      Eigen::VectorXd k3x = y + 0.5 * h * k2y,
                      k3y = accel(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
      Eigen::VectorXd k4x = y + h * k3y,
                      k4y = accel(x + h * k3x, y + h * k3y);
      x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      ChartPoint next(x, y);
      if (!in_domain(domain(), next)) {
        path.completed = false;
        path.exit_index = s;
        return path;
      }
    } catch (const ExprError&) {
      path.completed = false;
      path.exit_index = s;
      return path;
    } catch (const std::invalid_argument&) {
      path.completed = false;
      path.exit_index = s;
      return path;
    }
    path.x.push_back(x);
    path.y.push_back(y);
    path.t.push_back(s * h);
  }
  path.completed = true;
  path.exit_index = static_cast<int>(path.x.size());
  return path;
}

}  // namespace finsler
