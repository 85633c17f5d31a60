#include "contactlab/flow.hpp"

#include <cmath>

namespace contactlab {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace

Vec rk45(const OdeRhs& F, double t0, double t1, Vec y, double rtol, double atol,
         long max_steps, FlowStats& stats, const std::function<void(double, Vec&)>& postproc,
         const std::vector<double>& grid, const std::function<void(int, double, const Vec&)>& on_grid) {
  const double span = t1 - t0;
  if (span < 0.0) throw IntegrationError("rk45: reversed time span", t0);

  size_t grid_idx = 0;
  auto emit_grid = [&](double t, Vec& state) {
    while (grid_idx < grid.size() && grid[grid_idx] <= t + 1e-13) {
      if (on_grid) on_grid(static_cast<int>(grid_idx), grid[grid_idx], state);
      ++grid_idx;
    }
  };

  double t = t0;
  emit_grid(t, y);
  if (span == 0.0) return y;

  const int n = static_cast<int>(y.size());
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y5(n), yerr(n);

  double h = span / 100.0;
  long steps = 0;
  while (t < t1 - 1e-14 * std::max(1.0, std::abs(t1))) {
    if (++steps > max_steps)
      throw IntegrationError("rk45: step budget exhausted", t);

    double stop = t1;
    if (grid_idx < grid.size() && grid[grid_idx] < t1) stop = grid[grid_idx];
    double hs = std::min(h, stop - t);
    if (hs < 1e-14 * std::max(1.0, std::abs(t)))
      throw IntegrationError("rk45: step size underflow", t);

    k1 = F(t, y);
    k2 = F(t + c2 * hs, y + hs * (a21 * k1));
    k3 = F(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    k4 = F(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = F(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = F(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = F(t + hs, y5);
    stats.rhs_evals += 7;
    yerr = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
      err += sqr(yerr(i) / sc);
    }
    err = std::sqrt(err / n);

    if (err <= 1.0) {
      t += hs;
      y = y5;
      if (postproc) postproc(t, y);
      ++stats.accepted;
      emit_grid(t, y);
      const double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
      h = hs * std::clamp(grow, 0.2, 5.0);
      h = std::min(h, span);
    } else {
      ++stats.rejected;
      h = hs * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5);
    }
  }
  emit_grid(t1 + 1e-12, y);
  return y;
}

namespace {

Vec reeb_at(const ManifoldModel& M, const Vec& x) {
  if (M.reeb_closed) return M.reeb_closed(x);
  return solve_reeb(M, x).field;
}

// Contact-flow right hand side on the extended state [x, g]:
//   dx/dt = Y_t(x),   dg/dt = dH_t(R)(x).
struct ContactRhs {
  const ManifoldModel* M;
  const TimeHamiltonian* H;
  int amb;

  Vec base(double t, const Vec& xraw) const {
    // Trial integrator stages wander off constrained manifolds by the local
    // step error; the assembled system is only consistent on the manifold, so
    // evaluate the field at the projected point.
    const Vec x = M->project(xraw);
    const double h = (*H)(t, x);
    const Vec dh = H->grad(t, x);
    const Vec R = reeb_at(*M, x);
    const Vec a = M->alpha(x);
    const double hr = dh.dot(R);
    const Mat B = M->tangent_basis(x);
    const Vec rhs_tangent = B.transpose() * (-dh + hr * a);
    // shares the assembly in solve_contact_field but reuses R computed here
    Mat A(M->dim + 1, M->dim);
    A.row(0) = (B.transpose() * a).transpose();
    A.bottomRows(M->dim) = -(B.transpose() * M->dalpha(x) * B);
    Vec b(M->dim + 1);
    b(0) = h;
    b.tail(M->dim) = rhs_tangent;
    Eigen::ColPivHouseholderQR<Mat> qr(A);
    const Vec c = qr.solve(b);
    const double residual = (A * c - b).norm();
    if (qr.rank() < M->dim || residual > 1e-7 * (1.0 + b.norm()))
      throw SingularSystemError("contact_field", 0.0, "during flow integration");
    Vec out(amb + 1);
    out.head(amb) = B * c;
    out(amb) = hr;
    return out;
  }

  Vec operator()(double t, const Vec& y) const {
    return base(t, y.head(amb));
  }
};

struct VariationalRhs {
  ContactRhs inner;
  int D;  // amb + 1

  Vec operator()(double t, const Vec& y) const {
    const int amb = inner.amb;
    const Vec x = y.head(amb);
    const Vec f = inner.base(t, x);
    // Jacobian of the extended field w.r.t. (x, g) by central differences;
    // the field does not depend on g, so that column is zero.
    Mat J = Mat::Zero(D, D);
    const double h = 1e-6 * (1.0 + x.norm());
    Vec xp = x;
    for (int i = 0; i < amb; ++i) {
      const double xi = x(i);
      xp(i) = xi + h;
      const Vec fp = inner.base(t, xp);
      xp(i) = xi - h;
      const Vec fm = inner.base(t, xp);
      xp(i) = xi;
      J.col(i) = (fp - fm) / (2.0 * h);
    }
    Eigen::Map<const Mat> Min(y.data() + D, D, D);
    const Mat dM = J * Min;
    Vec out(D + D * D);
    out.head(D) = f;
    Eigen::Map<Mat>(out.data() + D, D, D) = dM;
    return out;
  }
};

std::function<void(double, Vec&)> make_postproc(const ManifoldModel& M, int amb) {
  if (M.constraint == Constraint::None) return {};
  return [&M, amb](double, Vec& y) {
    y.head(amb) = M.project(y.head(amb));
  };
}

std::vector<double> make_grid(double t0, double t1, int segments) {
  std::vector<double> grid(segments + 1);
  for (int k = 0; k <= segments; ++k) grid[k] = t0 + (t1 - t0) * k / segments;
  return grid;
}

}  // namespace

IsotopyTrace integrate_isotopy(const ManifoldModel& M, const TimeHamiltonian& H,
                               const Vec& x0, const IntegrateOptions& opts) {
  if (!H.valid()) throw ConfigError("integrate_isotopy: empty Hamiltonian");
  Vec start = M.project(x0);
  if (!M.in_chart(start, 1e-6))
    throw ConfigError("integrate_isotopy: start point outside the chart");

  const int amb = M.ambient_dim;
  const int D = amb + 1;
  IsotopyTrace trace;
  trace.x0 = start;

  Vec y0;
  OdeRhs rhs;
  ContactRhs base{&M, &H, amb};
  if (opts.variational) {
    y0 = Vec::Zero(D + D * D);
    y0.head(amb) = start;
    Eigen::Map<Mat>(y0.data() + D, D, D).setIdentity();
    rhs = VariationalRhs{base, D};
  } else {
    y0 = Vec::Zero(D);
    y0.head(amb) = start;
    rhs = [base](double t, const Vec& y) { return base(t, y); };
  }

  const auto grid = make_grid(opts.t0, opts.t1, opts.grid_segments);
  auto on_grid = [&](int, double t, const Vec& y) {
    trace.times.push_back(t);
    trace.points.push_back(M.wrap(y.head(amb)));
    trace.g.push_back(y(amb));
    if (opts.variational)
      trace.extended.push_back(Eigen::Map<const Mat>(y.data() + D, D, D));
  };

  rk45(rhs, opts.t0, opts.t1, y0, opts.rtol, opts.atol, opts.max_steps, trace.stats,
       make_postproc(M, amb), grid, on_grid);
  return trace;
}

MonodromyResult monodromy(const ManifoldModel& M, const TimeHamiltonian& H, const Vec& x0,
                          const IntegrateOptions& opts) {
  IntegrateOptions o = opts;
  o.variational = true;
  o.grid_segments = 1;
  const IsotopyTrace tr = integrate_isotopy(M, H, x0, o);
  const Mat& ext = tr.extended.back();
  MonodromyResult res;
  const int amb = M.ambient_dim;
  res.extended = ext;
  res.dpsi = ext.topLeftCorner(amb, amb);
  res.dg = ext.bottomLeftCorner(1, amb);
  return res;
}

Vec reeb_flow(const ManifoldModel& M, const Vec& x, double eta, double rtol, double atol) {
  if (M.reeb_flow_closed) return M.wrap(M.reeb_flow_closed(x, eta));
  IntegrateOptions o;
  o.rtol = rtol;
  o.atol = atol;
  o.grid_segments = 1;
  return integrate_isotopy(M, constant_hamiltonian(eta), x, o).points.back();
}

Mat reeb_flow_differential(const ManifoldModel& M, const Vec& x, double eta, double rtol,
                           double atol) {
  if (M.reeb_flow_diff_closed) return M.reeb_flow_diff_closed(x, eta);
  IntegrateOptions o;
  o.rtol = rtol;
  o.atol = atol;
  return monodromy(M, constant_hamiltonian(eta), x, o).dpsi;
}

ContactMap::ContactMap(const ManifoldModel& M, TimeHamiltonian H, double rtol, double atol)
    : M_(&M), H_(std::move(H)), rtol_(rtol), atol_(atol) {}

ContactMap::PointImage ContactMap::forward_at(double t, const Vec& x) const {
  if (t == 0.0) return {M_->project(x), 0.0};
  IntegrateOptions o;
  o.rtol = rtol_;
  o.atol = atol_;
  o.grid_segments = 1;
  o.t1 = t;
  const IsotopyTrace tr = integrate_isotopy(*M_, H_, x, o);
  return {tr.points.back(), tr.g.back()};
}

ContactMap::PointImage ContactMap::inverse_at(double t, const Vec& y) const {
  if (t == 0.0) return {M_->project(y), 0.0};
  // The reversed Hamiltonian -H(t-s, .) generates s -> psi_{t-s} psi_t^{-1};
  // its transported exponent at s=t equals -g_{psi_t}(psi_t^{-1} y).
  const TimeHamiltonian& H = H_;
  TimeHamiltonian rev;
  rev.value = [&H, t](double s, const Vec& x) { return -H.value(t - s, x); };
  if (H.gradient)
    rev.gradient = [&H, t](double s, const Vec& x) { return Vec(-H.gradient(t - s, x)); };
  rev.analytic = H.analytic;
  IntegrateOptions o;
  o.rtol = rtol_;
  o.atol = atol_;
  o.grid_segments = 1;
  o.t1 = t;
  const IsotopyTrace tr = integrate_isotopy(*M_, rev, y, o);
  return {tr.points.back(), -tr.g.back()};
}

ContactMap::PointImageVar ContactMap::forward_var_at(double t, const Vec& x) const {
  const int amb0 = M_->ambient_dim;
  if (t == 0.0)
    return {M_->project(x), 0.0, Mat::Identity(amb0, amb0), RowVec::Zero(amb0)};
  IntegrateOptions o;
  o.rtol = rtol_;
  o.atol = atol_;
  o.grid_segments = 1;
  o.t1 = t;
  o.variational = true;
  const IsotopyTrace tr = integrate_isotopy(*M_, H_, x, o);
  const Mat& ext = tr.extended.back();
  const int amb = M_->ambient_dim;
  return {tr.points.back(), tr.g.back(), ext.topLeftCorner(amb, amb),
          ext.bottomLeftCorner(1, amb)};
}

ContactMap::PointImageVar ContactMap::inverse_var_at(double t, const Vec& y) const {
  const int amb0 = M_->ambient_dim;
  if (t == 0.0)
    return {M_->project(y), 0.0, Mat::Identity(amb0, amb0), RowVec::Zero(amb0)};
  const TimeHamiltonian& H = H_;
  TimeHamiltonian rev;
  rev.value = [&H, t](double s, const Vec& x) { return -H.value(t - s, x); };
  if (H.gradient)
    rev.gradient = [&H, t](double s, const Vec& x) { return Vec(-H.gradient(t - s, x)); };
  rev.analytic = H.analytic;
  IntegrateOptions o;
  o.rtol = rtol_;
  o.atol = atol_;
  o.grid_segments = 1;
  o.t1 = t;
  o.variational = true;
  const IsotopyTrace tr = integrate_isotopy(*M_, rev, y, o);
  const Mat& ext = tr.extended.back();
  const int amb = M_->ambient_dim;
  // The reversed transport carries -g_{psi_t} at the preimage; negate both the
  // value and its y-gradient so the g convention matches inverse_at.
  return {tr.points.back(), -tr.g.back(), ext.topLeftCorner(amb, amb),
          -ext.bottomLeftCorner(1, amb)};
}

TrajectoryFan integrate_fan(const ManifoldModel& M, const TimeHamiltonian& H,
                            const std::vector<Vec>& starts, int grid_segments, double rtol,
                            double atol, int threads) {
  TrajectoryFan fan;
  fan.times = make_grid(0.0, 1.0, grid_segments);
  const int n = static_cast<int>(starts.size());
  fan.points.resize(n);
  fan.g.resize(n);
  parallel_for(
      n,
      [&](int j) {
        IntegrateOptions o;
        o.rtol = rtol;
        o.atol = atol;
        o.grid_segments = grid_segments;
        const IsotopyTrace tr = integrate_isotopy(M, H, starts[j], o);
        fan.points[j] = tr.points;
        fan.g[j] = tr.g;
      },
      threads);
  return fan;
}

}  // namespace contactlab
