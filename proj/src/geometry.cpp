#include "contactlab/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace contactlab {

namespace {

double wrap_coord(double v, double lo, double hi) {
  double len = hi - lo;
  double u = std::fmod(v - lo, len);
  if (u < 0.0) u += len;
  return lo + u;
}

// Evaluates alpha ^ (dalpha)^n on the columns of B via the alternating-sum
// formula. av holds alpha(b_i), G holds dalpha(b_i, b_j).
double wedge_top_form(const Vec& av, const Mat& G) {
  const int d = static_cast<int>(av.size());
  if (d == 1) return av(0);
  const int n = (d - 1) / 2;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  double norm = 1.0;
  for (int k = 0; k < n; ++k) norm *= 2.0 * (k + 1);  // 2^n * n!
  double acc = 0.0;
  do {
    int inversions = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (perm[i] > perm[j]) ++inversions;
    double term = (inversions % 2 == 0) ? av(perm[0]) : -av(perm[0]);
    for (int k = 0; k < n; ++k) term *= G(perm[2 * k + 1], perm[2 * k + 2]);
    acc += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc / norm;
}

double quadric_value(const Vec& w, const Vec& x) {
  double q = 0.0;
  for (int i = 0; i < x.size(); ++i) q += w(i) * x(i) * x(i);
  return q;
}

ReebSolveResult solve_linear_system(const std::string& op, const ManifoldModel& M,
                                    const Vec& x, double rhs0, const Vec& rhs_tangent) {
  const Mat B = M.tangent_basis(x);
  const Vec a = M.alpha(x);
  const Mat Md = M.dalpha(x);
  const int d = M.dim;

  Mat A(d + 1, d);
  A.row(0) = (B.transpose() * a).transpose();
  A.bottomRows(d) = -(B.transpose() * Md * B);

  Vec b(d + 1);
  b(0) = rhs0;
  b.tail(d) = rhs_tangent;

  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(d - 1);
  const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    throw SingularSystemError(op, cond, "contact condition fails at the queried point");
  }
  const Vec c = svd.solve(b);
  const double residual = (A * c - b).norm();
  if (residual > 1e-8 * (1.0 + b.norm())) {
    throw SingularSystemError(op, cond,
                              "system inconsistent (residual " + std::to_string(residual) + ")");
  }
  ReebSolveResult out;
  out.field = B * c;
  out.residual = residual;
  out.cond = cond;
  return out;
}

}  // namespace

bool ManifoldModel::in_chart(const Vec& x, double slack) const {
  if (x.size() != ambient_dim) return false;
  if (constraint != Constraint::None) {
    const Vec w = (constraint == Constraint::UnitSphere)
                      ? Vec::Ones(ambient_dim)
                      : quadric_weights;
    return std::abs(quadric_value(w, x) - 1.0) <= 1e-6 + slack;
  }
  for (int i = 0; i < ambient_dim; ++i) {
    if (periodic[i]) continue;
    if (x(i) < box_lo(i) - slack || x(i) > box_hi(i) + slack) return false;
  }
  return true;
}

Vec ManifoldModel::wrap(const Vec& x) const {
  Vec y = x;
  if (constraint != Constraint::None) return y;
  for (int i = 0; i < ambient_dim; ++i)
    if (periodic[i]) y(i) = wrap_coord(y(i), box_lo(i), box_hi(i));
  return y;
}

Vec ManifoldModel::chart_diff(const Vec& from, const Vec& to) const {
  Vec d = to - from;
  if (constraint != Constraint::None) return d;
  for (int i = 0; i < ambient_dim; ++i) {
    if (!periodic[i]) continue;
    const double len = box_hi(i) - box_lo(i);
    d(i) = std::remainder(d(i), len);
  }
  return d;
}

double ManifoldModel::distance(const Vec& x, const Vec& y) const {
  const Vec d = chart_diff(x, y);
  const Mat g = metric_at(x);
  return std::sqrt(d.dot(g * d));
}

Vec ManifoldModel::project(const Vec& x) const {
  if (constraint == Constraint::None) return wrap(x);
  const Vec w = (constraint == Constraint::UnitSphere) ? Vec::Ones(ambient_dim)
                                                       : quadric_weights;
  const double q = quadric_value(w, x);
  if (q <= 0.0) throw UnsupportedError(name + ": cannot project the origin to the level set");
  return x / std::sqrt(q);
}

Mat ManifoldModel::tangent_basis(const Vec& x) const {
  if (constraint == Constraint::None) return Mat::Identity(ambient_dim, dim);
  Vec normal;
  if (constraint == Constraint::UnitSphere) {
    normal = x;
  } else {
    normal = Vec(ambient_dim);
    for (int i = 0; i < ambient_dim; ++i) normal(i) = 2.0 * quadric_weights(i) * x(i);
  }
  Eigen::HouseholderQR<Mat> qr(normal);
  Mat Q = qr.householderQ() * Mat::Identity(ambient_dim, ambient_dim);
  return Q.rightCols(ambient_dim - 1);
}

double ManifoldModel::volume_density(const Vec& x) const {
  const Mat B = tangent_basis(x);
  const Vec a = alpha(x);
  const Mat Md = dalpha(x);
  const Vec av = B.transpose() * a;
  const Mat G = B.transpose() * Md * B;
  return std::abs(wedge_top_form(av, G));
}

Vec ManifoldModel::random_point(Rng& rng) const {
  if (constraint != Constraint::None) {
    Vec u(ambient_dim);
    for (int i = 0; i < ambient_dim; ++i) u(i) = rng.normal();
    if (u.norm() < 1e-12) u(0) = 1.0;
    return project(u);
  }
  Vec x(ambient_dim);
  for (int i = 0; i < ambient_dim; ++i) x(i) = rng.uniform(box_lo(i), box_hi(i));
  return x;
}

Mat ManifoldModel::metric_at(const Vec& x) const {
  if (metric) return metric(x);
  return Mat::Identity(ambient_dim, ambient_dim);
}

SpatialSample build_grid_sampler(const ManifoldModel& M, int per_dim) {
  if (per_dim < 2) throw ConfigError("sampler: per_dim must be at least 2");
  SpatialSample S;
  if (M.constraint == Constraint::None) {
    const int d = M.ambient_dim;
    std::vector<double> steps(d);
    std::vector<int> counts(d, per_dim);
    long total = 1;
    for (int i = 0; i < d; ++i) {
      steps[i] = (M.box_hi(i) - M.box_lo(i)) / per_dim;
      total *= per_dim;
    }
    double cell = 1.0;
    double mesh2 = 0.0;
    for (int i = 0; i < d; ++i) {
      cell *= steps[i];
      mesh2 += steps[i] * steps[i];
    }
    S.mesh = std::sqrt(mesh2);
    S.row_len = per_dim;
    S.points.reserve(total);
    S.weights.reserve(total);
    std::vector<int> idx(d, 0);
    Vec x(d);
    for (long k = 0; k < total; ++k) {
      for (int i = 0; i < d; ++i) x(i) = M.box_lo(i) + (idx[i] + 0.5) * steps[i];
      const double w = M.volume_density(x) * cell;
      S.points.push_back(x);
      S.weights.push_back(w);
      S.total_weight += w;
      for (int i = d - 1; i >= 0; --i) {
        if (++idx[i] < counts[i]) break;
        idx[i] = 0;
      }
    }
    return S;
  }

  // Constrained quadrics in R^4: torus-like angular parametrization
  //   p = (c1 cos(phi) cos(t1), c1 cos(phi) sin(t1), c2 sin(phi) cos(t2), c2 sin(phi) sin(t2))
  // with phi in (0, pi/2). Weights evaluate the contact volume form on the
  // coordinate tangent vectors, so no separate Jacobian factor is needed.
  const double c1 = (M.constraint == Constraint::UnitSphere)
                        ? 1.0
                        : 1.0 / std::sqrt(M.quadric_weights(0));
  const double c2 = (M.constraint == Constraint::UnitSphere)
                        ? 1.0
                        : 1.0 / std::sqrt(M.quadric_weights(2));
  const int m = per_dim;
  const double dphi = (kPi / 2.0) / m;
  const double dth = kTwoPi / m;
  S.points.reserve(static_cast<long>(m) * m * m);
  S.weights.reserve(static_cast<long>(m) * m * m);
  S.mesh = std::sqrt(sqr(dphi) + 2.0 * sqr(dth)) * std::max(c1, c2);
  S.row_len = m;
  for (int i = 0; i < m; ++i) {
    const double phi = (i + 0.5) * dphi;
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (int j = 0; j < m; ++j) {
      const double t1 = (j + 0.5) * dth;
      const double c_1 = std::cos(t1), s_1 = std::sin(t1);
      for (int k = 0; k < m; ++k) {
        const double t2 = (k + 0.5) * dth;
        const double c_2 = std::cos(t2), s_2 = std::sin(t2);
        Vec p(4);
        p << c1 * cp * c_1, c1 * cp * s_1, c2 * sp * c_2, c2 * sp * s_2;
        Mat T(4, 3);
        T.col(0) << -c1 * sp * c_1, -c1 * sp * s_1, c2 * cp * c_2, c2 * cp * s_2;
        T.col(1) << -c1 * cp * s_1, c1 * cp * c_1, 0.0, 0.0;
        T.col(2) << 0.0, 0.0, -c2 * sp * s_2, c2 * sp * c_2;
        const Vec a = M.alpha(p);
        const Mat Md = M.dalpha(p);
        const Vec av = T.transpose() * a;
        const Mat G = T.transpose() * Md * T;
        const double w = std::abs(wedge_top_form(av, G)) * dphi * dth * dth;
        S.points.push_back(p);
        S.weights.push_back(w);
        S.total_weight += w;
      }
    }
  }
  return S;
}

ReebSolveResult solve_reeb(const ManifoldModel& M, const Vec& x) {
  return solve_linear_system("solve_reeb", M, x, 1.0, Vec::Zero(M.dim));
}

ReebSolveResult solve_contact_field(const ManifoldModel& M, const Vec& x,
                                    double h_value, const Vec& h_grad) {
  Vec R;
  if (M.reeb_closed) {
    R = M.reeb_closed(x);
  } else {
    R = solve_reeb(M, x).field;
  }
  const Vec a = M.alpha(x);
  const double hr = h_grad.dot(R);
  const Mat B = M.tangent_basis(x);
  const Vec rhs_tangent = B.transpose() * (-h_grad + hr * a);
  return solve_linear_system("contact_field", M, x, h_value, rhs_tangent);
}

ContactCheckReport verify_contact_condition(const ManifoldModel& M, int n_samples,
                                            std::uint64_t seed) {
  ContactCheckReport rep;
  Rng rng(seed);
  double mn = std::numeric_limits<double>::infinity();
  double mx = 0.0;
  const SpatialSample grid = build_grid_sampler(M, 8);
  auto visit = [&](const Vec& x) {
    const double d = M.volume_density(x);
    mn = std::min(mn, d);
    mx = std::max(mx, d);
    ++rep.samples;
  };
  for (const auto& p : grid.points) visit(p);
  for (int i = 0; i < n_samples; ++i) visit(M.random_point(rng));
  rep.min_density = mn;
  rep.max_density = mx;
  rep.pass = mn > 1e-10;
  return rep;
}

ReebPeriodCheck verify_reeb_period(const ManifoldModel& M, int scan_points) {
  ReebPeriodCheck chk;
  if (!M.rho) {
    chk.note = M.name + ": no closed-orbit period shipped";
    return chk;
  }
  if (!M.reeb_flow_closed) {
    chk.note = M.name + ": no closed-form Reeb flow to scan";
    return chk;
  }
  chk.claimed = *M.rho;
  Vec start;
  if (M.name == "Torus3") {
    start = Vec::Zero(3);
  } else if (M.name == "CircleS1") {
    start = Vec::Zero(1);
  } else if (M.constraint != Constraint::None) {
    // orbit in the faster coordinate plane closes first
    start = Vec::Zero(4);
    if (M.constraint == Constraint::UnitSphere || M.quadric_weights(0) >= M.quadric_weights(2)) {
      start(0) = 1.0 / std::sqrt(M.constraint == Constraint::UnitSphere ? 1.0 : M.quadric_weights(0));
    } else {
      start(2) = 1.0 / std::sqrt(M.quadric_weights(2));
    }
  } else {
    chk.note = M.name + ": no reference orbit";
    return chk;
  }
  chk.return_distance = M.distance(start, M.wrap(M.reeb_flow_closed(start, chk.claimed)));
  double interior = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan_points; ++i) {
    const double t = chk.claimed * (0.05 + 0.9 * (i + 0.5) / scan_points);
    interior = std::min(interior, M.distance(start, M.wrap(M.reeb_flow_closed(start, t))));
  }
  chk.min_interior_distance = interior;
  chk.pass = chk.return_distance < 1e-9 && interior > 1e-3;
  if (!chk.pass) chk.note = M.name + ": first-return scan failed";
  return chk;
}

ManifoldModel make_circle() {
  ManifoldModel M;
  M.name = "CircleS1";
  M.dim = 1;
  M.ambient_dim = 1;
  M.box_lo = Vec::Zero(1);
  M.box_hi = Vec::Ones(1);
  M.periodic = {true};
  M.alpha = [](const Vec&) { return Vec::Ones(1); };
  M.dalpha = [](const Vec&) { return Mat::Zero(1, 1); };
  M.reeb_closed = [](const Vec&) { return Vec::Ones(1); };
  M.reeb_flow_closed = [](const Vec& x, double s) {
    Vec y = x;
    y(0) += s;
    return y;
  };
  M.reeb_flow_diff_closed = [](const Vec&, double) { return Mat::Identity(1, 1); };
  M.rho = 1.0;
  M.rho_note = "orbit wraps the unit-period circle once";
  return M;
}

ManifoldModel make_torus3() {
  ManifoldModel M;
  M.name = "Torus3";
  M.dim = 3;
  M.ambient_dim = 3;
  M.box_lo = Vec::Zero(3);
  M.box_hi = Vec::Ones(3);
  M.periodic = {true, true, true};
  M.alpha = [](const Vec& x) {
    Vec a(3);
    a << std::cos(kTwoPi * x(2)), std::sin(kTwoPi * x(2)), 0.0;
    return a;
  };
  M.dalpha = [](const Vec& x) {
    const double s = std::sin(kTwoPi * x(2));
    const double c = std::cos(kTwoPi * x(2));
    Mat m = Mat::Zero(3, 3);
    m(0, 2) = kTwoPi * s;
    m(2, 0) = -kTwoPi * s;
    m(1, 2) = -kTwoPi * c;
    m(2, 1) = kTwoPi * c;
    return m;
  };
  M.reeb_closed = [](const Vec& x) {
    Vec r(3);
    r << std::cos(kTwoPi * x(2)), std::sin(kTwoPi * x(2)), 0.0;
    return r;
  };
  M.reeb_flow_closed = [](const Vec& x, double s) {
    Vec y = x;
    y(0) += s * std::cos(kTwoPi * x(2));
    y(1) += s * std::sin(kTwoPi * x(2));
    return y;
  };
  M.reeb_flow_diff_closed = [](const Vec& x, double s) {
    Mat D = Mat::Identity(3, 3);
    D(0, 2) = -kTwoPi * s * std::sin(kTwoPi * x(2));
    D(1, 2) = kTwoPi * s * std::cos(kTwoPi * x(2));
    return D;
  };
  M.rho = 1.0;
  M.rho_note = "shortest closed orbit sits on an axis-aligned direction level";
  return M;
}

namespace {

ManifoldModel make_quadric(const std::string& name, double a, double b) {
  ManifoldModel M;
  M.name = name;
  M.dim = 3;
  M.ambient_dim = 4;
  const double R = 2.0 * std::sqrt(std::max(a, b));
  M.box_lo = Vec::Constant(4, -R);
  M.box_hi = Vec::Constant(4, R);
  M.periodic = {false, false, false, false};
  M.alpha = [](const Vec& p) {
    Vec v(4);
    v << -p(1), p(0), -p(3), p(2);
    return v;
  };
  M.dalpha = [](const Vec&) {
    Mat m = Mat::Zero(4, 4);
    m(0, 1) = 2.0;
    m(1, 0) = -2.0;
    m(2, 3) = 2.0;
    m(3, 2) = -2.0;
    return m;
  };
  M.reeb_closed = [a, b](const Vec& p) {
    Vec r(4);
    r << -p(1) / a, p(0) / a, -p(3) / b, p(2) / b;
    return r;
  };
  auto rot = [a, b](double s) {
    const double u = s / a, v = s / b;
    Mat D = Mat::Zero(4, 4);
    D(0, 0) = std::cos(u);
    D(0, 1) = -std::sin(u);
    D(1, 0) = std::sin(u);
    D(1, 1) = std::cos(u);
    D(2, 2) = std::cos(v);
    D(2, 3) = -std::sin(v);
    D(3, 2) = std::sin(v);
    D(3, 3) = std::cos(v);
    return D;
  };
  M.reeb_flow_closed = [rot](const Vec& p, double s) { return Vec(rot(s) * p); };
  M.reeb_flow_diff_closed = [rot](const Vec&, double s) { return rot(s); };
  if (a == 1.0 && b == 1.0) {
    M.constraint = Constraint::UnitSphere;
  } else {
    M.constraint = Constraint::QuadricLevel;
  }
  Vec w(4);
  w << 1.0 / a, 1.0 / a, 1.0 / b, 1.0 / b;
  M.quadric_weights = w;
  M.rho = kTwoPi * std::min(a, b);
  M.rho_note = "coordinate-plane circles close first";
  return M;
}

}  // namespace

ManifoldModel make_sphere3() { return make_quadric("SphereS3", 1.0, 1.0); }

ManifoldModel make_ellipsoid(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("EllipsoidE: semiaxis parameters must be positive");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "EllipsoidE(%g,%g)", a, b);
  return make_quadric(buf, a, b);
}

ManifoldModel make_heisenberg() {
  ManifoldModel M;
  M.name = "HeisenbergChart";
  M.dim = 3;
  M.ambient_dim = 3;
  M.box_lo = Vec::Constant(3, -4.0);
  M.box_hi = Vec::Constant(3, 4.0);
  M.periodic = {false, false, false};
  M.alpha = [](const Vec& x) {
    Vec a(3);
    a << 0.0, x(0), 1.0;
    return a;
  };
  M.dalpha = [](const Vec&) {
    Mat m = Mat::Zero(3, 3);
    m(0, 1) = 1.0;
    m(1, 0) = -1.0;
    return m;
  };
  M.reeb_closed = [](const Vec&) {
    Vec r(3);
    r << 0.0, 0.0, 1.0;
    return r;
  };
  M.reeb_flow_closed = [](const Vec& x, double s) {
    Vec y = x;
    y(2) += s;
    return y;
  };
  M.reeb_flow_diff_closed = [](const Vec&, double) { return Mat::Identity(3, 3); };
  M.rho_note = "chart Reeb orbits leave the box; no closed orbit";
  return M;
}

ManifoldModel manifold_by_name(const std::string& name) {
  if (name == "CircleS1") return make_circle();
  if (name == "Torus3") return make_torus3();
  if (name == "SphereS3") return make_sphere3();
  if (name == "HeisenbergChart") return make_heisenberg();
  if (name.rfind("EllipsoidE(", 0) == 0) {
    double a = 0.0, b = 0.0;
    if (std::sscanf(name.c_str(), "EllipsoidE(%lf,%lf)", &a, &b) == 2)
      return make_ellipsoid(a, b);
    throw ConfigError("manifold: cannot parse '" + name + "', expected EllipsoidE(a,b)");
  }
  throw ConfigError("manifold: unknown name '" + name + "'");
}

}  // namespace contactlab
