#include "contactlab/symplectization.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "contactlab/energy.hpp"

namespace contactlab {

SymplPoint lift_point(const ManifoldModel& M, const ContactMap& psi, const SymplPoint& p,
                      double t) {
  (void)M;
  if (!(p.r > 0.0)) throw ConfigError("lift_point: r must be positive");
  const auto im = psi.forward_at(t, p.x);
  return SymplPoint{im.x, p.r * std::exp(-im.g)};
}

Mat lift_differential(const ManifoldModel& M, const ContactMap& psi, const Vec& x,
                      double t) {
  const int n = M.ambient_dim;
  const auto var = psi.forward_var_at(t, x);
  const double inv_lambda = std::exp(-var.g);
  Mat D = Mat::Zero(n + 1, n + 1);
  D.topLeftCorner(n, n) = var.dx;
  // d(r/lambda) = -lambda^{-2} dlambda dx + lambda^{-1} dr, and dlambda equals
  // lambda * dg, so the mixed block reduces to -exp(-g) * dg.
  D.block(n, 0, 1, n) = -inv_lambda * var.dg;
  D(n, n) = inv_lambda;
  return D;
}

LiftedHamiltonian homogeneous_lift(const TimeHamiltonian& H) {
  if (!H.valid()) throw ConfigError("homogeneous_lift: hamiltonian has no value function");
  return LiftedHamiltonian{H};
}

double CutoffProfile::lambda0(double r) const {
  if (!(r > 0.0)) return 0.0;
  const double s = std::log(r);
  const double la = std::log(a), lb = std::log(b);
  if (s <= la - delta || s >= lb + delta) return 0.0;
  if (s >= la - 0.5 * delta && s <= lb + 0.5 * delta) return 1.0;
  if (s < la - 0.5 * delta) return smoothstep5((s - (la - delta)) / (0.5 * delta));
  return smoothstep5(((lb + delta) - s) / (0.5 * delta));
}

double CutoffProfile::dlambda0_dr(double r) const {
  if (!(r > 0.0)) return 0.0;
  const double s = std::log(r);
  const double la = std::log(a), lb = std::log(b);
  const double half = 0.5 * delta;
  double ds = 0.0;
  if (s > la - delta && s < la - half) {
    ds = smoothstep5_deriv((s - (la - delta)) / half) / half;
  } else if (s > lb + half && s < lb + delta) {
    ds = -smoothstep5_deriv(((lb + delta) - s) / half) / half;
  }
  return ds / r;  // chain rule through s = log r
}

double CutoffProfile::sup_r_lambda0() const {
  // r * lambda0 is increasing on the plateau, so the true maximum sits on the
  // upper shoulder; scan it finely and keep the plateau edge as a candidate.
  double best = b * std::exp(0.5 * delta);
  const double s0 = std::log(b) + 0.5 * delta;
  const double s1 = std::log(b) + delta;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double s = s0 + (s1 - s0) * static_cast<double>(i) / n;
    const double r = std::exp(s);
    best = std::max(best, r * lambda0(r));
  }
  return best;
}

void CutoffProfile::validate() const {
  if (!(a > 0.0) || !(b > a)) throw ConfigError("cutoff profile: interval needs 0 < a < b");
  if (!(delta > 0.0)) throw ConfigError("cutoff profile: delta must be positive");
  const double la = std::log(a), lb = std::log(b);
  const double s0 = la - 2.0 * delta, s1 = lb + 2.0 * delta;
  const int n = static_cast<int>(std::ceil((s1 - s0) / 1e-3));
  for (int i = 0; i <= n; ++i) {
    const double s = s0 + (s1 - s0) * static_cast<double>(i) / n;
    const double v = lambda0(std::exp(s));
    if (v < -1e-12 || v > 1.0 + 1e-12)
      throw ConfigError("cutoff profile: values left [0,1]");
    if (s >= la - 0.5 * delta + 1e-6 && s <= lb + 0.5 * delta - 1e-6 && v < 1.0 - 1e-12)
      throw ConfigError("cutoff profile: plateau is not identically 1");
    if ((s <= la - delta - 1e-6 || s >= lb + delta + 1e-6) && std::abs(v) > 1e-12)
      throw ConfigError("cutoff profile: support leaks outside the delta margin");
  }
}

CutoffHamiltonian::CutoffHamiltonian(const ManifoldModel& M, TimeHamiltonian H,
                                     CutoffProfile profile, double rtol, double atol)
    : M_(&M), H_(std::move(H)), profile_(profile), map_(M, H_, rtol, atol) {
  if (!H_.valid()) throw ConfigError("cutoff: hamiltonian has no value function");
  profile_.validate();
}

double CutoffHamiltonian::value(double t, const SymplPoint& p) const {
  if (!(p.r > 0.0)) throw ConfigError("cutoff: r must be positive");
  const Vec y = M_->project(p.x);
  double ghat = 0.0;
  if (std::abs(t) > 1e-14) ghat = map_.inverse_at(t, y).g;
  // ghat is the forward conformal exponent at the preimage, so r * exp(ghat)
  // recovers the initial fiber coordinate of the lifted trajectory through
  // (y, r).  That quantity is constant along the lift, which is what makes
  // the cutoff band follow the flow.
  const double u = p.r * std::exp(ghat);
  return p.r * H_(t, y) * profile_.lambda0(u);
}

CutoffHamiltonian::Eval CutoffHamiltonian::eval(double t, const SymplPoint& p) const {
  if (!(p.r > 0.0)) throw ConfigError("cutoff: r must be positive");
  const Vec y = M_->project(p.x);
  const int n = M_->ambient_dim;
  double ghat = 0.0;
  RowVec dghat = RowVec::Zero(n);
  if (std::abs(t) > 1e-14) {
    const auto iv = map_.inverse_var_at(t, y);
    ghat = iv.g;
    dghat = iv.dg;
  }
  const double u = p.r * std::exp(ghat);
  const double lam = profile_.lambda0(u);
  const double dlam = profile_.dlambda0_dr(u);
  const double hval = H_(t, y);
  const Vec hgrad = H_.grad(t, y);

  Eval out;
  out.K = p.r * hval * lam;
  out.dKr = hval * (lam + dlam * u);
  // grad_y u = u * dghat, since u = r * exp(ghat(y)).
  out.dKx = p.r * lam * hgrad + (p.r * hval * dlam * u) * dghat.transpose();
  return out;
}

CutoffHamiltonian::Field CutoffHamiltonian::sn_field(double t, const SymplPoint& p) const {
  const Vec y = M_->project(p.x);
  const int d = M_->dim;
  const Eval ev = eval(t, SymplPoint{y, p.r});

  const Vec a = M_->alpha(y);
  const Mat Md = M_->dalpha(y);
  const Mat B = M_->tangent_basis(y);
  const Vec Ba = B.transpose() * a;
  const Mat G = B.transpose() * Md * B;

  Mat A = Mat::Zero(d + 1, d + 1);
  A.block(0, 0, 1, d) = Ba.transpose();
  A.block(1, 0, d, d) = p.r * G.transpose();
  A.block(1, d, d, 1) = Ba;
  Vec rhs(d + 1);
  rhs(0) = ev.dKr;
  rhs.tail(d) = -(B.transpose() * ev.dKx);

  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12))
    throw SingularSystemError("sn_field", cond, "symplectic form is degenerate at the queried point");
  const Vec sol = svd.solve(rhs);

  Field f;
  f.xdot = B * sol.head(d);
  f.rdot = sol(d);
  return f;
}

SymplPoint CutoffHamiltonian::integrate(const SymplPoint& p0, double t1, double rtol,
                                        double atol) const {
  if (!(p0.r > 0.0)) throw ConfigError("cutoff: r must be positive");
  const int n = M_->ambient_dim;
  if (std::abs(t1) < 1e-14) return p0;

  Vec z0(n + 1);
  z0.head(n) = M_->project(p0.x);
  z0(n) = std::log(p0.r);

  auto rhs = [this, n](double t, const Vec& z) {
    SymplPoint q{M_->project(z.head(n)), std::exp(z(n))};
    const Field f = sn_field(t, q);
    Vec dz(n + 1);
    dz.head(n) = f.xdot;
    dz(n) = f.rdot / q.r;
    return dz;
  };
  auto post = [this, n](double, Vec& z) {
    z.head(n) = M_->project(z.head(n));
  };

  FlowStats stats;
  const Vec zf = rk45(rhs, 0.0, t1, z0, rtol, atol, 500000, stats, post);
  return SymplPoint{M_->project(zf.head(n)), std::exp(zf(n))};
}

CutoffCheck verify_cutoff(const ManifoldModel& M, const TimeHamiltonian& H,
                          const CutoffProfile& profile, int n_samples, uint64_t seed,
                          int fan_per_dim, int time_nodes) {
  profile.validate();
  CutoffCheck out;
  out.sup_r_lambda0 = profile.sup_r_lambda0();

  const ContactMap psi(M, H, 1e-10, 1e-12);
  const CutoffHamiltonian K(M, H, profile, 1e-9, 1e-11);

  Rng rng(seed);
  const double la = std::log(profile.a), lb = std::log(profile.b);
  out.c1_residuals.reserve(static_cast<size_t>(std::max(0, n_samples)));
  for (int i = 0; i < n_samples; ++i) {
    const Vec x = M.random_point(rng);
    const double r = std::exp(la + rng.uniform() * (lb - la));
    const SymplPoint end = K.integrate(SymplPoint{x, r}, 1.0, 1e-7, 1e-9);
    const auto im = psi.forward(x);
    const double want_logr = std::log(r) - im.g;
    const double resid = M.distance(end.x, im.x) + std::abs(std::log(end.r) - want_logr);
    out.c1_residuals.push_back(resid);
    out.c1_worst = std::max(out.c1_worst, resid);
  }
  out.c1_samples = n_samples;

  // Energy comparison. Writing points of SN as (psi_t x, u e^{-g_t(x)}) turns
  // sup_SN |K_t| into (sup_u u lambda0(u)) * sup_x e^{-g_t(x)} |H(t, psi_t x)|,
  // so both sides integrate the same trajectory-fan maxima.
  if (time_nodes < 3 || time_nodes % 2 == 0)
    throw ConfigError("verify_cutoff: time_nodes must be odd and at least 3");
  const SpatialSample net = build_grid_sampler(M, fan_per_dim);
  const TrajectoryFan fan = integrate_fan(M, H, net.points, time_nodes - 1, 1e-9, 1e-11);
  std::vector<double> sup_n1(static_cast<size_t>(time_nodes), 0.0);
  for (int k = 0; k < time_nodes; ++k) {
    double best = 0.0;
    for (size_t j = 0; j < fan.points.size(); ++j) {
      const double t = fan.times[static_cast<size_t>(k)];
      const double v =
          std::exp(-fan.g[j][static_cast<size_t>(k)]) *
          std::abs(H(t, fan.points[j][static_cast<size_t>(k)]));
      best = std::max(best, v);
    }
    sup_n1[static_cast<size_t>(k)] = best;
  }
  const double integral = simpson_integrate(sup_n1, 0.0, 1.0);
  out.c2_lhs = out.sup_r_lambda0 * integral;
  out.c2_rhs = std::exp(profile.delta) * profile.b * integral;
  out.c2_holds = out.c2_lhs <= out.c2_rhs + 1e-9 * (1.0 + std::abs(out.c2_rhs));
  return out;
}

TimeHamiltonian usher_reverse(const ManifoldModel& M, const TimeHamiltonian& H,
                              double rtol, double atol) {
  if (!H.valid()) throw ConfigError("usher_reverse: hamiltonian has no value function");
  auto psi = std::make_shared<ContactMap>(M, H, rtol, atol);

  struct Cache {
    std::mutex mu;
    std::unordered_map<std::string, ContactMap::PointImage> memo;
  };
  auto cache = std::make_shared<Cache>();
  const ManifoldModel* Mp = &M;

  // z = psi_1^{-1} y is time-independent, so it is worth memoizing across the
  // many (t, y) evaluations a quadrature performs.
  auto endpoint_inverse = [cache, psi](const Vec& y) {
    std::string key(reinterpret_cast<const char*>(y.data()),
                    static_cast<size_t>(y.size()) * sizeof(double));
    {
      std::lock_guard<std::mutex> lk(cache->mu);
      auto it = cache->memo.find(key);
      if (it != cache->memo.end()) return it->second;
    }
    ContactMap::PointImage im;
    try {
      im = psi->inverse(y);
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string("endpoint inverse evaluation failure: ") + e.what(),
                             1.0);
    }
    std::lock_guard<std::mutex> lk(cache->mu);
    cache->memo.emplace(std::move(key), im);
    return im;
  };

  TimeHamiltonian out;
  auto base = H;
  out.value = [base, psi, endpoint_inverse, Mp](double t, const Vec& yraw) {
    const Vec y = Mp->project(yraw);
    const auto z = endpoint_inverse(y);  // z.g = g_{psi_1}(z.x)
    ContactMap::PointImage fw;
    if (1.0 - t > 1e-14) {
      fw = psi->forward_at(1.0 - t, z.x);
    } else {
      fw.x = z.x;
      fw.g = 0.0;
    }
    // K_t = (lambda_chi H_{1-t}) o chi_t^{-1} with chi_t = psi_1 psi_{1-t}^{-1}:
    // the factor at the preimage is exp(g_{psi_1}(z) - g_{psi_{1-t}}(z)).
    return std::exp(z.g - fw.g) * base(1.0 - t, fw.x);
  };
  out.analytic = false;
  return out;
}

UsherCheck verify_usher(const ManifoldModel& M, const TimeHamiltonian& H, int n_endpoint,
                        int n_pointwise, uint64_t seed) {
  UsherCheck out;
  const TimeHamiltonian K = usher_reverse(M, H);
  const ContactMap psi(M, H, 1e-10, 1e-12);
  Rng rng(seed);

  IntegrateOptions opts;
  opts.rtol = 1e-7;
  opts.atol = 1e-9;
  opts.grid_segments = 1;
  for (int i = 0; i < n_endpoint; ++i) {
    const Vec x = M.random_point(rng);
    const IsotopyTrace tr = integrate_isotopy(M, K, x, opts);
    const auto im = psi.forward(x);
    const double resid =
        M.distance(tr.points.back(), im.x) + std::abs(tr.g.back() - im.g);
    out.u1_worst = std::max(out.u1_worst, resid);
  }
  out.u1_samples = n_endpoint;

  out.u2_residuals.reserve(static_cast<size_t>(std::max(0, n_pointwise)));
  for (int i = 0; i < n_pointwise; ++i) {
    const double t = rng.uniform();
    const Vec x = M.random_point(rng);
    const double r = std::exp(rng.uniform(-0.3, 0.3));
    // chi_t = psi_1 o psi_{1-t}^{-1}; its conformal exponent at x is the
    // psi_1 exponent at the waypoint minus the exponent spent reaching it.
    ContactMap::PointImage mid;
    if (1.0 - t > 1e-14) {
      mid = psi.inverse_at(1.0 - t, x);
    } else {
      mid.x = x;
      mid.g = 0.0;
    }
    const auto end = psi.forward(mid.x);
    const double g_chi = end.g - mid.g;
    const double lhs = (r * std::exp(-g_chi)) * K(t, end.x);
    const double rhs = r * H(1.0 - t, x);
    const double resid = std::abs(lhs - rhs);
    out.u2_residuals.push_back(resid);
    out.u2_worst = std::max(out.u2_worst, resid);
  }
  out.u2_samples = n_pointwise;
  return out;
}

}  // namespace contactlab
