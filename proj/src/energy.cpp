#include "contactlab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>

namespace contactlab {

namespace {

// Move a point by delta without leaving the model: wrap periodic coordinates,
// clamp box coordinates, project back onto a quadric.
Vec advance_point(const ManifoldModel& M, const Vec& x, const Vec& delta) {
  Vec y = x + delta;
  if (M.constraint != Constraint::None) return M.project(y);
  for (int i = 0; i < M.dim; ++i) {
    if (!M.periodic[i]) y[i] = std::clamp(y[i], M.box_lo[i], M.box_hi[i]);
  }
  return M.wrap(y);
}

// Ascent refinement of a grid extremum. sign=+1 pushes the value up, -1 down.
// The step regrows after a success so one early backtrack does not pin the
// whole search to a tiny radius.
double refine_extremum(const ManifoldModel& M, const TimeHamiltonian& H, double t,
                       Vec& x, double f, int sign, int iters, double mesh) {
  double step = mesh;
  for (int it = 0; it < iters; ++it) {
    Vec g = H.grad(t, x) * static_cast<double>(sign);
    Vec dir;
    if (M.constraint != Constraint::None) {
      Mat B = M.tangent_basis(x);
      dir = B * (B.transpose() * g);
    } else {
      dir = g;
    }
    const double nrm = dir.norm();
    if (nrm < 1e-14) break;
    dir /= nrm;
    bool moved = false;
    for (int trial = 0; trial < 12 && !moved; ++trial) {
      Vec cand = advance_point(M, x, step * dir);
      const double fc = H(t, cand);
      if (sign * fc > sign * f) {
        x = cand;
        f = fc;
        moved = true;
      } else {
        step *= 0.5;
      }
    }
    if (moved) {
      step = std::min(2.0 * step, mesh);
    } else if (step < 1e-12) {
      break;
    }
  }
  return f;
}

double snap_to_integer(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

std::vector<double> node_times(int n) {
  std::vector<double> t(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<size_t>(i)] = static_cast<double>(i) / (n - 1);
  return t;
}

}  // namespace

double simpson_integrate(const std::vector<double>& values, double t0, double t1) {
  const int n = static_cast<int>(values.size());
  if (n < 3 || n % 2 == 0) throw ConfigError("simpson rule needs an odd node count >= 3");
  const double h = (t1 - t0) / (n - 1);
  double acc = values.front() + values.back();
  for (int i = 1; i < n - 1; ++i) acc += values[static_cast<size_t>(i)] * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

EnergyTable compute_energy_table(const ManifoldModel& M, const TimeHamiltonian& H,
                                 const EnergyGrid& grid) {
  if (!H.valid()) throw ConfigError("hamiltonian has no value function");
  if (grid.time_nodes < 3 || grid.time_nodes % 2 == 0)
    throw ConfigError("energy grid: time_nodes must be odd and at least 3");
  if (grid.space_per_dim < 2) throw ConfigError("energy grid: space_per_dim must be at least 2");
  if (!grid.sampler) grid.sampler = std::make_shared<const SpatialSample>(
                         build_grid_sampler(M, grid.space_per_dim));
  const SpatialSample& S = *grid.sampler;
  const size_t npts = S.points.size();

  EnergyTable table;
  table.volume = S.total_weight;
  const std::vector<double> times = node_times(grid.time_nodes);
  table.rows.reserve(times.size());
  table.argmax.reserve(times.size());
  table.argmin.reserve(times.size());

  double worst_var = 0.0;
  for (double t : times) {
    double fmax = -std::numeric_limits<double>::infinity();
    double fmin = std::numeric_limits<double>::infinity();
    size_t imax = 0, imin = 0;
    double mass = 0.0;
    double prev = 0.0;
    double maxdiff = 0.0;
    for (size_t k = 0; k < npts; ++k) {
      const double f = H(t, S.points[k]);
      if (!std::isfinite(f)) throw ConfigError("hamiltonian evaluated to a non-finite value");
      if (f > fmax) { fmax = f; imax = k; }
      if (f < fmin) { fmin = f; imin = k; }
      mass += S.weights[k] * f;
      if (k > 0 && S.row_len > 0 && k % static_cast<size_t>(S.row_len) != 0)
        maxdiff = std::max(maxdiff, std::abs(f - prev));
      prev = f;
    }
    worst_var = std::max(worst_var, maxdiff);

    Vec xmax = S.points[imax];
    Vec xmin = S.points[imin];
    fmax = refine_extremum(M, H, t, xmax, fmax, +1, grid.refine_iters, S.mesh);
    fmin = refine_extremum(M, H, t, xmin, fmin, -1, grid.refine_iters, S.mesh);

    EnergyRow row;
    row.t = t;
    row.max = fmax;
    row.min = fmin;
    row.absmax = std::max(std::abs(fmax), std::abs(fmin));
    row.osc = fmax - fmin;
    row.bstar = 0.5 * (fmax + fmin);
    row.mean = mass / S.total_weight;
    table.rows.push_back(row);
    table.argmax.push_back(std::move(xmax));
    table.argmin.push_back(std::move(xmin));
  }
  table.space_err_bound = worst_var;
  return table;
}

double linf_energy(const ManifoldModel& M, const TimeHamiltonian& H, const EnergyGrid& grid) {
  const EnergyTable table = compute_energy_table(M, H, grid);
  std::vector<double> v;
  v.reserve(table.rows.size());
  for (const auto& r : table.rows) v.push_back(r.absmax);
  return simpson_integrate(v, 0.0, 1.0);
}

double osc_energy(const ManifoldModel& M, const TimeHamiltonian& H, const EnergyGrid& grid) {
  const EnergyTable table = compute_energy_table(M, H, grid);
  std::vector<double> v;
  v.reserve(table.rows.size());
  for (const auto& r : table.rows) v.push_back(r.osc);
  return simpson_integrate(v, 0.0, 1.0);
}

ReebShiftResult reeb_shift_optimum(const ManifoldModel& M, const TimeHamiltonian& H,
                                   const EnergyGrid& grid) {
  const EnergyTable table = compute_energy_table(M, H, grid);
  ReebShiftResult res;
  res.times.reserve(table.rows.size());
  res.bstar.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    res.times.push_back(r.t);
    res.bstar.push_back(r.bstar);
  }
  auto times = std::make_shared<std::vector<double>>(res.times);
  auto vals = std::make_shared<std::vector<double>>(res.bstar);
  res.bstar_fn = [times, vals](double t) {
    const auto& T = *times;
    const auto& V = *vals;
    if (t <= T.front()) return V.front();
    if (t >= T.back()) return V.back();
    const auto it = std::upper_bound(T.begin(), T.end(), t);
    const size_t i = static_cast<size_t>(it - T.begin());
    const double w = (t - T[i - 1]) / (T[i] - T[i - 1]);
    return (1.0 - w) * V[i - 1] + w * V[i];
  };

  TimeHamiltonian shifted;
  auto bfn = res.bstar_fn;
  auto base = H;
  shifted.value = [base, bfn](double t, const Vec& x) { return base(t, x) - bfn(t); };
  if (base.gradient) shifted.gradient = base.gradient;  // the shift is spatially constant
  shifted.analytic = base.analytic;
  res.shifted_energy = linf_energy(M, shifted, grid);
  return res;
}

TimeHamiltonian invert(const TimeHamiltonian& H) {
  if (!H.valid()) throw ConfigError("hamiltonian has no value function");
  TimeHamiltonian out;
  auto base = H;
  out.value = [base](double t, const Vec& x) { return -base(1.0 - t, x); };
  if (base.gradient) {
    out.gradient = [base](double t, const Vec& x) { return Vec(-base.gradient(1.0 - t, x)); };
  }
  out.analytic = base.analytic;
  return out;
}

void ReparamPair::validate() const {
  if (!tau1 || !tau2 || !dtau1 || !dtau2)
    throw ConfigError("reparams: all four maps must be set");
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  if (!near(tau1(0.0), 0.0) || !near(tau1(1.0), 1.0))
    throw ConfigError("reparams.tau1: endpoints must map 0->0 and 1->1");
  if (!near(tau2(0.0), 0.0) || !near(tau2(1.0), 1.0))
    throw ConfigError("reparams.tau2: endpoints must map 0->0 and 1->1");
  const int n = 1000;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double v1 = tau1(t), v2 = tau2(t);
    const double d1 = dtau1(t), d2 = dtau2(t);
    if (v1 < -1e-9 || v1 > 1.0 + 1e-9 || v2 < -1e-9 || v2 > 1.0 + 1e-9)
      throw ConfigError("reparams: values must stay inside [0,1]");
    if (d1 < -1e-9 || d2 < -1e-9)
      throw ConfigError("reparams: derivatives must be nonnegative");
    if (t < 0.5 - 1e-9 && std::abs(d1) > 1e-9)
      throw ConfigError("reparams.tau1: derivative must vanish on the first half");
    if (t > 0.5 + 1e-9 && std::abs(d2) > 1e-9)
      throw ConfigError("reparams.tau2: derivative must vanish on the second half");
    if (i > 0 && i < n) {
      const double h = 1e-6;
      const double fd1 = (tau1(t + h) - tau1(t - h)) / (2.0 * h);
      const double fd2 = (tau2(t + h) - tau2(t - h)) / (2.0 * h);
      if (std::abs(fd1 - d1) > 1e-4 * (1.0 + std::abs(d1)))
        throw ConfigError("reparams.tau1: derivative disagrees with finite differences");
      if (std::abs(fd2 - d2) > 1e-4 * (1.0 + std::abs(d2)))
        throw ConfigError("reparams.tau2: derivative disagrees with finite differences");
    }
  }
}

ReparamPair default_reparams() {
  ReparamPair p;
  p.tau2 = [](double t) { return smoothstep5(std::clamp(2.0 * t, 0.0, 1.0)); };
  p.dtau2 = [](double t) {
    return t < 0.5 ? 2.0 * smoothstep5_deriv(std::clamp(2.0 * t, 0.0, 1.0)) : 0.0;
  };
  p.tau1 = [](double t) {
    return t <= 0.5 ? 0.0 : smoothstep5(std::clamp(2.0 * t - 1.0, 0.0, 1.0));
  };
  p.dtau1 = [](double t) {
    return t <= 0.5 ? 0.0 : 2.0 * smoothstep5_deriv(std::clamp(2.0 * t - 1.0, 0.0, 1.0));
  };
  return p;
}

TimeHamiltonian concat(const TimeHamiltonian& F, const TimeHamiltonian& G,
                       const ReparamPair& reparams) {
  if (!F.valid() || !G.valid()) throw ConfigError("concat: both hamiltonians need value functions");
  reparams.validate();
  TimeHamiltonian out;
  auto f = F;
  auto g = G;
  auto rp = reparams;
  out.value = [f, g, rp](double t, const Vec& x) {
    double v = 0.0;
    const double d2 = rp.dtau2(t);
    if (d2 != 0.0) v += d2 * f(rp.tau2(t), x);
    const double d1 = rp.dtau1(t);
    if (d1 != 0.0) v += d1 * g(rp.tau1(t), x);
    return v;
  };
  if (f.gradient && g.gradient) {
    out.gradient = [f, g, rp](double t, const Vec& x) {
      Vec acc;
      const double d2 = rp.dtau2(t);
      const double d1 = rp.dtau1(t);
      if (d2 != 0.0) acc = d2 * f.gradient(rp.tau2(t), x);
      if (d1 != 0.0) {
        Vec gg = d1 * g.gradient(rp.tau1(t), x);
        acc = (acc.size() == 0) ? gg : Vec(acc + gg);
      }
      if (acc.size() == 0) acc = Vec::Zero(x.size());
      return acc;
    };
  }
  out.analytic = f.analytic && g.analytic;
  return out;
}

TimeHamiltonian conjugate(const ManifoldModel& M, const TimeHamiltonian& H,
                          std::shared_ptr<ContactMap> psi) {
  if (!H.valid()) throw ConfigError("hamiltonian has no value function");
  if (!psi) throw ConfigError("conjugate: missing contactomorphism");

  struct Cache {
    std::mutex mu;
    std::unordered_map<std::string, ContactMap::PointImage> memo;
  };
  auto cache = std::make_shared<Cache>();
  auto base = H;
  const ManifoldModel* Mp = &M;

  auto lookup = [cache, psi](const Vec& y) {
    std::string key(reinterpret_cast<const char*>(y.data()),
                    static_cast<size_t>(y.size()) * sizeof(double));
    {
      std::lock_guard<std::mutex> lk(cache->mu);
      auto it = cache->memo.find(key);
      if (it != cache->memo.end()) return it->second;
    }
    ContactMap::PointImage im;
    try {
      im = psi->inverse_at(1.0, y);
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string("inverse evaluation failure: ") + e.what(), 1.0);
    }
    std::lock_guard<std::mutex> lk(cache->mu);
    cache->memo.emplace(std::move(key), im);
    return im;
  };

  TimeHamiltonian out;
  out.value = [base, lookup, Mp](double t, const Vec& y) {
    const auto im = lookup(Mp->wrap(y));
    // im.g is the forward factor at the preimage, exactly the lambda_psi the
    // conjugation formula multiplies by.
    return std::exp(im.g) * base(t, im.x);
  };
  out.analytic = false;  // gradient falls back to finite differences
  return out;
}

RescaleEnergies rescale_form_energy(const ManifoldModel& M,
                                    const std::function<double(const Vec&)>& f,
                                    const TimeHamiltonian& H, const EnergyGrid& grid) {
  if (!f) throw ConfigError("rescale: missing conformal factor");
  if (!grid.sampler) grid.sampler = std::make_shared<const SpatialSample>(
                         build_grid_sampler(M, grid.space_per_dim));
  RescaleEnergies out;
  out.fmin = std::numeric_limits<double>::infinity();
  out.fmax = -std::numeric_limits<double>::infinity();
  for (const Vec& p : grid.sampler->points) {
    const double v = f(p);
    out.fmin = std::min(out.fmin, v);
    out.fmax = std::max(out.fmax, v);
  }
  if (!(out.fmin > 0.0))
    throw ConfigError("rescale: conformal factor must be positive on the sampled net");

  out.base = linf_energy(M, H, grid);

  TimeHamiltonian scaled;
  auto base = H;
  scaled.value = [base, f](double t, const Vec& x) { return f(x) * base(t, x); };
  scaled.analytic = false;
  out.scaled = linf_energy(M, scaled, grid);

  const double tol = 1e-9 * (1.0 + std::abs(out.scaled));
  out.sandwich_ok = (out.fmin * out.base <= out.scaled + tol) &&
                    (out.scaled <= out.fmax * out.base + tol);
  return out;
}

long ceiling_lower_bound(const ManifoldModel& M, const TimeHamiltonian& H,
                         const EnergyGrid& grid) {
  const EnergyTable table = compute_energy_table(M, H, grid);
  std::vector<double> vmax, vmin;
  vmax.reserve(table.rows.size());
  vmin.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    vmax.push_back(r.max);
    vmin.push_back(r.min);
  }
  const double imax = snap_to_integer(simpson_integrate(vmax, 0.0, 1.0));
  const double imin = snap_to_integer(simpson_integrate(vmin, 0.0, 1.0));
  const long a = std::labs(std::lround(std::ceil(imax)));
  const long b = std::labs(std::lround(std::floor(imin)));
  return std::max(a, b);
}

CalabiWeinstein calabi_weinstein(const ManifoldModel& M, const TimeHamiltonian& H,
                                 const EnergyGrid& grid) {
  const EnergyTable table = compute_energy_table(M, H, grid);
  std::vector<double> means;
  means.reserve(table.rows.size());
  for (const auto& r : table.rows) means.push_back(r.mean);

  CalabiWeinstein out;
  out.value = simpson_integrate(means, 0.0, 1.0);

  // Strictness audit: the invariant needs dH_t(R) = 0, checked on a thinned
  // subsample of the spatial net at every time node.
  const SpatialSample& S = *grid.sampler;
  const size_t stride = std::max<size_t>(1, S.points.size() / 200);
  double worst = 0.0;
  for (const auto& row : table.rows) {
    for (size_t k = 0; k < S.points.size(); k += stride) {
      const Vec& x = S.points[k];
      Vec reeb;
      if (M.reeb_closed) {
        reeb = M.reeb_closed(x);
      } else {
        reeb = solve_reeb(M, x).field;
      }
      const Vec g = H.grad(row.t, x);
      worst = std::max(worst, std::abs(g.dot(reeb)));
    }
  }
  out.max_reeb_derivative = worst;
  out.strict = worst < 1e-6;
  return out;
}

}  // namespace contactlab
