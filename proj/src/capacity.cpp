#include "contactlab/capacity.hpp"

#include <algorithm>
#include <cmath>

namespace contactlab {

void BoxSet::validate() const {
  if (base_lo.size() == 0 || base_lo.size() != base_hi.size())
    throw ConfigError("box set: base bounds are empty or mismatched");
  for (int i = 0; i < base_lo.size(); ++i) {
    if (!(base_lo[i] < base_hi[i]))
      throw ConfigError("box set: base interval must have positive width");
  }
  if (!(r_lo > 0.0) || !(r_lo < r_hi))
    throw ConfigError("box set: r-interval needs 0 < r_lo < r_hi");
  if (!(scale > 0.0)) throw ConfigError("box set: scale must be positive");
  for (double a : factor_areas) {
    if (a < 0.0) throw ConfigError("box set: factor areas cannot be negative");
  }
}

BoxSet scale_box(const BoxSet& B, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("scale_box: lambda must be positive");
  BoxSet out = B;
  out.scale *= lambda;
  return out;
}

double height(const BoxSet& B) {
  B.validate();
  return B.scale * B.r_hi;
}

double gromov_lower_bound(const BoxSet& B) {
  B.validate();
  if (B.factor_areas.empty())
    throw UnsupportedError(
        "box set carries no symplectic factorization; no capacity bound available");
  const double amin = *std::min_element(B.factor_areas.begin(), B.factor_areas.end());
  return B.scale * amin * (1.0 - kEpsEmbed);
}

double hat_c(const BoxSet& B) {
  B.validate();
  if (B.factor_areas.empty())
    throw UnsupportedError(
        "box set carries no symplectic factorization; no capacity bound available");
  const double amin = *std::min_element(B.factor_areas.begin(), B.factor_areas.end());
  // scale cancels between numerator and denominator; dividing it out
  // symbolically keeps the invariance exact in floating point.
  return amin * (1.0 - kEpsEmbed) / B.r_hi;
}

double unit_ball_volume(int even_dim) {
  if (even_dim <= 0 || even_dim % 2 != 0)
    throw ConfigError("unit_ball_volume: dimension must be even and positive");
  const int k = even_dim / 2;
  return std::pow(kPi, k) / std::tgamma(static_cast<double>(k) + 1.0);
}

double hat_c_volume_cap(const ManifoldModel& M, int per_dim) {
  const int n = (M.dim - 1) / 2;
  const SpatialSample S = build_grid_sampler(M, per_dim);
  const double v = unit_ball_volume(2 * n + 2);
  return kPi * std::pow(S.total_weight / v, 1.0 / (n + 1));
}

const char* to_string(DisplacementVerdict v) {
  switch (v) {
    case DisplacementVerdict::Displaced: return "DISPLACED";
    case DisplacementVerdict::NotDisplaced: return "NOT_DISPLACED";
    case DisplacementVerdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

namespace {

double interval_clearance(double y, double lo, double hi, bool periodic, double period) {
  if (periodic) {
    const double c = 0.5 * (lo + hi);
    const double d = std::abs(std::remainder(y - c, period)) - 0.5 * (hi - lo);
    return std::max(0.0, d);
  }
  return std::max({lo - y, y - hi, 0.0});
}

}  // namespace

DisplacementReport displacement_check(const ManifoldModel& M, const TimeHamiltonian& H,
                                      const BoxSet& B, int samples, double margin,
                                      uint64_t seed) {
  B.validate();
  if (samples < 100) throw ConfigError("displacement_check: needs at least 100 samples");
  if (!(margin >= 0.0)) throw ConfigError("displacement_check: margin cannot be negative");
  if (M.constraint != Constraint::None)
    throw UnsupportedError("box sets are defined over chart manifolds only");
  if (B.base_lo.size() != M.dim)
    throw ConfigError("displacement_check: base box dimension does not match the manifold");
  for (int i = 0; i < M.dim; ++i) {
    const double width = B.base_hi[i] - B.base_lo[i];
    if (M.periodic[i] && width > (M.box_hi[i] - M.box_lo[i]) + 1e-12)
      throw ConfigError("displacement_check: base interval wider than the period");
  }

  const ContactMap psi(M, H, 1e-10, 1e-12);
  DisplacementReport rep;
  rep.samples = samples;
  rep.margin = margin;
  rep.min_clearance = std::numeric_limits<double>::infinity();

  (void)seed;  // the net is a deterministic low-discrepancy lattice
  const double rl = B.scale * B.r_lo, rh = B.scale * B.r_hi;
  for (int k = 1; k <= samples; ++k) {
    Vec x(M.dim);
    for (int i = 0; i < M.dim; ++i) {
      const double u = halton(static_cast<uint64_t>(k), halton_base(i));
      x[i] = B.base_lo[i] + u * (B.base_hi[i] - B.base_lo[i]);
    }
    const double ur = halton(static_cast<uint64_t>(k), halton_base(M.dim));
    const double r = rl + ur * (rh - rl);

    const auto fw = psi.forward(M.wrap(x));
    const double r_im = r * std::exp(-fw.g);

    double acc = 0.0;
    for (int i = 0; i < M.dim; ++i) {
      const double d = interval_clearance(fw.x[i], B.base_lo[i], B.base_hi[i],
                                          M.periodic[i], M.box_hi[i] - M.box_lo[i]);
      acc += d * d;
    }
    const double dr = std::max({rl - r_im, r_im - rh, 0.0});
    const double clearance = std::sqrt(acc + dr * dr);

    rep.min_clearance = std::min(rep.min_clearance, clearance);
    if (clearance == 0.0) ++rep.images_inside;
  }

  if (rep.images_inside > 0) {
    rep.verdict = DisplacementVerdict::NotDisplaced;
  } else if (rep.min_clearance > margin) {
    rep.verdict = DisplacementVerdict::Displaced;
  } else {
    rep.verdict = DisplacementVerdict::Inconclusive;
  }
  return rep;
}

AuditReport energy_capacity_audit(const ManifoldModel& M, const TimeHamiltonian& H,
                                  const BoxSet& B, int samples, double margin,
                                  const EnergyGrid& grid, uint64_t seed) {
  AuditReport rep;
  rep.displacement = displacement_check(M, H, B, samples, margin, seed);
  rep.samples = samples;
  rep.margin = margin;
  if (rep.displacement.verdict != DisplacementVerdict::Displaced)
    throw ConfigError("energy-capacity audit requires a DISPLACED displacement verdict");
  rep.energy_ub = linf_energy(M, H, grid);
  rep.quarter_hat_c_lb = 0.25 * hat_c(B);
  rep.slack = rep.energy_ub - rep.quarter_hat_c_lb;
  rep.holds = rep.slack >= -1e-6;
  return rep;
}

}  // namespace contactlab
