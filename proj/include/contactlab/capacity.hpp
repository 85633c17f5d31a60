#pragma once

#include "contactlab/energy.hpp"

namespace contactlab {

// Rectangle-to-disk loss convention: reported capacities are lower bounds with
// this fixed relative haircut, never claimed sharp.
inline constexpr double kEpsEmbed = 1e-3;

// Product region (chart box in N) x (r-interval) in the symplectization,
// optionally carrying a declared factorization into 2-dimensional symplectic
// factors with known areas. The r-scaling action keeps `scale` symbolic so
// that the normalized capacity divides it out exactly.
struct BoxSet {
  Vec base_lo, base_hi;
  double r_lo = 0.0, r_hi = 0.0;
  std::vector<double> factor_areas;
  double scale = 1.0;

  void validate() const;  // throws ConfigError
};

// Scaling acts on the r-coordinate; factor areas scale linearly with it.
BoxSet scale_box(const BoxSet& B, double lambda);

double height(const BoxSet& B);

// min over declared factor areas, times (1 - kEpsEmbed). Sets without a
// declared factorization have no capacity number here.
double gromov_lower_bound(const BoxSet& B);

// gromov_lower_bound / height; independent of `scale` by construction.
double hat_c(const BoxSet& B);

// Unit-ball volume of R^{even_dim} via the closed form pi^k / k!.
double unit_ball_volume(int even_dim);

// pi * (vol(N) / v_{2n+2})^{1/(n+1)}: the universal bound for hat_c on a
// closed manifold. vol(N) is the quadrature mass of a spatial net.
double hat_c_volume_cap(const ManifoldModel& M, int per_dim = 32);

enum class DisplacementVerdict { Displaced, NotDisplaced, Inconclusive };

const char* to_string(DisplacementVerdict v);

struct DisplacementReport {
  DisplacementVerdict verdict = DisplacementVerdict::Inconclusive;
  int samples = 0;
  double margin = 0.0;
  double min_clearance = 0.0;  // smallest distance of an image point to the box
  int images_inside = 0;       // image points landing inside the closed box
};

// Pushes a sample net of B through the lifted time-1 map of H. DISPLACED means
// every image cleared the closed box by more than margin; a single image
// inside certifies NOT displaced; anything else is inconclusive. Sampling can
// certify displacement only up to the recorded margin and density.
DisplacementReport displacement_check(const ManifoldModel& M, const TimeHamiltonian& H,
                                      const BoxSet& B, int samples, double margin,
                                      uint64_t seed = 2024);

struct AuditReport {
  double energy_ub = 0.0;
  double quarter_hat_c_lb = 0.0;
  double slack = 0.0;
  int samples = 0;
  double margin = 0.0;
  bool holds = false;
  DisplacementReport displacement;
};

// The quarter-capacity inequality for a displaced box. Refuses to run unless
// the displacement verdict is DISPLACED; a numeric violation is reported, not
// repaired, since it signals a bound or sampling bug.
AuditReport energy_capacity_audit(const ManifoldModel& M, const TimeHamiltonian& H,
                                  const BoxSet& B, int samples, double margin,
                                  const EnergyGrid& grid, uint64_t seed = 2024);

}  // namespace contactlab
