#pragma once

#include <memory>

#include "contactlab/flow.hpp"

namespace contactlab {

// Quadrature settings: composite Simpson in time, uniform spatial net with a
// few ascent refinements for the extrema. The sampler handle is a cache; the
// engine fills it on first use so repeated calls share the net.
struct EnergyGrid {
  int time_nodes = 129;   // odd
  int space_per_dim = 64;
  int refine_iters = 10;
  mutable std::shared_ptr<const SpatialSample> sampler;
};

struct EnergyRow {
  double t = 0.0;
  double max = 0.0;
  double min = 0.0;
  double absmax = 0.0;  // max |H(t, .)|
  double osc = 0.0;
  double bstar = 0.0;
  double mean = 0.0;  // volume-normalized average
};

struct EnergyTable {
  std::vector<EnergyRow> rows;
  std::vector<Vec> argmax, argmin;
  double space_err_bound = 0.0;  // grid Lipschitz estimate, worst node
  double volume = 0.0;           // quadrature mass of the sampler
};

EnergyTable compute_energy_table(const ManifoldModel& M, const TimeHamiltonian& H,
                                 const EnergyGrid& grid);

double simpson_integrate(const std::vector<double>& values, double t0, double t1);

double linf_energy(const ManifoldModel& M, const TimeHamiltonian& H, const EnergyGrid& grid);
double osc_energy(const ManifoldModel& M, const TimeHamiltonian& H, const EnergyGrid& grid);

struct ReebShiftResult {
  std::vector<double> times;
  std::vector<double> bstar;
  double shifted_energy = 0.0;
  std::function<double(double)> bstar_fn;  // piecewise-linear through the nodes
};

ReebShiftResult reeb_shift_optimum(const ManifoldModel& M, const TimeHamiltonian& H,
                                   const EnergyGrid& grid);

TimeHamiltonian invert(const TimeHamiltonian& H);

struct ReparamPair {
  std::function<double(double)> tau1, tau2;
  std::function<double(double)> dtau1, dtau2;
  // Endpoint, monotonicity, and support checks on a 1e-3 grid.
  void validate() const;
};

ReparamPair default_reparams();

TimeHamiltonian concat(const TimeHamiltonian& F, const TimeHamiltonian& G,
                       const ReparamPair& reparams);

// (lambda_psi * H_t) o psi^{-1}, with inverse-flow lookups memoized per query
// point. The conjugator is shared so the cache survives across evaluations.
TimeHamiltonian conjugate(const ManifoldModel& M, const TimeHamiltonian& H,
                          std::shared_ptr<ContactMap> psi);

struct RescaleEnergies {
  double base = 0.0;    // energy against the reference form
  double scaled = 0.0;  // energy against f * alpha
  double fmin = 0.0;
  double fmax = 0.0;
  bool sandwich_ok = false;
};

RescaleEnergies rescale_form_energy(const ManifoldModel& M,
                                    const std::function<double(const Vec&)>& f,
                                    const TimeHamiltonian& H, const EnergyGrid& grid);

long ceiling_lower_bound(const ManifoldModel& M, const TimeHamiltonian& H,
                         const EnergyGrid& grid);

// The attainment gap of the ceiling bound cannot be decided numerically; the
// note travels with every serialized report.
inline const char* ceiling_caveat() {
  return "integer bound holds up to an additive epsilon in {0,1}";
}

struct CalabiWeinstein {
  double value = 0.0;
  bool strict = false;
  double max_reeb_derivative = 0.0;  // sup |dH_t(R)| over the checked samples
};

CalabiWeinstein calabi_weinstein(const ManifoldModel& M, const TimeHamiltonian& H,
                                 const EnergyGrid& grid);

}  // namespace contactlab
