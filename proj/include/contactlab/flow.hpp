#pragma once

#include "contactlab/hamiltonian.hpp"

namespace contactlab {

struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  int grid_segments = 64;  // trace rows at t0 + k*(t1-t0)/segments
  long max_steps = 2000000;
  bool variational = false;
  double t0 = 0.0;
  double t1 = 1.0;
};

struct FlowStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

// Flow trace of one start point. g is the logarithm of the conformal factor
// transported along the trajectory; extended holds the variational matrices
// d(x_t, g_t)/d(x_0, g_0) at the grid times when requested.
struct IsotopyTrace {
  Vec x0;
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<double> g;
  std::vector<Mat> extended;
  FlowStats stats;
};

// Generic embedded RK5(4) driver. postproc runs after each accepted step and
// may mutate the state (constraint renormalization); on_grid fires exactly at
// the requested times, which the stepper lands on by clipping step sizes.
using OdeRhs = std::function<Vec(double, const Vec&)>;
Vec rk45(const OdeRhs& F, double t0, double t1, Vec y0, double rtol, double atol,
         long max_steps, FlowStats& stats,
         const std::function<void(double, Vec&)>& postproc = {},
         const std::vector<double>& grid = {},
         const std::function<void(int, double, const Vec&)>& on_grid = {});

IsotopyTrace integrate_isotopy(const ManifoldModel& M, const TimeHamiltonian& H,
                               const Vec& x0, const IntegrateOptions& opts = {});

struct MonodromyResult {
  Mat dpsi;      // ambient differential of the time-1 map
  RowVec dg;     // ambient gradient of the transported conformal exponent
  Mat extended;  // (ambient_dim+1)^2 block matrix [[dpsi,0],[dg,1]]
};

MonodromyResult monodromy(const ManifoldModel& M, const TimeHamiltonian& H,
                          const Vec& x0, const IntegrateOptions& opts = {});

Vec reeb_flow(const ManifoldModel& M, const Vec& x, double eta,
              double rtol = 1e-11, double atol = 1e-13);
Mat reeb_flow_differential(const ManifoldModel& M, const Vec& x, double eta,
                           double rtol = 1e-11, double atol = 1e-13);

// Time-t maps of a Hamiltonian isotopy, with inverses evaluated by running the
// reversed Hamiltonian. inverse_at(t, y) returns x with psi_t(x) = y together
// with g_{psi_t}(x).
class ContactMap {
 public:
  ContactMap(const ManifoldModel& M, TimeHamiltonian H, double rtol = 1e-11,
             double atol = 1e-13);

  struct PointImage {
    Vec x;
    double g = 0.0;
  };
  struct PointImageVar {
    Vec x;
    double g = 0.0;
    Mat dx;     // ambient differential w.r.t. the query point
    RowVec dg;  // ambient gradient of the g component w.r.t. the query point
  };

  PointImage forward(const Vec& x) const { return forward_at(1.0, x); }
  PointImage forward_at(double t, const Vec& x) const;
  PointImage inverse(const Vec& y) const { return inverse_at(1.0, y); }
  PointImage inverse_at(double t, const Vec& y) const;

  PointImageVar forward_var(const Vec& x) const { return forward_var_at(1.0, x); }
  PointImageVar forward_var_at(double t, const Vec& x) const;
  // Same g convention as inverse_at: g is g_{psi_t} at the preimage, dg its
  // y-gradient. dx = d(psi_t^{-1} y)/dy.
  PointImageVar inverse_var_at(double t, const Vec& y) const;

  const ManifoldModel& manifold() const { return *M_; }
  const TimeHamiltonian& hamiltonian() const { return H_; }
  double rtol() const { return rtol_; }
  double atol() const { return atol_; }

 private:
  const ManifoldModel* M_;
  TimeHamiltonian H_;
  double rtol_, atol_;
};

// Integrates every start to the shared time grid; entry [j][k] belongs to
// start j at grid time k.
struct TrajectoryFan {
  std::vector<double> times;
  std::vector<std::vector<Vec>> points;
  std::vector<std::vector<double>> g;
};

TrajectoryFan integrate_fan(const ManifoldModel& M, const TimeHamiltonian& H,
                            const std::vector<Vec>& starts, int grid_segments,
                            double rtol = 1e-10, double atol = 1e-12, int threads = 0);

}  // namespace contactlab
