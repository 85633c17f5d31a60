#pragma once

#include "contactlab/flow.hpp"

namespace contactlab {

// Point of the symplectization N x R_{>0}. The r=1 slice recovers N.
struct SymplPoint {
  Vec x;
  double r = 1.0;
};

// (x, r) -> (psi_t x, r / lambda_psi(x)) where lambda = exp(g). Commutes with
// r-scaling by construction.
SymplPoint lift_point(const ManifoldModel& M, const ContactMap& psi, const SymplPoint& p,
                      double t = 1.0);

// Differential of the lifted map at (x, 1): blocks [[Dpsi, 0], [-dlambda/lambda^2,
// 1/lambda]] in ambient coordinates, size (ambient_dim+1)^2.
Mat lift_differential(const ManifoldModel& M, const ContactMap& psi, const Vec& x,
                      double t = 1.0);

// Degree-1 homogeneous extension: Hbar(t,(x,r)) = r * H(t,x).
struct LiftedHamiltonian {
  TimeHamiltonian base;
  double operator()(double t, const SymplPoint& p) const { return p.r * base(t, p.x); }
};

LiftedHamiltonian homogeneous_lift(const TimeHamiltonian& H);

// Bump in log r: 1 on (a e^{-delta/2}, b e^{delta/2}), 0 outside
// (a e^{-delta}, b e^{delta}), quintic smoothstep shoulders.
struct CutoffProfile {
  double a = 0.5;
  double b = 2.0;
  double delta = 0.1;

  double lambda0(double r) const;
  double dlambda0_dr(double r) const;
  // sup over r of r * lambda0(r), needed by the energy comparison.
  double sup_r_lambda0() const;
  // Plateau and support bounds on a 1e-3 grid in log r, with 1e-6 slack at the
  // margins. Throws ConfigError on violation.
  void validate() const;
};

// The cutoff Hamiltonian K(t,(y,r)) = r H(t,y) lambda0(r exp(-ghat(t,y))),
// where ghat(t,y) is the conformal exponent of the inverse map at y. Each
// evaluation runs one reversed integration; eval() additionally transports the
// variational system to get exact spatial derivatives of ghat.
class CutoffHamiltonian {
 public:
  CutoffHamiltonian(const ManifoldModel& M, TimeHamiltonian H, CutoffProfile profile,
                    double rtol = 1e-10, double atol = 1e-12);

  double value(double t, const SymplPoint& p) const;

  struct Eval {
    double K = 0.0;
    Vec dKx;        // ambient spatial derivative
    double dKr = 0.0;
  };
  Eval eval(double t, const SymplPoint& p) const;

  // Hamiltonian field of K for the form d(r alpha): alpha(X_N) = dK/dr and
  // X_r alpha(v) + r dalpha(X_N, v) = -d_y K(v) on tangent vectors v.
  struct Field {
    Vec xdot;          // ambient components
    double rdot = 0.0;
  };
  Field sn_field(double t, const SymplPoint& p) const;

  SymplPoint integrate(const SymplPoint& p0, double t1, double rtol = 1e-7,
                       double atol = 1e-9) const;

  const CutoffProfile& profile() const { return profile_; }
  const ManifoldModel& manifold() const { return *M_; }

 private:
  const ManifoldModel* M_;
  TimeHamiltonian H_;
  CutoffProfile profile_;
  ContactMap map_;
};

struct CutoffCheck {
  // Worst endpoint mismatch between the cutoff flow and the lifted flow over
  // starts in I x N1.
  double c1_worst = 0.0;
  int c1_samples = 0;
  // Integrated sup-norm comparison: lhs = int sup_SN |K_t| dt, rhs = e^delta
  // sup(I) int sup_N1 |Hbar_t o psibar_t| dt.
  double c2_lhs = 0.0;
  double c2_rhs = 0.0;
  bool c2_holds = false;
  double sup_r_lambda0 = 0.0;
  std::vector<double> c1_residuals;
};

CutoffCheck verify_cutoff(const ManifoldModel& M, const TimeHamiltonian& H,
                          const CutoffProfile& profile, int n_samples, uint64_t seed,
                          int fan_per_dim = 8, int time_nodes = 65);

// Reverse path with the same endpoint: K generates t -> psi_1 psi_{1-t}^{-1}.
// K(t,y) = exp(g_{psi_1}(z) - g_{psi_{1-t}}(z)) * H(1-t, psi_{1-t} z) pulled
// back through z = psi_1^{-1} y.
TimeHamiltonian usher_reverse(const ManifoldModel& M, const TimeHamiltonian& H,
                              double rtol = 1e-10, double atol = 1e-12);

struct UsherCheck {
  double u1_worst = 0.0;  // endpoint mismatch of the two time-1 maps
  double u2_worst = 0.0;  // |Kbar(t, chibar_t xbar) - Hbar(1-t, xbar)|
  int u1_samples = 0;
  int u2_samples = 0;
  std::vector<double> u2_residuals;
};

UsherCheck verify_usher(const ManifoldModel& M, const TimeHamiltonian& H, int n_endpoint,
                        int n_pointwise, uint64_t seed);

}  // namespace contactlab
