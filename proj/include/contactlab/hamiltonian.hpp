#pragma once

#include "contactlab/geometry.hpp"

namespace contactlab {

// Time-dependent function on the chart, t in [0,1]. The gradient member is
// optional; grad() falls back to central differences with a state-scaled step.
struct TimeHamiltonian {
  std::function<double(double, const Vec&)> value;
  std::function<Vec(double, const Vec&)> gradient;
  bool analytic = false;

  double operator()(double t, const Vec& x) const { return value(t, x); }

  Vec grad(double t, const Vec& x) const {
    if (gradient) return gradient(t, x);
    const double h = 1e-5 * (1.0 + x.norm());
    Vec g(x.size());
    Vec xp = x;
    for (int i = 0; i < x.size(); ++i) {
      const double xi = x(i);
      xp(i) = xi + h;
      const double fp = value(t, xp);
      xp(i) = xi - h;
      const double fm = value(t, xp);
      xp(i) = xi;
      g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  bool valid() const { return static_cast<bool>(value); }
};

TimeHamiltonian constant_hamiltonian(double c);

// Coefficient-table Hamiltonians: sums of (time polynomial) x (product of
// per-coordinate factors). Factors are cos/sin of an integer multiple of the
// normalized angle on a periodic coordinate, or a plain polynomial on a
// non-periodic one. These are the serializable Hamiltonians used by the CLI.
struct SpaceFactor {
  enum class Kind { Cos, Sin, Poly };
  Kind kind = Kind::Poly;
  int coord = 0;
  int freq = 1;                 // trig factors
  std::vector<double> coeffs;   // poly factors, ascending degree
};

struct HamTerm {
  double coeff = 1.0;
  std::vector<double> time_poly = {1.0};  // ascending degree in t
  std::vector<SpaceFactor> factors;
};

struct HamTable {
  std::vector<HamTerm> terms;
};

// Validates the table against the chart (coordinate ranges, trig on periodic
// coordinates only) and returns an analytically differentiable Hamiltonian.
TimeHamiltonian compile_hamiltonian(const ManifoldModel& M, const HamTable& table);

double poly_eval(const std::vector<double>& coeffs, double t);
double poly_eval_deriv(const std::vector<double>& coeffs, double t);

}  // namespace contactlab
