#include "contactlab/hamiltonian.hpp"

#include <memory>

namespace contactlab {

double poly_eval(const std::vector<double>& coeffs, double t) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double poly_eval_deriv(const std::vector<double>& coeffs, double t) {
  double acc = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 1; --k)
    acc = acc * t + k * coeffs[k];
  return acc;
}

TimeHamiltonian constant_hamiltonian(double c) {
  TimeHamiltonian H;
  H.value = [c](double, const Vec&) { return c; };
  H.gradient = [](double, const Vec& x) { return Vec::Zero(x.size()).eval(); };
  H.analytic = true;
  return H;
}

namespace {

struct CompiledFactor {
  SpaceFactor::Kind kind;
  int coord;
  double omega = 0.0;   // trig: angle = omega * (x - lo)
  double lo = 0.0;
  std::vector<double> coeffs;

  double eval(const Vec& x) const {
    switch (kind) {
      case SpaceFactor::Kind::Cos:
        return std::cos(omega * (x(coord) - lo));
      case SpaceFactor::Kind::Sin:
        return std::sin(omega * (x(coord) - lo));
      default:
        return poly_eval(coeffs, x(coord));
    }
  }

  double deriv(const Vec& x) const {
    switch (kind) {
      case SpaceFactor::Kind::Cos:
        return -omega * std::sin(omega * (x(coord) - lo));
      case SpaceFactor::Kind::Sin:
        return omega * std::cos(omega * (x(coord) - lo));
      default:
        return poly_eval_deriv(coeffs, x(coord));
    }
  }
};

struct CompiledTerm {
  double coeff;
  std::vector<double> time_poly;
  std::vector<CompiledFactor> factors;
};

}  // namespace

TimeHamiltonian compile_hamiltonian(const ManifoldModel& M, const HamTable& table) {
  auto terms = std::make_shared<std::vector<CompiledTerm>>();
  terms->reserve(table.terms.size());
  for (size_t ti = 0; ti < table.terms.size(); ++ti) {
    const HamTerm& term = table.terms[ti];
    CompiledTerm ct;
    ct.coeff = term.coeff;
    ct.time_poly = term.time_poly.empty() ? std::vector<double>{1.0} : term.time_poly;
    for (size_t fi = 0; fi < term.factors.size(); ++fi) {
      const SpaceFactor& f = term.factors[fi];
      const std::string where =
          "hamiltonian.terms[" + std::to_string(ti) + "].factors[" + std::to_string(fi) + "]";
      if (f.coord < 0 || f.coord >= M.ambient_dim)
        throw ConfigError(where + ".coord: out of range for " + M.name);
      CompiledFactor cf;
      cf.kind = f.kind;
      cf.coord = f.coord;
      if (f.kind == SpaceFactor::Kind::Poly) {
        if (M.periodic[f.coord])
          throw ConfigError(where + ": poly factor on a periodic coordinate is discontinuous");
        if (f.coeffs.empty()) throw ConfigError(where + ".coeffs: empty polynomial");
        cf.coeffs = f.coeffs;
      } else {
        if (!M.periodic[f.coord])
          throw ConfigError(where + ": trig factor requires a periodic coordinate");
        const double period = M.box_hi(f.coord) - M.box_lo(f.coord);
        cf.omega = kTwoPi * f.freq / period;
        cf.lo = M.box_lo(f.coord);
      }
      ct.factors.push_back(cf);
    }
    terms->push_back(std::move(ct));
  }

  const int amb = M.ambient_dim;
  TimeHamiltonian H;
  H.analytic = true;
  H.value = [terms](double t, const Vec& x) {
    double acc = 0.0;
    for (const auto& term : *terms) {
      double v = term.coeff * poly_eval(term.time_poly, t);
      for (const auto& f : term.factors) v *= f.eval(x);
      acc += v;
    }
    return acc;
  };
  H.gradient = [terms, amb](double t, const Vec& x) {
    Vec g = Vec::Zero(amb);
    std::vector<double> vals;
    for (const auto& term : *terms) {
      const double base = term.coeff * poly_eval(term.time_poly, t);
      const size_t nf = term.factors.size();
      vals.resize(nf);
      for (size_t k = 0; k < nf; ++k) vals[k] = term.factors[k].eval(x);
      for (size_t k = 0; k < nf; ++k) {
        double prod = base * term.factors[k].deriv(x);
        for (size_t j = 0; j < nf; ++j)
          if (j != k) prod *= vals[j];
        g(term.factors[k].coord) += prod;
      }
    }
    return g;
  };
  return H;
}

}  // namespace contactlab
