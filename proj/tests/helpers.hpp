#pragma once

#include <doctest.h>

#include "contactlab/experiment.hpp"
#include "contactlab/io.hpp"

namespace tl {

using namespace contactlab;

inline TimeHamiltonian table_ham(const ManifoldModel& M, const char* json_text) {
  return compile_hamiltonian(M, ham_table_from_json(Json::parse(json_text)));
}

// z-profiles on Torus3 are strict: the Reeb field has no z-component and the
// value depends on z alone.
inline TimeHamiltonian random_strict_torus_ham(const ManifoldModel& M, Rng& rng) {
  HamTable table;
  const int n_terms = 1 + rng.uniform_int(2);
  for (int i = 0; i < n_terms; ++i) {
    HamTerm term;
    term.coeff = rng.uniform(-1.5, 1.5);
    term.time_poly = {rng.uniform(0.2, 1.0), rng.uniform(-0.5, 0.5)};
    SpaceFactor f;
    f.kind = rng.uniform() < 0.5 ? SpaceFactor::Kind::Sin : SpaceFactor::Kind::Cos;
    f.coord = 2;
    f.freq = 1 + rng.uniform_int(2);
    term.factors.push_back(f);
    table.terms.push_back(term);
  }
  return compile_hamiltonian(M, table);
}

inline TimeHamiltonian random_ham(const ManifoldModel& M, Rng& rng, int max_terms = 3) {
  return compile_hamiltonian(M, random_ham_table(M, rng, max_terms));
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    xp(i) = xi + h;
    const double fp = f(xp);
    xp(i) = xi - h;
    const double fm = f(xp);
    xp(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace tl
