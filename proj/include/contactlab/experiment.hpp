#pragma once

#include "contactlab/capacity.hpp"
#include "contactlab/io.hpp"
#include "contactlab/symplectization.hpp"
#include "contactlab/translated.hpp"

namespace contactlab {

struct ExperimentConfig {
  Json raw;  // config as given, with CLI overrides applied; hashed into reports
  ManifoldModel manifold;
  HamTable table;
  TimeHamiltonian hamiltonian;
  std::string task;
  uint64_t seed = 777;
  std::string out_dir = "out";
  double tol = 1e-8;
  bool quiet = false;
};

// Validates the schema and compiles the manifold and Hamiltonian. Throws
// ConfigError naming the offending field.
ExperimentConfig parse_config(const Json& j);

// Runs the configured task and writes report.json plus tables/*.csv (and
// plotdata/*.csv where applicable) under out_dir. Returns 0 on success, 2 when
// an asserted inequality or certificate fails. Runtime errors propagate as
// exceptions for the caller to map to exit code 1.
int run_experiment(const ExperimentConfig& cfg);

// Deterministic random coefficient table for property sweeps: trig factors on
// periodic coordinates, low-degree polynomials elsewhere.
HamTable random_ham_table(const ManifoldModel& M, Rng& rng, int max_terms = 3);

}  // namespace contactlab
