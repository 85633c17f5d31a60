#pragma once

#include <optional>

#include "contactlab/energy.hpp"

namespace contactlab {

// A root of F(x, eta) = (chart-log of phi_R^{-eta}(psi x) relative to x, g_psi(x)).
struct TranslatedRecord {
  Vec x;
  double eta = 0.0;
  double residual_pos = 0.0;   // chart distance between psi(x) and phi_R^eta(x)
  double residual_conf = 0.0;  // |g_psi(x)|
  bool nondegenerate = false;
  int kernel_dim = -1;         // dim ker(A - 1) for A = D(phi_R^{-eta} psi)(x)
  int intersection_dim = -1;   // dim of that kernel inside ker d(lambda_psi)(x)
  double monodromy_cond = 0.0;
  bool verdict_withheld = false;
  int newton_iters = 0;
};

enum class FamilyKind { Isolated, Curve, WholeManifold };

// Roots that persist under merging but fill out a positive-dimensional set are
// reported as one family with a few representatives instead of a point list.
struct TranslatedFamily {
  FamilyKind kind = FamilyKind::Isolated;
  double eta = 0.0;
  int cluster_size = 0;  // merged roots the detector saw
  std::vector<TranslatedRecord> representatives;
};

struct TranslatedScan {
  std::vector<TranslatedRecord> records;  // isolated roots, sorted by (eta, coords)
  std::vector<TranslatedFamily> families;
  int seeds_tried = 0;
  int seeds_converged = 0;
  int seeds_skipped = 0;  // singular Jacobian or line-search failure
  double eta_lo = 0.0, eta_hi = 0.0;
  double tol = 0.0;
};

struct TranslatedOptions {
  std::optional<std::pair<double, double>> eta_window;  // default set from rho
  int n_seeds = 24;        // spatial seeds; each runs against 16 eta values
  int eta_grid = 16;
  double tol = 1e-8;
  uint64_t seed = 12345;
  int max_iters = 50;
  int threads = 0;
};

TranslatedScan find_translated_points(const ManifoldModel& M, const TimeHamiltonian& H,
                                      const TranslatedOptions& opts = {});

// Fills kernel_dim, intersection_dim, monodromy_cond and the verdict on an
// accepted record. The record's x and eta are taken as-is.
TranslatedRecord check_nondegeneracy(const ManifoldModel& M, const TimeHamiltonian& H,
                                     TranslatedRecord record);

// Sum of Z/2 Betti numbers for the catalog manifolds; empty when unknown.
std::optional<int> betti_sum(const ManifoldModel& M);

struct OscillationCertificate {
  double half_osc = 0.0;  // upper bound for half the oscillation path energy
  std::optional<double> rho;
  bool small = false;     // half_osc < rho
  std::optional<int> betti;
  int found_points = 0;       // isolated records
  int found_families = 0;     // positive-dimensional families
  bool all_nondegenerate = false;
  std::string status;  // SATISFIED | VIOLATION-SUSPECT | NO-CERTIFICATE | NOT-APPLICABLE
  std::string note;
};

OscillationCertificate small_oscillation_certificate(const ManifoldModel& M,
                                                     const TimeHamiltonian& H,
                                                     const EnergyGrid& grid,
                                                     const TranslatedScan& scan);

}  // namespace contactlab
