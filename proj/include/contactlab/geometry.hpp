#pragma once

#include "contactlab/common.hpp"

namespace contactlab {

// A manifold is a single coordinate chart (a box with per-coordinate
// periodicity flags) or a level set embedded in its ambient box (round sphere,
// ellipsoid). Points are ambient coordinate vectors in both cases; intrinsic
// dimension `dim` is always odd and equals `ambient_dim` for plain charts.
enum class Constraint { None, UnitSphere, QuadricLevel };

struct ManifoldModel {
  std::string name;
  int dim = 0;          // intrinsic dimension 2n+1
  int ambient_dim = 0;  // coordinate count used to store a point
  Vec box_lo, box_hi;
  std::vector<bool> periodic;  // per ambient coordinate

  // Contact data, evaluated in ambient coordinates. dalpha(x)(i,j) is the
  // two-form on the pair (e_i, e_j); the matrix is antisymmetric.
  std::function<Vec(const Vec&)> alpha;
  std::function<Mat(const Vec&)> dalpha;

  // Closed-form Reeb data when available. solve_reeb never uses these; the
  // flow and test layers do.
  std::function<Vec(const Vec&)> reeb_closed;
  std::function<Vec(const Vec&, double)> reeb_flow_closed;          // x -> phi_R^s(x)
  std::function<Mat(const Vec&, double)> reeb_flow_diff_closed;     // ambient differential

  std::function<Mat(const Vec&)> metric;  // SPD, ambient size; identity when empty

  Constraint constraint = Constraint::None;
  Vec quadric_weights;  // QuadricLevel: surface is sum_i w_i x_i^2 = 1

  std::optional<double> rho;  // minimal period among closed Reeb orbits
  std::string rho_note;

  // Chart bookkeeping -------------------------------------------------------

  bool in_chart(const Vec& x, double slack = 1e-9) const;
  Vec wrap(const Vec& x) const;
  // Minimal representative of (to - from), wrapping periodic coordinates.
  Vec chart_diff(const Vec& from, const Vec& to) const;
  double distance(const Vec& x, const Vec& y) const;
  Vec project(const Vec& x) const;  // renormalize constrained points, wrap charts

  // Orthonormal basis of the tangent space at x, as ambient_dim x dim columns.
  Mat tangent_basis(const Vec& x) const;

  // Density of alpha ^ (dalpha)^n against the oriented orthonormal tangent
  // frame at x, returned as an absolute value. Zero signals a contact-condition
  // failure at x.
  double volume_density(const Vec& x) const;

  Vec random_point(Rng& rng) const;
  Mat metric_at(const Vec& x) const;
};

// Quadrature/sampling net over the manifold: points plus weights against the
// contact volume form. total_weight approximates vol(N, alpha ^ (dalpha)^n).
struct SpatialSample {
  std::vector<Vec> points;
  std::vector<double> weights;
  double total_weight = 0.0;
  double mesh = 0.0;    // max chart-space step between neighbouring net points
  int row_len = 0;      // points per scan row: consecutive indices within a row
                        // are spatial neighbours, useful for variation estimates
};

SpatialSample build_grid_sampler(const ManifoldModel& M, int per_dim);

struct ReebSolveResult {
  Vec field;        // ambient components
  double residual;  // least-squares residual of the defining system
  double cond;      // condition number of the system matrix
};

// Solves alpha(R)=1, i_R dalpha = 0 on the tangent space at x.
ReebSolveResult solve_reeb(const ManifoldModel& M, const Vec& x);

// Solves alpha(Y)=H, i_Y dalpha = -dH + dH(R) alpha at x for given values
// (H, dH). Shared backend for the Hamiltonian vector field.
ReebSolveResult solve_contact_field(const ManifoldModel& M, const Vec& x,
                                    double h_value, const Vec& h_grad);

struct ContactCheckReport {
  double min_density = 0.0;
  double max_density = 0.0;
  int samples = 0;
  bool pass = false;
};

ContactCheckReport verify_contact_condition(const ManifoldModel& M, int n_samples,
                                            std::uint64_t seed);

struct ReebPeriodCheck {
  bool pass = false;
  double claimed = 0.0;
  double return_distance = 0.0;   // chart distance after time rho
  double min_interior_distance = 0.0;  // min distance over (0, rho) scan
  std::string note;
};

// Confirms the shipped minimal period: the closed-form Reeb flow returns to
// the start after time rho and comes nowhere near it strictly inside (0, rho)
// along the scanned orbits.
ReebPeriodCheck verify_reeb_period(const ManifoldModel& M, int scan_points = 512);

// Catalog ------------------------------------------------------------------

ManifoldModel make_circle();
ManifoldModel make_torus3();
ManifoldModel make_sphere3();
ManifoldModel make_heisenberg();
ManifoldModel make_ellipsoid(double a, double b);

// Resolves "CircleS1", "Torus3", "SphereS3", "HeisenbergChart",
// "EllipsoidE(a,b)". Throws ConfigError for unknown names.
ManifoldModel manifold_by_name(const std::string& name);

}  // namespace contactlab
