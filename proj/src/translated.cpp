#include "contactlab/translated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace contactlab {

namespace {

struct RootCandidate {
  Vec x;
  double eta = 0.0;
  double residual_pos = 0.0;
  double residual_conf = 0.0;
  int iters = 0;
};

struct NewtonProblem {
  const ManifoldModel* M = nullptr;
  const ContactMap* psi = nullptr;
};

// F(x, eta) stacks the chart-log of phi_R^{-eta}(psi x) against x with the
// conformal exponent g_psi(x). Roots are exactly the translated points.
Vec eval_root_fn(const NewtonProblem& P, const Vec& x, double eta) {
  const ManifoldModel& M = *P.M;
  const auto fw = P.psi->forward(x);
  const Vec y = reeb_flow(M, fw.x, -eta);
  Vec F(M.dim + 1);
  if (M.constraint == Constraint::None) {
    F.head(M.dim) = M.chart_diff(x, y);
  } else {
    F.head(M.dim) = M.tangent_basis(x).transpose() * (y - x);
  }
  F(M.dim) = fw.g;
  return F;
}

Vec retract(const ManifoldModel& M, const Vec& x, const Vec& step) {
  if (M.constraint == Constraint::None) {
    Vec y = x + step;
    for (int i = 0; i < M.dim; ++i) {
      if (!M.periodic[i]) y[i] = std::clamp(y[i], M.box_lo[i], M.box_hi[i]);
    }
    return M.wrap(y);
  }
  return M.project(x + M.tangent_basis(x) * step);
}

// Damped Newton with central-difference Jacobian. Returns nothing when the
// Jacobian goes singular or the line search stalls above the tolerance.
std::optional<RootCandidate> run_newton(const NewtonProblem& P, Vec x, double eta,
                                        const TranslatedOptions& opts, bool* singular) {
  const ManifoldModel& M = *P.M;
  const int d = M.dim;
  Vec F = eval_root_fn(P, x, eta);

  for (int it = 0; it < opts.max_iters; ++it) {
    const double res_pos = F.head(d).norm();
    const double res_conf = std::abs(F(d));
    if (res_pos < 0.1 * opts.tol && res_conf < 0.1 * opts.tol) {
      return RootCandidate{x, eta, res_pos, res_conf, it};
    }
    if (F.norm() > 1e6) return std::nullopt;

    const double hx = 1e-6 * (1.0 + x.norm());
    const double he = 1e-6 * (1.0 + std::abs(eta));
    Mat J(d + 1, d + 1);
    for (int i = 0; i < d; ++i) {
      Vec step = Vec::Zero(d);
      step(i) = hx;
      const Vec fp = eval_root_fn(P, retract(M, x, step), eta);
      const Vec fm = eval_root_fn(P, retract(M, x, -step), eta);
      J.col(i) = (fp - fm) / (2.0 * hx);
    }
    J.col(d) = (eval_root_fn(P, x, eta + he) - eval_root_fn(P, x, eta - he)) / (2.0 * he);

    // A positive-dimensional root set makes J rank-deficient by construction
    // (conformal row vanishes along the family), so solve in the least-squares
    // sense; the minimum-norm step leaves null directions untouched.
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const bool rank_deficient = svd.rank() < d + 1;
    const Vec delta = svd.solve(-F);
    if (!delta.allFinite() || delta.norm() < 1e-14 * (1.0 + x.norm())) {
      if (singular && rank_deficient) *singular = true;
      return std::nullopt;
    }

    const double f0 = F.norm();
    double step_scale = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 10; ++ls) {
      const Vec xc = retract(M, x, step_scale * delta.head(d));
      const double ec = eta + step_scale * delta(d);
      const Vec Fc = eval_root_fn(P, xc, ec);
      if (Fc.norm() <= (1.0 - 1e-4 * step_scale) * f0) {
        x = xc;
        eta = ec;
        F = Fc;
        moved = true;
        break;
      }
      step_scale *= 0.5;
    }
    if (!moved) {
      const double res_pos2 = F.head(d).norm();
      const double res_conf2 = std::abs(F(d));
      if (res_pos2 < opts.tol && res_conf2 < opts.tol)
        return RootCandidate{x, eta, res_pos2, res_conf2, it + 1};
      if (singular && rank_deficient) *singular = true;
      return std::nullopt;
    }
  }
  const double res_pos = F.head(d).norm();
  const double res_conf = std::abs(F(d));
  if (res_pos < opts.tol && res_conf < opts.tol)
    return RootCandidate{x, eta, res_pos, res_conf, opts.max_iters};
  return std::nullopt;
}

std::vector<Vec> seed_lattice(const ManifoldModel& M, int n) {
  std::vector<Vec> seeds;
  seeds.reserve(static_cast<size_t>(n));
  if (M.constraint == Constraint::None) {
    for (int k = 0; k < n; ++k) {
      Vec x(M.dim);
      for (int i = 0; i < M.dim; ++i) {
        const double u = halton(static_cast<uint64_t>(k + 1), halton_base(i));
        x[i] = M.box_lo[i] + u * (M.box_hi[i] - M.box_lo[i]);
      }
      seeds.push_back(M.wrap(x));
    }
    return seeds;
  }
  uint64_t idx = 1;
  while (static_cast<int>(seeds.size()) < n) {
    Vec v(M.ambient_dim);
    for (int i = 0; i < M.ambient_dim; ++i)
      v[i] = 2.0 * halton(idx, halton_base(i)) - 1.0;
    ++idx;
    if (v.norm() < 0.1) continue;
    seeds.push_back(M.project(v));
  }
  return seeds;
}

bool same_root(const ManifoldModel& M, const TranslatedRecord& a, const TranslatedRecord& b,
               double merge_tol) {
  return M.distance(a.x, b.x) < merge_tol && std::abs(a.eta - b.eta) < merge_tol;
}

bool lex_less(const TranslatedRecord& a, const TranslatedRecord& b) {
  if (a.eta != b.eta) return a.eta < b.eta;
  for (int i = 0; i < a.x.size(); ++i) {
    if (a.x[i] != b.x[i]) return a.x[i] < b.x[i];
  }
  return false;
}

}  // namespace

TranslatedScan find_translated_points(const ManifoldModel& M, const TimeHamiltonian& H,
                                      const TranslatedOptions& opts) {
  if (!H.valid()) throw ConfigError("find_translated_points: hamiltonian has no value function");
  if (opts.n_seeds < 1) throw ConfigError("find_translated_points: n_seeds must be >= 1");
  if (!(opts.tol > 0.0)) throw ConfigError("find_translated_points: tol must be positive");

  TranslatedScan scan;
  scan.tol = opts.tol;

  double lo, hi;
  if (opts.eta_window) {
    lo = opts.eta_window->first;
    hi = opts.eta_window->second;
    if (!(hi > lo)) throw ConfigError("find_translated_points: empty eta window");
  } else if (M.rho) {
    lo = -2.0 * *M.rho;
    hi = 2.0 * *M.rho;
  } else {
    // No period available: bound |eta| by the path energy inflated with the
    // largest conformal stretch seen along a few probe trajectories.
    EnergyGrid probe;
    probe.time_nodes = 33;
    probe.space_per_dim = 8;
    probe.refine_iters = 4;
    const double E = linf_energy(M, H, probe);
    Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
    double gmax = 0.0;
    IntegrateOptions io;
    io.grid_segments = 1;
    for (int i = 0; i < 8; ++i) {
      const IsotopyTrace tr = integrate_isotopy(M, H, M.random_point(rng), io);
      gmax = std::max(gmax, std::abs(tr.g.back()));
    }
    const double w = std::max(1e-3, 2.0 * E * std::exp(gmax));
    lo = -w;
    hi = w;
  }
  scan.eta_lo = lo;
  scan.eta_hi = hi;

  const ContactMap psi(M, H, 1e-11, 1e-13);
  NewtonProblem prob{&M, &psi};

  const std::vector<Vec> seeds = seed_lattice(M, opts.n_seeds);
  const int ne = std::max(2, opts.eta_grid);
  struct SlotResult {
    std::optional<RootCandidate> root;
    bool singular = false;
  };
  const size_t total = seeds.size() * static_cast<size_t>(ne);
  std::vector<SlotResult> slots(total);
  parallel_for(total, [&](size_t k) {
    const size_t si = k / static_cast<size_t>(ne);
    const int ei = static_cast<int>(k % static_cast<size_t>(ne));
    const double eta = lo + (hi - lo) * static_cast<double>(ei) / (ne - 1);
    slots[k].root = run_newton(prob, seeds[si], eta, opts, &slots[k].singular);
  }, opts.threads);

  scan.seeds_tried = static_cast<int>(total);
  std::vector<TranslatedRecord> accepted;
  for (const auto& s : slots) {
    if (s.singular) ++scan.seeds_skipped;
    if (!s.root) continue;
    ++scan.seeds_converged;
    // Newton may drift past the window to a periodic copy of a family; those
    // duplicates are real roots but outside what the caller asked to see.
    if (s.root->eta < lo - 1e-9 || s.root->eta > hi + 1e-9) continue;
    TranslatedRecord r;
    r.x = s.root->x;
    r.eta = s.root->eta;
    r.residual_pos = s.root->residual_pos;
    r.residual_conf = s.root->residual_conf;
    r.newton_iters = s.root->iters;
    accepted.push_back(std::move(r));
  }

  // Deterministic merge: sort, then greedily absorb near-duplicates.
  std::sort(accepted.begin(), accepted.end(), lex_less);
  const double merge_tol = 10.0 * opts.tol;
  std::vector<TranslatedRecord> merged;
  for (const auto& r : accepted) {
    bool dup = false;
    for (const auto& kept : merged) {
      if (same_root(M, r, kept, merge_tol)) {
        dup = true;
        break;
      }
    }
    if (!dup) merged.push_back(r);
  }

  // Family detection: cluster by eta, then decide whether a large cluster is
  // the whole manifold, a curve, or a merge artifact.
  std::vector<std::vector<TranslatedRecord>> clusters;
  for (const auto& r : merged) {
    bool placed = false;
    for (auto& c : clusters) {
      if (std::abs(c.front().eta - r.eta) < 1e-4) {
        c.push_back(r);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({r});
  }

  Rng rng(opts.seed);
  for (auto& c : clusters) {
    if (c.size() < 2) {
      for (auto& r : c) scan.records.push_back(std::move(r));
      continue;
    }
    double eta_bar = 0.0;
    for (const auto& r : c) eta_bar += r.eta;
    eta_bar /= static_cast<double>(c.size());

    TranslatedFamily fam;
    fam.eta = eta_bar;
    fam.cluster_size = static_cast<int>(c.size());

    // Whole-manifold probe: fresh random points should already be roots.
    int hits = 0;
    const int probes = 16;
    for (int i = 0; i < probes; ++i) {
      const Vec F = eval_root_fn(prob, M.random_point(rng), eta_bar);
      if (F.norm() < 1000.0 * opts.tol) ++hits;
    }
    if (hits >= (9 * probes) / 10) {
      fam.kind = FamilyKind::WholeManifold;
    } else {
      // Spread of the cloud tells a merge artifact (one root seen with noise
      // above the merge tolerance) from genuinely separated roots.
      Vec mean = Vec::Zero(M.ambient_dim);
      for (const auto& r : c) mean += r.x;
      mean /= static_cast<double>(c.size());
      double spread = 0.0;
      for (const auto& r : c) spread = std::max(spread, M.chart_diff(mean, r.x).norm());
      if (spread < 1e-3 * (1.0 + mean.norm())) {
        std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
          return a.residual_pos + a.residual_conf < b.residual_pos + b.residual_conf;
        });
        scan.records.push_back(c.front());
        continue;
      }

      // Separated roots at one eta: a connected curve or a symmetric set of
      // isolated points. Polishing nearest-neighbor midpoints decides; on a
      // curve the polished point is a root strictly between its endpoints,
      // next to isolated roots it falls back onto one of them.
      int between = 0, pairs = 0;
      for (size_t i = 0; i < c.size() && pairs < 8; ++i) {
        size_t j_near = i;
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < c.size(); ++j) {
          if (j == i) continue;
          const double dij = M.distance(c[i].x, c[j].x);
          if (dij < best) {
            best = dij;
            j_near = j;
          }
        }
        if (j_near == i || !(best > 100.0 * merge_tol)) continue;
        ++pairs;
        const Vec mid = retract(M, c[i].x,
                                M.constraint == Constraint::None
                                    ? Vec(0.5 * M.chart_diff(c[i].x, c[j_near].x))
                                    : Vec(0.5 * M.tangent_basis(c[i].x).transpose() *
                                          M.chart_diff(c[i].x, c[j_near].x)));
        const auto polished = run_newton(prob, mid, eta_bar, opts, nullptr);
        if (!polished || std::abs(polished->eta - eta_bar) > 1e-4) continue;
        const double da = M.distance(polished->x, c[i].x);
        const double db = M.distance(polished->x, c[j_near].x);
        if (std::min(da, db) > 0.2 * best) ++between;
      }
      if (pairs > 0 && 5 * between >= 3 * pairs) {
        fam.kind = FamilyKind::Curve;
      } else {
        for (auto& r : c) scan.records.push_back(std::move(r));
        continue;
      }
    }
    const size_t stride = std::max<size_t>(1, c.size() / 8);
    for (size_t i = 0; i < c.size() && fam.representatives.size() < 8; i += stride)
      fam.representatives.push_back(c[i]);
    scan.families.push_back(std::move(fam));
  }

  std::sort(scan.records.begin(), scan.records.end(), lex_less);
  for (auto& r : scan.records) r = check_nondegeneracy(M, H, std::move(r));
  for (auto& f : scan.families) {
    for (auto& r : f.representatives) r = check_nondegeneracy(M, H, std::move(r));
  }
  return scan;
}

TranslatedRecord check_nondegeneracy(const ManifoldModel& M, const TimeHamiltonian& H,
                                     TranslatedRecord record) {
  IntegrateOptions io;
  io.rtol = 1e-11;
  io.atol = 1e-13;
  io.variational = true;
  io.grid_segments = 1;
  const IsotopyTrace tr = integrate_isotopy(M, H, record.x, io);
  const int n = M.ambient_dim;
  const Mat ext = tr.extended.back();
  const Mat dpsi = ext.topLeftCorner(n, n);
  const RowVec dg = ext.block(n, 0, 1, n);
  const double g = tr.g.back();

  const Mat dreeb = reeb_flow_differential(M, tr.points.back(), -record.eta);
  const Mat A_amb = dreeb * dpsi;
  const Mat B = M.tangent_basis(record.x);
  const Mat At = B.transpose() * A_amb * B;

  {
    Eigen::JacobiSVD<Mat> csvd(ext);
    const auto& sv = csvd.singularValues();
    record.monodromy_cond =
        sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                : std::numeric_limits<double>::infinity();
  }
  record.verdict_withheld = !(record.monodromy_cond < 1e8);

  Eigen::JacobiSVD<Mat> svd(Mat(At - Mat::Identity(M.dim, M.dim)),
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double anorm = At.jacobiSvd().singularValues()(0);
  const auto& sv = svd.singularValues();
  int k = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) < 1e-6 * std::max(1.0, anorm)) ++k;
  }
  record.kernel_dim = k;

  // d(lambda) = lambda * dg restricted to the tangent space; when it vanishes
  // the whole kernel counts, otherwise one direction at most is cut out.
  const RowVec dlam_t = std::exp(g) * (dg * B);
  if (k == 0) {
    record.intersection_dim = 0;
  } else {
    const Mat K1 = svd.matrixV().rightCols(k);
    if (dlam_t.norm() < 1e-10 * (1.0 + std::exp(g))) {
      record.intersection_dim = k;
    } else {
      const RowVec w = dlam_t * K1;
      record.intersection_dim = k - ((w.norm() > 1e-8 * dlam_t.norm()) ? 1 : 0);
    }
  }
  record.nondegenerate = !record.verdict_withheld && record.intersection_dim == 0;
  return record;
}

std::optional<int> betti_sum(const ManifoldModel& M) {
  if (M.name == "CircleS1") return 2;
  if (M.name == "Torus3") return 8;
  if (M.name == "SphereS3") return 2;
  if (M.name.rfind("EllipsoidE", 0) == 0) return 2;  // diffeomorphic to the sphere
  return std::nullopt;
}

OscillationCertificate small_oscillation_certificate(const ManifoldModel& M,
                                                     const TimeHamiltonian& H,
                                                     const EnergyGrid& grid,
                                                     const TranslatedScan& scan) {
  OscillationCertificate cert;
  cert.half_osc = 0.5 * osc_energy(M, H, grid);
  cert.rho = M.rho;
  cert.betti = betti_sum(M);
  cert.found_points = static_cast<int>(scan.records.size());
  cert.found_families = static_cast<int>(scan.families.size());

  bool all_nd = !scan.records.empty() && scan.families.empty();
  for (const auto& r : scan.records) {
    if (!r.nondegenerate) all_nd = false;
  }
  cert.all_nondegenerate = all_nd;

  if (!cert.rho) {
    cert.status = "NOT-APPLICABLE";
    cert.note = "minimal Reeb period unknown for this manifold; certificate unavailable";
    return cert;
  }
  cert.small = cert.half_osc < *cert.rho;
  if (!cert.small) {
    cert.status = "NO-CERTIFICATE";
    cert.note = "half the oscillation energy does not clear the minimal Reeb period";
    return cert;
  }

  const bool has_any = cert.found_points + cert.found_families > 0;
  bool count_ok = true;
  if (cert.all_nondegenerate && cert.betti) count_ok = cert.found_points >= *cert.betti;
  if (has_any && count_ok) {
    cert.status = "SATISFIED";
    cert.note = cert.all_nondegenerate
                    ? "non-degenerate count meets the mod-2 homology bound"
                    : "at least one translated point found; homology count waived for "
                      "degenerate records";
  } else {
    cert.status = "VIOLATION-SUSPECT";
    cert.note = "fewer translated points than the certificate requires; on a fillable "
                "manifold this indicates a solver gap, not a theorem failure";
  }
  return cert;
}

}  // namespace contactlab
