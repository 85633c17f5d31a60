#include "helpers.hpp"

using namespace contactlab;

namespace {

const char* kCatalog[] = {"CircleS1", "Torus3", "SphereS3", "HeisenbergChart",
                          "EllipsoidE(1.0,1.3)"};

// Independent dense solve of the defining system for the contact field,
// assembled from scratch against the tangent basis. Normal-equations path so
// it shares nothing with the library's pivoted QR.
Vec oracle_contact_field(const ManifoldModel& M, const Vec& x, double h, const Vec& dh) {
  const Mat B = M.tangent_basis(x);
  const Vec a = M.alpha(x);
  const Vec R = solve_reeb(M, x).field;
  const double hr = dh.dot(R);
  Mat A(M.dim + 1, M.dim);
  A.row(0) = (B.transpose() * a).transpose();
  A.bottomRows(M.dim) = -(B.transpose() * M.dalpha(x) * B);
  Vec b(M.dim + 1);
  b(0) = h;
  b.tail(M.dim) = B.transpose() * (-dh + hr * a);
  const Vec c = (A.transpose() * A).ldlt().solve(A.transpose() * b);
  return B * c;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("catalog passes the contact condition on a dense sample") {
  for (const char* name : kCatalog) {
    CAPTURE(name);
    const ManifoldModel M = manifold_by_name(name);
    const auto rep = verify_contact_condition(M, 1000, 17);
    CHECK(rep.pass);
    CHECK(rep.min_density > 0.0);
    // a fixed coarse net is always visited on top of the random draws
    CHECK(rep.samples >= 1000);
  }
}

TEST_CASE("a form with alpha ^ dalpha = 0 is rejected") {
  // alpha = dx on the 3-torus: dalpha = 0, so the density vanishes everywhere.
  ManifoldModel M = manifold_by_name("Torus3");
  M.name = "DegenerateDx";
  M.alpha = [](const Vec& x) {
    Vec a = Vec::Zero(x.size());
    a(0) = 1.0;
    return a;
  };
  M.dalpha = [](const Vec& x) { return Mat::Zero(x.size(), x.size()); };
  M.reeb_closed = nullptr;
  M.reeb_flow_closed = nullptr;
  M.reeb_flow_diff_closed = nullptr;
  const auto rep = verify_contact_condition(M, 200, 3);
  CHECK_FALSE(rep.pass);
  CHECK(rep.min_density == 0.0);
}

TEST_CASE("degenerate custom manifold tables fail at load time") {
  const char* doc = R"json({
    "name": "FlatDx",
    "dim": 3,
    "box": {"lo": [0, 0, 0], "hi": [1, 1, 1]},
    "periodic": [true, true, true],
    "alpha": [
      {"terms": [{"coeff": 1.0}]},
      {"terms": []},
      {"terms": []}
    ]
  })json";
  CHECK_THROWS_AS(manifold_from_json(Json::parse(doc)), ConfigError);
}

TEST_CASE("reeb solver matches the pinned catalog values") {
  {
    const ManifoldModel M = manifold_by_name("CircleS1");
    Vec x(1);
    x << 0.3;
    const auto r = solve_reeb(M, x);
    CHECK(std::abs(r.field(0) - 1.0) < 1e-12);
  }
  {
    const ManifoldModel M = manifold_by_name("Torus3");
    Vec x(3);
    x << 0.4, 0.7, 0.0;
    const auto r = solve_reeb(M, x);
    CHECK(std::abs(r.field(0) - 1.0) < 1e-10);
    CHECK(std::abs(r.field(1)) < 1e-10);
    CHECK(std::abs(r.field(2)) < 1e-10);
  }
  {
    const ManifoldModel M = manifold_by_name("SphereS3");
    Vec x(4);
    x << 1.0, 0.0, 0.0, 0.0;
    const auto r = solve_reeb(M, x);
    CHECK(std::abs(r.field(0)) < 1e-10);
    CHECK(std::abs(r.field(1) - 1.0) < 1e-10);
    CHECK(std::abs(r.field(2)) < 1e-10);
    CHECK(std::abs(r.field(3)) < 1e-10);
  }
}

TEST_CASE("reeb solver satisfies the defining equations at random points") {
  for (const char* name : kCatalog) {
    CAPTURE(name);
    const ManifoldModel M = manifold_by_name(name);
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
      const Vec x = M.random_point(rng);
      const auto r = solve_reeb(M, x);
      const Vec R = r.field;
      CHECK(std::abs(M.alpha(x).dot(R) - 1.0) < 1e-9);
      // i_R dalpha vanishes on tangent vectors
      const Mat B = M.tangent_basis(x);
      const Vec contraction = B.transpose() * (M.dalpha(x).transpose() * R);
      CHECK(contraction.norm() < 1e-9);
      if (M.reeb_closed) CHECK((R - M.reeb_closed(x)).norm() < 1e-9);
    }
  }
}

TEST_CASE("contact field with unit hamiltonian is the reeb field") {
  for (const char* name : {"Torus3", "SphereS3"}) {
    CAPTURE(name);
    const ManifoldModel M = manifold_by_name(name);
    Rng rng(7);
    for (int i = 0; i < 25; ++i) {
      const Vec x = M.random_point(rng);
      const Vec R = solve_reeb(M, x).field;
      const Vec Y = solve_contact_field(M, x, 1.0, Vec::Zero(M.ambient_dim)).field;
      CHECK((Y - R).norm() < 1e-9);
    }
  }
}

TEST_CASE("contact field is linear in the hamiltonian data") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H1 = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.7, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})");
  const TimeHamiltonian H2 = tl::table_ham(M, R"({"terms": [
      {"coeff": -0.4, "factors": [{"kind": "cos", "coord": 0, "freq": 2}]}]})");
  const double a = 1.3, b = -0.8;
  Rng rng(19);
  for (int i = 0; i < 25; ++i) {
    const Vec x = M.random_point(rng);
    const double t = rng.uniform();
    const Vec y1 = solve_contact_field(M, x, H1(t, x), H1.grad(t, x)).field;
    const Vec y2 = solve_contact_field(M, x, H2(t, x), H2.grad(t, x)).field;
    const Vec ysum = solve_contact_field(M, x, a * H1(t, x) + b * H2(t, x),
                                         Vec(a * H1.grad(t, x) + b * H2.grad(t, x)))
                         .field;
    CHECK((ysum - a * y1 - b * y2).norm() < 1e-9);
  }
}

TEST_CASE("contact field agrees with an independent least-squares solve") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 1.0, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})");
  Rng rng(5);
  Vec x0 = Vec::Zero(3);
  const std::vector<Vec> pts = {x0, M.random_point(rng), M.random_point(rng)};
  for (const Vec& x : pts) {
    const double h = H(0.0, x);
    const Vec dh = H.grad(0.0, x);
    const Vec y = solve_contact_field(M, x, h, dh).field;
    const Vec oracle = oracle_contact_field(M, x, h, dh);
    CHECK((y - oracle).norm() < 1e-9);
  }
}

TEST_CASE("one dimensional charts reduce the field to H times the reeb direction") {
  const ManifoldModel M = manifold_by_name("CircleS1");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.9, "factors": [{"kind": "cos", "coord": 0, "freq": 3}]}]})");
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    const Vec x = M.random_point(rng);
    const Vec y = solve_contact_field(M, x, H(0.0, x), H.grad(0.0, x)).field;
    CHECK(std::abs(y(0) - H(0.0, x)) < 1e-10);
  }
}

TEST_CASE("shipped reeb periods verify by first return") {
  for (const char* name : {"CircleS1", "Torus3", "SphereS3"}) {
    CAPTURE(name);
    const ManifoldModel M = manifold_by_name(name);
    REQUIRE(M.rho.has_value());
    const auto rep = verify_reeb_period(M, 256);
    CHECK(rep.pass);
    CHECK(rep.return_distance < 1e-8);
    CHECK(rep.min_interior_distance > 1e-3);
  }
  CHECK(std::abs(*manifold_by_name("CircleS1").rho - 1.0) < 1e-15);
  CHECK(std::abs(*manifold_by_name("Torus3").rho - 1.0) < 1e-15);
  CHECK(std::abs(*manifold_by_name("SphereS3").rho - kTwoPi) < 1e-15);
}

TEST_CASE("periodic coordinates wrap consistently") {
  const ManifoldModel M = manifold_by_name("Torus3");
  Vec x(3);
  x << 1.3, -0.2, 0.5;
  const Vec w = M.wrap(x);
  CHECK(w(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(w(1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(w(2) == doctest::Approx(0.5).epsilon(1e-12));

  Vec a(3), b(3);
  a << 0.95, 0.5, 0.5;
  b << 0.05, 0.5, 0.5;
  CHECK(M.distance(a, b) == doctest::Approx(0.1).epsilon(1e-9));
  const Vec d = M.chart_diff(a, b);
  CHECK(d(0) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("constrained points project back to the quadric") {
  const ManifoldModel M = manifold_by_name("SphereS3");
  Vec x(4);
  x << 1.1, -0.3, 0.2, 0.4;
  const Vec p = M.project(x);
  CHECK(std::abs(p.norm() - 1.0) < 1e-12);
  const Mat B = M.tangent_basis(p);
  CHECK((B.transpose() * p).norm() < 1e-12);
  CHECK((B.transpose() * B - Mat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("grid sampler mass converges with resolution") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const auto coarse = build_grid_sampler(M, 12);
  const auto fine = build_grid_sampler(M, 24);
  // alpha ^ dalpha integrates to 2*pi over the unit torus cube
  CHECK(coarse.total_weight == doctest::Approx(kTwoPi).epsilon(1e-6));
  CHECK(fine.total_weight == doctest::Approx(kTwoPi).epsilon(1e-8));
  CHECK(fine.mesh < coarse.mesh);
  CHECK(fine.row_len == 24);
}

}  // TEST_SUITE
