#include "helpers.hpp"

using namespace contactlab;

namespace {

IsotopyTrace trace_of(const ManifoldModel& M, const TimeHamiltonian& H, const Vec& x0,
                      double rtol = 1e-10, int segments = 16) {
  IntegrateOptions o;
  o.rtol = rtol;
  o.atol = rtol * 1e-2;
  o.grid_segments = segments;
  return integrate_isotopy(M, H, x0, o);
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("unit hamiltonian flows along the reeb field with zero exponent") {
  for (const char* name : {"Torus3", "SphereS3"}) {
    CAPTURE(name);
    const ManifoldModel M = manifold_by_name(name);
    Rng rng(11);
    const Vec x0 = M.random_point(rng);
    const auto tr = trace_of(M, constant_hamiltonian(1.0), x0);
    REQUIRE(M.reeb_flow_closed);
    for (size_t i = 0; i < tr.times.size(); ++i) {
      CHECK(M.distance(tr.points[i], M.reeb_flow_closed(x0, tr.times[i])) < 1e-8);
      CHECK(std::abs(tr.g[i]) < 1e-9);
    }
    CHECK(tr.g.front() == 0.0);
  }
}

TEST_CASE("circle rotation lands at the wrapped angle") {
  const ManifoldModel M = manifold_by_name("CircleS1");
  Vec x0(1);
  x0 << 0.0;
  const auto tr = trace_of(M, constant_hamiltonian(2.0), x0);
  Vec want(1);
  want << 2.0;
  CHECK(M.distance(tr.points.back(), M.wrap(want)) < 1e-9);
  CHECK(std::abs(tr.g.back()) < 1e-12);
}

TEST_CASE("self convergence under tolerance tightening") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 1.0, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})");
  Vec x0(3);
  x0 << 0.1, 0.2, 0.25;
  const auto loose = trace_of(M, H, x0, 1e-8, 1);
  const auto tight = trace_of(M, H, x0, 1e-11, 1);
  CHECK(M.distance(loose.points.back(), tight.points.back()) < 10.0 * 1e-8);
  CHECK(loose.stats.accepted > 0);
  CHECK(tight.stats.rhs_evals >= loose.stats.rhs_evals);
}

TEST_CASE("starting outside the chart is a config error") {
  const ManifoldModel M = manifold_by_name("HeisenbergChart");
  Vec far = Vec::Constant(3, 1e3);
  CHECK_THROWS_AS(integrate_isotopy(M, constant_hamiltonian(0.1), far, {}), ConfigError);
}

TEST_CASE("reeb flow endpoints match the closed forms") {
  {
    const ManifoldModel M = manifold_by_name("Torus3");
    Rng rng(2);
    Vec x = M.random_point(rng);
    x(2) = 0.0;
    CHECK(M.distance(reeb_flow(M, x, 0.0), x) < 1e-12);
    Vec want = x;
    want(0) += 0.5;
    CHECK(M.distance(reeb_flow(M, x, 0.5), M.wrap(want)) < 1e-9);
  }
  {
    const ManifoldModel M = manifold_by_name("SphereS3");
    Rng rng(3);
    const Vec x = M.random_point(rng);
    CHECK(M.distance(reeb_flow(M, x, kTwoPi), x) < 1e-8);
    CHECK(M.distance(reeb_flow(M, x, -kTwoPi), x) < 1e-8);
  }
}

TEST_CASE("monodromy of trivial flows is the identity") {
  const ManifoldModel M = manifold_by_name("Torus3");
  Rng rng(9);
  const Vec x0 = M.random_point(rng);
  const auto mono = monodromy(M, constant_hamiltonian(0.0), x0);
  CHECK((mono.dpsi - Mat::Identity(3, 3)).norm() < 1e-9);
  CHECK(mono.dg.norm() < 1e-9);

  const ManifoldModel S1 = manifold_by_name("CircleS1");
  const auto m1 = monodromy(S1, constant_hamiltonian(0.7), S1.random_point(rng));
  CHECK(std::abs(m1.dpsi(0, 0) - 1.0) < 1e-9);
}

TEST_CASE("monodromy matches finite differences of the time one map") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 1.0, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})");
  Rng rng(31);
  const Vec x0 = M.random_point(rng);
  const auto mono = monodromy(M, H, x0);

  ContactMap psi(M, H);
  const double h = 1e-6;
  Mat fd(3, 3);
  RowVec fd_g(3);
  for (int j = 0; j < 3; ++j) {
    Vec xp = x0, xm = x0;
    xp(j) += h;
    xm(j) -= h;
    const auto ip = psi.forward(xp);
    const auto im = psi.forward(xm);
    fd.col(j) = M.chart_diff(im.x, ip.x) / (2.0 * h);
    fd_g(j) = (ip.g - im.g) / (2.0 * h);
  }
  CHECK((mono.dpsi - fd).norm() < 1e-5);
  CHECK((mono.dg - fd_g).norm() < 1e-5);
}

TEST_CASE("pullback along traces reproduces the transported exponent") {
  const ManifoldModel M = manifold_by_name("Torus3");
  Rng rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    const TimeHamiltonian H = tl::random_ham(M, rng);
    const Vec x0 = M.random_point(rng);
    IntegrateOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    o.grid_segments = 8;
    o.variational = true;
    const auto tr = integrate_isotopy(M, H, x0, o);
    const Vec a0 = M.alpha(x0);
    for (size_t i = 0; i < tr.times.size(); ++i) {
      const Mat dpsi = tr.extended[i].topLeftCorner(3, 3);
      const Vec ai = M.alpha(tr.points[i]);
      for (int k = 0; k < 3; ++k) {
        Vec v = Vec::Zero(3);
        v(k) = 1.0;
        const double pullback = ai.dot(dpsi * v);
        const double predicted = std::exp(tr.g[i]) * a0.dot(v);
        CHECK(std::abs(pullback - predicted) < 1e-6);
      }
    }
  }
}

TEST_CASE("strict generators keep the exponent at zero") {
  const ManifoldModel M = manifold_by_name("Torus3");
  Rng rng(17);
  const TimeHamiltonian H = tl::random_strict_torus_ham(M, rng);
  for (int i = 0; i < 5; ++i) {
    const auto tr = trace_of(M, H, M.random_point(rng));
    for (double g : tr.g) CHECK(std::abs(g) < 1e-9);
  }
}

TEST_CASE("autonomous flows compose over half intervals") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.8, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]},
      {"coeff": 0.3, "factors": [{"kind": "cos", "coord": 0, "freq": 1}]}]})");
  Rng rng(23);
  const Vec x0 = M.random_point(rng);

  IntegrateOptions half;
  half.rtol = 1e-10;
  half.atol = 1e-12;
  half.grid_segments = 1;
  half.t1 = 0.5;
  const auto first = integrate_isotopy(M, H, x0, half);
  const auto second = integrate_isotopy(M, H, first.points.back(), half);

  IntegrateOptions full = half;
  full.t1 = 1.0;
  const auto whole = integrate_isotopy(M, H, x0, full);
  CHECK(M.distance(whole.points.back(), second.points.back()) < 1e-6);
  CHECK(std::abs(whole.g.back() - (first.g.back() + second.g.back())) < 1e-6);
}

TEST_CASE("volume distortion of the monodromy tracks the conformal exponent") {
  const ManifoldModel M = manifold_by_name("Torus3");
  Rng rng(29);
  // strict case: determinant equals the density ratio exactly
  const TimeHamiltonian Hs = tl::random_strict_torus_ham(M, rng);
  // nonstrict case: the exponent enters squared (n = 1 here)
  const TimeHamiltonian Hn = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.5, "factors": [{"kind": "cos", "coord": 0, "freq": 1}]}]})");
  for (const TimeHamiltonian* H : {&Hs, &Hn}) {
    for (int i = 0; i < 3; ++i) {
      const Vec x0 = M.random_point(rng);
      const auto mono = monodromy(M, *H, x0);
      ContactMap psi(M, *H);
      const auto im = psi.forward(x0);
      const double det = mono.dpsi.determinant();
      const double predicted =
          std::exp(2.0 * im.g) * M.volume_density(x0) / M.volume_density(im.x);
      CHECK(std::abs(det - predicted) < 1e-5);
    }
  }
}

TEST_CASE("constraint residual stays small along sphere traces") {
  const ManifoldModel M = manifold_by_name("SphereS3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.3, "factors": [{"kind": "poly", "coord": 0, "coeffs": [0, 0, 1]}]},
      {"coeff": 0.05, "factors": [{"kind": "poly", "coord": 2, "coeffs": [0, 1]}]}]})");
  Rng rng(37);
  const auto tr = trace_of(M, H, M.random_point(rng), 1e-10, 32);
  for (const Vec& p : tr.points) CHECK(std::abs(p.norm() - 1.0) < 1e-8);
}

TEST_CASE("inverse maps undo the forward flow and report the forward exponent") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.4, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]},
      {"coeff": 0.3, "time_poly": [1.0, 0.5],
       "factors": [{"kind": "cos", "coord": 0, "freq": 1}]}]})");
  ContactMap psi(M, H);
  Rng rng(43);
  for (int i = 0; i < 5; ++i) {
    const Vec x = M.random_point(rng);
    const double t = rng.uniform(0.1, 1.0);
    const auto fw = psi.forward_at(t, x);
    const auto iv = psi.inverse_at(t, fw.x);
    CHECK(M.distance(iv.x, x) < 1e-8);
    CHECK(std::abs(iv.g - fw.g) < 1e-8);

    const auto ivv = psi.inverse_var_at(t, fw.x);
    CHECK(std::abs(ivv.g - fw.g) < 1e-8);
    // dx of the inverse is the inverse of dx of the forward map
    const auto fwv = psi.forward_var_at(t, x);
    CHECK((ivv.dx * fwv.dx - Mat::Identity(3, 3)).norm() < 1e-6);
  }
}

TEST_CASE("inverse variational gradient matches finite differences") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.4, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]},
      {"coeff": 0.3, "factors": [{"kind": "cos", "coord": 0, "freq": 1}]}]})");
  ContactMap psi(M, H);
  Rng rng(47);
  const Vec y = M.random_point(rng);
  const auto iv = psi.inverse_var_at(0.8, y);
  const RowVec fd = tl::fd_gradient(
                        [&](const Vec& q) { return psi.inverse_at(0.8, q).g; }, y)
                        .transpose();
  CHECK((iv.dg - fd).norm() < 1e-5);
}

}  // TEST_SUITE
