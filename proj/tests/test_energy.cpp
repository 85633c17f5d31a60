#include "helpers.hpp"

using namespace contactlab;

namespace {

EnergyGrid small_grid() {
  EnergyGrid g;
  g.time_nodes = 33;
  g.space_per_dim = 12;
  g.refine_iters = 5;
  return g;
}

const char* kSinZ = R"({"terms": [
    {"coeff": 1.0, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})";
const char* kTwoPlusSinZ = R"({"terms": [
    {"coeff": 2.0},
    {"coeff": 1.0, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})";

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("simpson rule integrates cubics exactly") {
  std::vector<double> v;
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    v.push_back(t * t * t);
  }
  CHECK(std::abs(simpson_integrate(v, 0.0, 1.0) - 0.25) < 1e-15);
}

TEST_CASE("sup norm energies of pinned paths") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  CHECK(std::abs(linf_energy(M, constant_hamiltonian(0.5), g) - 0.5) < 1e-12);

  // H(t, x) = t has no spatial dependence; the time integral is exact.
  const TimeHamiltonian ramp = tl::table_ham(M, R"({"terms": [
      {"coeff": 1.0, "time_poly": [0.0, 1.0]}]})");
  CHECK(std::abs(linf_energy(M, ramp, g) - 0.5) < 1e-12);

  // The 12-per-axis net hits the extrema of sin exactly at z = 1/4, 3/4.
  const TimeHamiltonian sz = tl::table_ham(M, kSinZ);
  CHECK(std::abs(linf_energy(M, sz, g) - 1.0) < 1e-9);
  CHECK(std::abs(osc_energy(M, sz, g) - 2.0) < 1e-9);
  CHECK(std::abs(osc_energy(M, constant_hamiltonian(-3.0), g)) < 1e-12);
  CHECK(std::abs(osc_energy(M, tl::table_ham(M, kTwoPlusSinZ), g) - 2.0) < 1e-9);
}

TEST_CASE("energy table rows carry consistent extrema") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  Rng rng(101);
  const TimeHamiltonian H = tl::random_ham(M, rng);
  const EnergyTable table = compute_energy_table(M, H, g);
  REQUIRE(table.rows.size() == 33);
  CHECK(std::abs(table.volume - kTwoPi) < 1e-5);
  for (const auto& r : table.rows) {
    CHECK(r.max >= r.min);
    CHECK(r.osc == r.max - r.min);
    CHECK(r.bstar == 0.5 * (r.max + r.min));
    CHECK(r.absmax == std::max(std::abs(r.max), std::abs(r.min)));
    CHECK(r.mean <= r.max + 1e-12);
    CHECK(r.mean >= r.min - 1e-12);
  }
}

TEST_CASE("per node sandwich between absolute max and oscillation plus mean") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  Rng rng(113);
  for (int rep = 0; rep < 4; ++rep) {
    const EnergyTable table = compute_energy_table(M, tl::random_ham(M, rng), g);
    for (const auto& r : table.rows) {
      CHECK(r.absmax <= r.osc + std::abs(r.mean) + 1e-6);
      CHECK(r.osc + std::abs(r.mean) <= 3.0 * r.absmax + 1e-6);
    }
  }
}

TEST_CASE("oscillation energy never exceeds twice the sup energy") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  Rng rng(127);
  for (int rep = 0; rep < 4; ++rep) {
    const TimeHamiltonian H = tl::random_ham(M, rng);
    CHECK(osc_energy(M, H, g) <= 2.0 * linf_energy(M, H, g) + 1e-9);
  }
}

TEST_CASE("reeb shift removes the midrange") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  {
    const auto rs = reeb_shift_optimum(M, constant_hamiltonian(0.7), g);
    for (double b : rs.bstar) CHECK(std::abs(b - 0.7) < 1e-12);
    CHECK(std::abs(rs.shifted_energy) < 1e-12);
  }
  {
    const auto rs = reeb_shift_optimum(M, tl::table_ham(M, kTwoPlusSinZ), g);
    for (double b : rs.bstar) CHECK(std::abs(b - 2.0) < 1e-9);
    CHECK(std::abs(rs.shifted_energy - 1.0) < 1e-9);
    CHECK(std::abs(rs.bstar_fn(0.37) - 2.0) < 1e-9);
  }
  {
    // The optimum per node is the midpoint of the range, by the table rows.
    Rng rng(131);
    const TimeHamiltonian H = tl::random_ham(M, rng);
    const auto rs = reeb_shift_optimum(M, H, g);
    const EnergyTable table = compute_energy_table(M, H, g);
    REQUIRE(rs.bstar.size() == table.rows.size());
    for (size_t i = 0; i < rs.bstar.size(); ++i)
      CHECK(rs.bstar[i] == table.rows[i].bstar);
    // Half the oscillation is what remains after the shift.
    CHECK(std::abs(rs.shifted_energy - 0.5 * osc_energy(M, H, g)) < 1e-9);
  }
}

TEST_CASE("reversal preserves the energy and undoes the flow") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  const TimeHamiltonian H = tl::table_ham(M, R"({"terms": [
      {"coeff": 1.0, "time_poly": [0.0, 1.0],
       "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}]})");
  CHECK(std::abs(linf_energy(M, invert(H), g) - linf_energy(M, H, g)) < 1e-9);

  // The reversed path run from the forward endpoint lands on the start.
  const TimeHamiltonian Hn = tl::table_ham(M, R"({"terms": [
      {"coeff": 0.4, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]},
      {"coeff": 0.3, "factors": [{"kind": "cos", "coord": 0, "freq": 1}]}]})");
  Rng rng(137);
  const Vec x0 = M.random_point(rng);
  const auto fwd = integrate_isotopy(M, Hn, x0, {});
  const auto back = integrate_isotopy(M, invert(Hn), fwd.points.back(), {});
  CHECK(M.distance(back.points.back(), x0) < 1e-8);

  const ManifoldModel S1 = manifold_by_name("CircleS1");
  Vec th(1);
  th << 0.2;
  const auto b1 = integrate_isotopy(S1, invert(constant_hamiltonian(0.3)), th, {});
  Vec want(1);
  want << -0.1;
  CHECK(S1.distance(b1.points.back(), S1.wrap(want)) < 1e-9);
}

TEST_CASE("reparametrization pairs are validated") {
  ReparamPair rp = default_reparams();
  rp.validate();
  rp.tau1 = [](double t) { return t; };  // active on the wrong half
  rp.dtau1 = [](double) { return 1.0; };
  CHECK_THROWS_AS(rp.validate(), ConfigError);
  rp = default_reparams();
  rp.tau2 = {};
  CHECK_THROWS_AS(rp.validate(), ConfigError);
}

TEST_CASE("concatenation adds energies and composes endpoints") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const ReparamPair rp = default_reparams();
  EnergyGrid fine = small_grid();
  fine.time_nodes = 129;

  const TimeHamiltonian zero = constant_hamiltonian(0.0);
  CHECK(linf_energy(M, concat(zero, zero, rp), fine) < 1e-12);

  const TimeHamiltonian C = concat(constant_hamiltonian(1.0), constant_hamiltonian(2.0), rp);
  CHECK(std::abs(linf_energy(M, C, fine) - 3.0) < 1e-6);

  const ManifoldModel S1 = manifold_by_name("CircleS1");
  Vec th(1);
  th << 0.0;
  const auto tr = integrate_isotopy(
      S1, concat(constant_hamiltonian(0.3), constant_hamiltonian(0.4), rp), th, {});
  Vec want(1);
  want << 0.7;
  CHECK(S1.distance(tr.points.back(), S1.wrap(want)) < 1e-8);
}

TEST_CASE("conjugating by the identity returns the same values") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const TimeHamiltonian H = tl::table_ham(M, kTwoPlusSinZ);
  auto id = std::make_shared<ContactMap>(M, constant_hamiltonian(0.0));
  const TimeHamiltonian C = conjugate(M, H, id);
  Rng rng(139);
  for (int i = 0; i < 10; ++i) {
    const Vec x = M.random_point(rng);
    const double t = rng.uniform();
    CHECK(std::abs(C(t, x) - H(t, x)) < 1e-8);
  }
}

TEST_CASE("conjugation by a strict map preserves the sup energy") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  // The conjugator flow keeps the z coordinate fixed, so a z profile is
  // carried to itself and the net sees the same level sets.
  Rng rng(149);
  const TimeHamiltonian Hc = tl::random_strict_torus_ham(M, rng);
  auto psi = std::make_shared<ContactMap>(M, Hc);
  const TimeHamiltonian H = tl::table_ham(M, kSinZ);
  const double e0 = linf_energy(M, H, g);
  const double e1 = linf_energy(M, conjugate(M, H, psi), g);
  CHECK(std::abs(e1 - e0) < 1e-6);
}

TEST_CASE("conjugated path energy equals the rescaled form energy") {
  const ManifoldModel M = manifold_by_name("Torus3");
  EnergyGrid g = small_grid();
  Rng rng(151);
  const TimeHamiltonian Hpath = tl::random_ham(M, rng);
  const TimeHamiltonian Hc = tl::random_ham(M, rng);
  auto psi = std::make_shared<ContactMap>(M, Hc, 1e-10, 1e-12);

  // Evaluate the conjugated path on the pushforward of the standard net so
  // both extremum searches scan corresponding points; ascent refinement stays
  // off on both sides for the same reason.
  g.sampler = std::make_shared<const SpatialSample>(build_grid_sampler(M, g.space_per_dim));
  EnergyGrid pushed = g;
  pushed.refine_iters = 0;
  {
    SpatialSample net = *g.sampler;
    const TrajectoryFan fan = integrate_fan(M, Hc, net.points, 1);
    for (size_t k = 0; k < net.points.size(); ++k) net.points[k] = fan.points[k].back();
    pushed.sampler = std::make_shared<const SpatialSample>(std::move(net));
  }
  EnergyGrid flat = g;
  flat.refine_iters = 0;

  const double e_conj = linf_energy(M, conjugate(M, Hpath, psi), pushed);
  auto factor = [psi](const Vec& x) { return std::exp(psi->forward(x).g); };
  const RescaleEnergies re = rescale_form_energy(M, factor, Hpath, flat);
  CHECK(std::abs(e_conj - re.scaled) < 1e-5);
}

TEST_CASE("rescaled form energies obey the pinching bounds") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  const TimeHamiltonian H = tl::table_ham(M, kSinZ);
  {
    const auto re = rescale_form_energy(M, [](const Vec&) { return 2.0; }, H, g);
    CHECK(std::abs(re.scaled - 2.0 * re.base) < 1e-12);
    CHECK(re.fmin == 2.0);
    CHECK(re.fmax == 2.0);
    CHECK(re.sandwich_ok);
  }
  {
    const auto re = rescale_form_energy(M, [](const Vec&) { return 1.0; }, H, g);
    CHECK(std::abs(re.scaled - re.base) < 1e-12);
    CHECK(re.sandwich_ok);
  }
  {
    auto f = [](const Vec& x) { return 2.0 + std::cos(kTwoPi * x(2)); };
    const auto re = rescale_form_energy(M, f, constant_hamiltonian(1.0), g);
    CHECK(std::abs(re.base - 1.0) < 1e-12);
    CHECK(std::abs(re.scaled - 3.0) < 1e-6);
    CHECK(std::abs(re.fmin - 1.0) < 1e-9);
    CHECK(std::abs(re.fmax - 3.0) < 1e-9);
    CHECK(re.sandwich_ok);
  }
  CHECK_THROWS_AS(
      rescale_form_energy(M, [](const Vec&) { return -1.0; }, H, g), ConfigError);
}

TEST_CASE("integer floor of the energy") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  CHECK(ceiling_lower_bound(M, constant_hamiltonian(2.3), g) == 3);
  CHECK(ceiling_lower_bound(M, constant_hamiltonian(-2.3), g) == 3);
  CHECK(ceiling_lower_bound(M, tl::table_ham(M, kSinZ), g) == 1);
  CHECK(ceiling_lower_bound(M, constant_hamiltonian(0.0), g) == 0);
}

TEST_CASE("averaged invariant of strict paths") {
  const ManifoldModel M = manifold_by_name("Torus3");
  const EnergyGrid g = small_grid();
  for (double kappa : {-2.0, 0.5, 3.0}) {
    const auto cw = calabi_weinstein(M, constant_hamiltonian(kappa), g);
    CHECK(std::abs(cw.value - kappa) < 1e-9);
    CHECK(cw.strict);
  }
  {
    const auto cw = calabi_weinstein(M, tl::table_ham(M, kSinZ), g);
    CHECK(std::abs(cw.value) < 2e-3);
    CHECK(cw.strict);
    CHECK(cw.max_reeb_derivative < 1e-9);
  }
  {
    Rng rng(157);
    for (int rep = 0; rep < 3; ++rep) {
      const TimeHamiltonian H = tl::random_strict_torus_ham(M, rng);
      const auto cw = calabi_weinstein(M, H, g);
      CHECK(cw.strict);
      CHECK(std::abs(cw.value) <= linf_energy(M, H, g) + 1e-6);
    }
  }
  {
    const TimeHamiltonian Hn = tl::table_ham(M, R"({"terms": [
        {"coeff": 0.5, "factors": [{"kind": "cos", "coord": 0, "freq": 1}]}]})");
    CHECK_FALSE(calabi_weinstein(M, Hn, g).strict);
  }
}

}  // TEST_SUITE
