#include <doctest.h>

#include <cmath>

#include "spdope/errors.hpp"
#include "spdope/minimize.hpp"

using namespace spdope;

TEST_CASE("minimize config validation") {
  MinimizeConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau0 = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.grad_tol = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.init = InitKind::file;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_step_control("bb") == StepControl::barzilai_borwein);
  CHECK(parse_init_kind("previous") == InitKind::previous);
  CHECK_THROWS_AS(parse_step_control("newton"), ConfigError);
  CHECK(MinimizeConfig{}.eps_neg() == 10.0 * MinimizeConfig{}.energy_tol);
}

TEST_CASE("smooth random field is seeded") {
  Grid3 g(8.0, 16);
  SpectralWorkspace ws(g, {.padded = false});
  const auto a = smooth_random_field(g, 7, 0.5, 2.0, ws);
  const auto b = smooth_random_field(g, 7, 0.5, 2.0, ws);
  const auto c = smooth_random_field(g, 8, 0.5, 2.0, ws);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  CHECK(!std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST_CASE("resolved minimizer satisfies the identities") {
  // e = 0.3 keeps the self-trapped state several cells wide on this grid.
  Grid3 g(16.0, 32);
  SpectralWorkspace ws(g);
  const PhysParams P = PhysParams::make(2.2, 0.3);
  const auto prof = DopingProfile::gaussian(0.1, 1.0);
  const MinimizerResult r = minimize_at_mass(96.0, prof, P, MinimizeConfig{}, ws);
  CHECK(r.converged);
  CHECK(r.residuals.gradient < MinimizeConfig{}.grad_tol);
  CHECK(std::abs(mass(r.u_min) / 96.0 - 1.0) < 1e-12);
  CHECK(r.c_value() < 0.0);
  CHECK(r.omega > 0.0);
  CHECK(std::abs(r.residuals.nehari.normalized) < 1e-10);
  CHECK(std::abs(r.residuals.pohozaev.normalized) < 5e-3);
  // phase fixed so that the integral of u is real and nonnegative
  cplx s{};
  for (const auto& v : r.u_min.values()) s += v;
  CHECK(std::abs(s.imag()) <= 1e-10 * std::abs(s));
  CHECK(s.real() > 0.0);

  // doping lowers the energy: c <= c_inf, seeded with the doping-free minimizer
  const MinimizerResult inf = c_infinity(96.0, P, MinimizeConfig{}, ws);
  const ComplexField seed[] = {inf.u_min};
  const MinimizerResult c = minimize_at_mass(96.0, prof, P, MinimizeConfig{}, ws, seed);
  CHECK(c.c_value() <= inf.c_value());

  const auto j = r.to_json();
  CHECK(j["mu"] == 96.0);
  CHECK(j.contains("residuals"));
}

TEST_CASE("below threshold the flow does not go negative") {
  Grid3 g(16.0, 16);
  SpectralWorkspace ws(g);
  MinimizeConfig cfg;
  cfg.restarts = 1;
  const MinimizerResult r = c_infinity(40.0, PhysParams::make(2.2, 1.0), cfg, ws);
  CHECK(r.c_value() >= -cfg.eps_neg());
}

TEST_CASE("initializer options") {
  Grid3 g(16.0, 16);
  SpectralWorkspace ws(g);
  MinimizeConfig cfg;
  cfg.init = InitKind::previous;
  CHECK_THROWS_AS(minimize_at_mass(5.0, DopingProfile::zero(), PhysParams{}, cfg, ws), ConfigError);
  cfg = {};
  CHECK_THROWS_AS(minimize_at_mass(-1.0, DopingProfile::zero(), PhysParams{}, cfg, ws), ConfigError);
}

TEST_CASE("warm-started curve") {
  Grid3 g(16.0, 16);
  SpectralWorkspace ws(g);
  MinimizeConfig cfg;
  cfg.restarts = 1;
  const double mus[] = {1.0, 2.0, 3.0};
  const auto prof = DopingProfile::gaussian(0.1, 1.0);
  const CurveTable t = c_curve(mus, prof, PhysParams{}, cfg, ws);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.monotone);
  for (const auto& r : t.rows) CHECK(r.c <= 0.0);
  const std::string csv = t.csv();
  CHECK(csv.rfind("mu,c,omega,nehari,pohozaev,lemma23,grad_res,iters,converged\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const double bad[] = {2.0, 1.0};
  CHECK_THROWS_AS(c_curve(bad, prof, PhysParams{}, cfg, ws), ConfigError);
}

TEST_CASE("mu_star rejects a bracket with both ends negative") {
  Grid3 g(16.0, 32);
  SpectralWorkspace ws(g);
  MinimizeConfig cfg;
  cfg.restarts = 1;
  try {
    mu_star(PhysParams::make(2.2, 0.3), cfg, 95.0, 100.0, 1e-2, ws);
    FAIL("expected BracketError");
  } catch (const BracketError& e) {
    CHECK(e.c_lo() < 0.0);
    CHECK(e.c_hi() < 0.0);
  }
  CHECK_THROWS_AS(mu_star(PhysParams{}, cfg, 2.0, 1.0, 1e-2, ws), ConfigError);
}

TEST_CASE("sub-additivity scan bookkeeping") {
  Grid3 g(16.0, 16);
  SpectralWorkspace ws(g);
  MinimizeConfig cfg;
  cfg.restarts = 1;
  const double bad[] = {0.0};
  CHECK_THROWS_AS(subadditivity_scan(4.0, bad, DopingProfile::zero(), PhysParams{}, cfg, ws), ConfigError);
  const double fr[] = {0.5};
  const SubaddReport rep = subadditivity_scan(4.0, fr, DopingProfile::gaussian(0.1, 1.0), PhysParams{}, cfg, ws);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].margin == doctest::Approx(rep.rows[0].c_part + rep.rows[0].cinf_rest - rep.rows[0].c_total));
  REQUIRE(rep.homogeneity.size() == 3);
  CHECK(rep.homogeneity[2].c_scaled == rep.rows[0].c_total);
  CHECK(rep.to_json()["rows"].size() == 1);
}

TEST_CASE("spectral floor") {
  MinimizeConfig cfg;
  const double boxes[] = {8.0, 12.0};
  const auto zero = spectral_floor(DopingProfile::zero(), 1.0, boxes, 16, cfg);
  for (const auto& r : zero) CHECK(r.floor == 0.0);

  const auto ball = DopingProfile::balls({{{0, 0, 0}, 1.0, 1.0}});
  const auto deep = spectral_floor(ball, 10.0, boxes, 32, cfg);
  for (const auto& r : deep) CHECK(r.floor < -0.01);
  // fixed N, so the coarser grid on the larger box accounts for most of the spread
  CHECK(std::abs(deep[0].floor - deep[1].floor) < 0.1 * std::abs(deep[1].floor));

  const double wide[] = {8.0, 16.0, 32.0};
  const auto shallow = spectral_floor(ball, 0.1, wide, 16, cfg);
  CHECK(std::abs(shallow[1].floor) < std::abs(shallow[0].floor));
  CHECK(std::abs(shallow[2].floor) < std::abs(shallow[1].floor));
}
