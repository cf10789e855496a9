#include <doctest.h>

#include "transgeo/boolean_model.hpp"

using namespace transgeo;

namespace {

Polytope<2> unit_square() { return polytope_from_box<2>({Vec<2>::Zero(), Vec<2>::Ones()}); }
Polytope<3> unit_cube() { return polytope_from_box<3>({Vec<3>::Zero(), Vec<3>::Ones()}); }

}  // namespace

TEST_CASE("model construction recenters shapes and normalizes weights") {
  auto model = make_boolean_model<2>({unit_square()}, {2.5}, 0.3);
  CHECK(model.shapes.size() == 1);
  CHECK(model.shapes[0].weight == doctest::Approx(1.0));
  CHECK(model.shapes[0].radius == doctest::Approx(std::sqrt(0.5)));
  // recentered: the smallest ball around the shape sits at the origin
  const Box<2> bb = bounding_box(model.shapes[0].part());
  CHECK(bb.lo[0] == doctest::Approx(-0.5));
  CHECK(bb.hi[0] == doctest::Approx(0.5));

  auto two = make_boolean_model<2>({unit_square(), unit_square()}, {1.0, 3.0}, 0.1);
  CHECK(two.shapes[0].weight == doctest::Approx(0.25));
  CHECK(two.shapes[1].weight == doctest::Approx(0.75));

  CHECK_THROWS_AS(make_boolean_model<2>(std::vector<Polytope<2>>{}, {}, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_boolean_model<2>({unit_square()}, {0.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_boolean_model<2>({unit_square()}, {1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("grain sampling is reproducible and respects the window") {
  auto model = make_boolean_model<2>({unit_square()}, {1.0}, 0.3, RotationMode::Isotropic);
  const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(10.0)};
  Rng a(42), b(42);
  const auto ga = sample_grains<2>(model, window, a);
  const auto gb = sample_grains<2>(model, window, b);
  REQUIRE(ga.parts.size() == gb.parts.size());
  CHECK(ga.germs == gb.germs);
  for (std::size_t i = 0; i < ga.parts.size(); ++i)
    CHECK((ga.parts[i].V - gb.parts[i].V).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& g : ga.parts) CHECK(!disjoint_from_box(g, window));

  Rng c(43);
  auto zero = make_boolean_model<2>({unit_square()}, {1.0}, 0.0);
  CHECK(sample_grains<2>(zero, window, c).germs == 0);
}

TEST_CASE("expected number of hitting grains matches the dilated window volume") {
  // fixed rotations: gamma * (50 + 1)^2 exactly
  {
    auto model = make_boolean_model<2>({unit_square()}, {1.0}, 0.3, RotationMode::Fixed);
    const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(50.0)};
    const double expetc = 0.3 * 51.0 * 51.0;
    Accumulator acc;
    for (int rep = 0; rep < 12; ++rep) {
      Rng rng(7, rep + 1);
      acc.add(static_cast<double>(sample_grains<2>(model, window, rng).germs));
    }
    const auto est = acc.estimate();
    CHECK(std::abs(est.z_score(expetc)) < 4.5);
  }
  // isotropic rotations: gamma * E[(50 + w)^2] with w the rotated width,
  // computed here by an independent rotation average
  {
    auto model = make_boolean_model<2>({unit_square()}, {1.0}, 0.3, RotationMode::Isotropic);
    const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(50.0)};
    Rng rot(12345);
    double mean_area = 0.0;
    const int rs = 200000;
    for (int i = 0; i < rs; ++i) {
      const double t = rot.uniform(0.0, 3.14159265358979323846);
      const double w = std::abs(std::cos(t)) + std::abs(std::sin(t));
      mean_area += (50.0 + w) * (50.0 + w);
    }
    mean_area /= rs;
    const double expect = 0.3 * mean_area;  // about 788.7 grains per replication
    Accumulator acc;
    for (int rep = 0; rep < 12; ++rep) {
      Rng rng(8, rep + 1);
      acc.add(static_cast<double>(sample_grains<2>(model, window, rng).germs));
    }
    CHECK(std::abs(acc.estimate().z_score(expect)) < 4.5);
  }
  // cubes in space, isotropic: gamma * E[prod_a (12 + w_a)]
  {
    auto model = make_boolean_model<3>({unit_cube()}, {1.0}, 0.2, RotationMode::Isotropic);
    const Box<3> window{Vec<3>::Zero(), Vec<3>::Constant(12.0)};
    Rng rot(999);
    double mean_vol = 0.0;
    const int rs = 50000;
    for (int i = 0; i < rs; ++i) {
      const Mat<3> r = random_rotation<3>(rot);
      double prod = 1.0;
      for (int a = 0; a < 3; ++a) prod *= 12.0 + r.row(a).cwiseAbs().sum();
      mean_vol += prod;
    }
    mean_vol /= rs;
    const double expect = 0.2 * mean_vol;  // about 486 grains per replication
    Accumulator acc;
    for (int rep = 0; rep < 6; ++rep) {
      Rng rng(9, rep + 1);
      acc.add(static_cast<double>(sample_grains<3>(model, window, rng).germs));
    }
    CHECK(std::abs(acc.estimate().z_score(expect)) < 4.5);
  }
}

TEST_CASE("particle densities are estimated without bias") {
  auto model = make_boolean_model<2>({unit_square()}, {1.0}, 0.2, RotationMode::Fixed);
  const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(8.0)};
  const auto fam = FunctionFamily<2>::ones();
  const auto sim = simulate_densities<2>(model, fam, window, 60, 2025);
  CHECK(sim.grains_per_replication.replications == 60);
  CHECK(std::abs(sim.x_density[0].z_score(analytic_density_x<2>(model, fam, 0))) < 4.0);
  CHECK(std::abs(sim.x_density[1].z_score(analytic_density_x<2>(model, fam, 1))) < 4.0);
  CHECK(std::abs(sim.x_density[2].z_score(analytic_density_x<2>(model, fam, 2))) < 4.0);
  CHECK(analytic_density_x<2>(model, fam, 0) == doctest::Approx(0.8));
  CHECK(analytic_density_x<2>(model, fam, 1) == doctest::Approx(0.8));
  CHECK(analytic_density_x<2>(model, fam, 2) == doctest::Approx(0.2));

  CHECK_THROWS_AS(simulate_densities<2>(model, fam, window, 1, 1), std::invalid_argument);
  const Box<2> tiny{Vec<2>::Zero(), Vec<2>::Constant(1.2)};
  CHECK_THROWS_AS(simulate_densities<2>(model, fam, tiny, 10, 1), std::invalid_argument);
}

TEST_CASE("union densities in the plane, fixed rotations: formula and simulation") {
  const double gamma = 0.2;
  auto model = make_boolean_model<2>({unit_square()}, {1.0}, gamma, RotationMode::Fixed);
  const auto fam = FunctionFamily<2>::ones();

  // closed forms: the axis-aligned mixed term phi_(1,1)(S,S) = 8
  const double ev = std::exp(-gamma);
  CHECK(analytic_density_z<2>(model, fam, 2) == doctest::Approx(1.0 - ev).epsilon(1e-12));
  CHECK(analytic_density_z<2>(model, fam, 1) == doctest::Approx(ev * 0.8).epsilon(1e-12));
  CHECK(analytic_density_z<2>(model, fam, 0) ==
        doctest::Approx(ev * (0.8 - 0.5 * gamma * gamma * 8.0)).epsilon(1e-12));

  const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(10.0)};
  const auto sim = simulate_densities<2>(model, fam, window, 80, 555);
  for (int j = 0; j <= 2; ++j)
    CHECK(std::abs(sim.z_density[j].z_score(analytic_density_z<2>(model, fam, j))) < 4.0);
}

TEST_CASE("isotropic union densities reproduce the classical rotation means") {
  const double gamma = 0.3;
  auto model = make_boolean_model<2>({unit_square()}, {1.0}, gamma, RotationMode::Isotropic);
  const auto fam = FunctionFamily<2>::ones();
  const double ev = std::exp(-gamma);
  const double lbar = gamma * 4.0, n0bar = gamma * 4.0;

  CHECK(analytic_density_z<2>(model, fam, 2) == doctest::Approx(1.0 - ev).epsilon(1e-12));
  CHECK(analytic_density_z<2>(model, fam, 1) == doctest::Approx(ev * lbar).epsilon(1e-12));
  // vertex density: e^{-A}(N0 - L^2/pi); the formula path averages rotations
  // by Monte Carlo, so allow its small sampling error
  const double target = ev * (n0bar - lbar * lbar / M_PI);
  CHECK(std::abs(analytic_density_z<2>(model, fam, 0, 200000, 31) - target) < 0.005);
  CHECK(target == doctest::Approx(0.549356).epsilon(1e-4));

  // segment crossing mean 2/pi enters through the mixed density
  const double mixed = mixed_density<2>(model, fam, 0, {1, 1}, 200000, 77);
  CHECK(std::abs(mixed - gamma * gamma * (2.0 / M_PI) * 16.0) < 0.01);
}

TEST_CASE("union densities in space, isotropic cubes") {
  const double gamma = 0.2;
  auto model = make_boolean_model<3>({unit_cube()}, {1.0}, gamma, RotationMode::Isotropic);
  const auto fam = FunctionFamily<3>::ones();
  const double ev = std::exp(-gamma);
  const double sbar = gamma * 6.0, l1bar = gamma * 12.0, n0bar = gamma * 8.0;

  CHECK(analytic_density_z<3>(model, fam, 3) == doctest::Approx(1.0 - ev).epsilon(1e-12));
  CHECK(analytic_density_z<3>(model, fam, 2) == doctest::Approx(ev * sbar).epsilon(1e-12));

  // two facet planes cross with mean |sin| = pi/4: L1_Z = e^{-V}(L1 - pi/8 S^2)
  const double l1_target = ev * (l1bar - (M_PI / 8.0) * sbar * sbar);
  CHECK(std::abs(analytic_density_z<3>(model, fam, 1, 4000, 5) - l1_target) < 0.02);

  // edge-facet mean 1/2 and facet-triple mean pi/8:
  // N0_Z = e^{-V}(N0 - 1/2 L1 S + pi/48 S^3)
  const double n0_target =
      ev * (n0bar - 0.5 * l1bar * sbar + (M_PI / 48.0) * sbar * sbar * sbar);
  CHECK(std::abs(analytic_density_z<3>(model, fam, 0, 4000, 6) - n0_target) < 0.02);
}

TEST_CASE("simulated union densities in space agree with the formulas") {
  const double gamma = 0.15;
  auto model = make_boolean_model<3>({unit_cube()}, {1.0}, gamma, RotationMode::Isotropic);
  const auto fam = FunctionFamily<3>::ones();
  const Box<3> window{Vec<3>::Zero(), Vec<3>::Constant(6.0)};
  const auto sim = simulate_densities<3>(model, fam, window, 30, 808);
  for (int j = 0; j <= 3; ++j) {
    const double target = analytic_density_z<3>(model, fam, j, 20000, 11);
    CHECK(std::abs(sim.z_density[j].z_score(target)) < 4.0);
    CHECK(std::abs(sim.x_density[j].z_score(analytic_density_x<3>(model, fam, j))) < 4.0);
  }
}

TEST_CASE("intersection process densities") {
  auto model = make_boolean_model<2>({unit_square()}, {1.0}, 0.3, RotationMode::Fixed);
  const auto fam = FunctionFamily<2>::ones();
  // volume degree: gamma^2/2 * V^2 = 0.045, and rotations cannot change it
  CHECK(intersection_density<2>(model, fam, 2, 2) == doctest::Approx(0.045).epsilon(1e-12));
  auto iso = make_boolean_model<2>({unit_square()}, {1.0}, 0.3, RotationMode::Isotropic);
  CHECK(intersection_density<2>(iso, fam, 2, 2, 500, 3) == doctest::Approx(0.045).epsilon(1e-9));
  // k = 3 volume: gamma^3/3! * V^3
  CHECK(intersection_density<2>(model, fam, 2, 3) ==
        doctest::Approx(0.027 / 6.0).epsilon(1e-12));
  // degree 1, fixed squares: gamma^2/2 * translative sum 8
  CHECK(intersection_density<2>(model, fam, 1, 2) == doctest::Approx(0.36).epsilon(1e-12));
  CHECK_THROWS_AS(intersection_density<2>(model, fam, 0, 1), std::invalid_argument);
}

TEST_CASE("touching grains get jittered into general position") {
  std::vector<Polytope<2>> grains{polytope_from_box<2>({Vec<2>(0, 0), Vec<2>(1, 1)}),
                                  polytope_from_box<2>({Vec<2>(1, 0), Vec<2>(2, 1)})};
  Rng rng(606);
  auto cu = boolean_union<2>(grains, rng);
  CHECK(cu.cert.ok);
  CHECK(cu.jitter_rounds >= 1);

  Rng rng2(607);
  CHECK_THROWS_AS(boolean_union<2>(grains, rng2, 1e-6, 0), std::runtime_error);
}

TEST_CASE("models with two-part union shapes") {
  // blocky L: horizontal bar crossed by a vertical bar, overlap transversal
  const auto bar_h = polytope_from_box<2>({Vec<2>(0.0, 0.0), Vec<2>(2.0, 1.0)});
  const auto bar_v = polytope_from_box<2>({Vec<2>(0.1, 0.4), Vec<2>(1.1, 2.1)});
  // collinear shared edges are rejected outright
  const auto bad = polytope_from_box<2>({Vec<2>(0.0, 0.0), Vec<2>(1.0, 2.0)});
  CHECK_THROWS_AS(
      (make_boolean_model<2>(std::vector<std::vector<Polytope<2>>>{{bar_h, bad}}, {1.0}, 0.2)),
      std::invalid_argument);

  const double gamma = 0.2;
  auto model = make_boolean_model<2>(std::vector<std::vector<Polytope<2>>>{{bar_h, bar_v}},
                                     {1.0}, gamma, RotationMode::Fixed);
  REQUIRE(model.shapes.size() == 1);
  CHECK(model.shapes[0].u.grains.size() == 2);
  CHECK(model.shapes[0].u.masks.size() == 3);

  // inclusion-exclusion oracles: area 2 + 1.7 - 0.6, perimeter 6 + 5.4 - 3.2,
  // vertices 4 + 4 - 4
  CHECK(model.shapes[0].volume_ie() == doctest::Approx(3.1).epsilon(1e-12));
  const auto fam = FunctionFamily<2>::ones();
  CHECK(analytic_density_x<2>(model, fam, 2) == doctest::Approx(gamma * 3.1).epsilon(1e-12));
  CHECK(analytic_density_x<2>(model, fam, 1) == doctest::Approx(gamma * 8.2).epsilon(1e-12));
  CHECK(analytic_density_x<2>(model, fam, 0) == doctest::Approx(gamma * 4.0).epsilon(1e-12));

  // crossing mixed term expanded over signed masks: for axis-aligned boxes
  // phi_(1,1) = 4(w h' + h w'), summed with sign products over the nine pairs
  auto cross = [](double w, double h, double w2, double h2) {
    return 4.0 * (w * h2 + h * w2);
  };
  const double expanded = cross(2, 1, 2, 1) + cross(1, 1.7, 1, 1.7) + cross(1, 0.6, 1, 0.6) +
                          2 * cross(2, 1, 1, 1.7) - 2 * cross(2, 1, 1, 0.6) -
                          2 * cross(1, 1.7, 1, 0.6);
  CHECK(mixed_density<2>(model, fam, 0, {1, 1}) ==
        doctest::Approx(gamma * gamma * expanded).epsilon(1e-12));

  const double ev = std::exp(-gamma * 3.1);
  CHECK(analytic_density_z<2>(model, fam, 2) == doctest::Approx(1.0 - ev).epsilon(1e-12));
  CHECK(analytic_density_z<2>(model, fam, 1) == doctest::Approx(ev * gamma * 8.2).epsilon(1e-12));
  CHECK(analytic_density_z<2>(model, fam, 0) ==
        doctest::Approx(ev * (gamma * 4.0 - 0.5 * gamma * gamma * expanded)).epsilon(1e-12));

  // the degree-(d-1) union density needs no rotation average even isotropically
  auto iso = make_boolean_model<2>(std::vector<std::vector<Polytope<2>>>{{bar_h, bar_v}},
                                   {1.0}, gamma, RotationMode::Isotropic);
  CHECK(analytic_density_z<2>(iso, fam, 1) == doctest::Approx(ev * gamma * 8.2).epsilon(1e-12));

  // simulation against the analytic values: germs move rigidly, the union
  // pools every part
  const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(12.0)};
  const auto sim = simulate_densities<2>(model, fam, window, 50, 4242);
  for (int j = 0; j <= 2; ++j) {
    CHECK(std::abs(sim.x_density[j].z_score(analytic_density_x<2>(model, fam, j))) < 4.0);
    CHECK(std::abs(sim.z_density[j].z_score(analytic_density_z<2>(model, fam, j))) < 4.0);
  }
}

TEST_CASE("simulation reports carry analytic columns") {
  auto model = make_boolean_model<2>({unit_square()}, {1.0}, 0.15, RotationMode::Fixed);
  const Box<2> window{Vec<2>::Zero(), Vec<2>::Constant(8.0)};
  const auto rep = density_report<2>(model, FunctionFamily<2>::ones(), window, 20, 99);
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.rows[0].name == "X_0");
  CHECK(rep.rows[5].name == "Z_2");
  CHECK(rep.rows[0].analytic == doctest::Approx(0.6));
  for (const auto& row : rep.rows) CHECK(std::abs(row.est.z_score(row.analytic)) < 5.0);

  const auto skel = skeleton_density_report<2>(model, window, 20, 99);
  REQUIRE(skel.rows.size() == 3);
  CHECK(skel.rows[0].name == "A_Z");
  CHECK(skel.rows[1].name == "L_Z");
  CHECK(skel.rows[2].name == "N0_Z");
  CHECK(skel.rows[0].analytic == doctest::Approx(1.0 - std::exp(-0.15)));

  // identical seeds reproduce identical estimates
  const auto again = density_report<2>(model, FunctionFamily<2>::ones(), window, 20, 99);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].est.mean == again.rows[i].est.mean);
    CHECK(rep.rows[i].est.se == again.rows[i].est.se);
  }
}
