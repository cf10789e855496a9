#include <doctest.h>

#include <cmath>
#include <numbers>

#include "transgeo/rng.hpp"
#include "transgeo/spherical.hpp"

using namespace transgeo;
using std::numbers::pi;

namespace {

Polytope<2> unit_square() {
  return build_polytope<2>({Vec<2>(0, 0), Vec<2>(1, 0), Vec<2>(1, 1), Vec<2>(0, 1)});
}

Polytope<3> unit_cube() {
  std::vector<Vec<3>> pts;
  for (int m = 0; m < 8; ++m) pts.emplace_back(m & 1 ? 1 : 0, m & 2 ? 1 : 0, m & 4 ? 1 : 0);
  return build_polytope<3>(pts);
}

/// Closed-form first moment of a region bounded by great-circle arcs: half the
/// sum of arc angles times arc poles, for a ccw boundary cycle with consecutive
/// vertices less than pi apart.
Vec<3> stokes_moment(const std::vector<Vec<3>>& cycle) {
  Vec<3> m = Vec<3>::Zero();
  const int n = static_cast<int>(cycle.size());
  for (int i = 0; i < n; ++i) {
    const Vec<3>&a = cycle[i], &b = cycle[(i + 1) % n];
    const double theta = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
    if (theta < 1e-15) continue;
    m += 0.5 * theta * a.cross(b).normalized();
  }
  return m;
}

Cone<3> pointed_cone(std::vector<Vec<3>> gens) {
  Cone<3> c;
  c.lineality = MatX<3>(3, 0);
  for (auto& g : gens) c.gens.push_back(g.normalized());
  return c;
}

}  // namespace

TEST_CASE("square normal cones and external angles") {
  auto sq = unit_square();
  for (const auto& v : faces(sq, 0)) {
    auto s = sphere_section(normal_cone(v));
    CHECK(s.kind == SectionKind::Arc);
    CHECK(s.angle == doctest::Approx(pi / 2.0));
    CHECK(external_angle(v) == doctest::Approx(0.25));
  }
  for (const auto& e : faces(sq, 1)) {
    auto s = sphere_section(normal_cone(e));
    CHECK(s.kind == SectionKind::Point);
    CHECK(external_angle(e) == doctest::Approx(0.5));
  }
  CHECK(external_angle(faces(sq, 2)[0]) == doctest::Approx(1.0));
}

TEST_CASE("cube normal cones and external angles") {
  auto cube = unit_cube();
  for (const auto& v : faces(cube, 0)) {
    auto s = sphere_section(normal_cone(v));
    CHECK(s.kind == SectionKind::Polygon);
    CHECK(s.verts.size() == 3);
    CHECK(spherical_measure(s) == doctest::Approx(pi / 2.0));
    CHECK(external_angle(v) == doctest::Approx(0.125));
  }
  for (const auto& e : faces(cube, 1)) {
    auto s = sphere_section(normal_cone(e));
    CHECK(s.kind == SectionKind::Arc);
    CHECK(s.angle == doctest::Approx(pi / 2.0));
    CHECK(external_angle(e) == doctest::Approx(0.25));
  }
  for (const auto& f : faces(cube, 2)) {
    CHECK(sphere_section(normal_cone(f)).kind == SectionKind::Point);
    CHECK(external_angle(f) == doctest::Approx(0.5));
  }
}

TEST_CASE("lower-dimensional normal cones") {
  // segment in the plane
  auto seg2 = build_polytope<2>({Vec<2>(0, 0), Vec<2>(2, 1)});
  for (const auto& v : faces(seg2, 0)) {
    auto s = sphere_section(normal_cone(v));
    CHECK(s.kind == SectionKind::Arc);
    CHECK(s.angle == doctest::Approx(pi));
    CHECK(external_angle(v) == doctest::Approx(0.5));
  }
  auto whole2 = sphere_section(normal_cone(faces(seg2, 1)[0]));
  CHECK(whole2.kind == SectionKind::PointPair);
  CHECK(external_angle(faces(seg2, 1)[0]) == doctest::Approx(1.0));

  // segment in space
  auto seg3 = build_polytope<3>({Vec<3>(0, 0, 0), Vec<3>(1, 1, 0)});
  for (const auto& v : faces(seg3, 0)) {
    auto s = sphere_section(normal_cone(v));
    CHECK(s.kind == SectionKind::Hemisphere);
    CHECK(external_angle(v) == doctest::Approx(0.5));
  }
  CHECK(sphere_section(normal_cone(faces(seg3, 1)[0])).kind == SectionKind::GreatCircle);
  CHECK(external_angle(faces(seg3, 1)[0]) == doctest::Approx(1.0));

  // planar triangle in space
  auto tri = build_polytope<3>({Vec<3>(0, 0, 1), Vec<3>(1, 0, 1), Vec<3>(0, 1, 1)});
  double vsum = 0.0;
  for (const auto& v : faces(tri, 0)) {
    auto s = sphere_section(normal_cone(v));
    CHECK(s.kind == SectionKind::Lune);
    vsum += external_angle(v);
  }
  CHECK(vsum == doctest::Approx(1.0));
  for (const auto& e : faces(tri, 1)) {
    auto s = sphere_section(normal_cone(e));
    CHECK(s.kind == SectionKind::Arc);
    CHECK(s.angle == doctest::Approx(pi));
    CHECK(external_angle(e) == doctest::Approx(0.5));
  }
  CHECK(sphere_section(normal_cone(faces(tri, 2)[0])).kind == SectionKind::PointPair);

  // a single point sees the whole sphere
  auto pt = build_polytope<3>({Vec<3>(1, 2, 3)});
  CHECK(sphere_section(normal_cone(faces(pt, 0)[0])).kind == SectionKind::Sphere);
  CHECK(external_angle(faces(pt, 0)[0]) == doctest::Approx(1.0));
}

TEST_CASE("vertex external angles sum to one") {
  Rng rng(19);
  for (int it = 0; it < 15; ++it) {
    std::vector<Vec<2>> p2;
    for (int i = 0; i < 9; ++i) p2.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
    auto poly = build_polytope<2>(p2);
    double s2 = 0.0;
    for (const auto& v : faces(poly, 0)) s2 += external_angle(v);
    CHECK(s2 == doctest::Approx(1.0));

    std::vector<Vec<3>> p3;
    for (int i = 0; i < 10; ++i)
      p3.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    auto body = build_polytope<3>(p3);
    double s3 = 0.0;
    for (const auto& v : faces(body, 0)) s3 += external_angle(v);
    CHECK(s3 == doctest::Approx(1.0));
    // edges: external angles are normalized dihedral deficits; faces: 1/2 each
    double s1 = 0.0;
    for (const auto& e : faces(body, 1)) {
      const double g = external_angle(e);
      CHECK(g > 0.0);
      CHECK(g < 0.5);
      s1 += g;
    }
    CHECK(s1 > 0.0);
  }
}

TEST_CASE("cone sums") {
  auto sq = unit_square();
  // adjacent edge normals combine to a quarter wedge
  Cone<2> e0 = normal_cone(faces(sq, 1)[0]);
  Cone<2> e1 = normal_cone(faces(sq, 1)[1]);
  Cone<2> w = cone_sum<2>({e0, e1});
  auto s = sphere_section(w);
  CHECK(s.kind == SectionKind::Arc);
  CHECK(s.angle == doctest::Approx(pi / 2.0));

  // identical generators merge
  Cone<2> same = cone_sum<2>({e0, e0});
  CHECK(same.gens.size() == 1);
  CHECK(sphere_section(same).kind == SectionKind::Point);

  // opposite edge normals collapse: domain error
  Cone<2> e2 = normal_cone(faces(sq, 1)[2]);
  CHECK(!try_cone_sum<2>({e0, e2}).has_value());
  CHECK_THROWS_AS(cone_sum<2>({e0, e2}), std::domain_error);

  // three directions at 120 degrees positively span the plane
  Cone<2> c120 = pointed_cone({}).gens.empty() ? Cone<2>{} : Cone<2>{};
  c120.lineality = MatX<2>(2, 0);
  for (double a : {0.0, 2.0 * pi / 3.0, 4.0 * pi / 3.0})
    c120.gens.emplace_back(std::cos(a), std::sin(a));
  CHECK(!try_cone_sum<2>({c120}).has_value());

  // opposite vertex cones of the square collapse too
  const auto verts = faces(sq, 0);
  Cone<2> v0 = normal_cone(verts[0]);
  auto v_opp = std::find_if(verts.begin(), verts.end(), [&](const FaceRef<2>& f) {
    return (Vec<2>(f.poly->V.col(f.face().verts[0])) - Vec<2>(1, 1)).norm() < 1e-12;
  });
  REQUIRE(v_opp != verts.end());
  CHECK(!try_cone_sum<2>({v0, normal_cone(*v_opp)}).has_value());

  // generators absorbed into a combined lineality space
  Cone<3> a;
  a.lineality = MatX<3>(Vec<3>(0, 0, 1));
  a.gens = {Vec<3>(1, 0, 0)};
  Cone<3> b;
  b.lineality = MatX<3>(Vec<3>(1, 0, 0));
  Cone<3> ab = cone_sum<3>({a, b});
  CHECK(ab.lineality.cols() == 2);
  CHECK(ab.gens.empty());
  CHECK(sphere_section(ab).kind == SectionKind::GreatCircle);

  // cube vertex + opposite facet: wedge over the facet normal line
  auto cube = unit_cube();
  Cone<3> cv = normal_cone(faces(cube, 0)[0]);
  Cone<3> cf = normal_cone(faces(cube, 2)[0]);
  auto sum = try_cone_sum<3>({cv, cf});
  REQUIRE(sum.has_value());
  CHECK(sum->gens.size() <= 4);
}

TEST_CASE("spherical polygon measures") {
  // octant
  auto oct = sphere_section(pointed_cone({Vec<3>(1, 0, 0), Vec<3>(0, 1, 0), Vec<3>(0, 0, 1)}));
  CHECK(oct.kind == SectionKind::Polygon);
  CHECK(spherical_measure(oct) == doctest::Approx(pi / 2.0));

  // random pointed cones: area positive, below a hemisphere, and the
  // gnomonic cycle discards non-extreme generators
  Rng rng(23);
  for (int it = 0; it < 25; ++it) {
    Vec<3> axis = random_unit<3>(rng);
    MatX<3> comp = orthonormal_complement<3>(MatX<3>(axis));
    std::vector<Vec<3>> gens;
    const int n = 3 + static_cast<int>(rng.uniform(0, 4));
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(0, 2 * pi), t = rng.uniform(0.2, 1.2);
      gens.push_back((axis + t * (std::cos(a) * comp.col(0) + std::sin(a) * comp.col(1)))
                         .normalized());
    }
    auto sec = sphere_section(pointed_cone(gens));
    REQUIRE(sec.kind == SectionKind::Polygon);
    const double area = spherical_measure(sec);
    CHECK(area > 0.0);
    CHECK(area < 2.0 * pi);
    CHECK(sec.verts.size() <= gens.size());
  }
}

TEST_CASE("arc and point moments") {
  Rng rng(29);
  for (int it = 0; it < 20; ++it) {
    Vec<3> a = random_unit<3>(rng);
    Vec<3> w0 = random_unit<3>(rng);
    Vec<3> w = (w0 - a * a.dot(w0)).normalized();
    const double theta = rng.uniform(0.1, pi);
    SphericalSection<3> arc;
    arc.kind = SectionKind::Arc;
    arc.verts = {a, a * std::cos(theta) + w * std::sin(theta)};
    arc.axis = w;
    arc.angle = theta;
    Vec<3> x0(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    // Riemann cross-check
    const int n = 20000;
    double riemann = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) * theta / n;
      riemann += (a * std::cos(t) + w * std::sin(t)).dot(x0) * theta / n;
    }
    CHECK(linear_moment(arc, x0) == doctest::Approx(riemann).epsilon(1e-6));
  }

  SphericalSection<2> point;
  point.kind = SectionKind::Point;
  point.verts = {Vec<2>(0.6, 0.8)};
  CHECK(linear_moment(point, Vec<2>(1, 2)) == doctest::Approx(0.6 + 1.6));

  SphericalSection<3> pair;
  pair.kind = SectionKind::PointPair;
  pair.verts = {Vec<3>(1, 0, 0), Vec<3>(-1, 0, 0)};
  CHECK(linear_moment(pair, Vec<3>(5, 4, 3)) == doctest::Approx(0.0));
}

TEST_CASE("hemisphere and lune moments") {
  SphericalSection<3> hemi;
  hemi.kind = SectionKind::Hemisphere;
  hemi.axis = Vec<3>(0, 0, 1);
  CHECK(linear_moment(hemi, Vec<3>(1, 2, 3)) == doctest::Approx(3.0 * pi));

  // quarter-sphere lune between the xz and yz half planes:
  // moment = (pi/2, pi/2, 0)
  SphericalSection<3> lune;
  lune.kind = SectionKind::Lune;
  lune.axis = Vec<3>(0, 0, 1);
  lune.verts = {Vec<3>(1, 0, 0), Vec<3>(0, 1, 0)};
  lune.angle = pi / 2.0;
  CHECK(linear_moment(lune, Vec<3>(1, 0, 0)) == doctest::Approx(pi / 2.0).epsilon(1e-9));
  CHECK(linear_moment(lune, Vec<3>(0, 1, 0)) == doctest::Approx(pi / 2.0).epsilon(1e-9));
  CHECK(linear_moment(lune, Vec<3>(0, 0, 1)) == doctest::Approx(0.0).epsilon(1e-9));

  // random lunes against the boundary-cycle closed form
  Rng rng(31);
  for (int it = 0; it < 10; ++it) {
    Vec<3> v = random_unit<3>(rng);
    MatX<3> comp = orthonormal_complement<3>(MatX<3>(v));
    const double a0 = rng.uniform(0, 2 * pi);
    const double da = rng.uniform(0.2, 2.5);
    Vec<3> g1 = std::cos(a0) * comp.col(0) + std::sin(a0) * comp.col(1);
    Vec<3> g2 = std::cos(a0 + da) * comp.col(0) + std::sin(a0 + da) * comp.col(1);
    if (g1.cross(g2).dot(v) < 0) std::swap(g1, g2);
    SphericalSection<3> ln;
    ln.kind = SectionKind::Lune;
    ln.axis = v;
    ln.verts = {g1, g2};
    ln.angle = da;
    const Vec<3> oracle = stokes_moment({v, g1, -v, g2});
    for (int k = 0; k < 3; ++k) {
      Vec<3> x0 = Vec<3>::Zero();
      x0[k] = 1.0;
      CHECK(linear_moment(ln, x0) == doctest::Approx(oracle[k]).epsilon(5e-9));
    }
  }
}

TEST_CASE("polygon moments agree with the boundary closed form") {
  // octant: moment = (pi/4)(1,1,1)
  auto oct = sphere_section(pointed_cone({Vec<3>(1, 0, 0), Vec<3>(0, 1, 0), Vec<3>(0, 0, 1)}));
  CHECK(linear_moment(oct, Vec<3>(1, 0, 0)) == doctest::Approx(pi / 4.0).epsilon(1e-9));
  CHECK(linear_moment(oct, Vec<3>(1, 1, 1)) == doctest::Approx(3.0 * pi / 4.0).epsilon(1e-9));

  Rng rng(37);
  for (int it = 0; it < 12; ++it) {
    Vec<3> axis = random_unit<3>(rng);
    MatX<3> comp = orthonormal_complement<3>(MatX<3>(axis));
    std::vector<Vec<3>> gens;
    for (int i = 0; i < 5; ++i) {
      const double a = rng.uniform(0, 2 * pi), t = rng.uniform(0.3, 1.0);
      gens.push_back((axis + t * (std::cos(a) * comp.col(0) + std::sin(a) * comp.col(1)))
                         .normalized());
    }
    auto sec = sphere_section(pointed_cone(gens));
    REQUIRE(sec.kind == SectionKind::Polygon);
    const Vec<3> oracle = stokes_moment(sec.verts);
    Vec<3> x0(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    CHECK(linear_moment(sec, x0) == doctest::Approx(oracle.dot(x0)).epsilon(1e-8));
  }
}

TEST_CASE("moments are rotation equivariant") {
  Rng rng(41);
  auto sec = sphere_section(pointed_cone({Vec<3>(1, 0.1, 0.2), Vec<3>(0.1, 1, -0.1),
                                          Vec<3>(-0.2, 0.3, 1), Vec<3>(0.5, 0.5, 1)}));
  REQUIRE(sec.kind == SectionKind::Polygon);
  Vec<3> x0(0.3, -1.2, 0.7);
  const double base = linear_moment(sec, x0);
  for (int it = 0; it < 5; ++it) {
    Mat<3> r = random_rotation<3>(rng);
    SphericalSection<3> rsec = sec;
    for (auto& v : rsec.verts) v = (r * v).eval();
    rsec.axis = r * sec.axis;
    CHECK(linear_moment(rsec, Vec<3>(r * x0)) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("sections of invalid cones throw") {
  Cone<3> bad;
  bad.lineality = MatX<3>(3, 0);
  bad.gens = {Vec<3>(1, 0, 0), Vec<3>(-1, 0, 0)};
  CHECK_THROWS_AS(sphere_section(bad), std::domain_error);

  Cone<3> flat;
  flat.lineality = MatX<3>(3, 0);
  flat.gens = {Vec<3>(1, 0, 0), Vec<3>(0, 1, 0), Vec<3>(-1, -1, 0).normalized()};
  CHECK_THROWS_AS(sphere_section(flat), std::domain_error);
}
