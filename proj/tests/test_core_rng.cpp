#include <doctest.h>

#include <cmath>
#include <numbers>

#include "transgeo/core.hpp"
#include "transgeo/rng.hpp"

using namespace transgeo;

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(0) == doctest::Approx(1.0));
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0));
}

TEST_CASE("factorials") {
  CHECK(factorial(0) == 1.0);
  CHECK(factorial(1) == 1.0);
  CHECK(factorial(5) == 120.0);
}

TEST_CASE("box geometry") {
  Box<2> b{Vec<2>(0.0, -1.0), Vec<2>(2.0, 3.0)};
  CHECK(b.volume() == doctest::Approx(8.0));
  CHECK(b.contains(Vec<2>(1.0, 0.0)));
  CHECK(!b.contains(Vec<2>(-0.1, 0.0)));
  CHECK(b.contains(Vec<2>(-0.1, 0.0), 0.2));
  CHECK(b.grown(1.0).volume() == doctest::Approx(4.0 * 6.0));
  CHECK(b.eroded(0.5).volume() == doctest::Approx(1.0 * 3.0));
  CHECK(b.halfspaces().size() == 4);
  for (const auto& h : b.halfspaces()) CHECK(h.normal.dot(b.center()) < h.offset);

  Box<3> c = Box<3>::cube(0.5);
  CHECK(c.volume() == doctest::Approx(1.0));
  CHECK(c.center().norm() == doctest::Approx(0.0));
}

TEST_CASE("gram volumes") {
  MatX<2> id2 = Mat<2>::Identity();
  CHECK(gram_volume<2>(id2) == doctest::Approx(1.0));
  MatX<2> one_col(2, 1);
  one_col << 3.0, 4.0;
  CHECK(gram_volume<2>(one_col) == doctest::Approx(5.0));
  MatX<2> none(2, 0);
  CHECK(gram_volume<2>(none) == doctest::Approx(1.0));
  MatX<2> three(2, 3);
  three << 1, 0, 1, 0, 1, 1;
  CHECK(gram_volume<2>(three) == doctest::Approx(0.0));
  MatX<3> two(3, 2);
  two << 1, 0, 0, 2, 0, 0;
  CHECK(gram_volume<3>(two) == doctest::Approx(2.0));
}

TEST_CASE("orthonormal span and complement") {
  MatX<3> cols(3, 3);
  cols << 1, 2, 0, 0, 0, 0, 0, 0, 1;
  MatX<3> b = orthonormal_span<3>(cols);
  CHECK(b.cols() == 2);
  MatX<3> c = orthonormal_complement<3>(b);
  CHECK(c.cols() == 1);
  CHECK(std::abs(c.col(0).y()) == doctest::Approx(1.0));
  Mat<3> recomposed = b * b.transpose() + c * c.transpose();
  CHECK((recomposed - Mat<3>::Identity()).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("accumulator statistics") {
  Accumulator acc;
  for (double x : {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) acc.add(x);
  CHECK(acc.count() == 8);
  CHECK(acc.mean() == doctest::Approx(5.0));
  CHECK(acc.variance() == doctest::Approx(32.0 / 7.0));
  Estimate e = acc.estimate(42);
  CHECK(e.mean == doctest::Approx(5.0));
  CHECK(e.se == doctest::Approx(std::sqrt(32.0 / 7.0 / 8.0)));
  CHECK(e.replications == 8);
  CHECK(e.z_score(5.0) == doctest::Approx(0.0));
  CHECK(e.z_score(4.0) > 0.0);
}

TEST_CASE("rng determinism and stream independence") {
  Rng a(123), b(123), c(123, 1);
  for (int i = 0; i < 16; ++i) {
    const double ua = a.uniform();
    CHECK(ua == b.uniform());
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
  }
  int differs = 0;
  Rng a2(123);
  for (int i = 0; i < 16; ++i)
    if (a2.uniform() != c.uniform()) ++differs;
  CHECK(differs > 10);
}

TEST_CASE("poisson sampling moments") {
  Rng rng(7);
  const int n = 20000;
  Accumulator acc;
  for (int i = 0; i < n; ++i) acc.add(static_cast<double>(rng.poisson(5.0)));
  CHECK(std::abs(acc.mean() - 5.0) < 4.0 * std::sqrt(5.0 / n));
  CHECK(acc.variance() == doctest::Approx(5.0).epsilon(0.1));

  CHECK(rng.poisson(0.0) == 0);
  Accumulator big;
  for (int i = 0; i < 500; ++i) big.add(static_cast<double>(rng.poisson(1000.0)));
  CHECK(std::abs(big.mean() - 1000.0) < 5.0 * std::sqrt(1000.0 / 500.0));
}

TEST_CASE("random rotations are orthogonal") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Mat<2> r2 = random_rotation<2>(rng);
    CHECK((r2 * r2.transpose() - Mat<2>::Identity()).norm() < 1e-12);
    CHECK(r2.determinant() == doctest::Approx(1.0));
    Mat<3> r3 = random_rotation<3>(rng);
    CHECK((r3 * r3.transpose() - Mat<3>::Identity()).norm() < 1e-12);
    CHECK(r3.determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("random unit vectors are uniform") {
  Rng rng(13);
  const int n = 20000;
  Accumulator zsq;
  for (int i = 0; i < n; ++i) {
    Vec<3> u = random_unit<3>(rng);
    CHECK(u.norm() == doctest::Approx(1.0));
    zsq.add(u.z() * u.z());
  }
  // E[u_z^2] = 1/3 on the unit sphere
  CHECK(std::abs(zsq.mean() - 1.0 / 3.0) < 4.0 * std::sqrt(zsq.variance() / n));
}

TEST_CASE("box sampling stays inside") {
  Rng rng(17);
  Box<3> b{Vec<3>(-1.0, 0.0, 2.0), Vec<3>(1.0, 0.5, 2.5)};
  Vec<3> mean = Vec<3>::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Vec<3> x = sample_box<3>(rng, b);
    CHECK(b.contains(x));
    mean += x;
  }
  mean /= n;
  CHECK((mean - b.center()).norm() < 0.02);
}
