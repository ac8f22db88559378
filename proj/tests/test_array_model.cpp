#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "pccb/array_model.hpp"
#include "pccb/sphere_sampling.hpp"

using namespace pccb;
using std::numbers::pi;

namespace {

const double kLambda = Wavefield::from_frequency(kGpsL1Hz).wavelength();

DirectionSet single_direction(const Eigen::Vector3d& u) {
  Eigen::MatrixX3d m(1, 3);
  m.row(0) = u.transpose();
  return DirectionSet(m, Eigen::VectorXd::Ones(1), Region::full_sphere());
}

}  // namespace

TEST_CASE("grid array layout") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  REQUIRE(g.size() == 9);
  CHECK(g.positions().col(0).cwiseAbs().maxCoeff() == 0.0);
  // z-major: first row of three sits at z = -7 cm
  CHECK(g.positions()(0, 1) == doctest::Approx(-0.07));
  CHECK(g.positions()(0, 2) == doctest::Approx(-0.07));
  CHECK(g.positions()(1, 1) == doctest::Approx(0.0));
  CHECK(g.positions()(1, 2) == doctest::Approx(-0.07));
  CHECK(g.positions()(4, 1) == doctest::Approx(0.0));
  CHECK(g.positions()(4, 2) == doctest::Approx(0.0));
  CHECK(g.positions()(8, 1) == doctest::Approx(0.07));
  CHECK(g.positions()(8, 2) == doctest::Approx(0.07));
  CHECK(g.positions().colwise().sum().norm() < 1e-15);

  const ArrayGeometry one = build_grid_array(1, 1, 0.07);
  REQUIRE(one.size() == 1);
  CHECK(one.positions().norm() == 0.0);

  const ArrayGeometry pair = build_grid_array(2, 1, 0.10);
  CHECK(pair.positions()(0, 1) == doctest::Approx(-0.05));
  CHECK(pair.positions()(1, 1) == doctest::Approx(0.05));
}

TEST_CASE("grid array rejects bad arguments") {
  CHECK_THROWS_AS(build_grid_array(0, 3, 0.07), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_array(3, -1, 0.07), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_array(3, 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_array(3, 3, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_array(3, 3, std::nan("")), std::invalid_argument);
}

TEST_CASE("geometry table parsing") {
  std::istringstream ok("# x y z\n0 0.01 0.02\n\n0 -0.01 0.0  # trailing\n");
  const ArrayGeometry g = read_geometry(ok);
  REQUIRE(g.size() == 2);
  CHECK(g.positions()(0, 2) == doctest::Approx(0.02));
  CHECK(g.positions()(1, 1) == doctest::Approx(-0.01));

  std::istringstream two_cols("0 1\n");
  CHECK_THROWS_AS(read_geometry(two_cols), std::invalid_argument);
  std::istringstream junk("0 1 x\n");
  CHECK_THROWS_AS(read_geometry(junk), std::invalid_argument);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_geometry(empty), std::invalid_argument);
  std::istringstream nan_row("0 nan 0\n");
  CHECK_THROWS(read_geometry(nan_row));
  CHECK_THROWS(read_geometry_file("/nonexistent/geometry.txt"));
}

TEST_CASE("wavefield") {
  const Wavefield w = Wavefield::from_frequency(kGpsL1Hz);
  CHECK(w.wavelength() == doctest::Approx(0.190293672798).epsilon(1e-10));
  CHECK(w.wavenumber() == doctest::Approx(2.0 * pi / w.wavelength()));
  CHECK(Wavefield::from_wavelength(w.wavelength()).frequency() == doctest::Approx(kGpsL1Hz));
  CHECK_THROWS_AS(Wavefield::from_frequency(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Wavefield::from_wavelength(-1.0), std::invalid_argument);
}

TEST_CASE("steering vector examples") {
  const ArrayGeometry origin = build_grid_array(1, 1, 0.07);
  const auto v0 = steering_vector(origin, kLambda, Angles{0.7, -0.3});
  CHECK(std::abs(v0(0) - cd(1.0, 0.0)) < 1e-15);

  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  const auto vb = steering_vector(g, kLambda, Angles{0.0, 0.0});
  CHECK((vb - Eigen::VectorXcd::Ones(9)).cwiseAbs().maxCoeff() < 1e-15);

  // quarter-wavelength offset along y, plane wave from +Y
  Eigen::MatrixX3d p(1, 3);
  p << 0.0, kLambda / 4.0, 0.0;
  const auto vq = steering_vector(ArrayGeometry(p), kLambda, Angles{pi / 2.0, 0.0});
  CHECK(std::abs(vq(0) - cd(0.0, 1.0)) < 1e-12);
}

TEST_CASE("steering vector matches the azimuth/elevation form on a planar array") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(-pi, pi), ph(-pi / 2.0, pi / 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = th(rng);
    const double f = ph(rng);
    const auto v = steering_vector(g, kLambda, Angles{t, f});
    for (Eigen::Index n = 0; n < 9; ++n) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(9);
      e(n) = 1.0;
      CHECK(std::abs(v(n) - oracle::direct_gain(e, g.positions(), kLambda, t, f)) < 1e-12);
    }
  }
}

TEST_CASE("steering vector conjugation symmetry") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(-pi, pi), ph(-pi / 2.0, pi / 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = th(rng);
    const double f = ph(rng);
    const auto a = steering_vector(g, kLambda, Angles{t, f});
    const auto b = steering_vector(g, kLambda, Angles{-t, -f});
    CHECK((a - b.conjugate()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("element gain") {
  const ElementModel iso = ElementModel::isotropic();
  const ElementModel cosm = ElementModel::cosine(1.0);
  CHECK(element_gain(Eigen::Vector3d(-1, 0, 0), iso) == 1.0);
  CHECK(element_gain(Eigen::Vector3d(0.5, std::sqrt(3.0) / 2.0, 0), cosm) == doctest::Approx(0.5));
  CHECK(element_gain(Eigen::Vector3d(-0.5, std::sqrt(3.0) / 2.0, 0), cosm) == 0.0);
  CHECK(element_gain(Eigen::Vector3d(0, 0, 1), cosm) == 0.0);
  CHECK(element_gain(Eigen::Vector3d(0.5, 0, std::sqrt(0.75)), ElementModel::cosine(2.0)) ==
        doctest::Approx(0.25));
}

TEST_CASE("steering matrix columns") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  const DirectionSet dirs = sample_equal_area(500);
  const SteeringMatrix v(g, kLambda, dirs, ElementModel::cosine(1.0));
  REQUIRE(v.elements() == 9);
  REQUIRE(v.directions() == 500);
  for (Eigen::Index k = 0; k < 500; ++k) {
    const double gain = std::max(0.0, dirs.direction(k).x());
    CHECK((v.values().col(k).cwiseAbs().array() - gain).abs().maxCoeff() < 1e-12);
  }

  // single isotropic element, single boresight sample
  const SteeringMatrix one(build_grid_array(1, 1, 0.07), kLambda,
                           single_direction(Eigen::Vector3d::UnitX()), ElementModel::isotropic());
  CHECK(std::abs(one.values()(0, 0) - cd(1.0, 0.0)) < 1e-15);

  // straight up: cosine element sees nothing
  const SteeringMatrix up(g, kLambda, single_direction(Eigen::Vector3d::UnitZ()),
                          ElementModel::cosine(1.0));
  CHECK(up.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("beampattern") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  const DirectionSet dirs = sample_equal_area(200);
  const SteeringMatrix v(g, kLambda, dirs, ElementModel::isotropic());

  Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(9);
  e1(0) = 1.0;
  const auto b1 = beampattern(e1, v).values;
  CHECK((b1 - v.values().row(0).transpose()).cwiseAbs().maxCoeff() < 1e-15);

  // matched filter: unit gain at the look sample, |B| <= 1 elsewhere
  const Eigen::Index look = 37;
  const Eigen::VectorXcd vd = v.values().col(look);
  const auto bm = beampattern(vd / 9.0, v).values;
  CHECK(std::abs(bm(look) - cd(1.0, 0.0)) < 1e-12);
  CHECK(bm.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);

  const auto bn = beampattern(vd, v).values;
  CHECK(std::abs(bn(look) - cd(9.0, 0.0)) < 1e-12);

  // against direct summation
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd w(9);
  for (auto& x : w) x = cd(nd(rng), nd(rng));
  const auto bw = beampattern(w, v).values;
  for (Eigen::Index k = 0; k < dirs.size(); k += 13) {
    const auto a = dirs.angles().row(k);
    CHECK(std::abs(bw(k) - oracle::direct_gain(w, g.positions(), kLambda, a(0), a(1))) < 1e-12);
  }

  CHECK_THROWS_AS(beampattern(Eigen::VectorXcd::Ones(4), v), std::invalid_argument);
}

TEST_CASE("beampattern is conjugate-linear in the weights") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  const SteeringMatrix v(g, kLambda, sample_equal_area(300), ElementModel::cosine(1.0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd w1(9), w2(9);
    for (auto& x : w1) x = cd(nd(rng), nd(rng));
    for (auto& x : w2) x = cd(nd(rng), nd(rng));
    const cd a(nd(rng), nd(rng));
    const cd b(nd(rng), nd(rng));
    const Eigen::VectorXcd lhs = beampattern(a * w1 + b * w2, v).values;
    const Eigen::VectorXcd rhs = std::conj(a) * beampattern(w1, v).values + std::conj(b) * beampattern(w2, v).values;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("translation multiplies the steering vector by a plane-wave phase") {
  const ArrayGeometry g = build_grid_array(3, 3, 0.07);
  const Eigen::Vector3d t(0.003, -0.01, 0.02);
  const ArrayGeometry gt = g.translated(t);
  const Eigen::Vector3d u = direction_from_angles(0.4, 0.2);
  const cd shift = std::polar(1.0, 2.0 * pi / kLambda * u.dot(t));
  CHECK((steering_vector(gt, kLambda, u) - shift * steering_vector(g, kLambda, u))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}
