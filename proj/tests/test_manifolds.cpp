#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "thi/errors.hpp"
#include "thi/experiments.hpp"
#include "thi/manifolds/matrix_exp.hpp"
#include "thi/manifolds/riemannian.hpp"
#include "thi/manifolds/so3.hpp"
#include "thi/manifolds/sphere.hpp"

using thi::Sphere;
using thi::SO3;
constexpr double kPi = std::numbers::pi;

namespace {

Eigen::Vector3d random_tangent(std::mt19937_64& rng, const Eigen::Vector3d& q, double max_len)
{
  std::uniform_real_distribution<double> u(0.0, max_len);
  Eigen::Vector3d v = oracle::random_unit(rng);
  v -= q.dot(v) * q;
  return u(rng) * v.normalized();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.0, kPi);
  return oracle::rotation(u(rng) * oracle::random_unit(rng));
}

} // namespace

TEST(Sphere, ExpLogQuarterTurn)
{
  const Eigen::Vector3d e1 = Eigen::Vector3d::UnitX(), e3 = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d p = Sphere::exp(e3, Eigen::Vector3d(kPi / 2, 0, 0));
  EXPECT_LE((p - e1).norm(), 1e-15);
  const Eigen::Vector3d v = Sphere::log(e3, e1);
  EXPECT_LE((v - Eigen::Vector3d(kPi / 2, 0, 0)).norm(), 1e-15);
  EXPECT_NEAR(Sphere::distance(e1, e3), kPi / 2, 1e-15);
  EXPECT_NEAR(Sphere::distance(e1, -e1), kPi, 1e-15);
  EXPECT_EQ(Sphere::log(e3, e3), Eigen::Vector3d::Zero());
}

TEST(Sphere, AntipodalLogThrows)
{
  const Eigen::Vector3d q(0, 0, 1);
  EXPECT_THROW(Sphere::log(q, -q), thi::CutLocusError);
}

TEST(Sphere, DistanceAgreesWithArccos)
{
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d p = oracle::random_unit(rng), q = oracle::random_unit(rng);
    EXPECT_NEAR(Sphere::distance(p, q), oracle::sphere_angle(p, q), 1e-7);
  }
  // small angles: atan2 keeps relative accuracy
  const Eigen::Vector3d a(1, 0, 0), b(std::cos(1e-9), std::sin(1e-9), 0);
  EXPECT_NEAR(Sphere::distance(a, b), 1e-9, 1e-22);
}

TEST(Sphere, FrameIsOrthonormalTangent)
{
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Vector3d q = oracle::random_unit(rng);
    const Eigen::Matrix<double, 3, 2> f = Sphere::default_frame(q);
    EXPECT_LE((f.transpose() * f - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((q.transpose() * f).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GT(q.dot(f.col(0).cross(f.col(1))), 0.0);
  }
}

TEST(Sphere, ProjectRejectsFarPoints)
{
  EXPECT_NO_THROW(Sphere::project(Eigen::Vector3d(1.0 + 1e-9, 0, 0), 1e-8));
  EXPECT_THROW(Sphere::project(Eigen::Vector3d(1.1, 0, 0), 1e-8), thi::ConstraintViolation);
  EXPECT_EQ(Sphere::project(Eigen::Vector3d(0, 1.0 + 1e-9, 0), 1e-8), Eigen::Vector3d(0, 1, 0));
}

TEST(Sphere, RoundTrips)
{
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector3d q = oracle::random_unit(rng);
    const Eigen::Vector3d v = random_tangent(rng, q, 0.9 * kPi);
    EXPECT_LE((Sphere::log(q, Sphere::exp(q, v)) - v).norm(), 1e-11);
    const Eigen::Vector3d p = Sphere::exp(q, random_tangent(rng, q, 0.9 * kPi));
    EXPECT_LE(Sphere::distance(Sphere::exp(q, Sphere::log(q, p)), p), 1e-11);
  }
}

TEST(MatrixExp, RodriguesMatchesPadeAndAngleAxis)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, kPi);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector3d w = (k < 20 ? 1e-6 * u(rng) : u(rng)) * oracle::random_unit(rng);
    const Eigen::Matrix3d x = thi::hat(w);
    const Eigen::Matrix3d r = thi::rodrigues_exp(x);
    EXPECT_LE((r - thi::matrix_exp(Eigen::Matrix3d(x))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((r - oracle::rotation(w)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(MatrixExp, PadeMatchesTaylorOnGeneralMatrices)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    Eigen::MatrixXd a(6, 6);
    for (Eigen::Index i = 0; i < 36; ++i)
      a(i) = n(rng) * (k % 3 + 0.2);
    const Eigen::MatrixXd want = oracle::expm_taylor(a);
    const Eigen::MatrixXd got = thi::matrix_exp(a);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_LE((thi::matrix_exp(Eigen::Matrix3d(Eigen::Matrix3d::Zero())) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(MatrixExp, HatVee)
{
  const Eigen::Vector3d w(0.3, -1.1, 2.0), y(-0.7, 0.2, 0.5);
  EXPECT_LE((thi::hat(w) * y - w.cross(y)).norm(), 1e-15);
  EXPECT_EQ(thi::vee(thi::hat(w)), w);
  EXPECT_EQ(thi::hat(w), oracle::skew(w));
}

TEST(MatrixExp, MathiasDerivativeAgainstCentralDifferences)
{
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    Eigen::Matrix3d x, e;
    for (int i = 0; i < 9; ++i) {
      x(i) = n(rng);
      e(i) = n(rng);
    }
    if (k % 2 == 0) { // skew generators as in the test functions
      x = 0.5 * (x - x.transpose()).eval();
      e = 0.5 * (e - e.transpose()).eval();
    }
    const Eigen::Matrix3d fd =
        (oracle::expm_taylor(x + h * e) - oracle::expm_taylor(x - h * e)) / (2 * h);
    EXPECT_LE((thi::dexp_mathias(x, e) - fd).cwiseAbs().maxCoeff(), 1e-6) << "trial " << k;
  }
}

TEST(SO3, ExpLogExamples)
{
  const Eigen::Matrix3d i = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d rz = SO3::exp(i, thi::hat(Eigen::Vector3d(0, 0, kPi / 2)));
  Eigen::Matrix3d want;
  want << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LE((rz - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((thi::vee(SO3::log(i, rz)) - Eigen::Vector3d(0, 0, kPi / 2)).norm(), 1e-15);
  EXPECT_NEAR(SO3::distance(i, rz), kPi / 2, 1e-15);
  EXPECT_NEAR(thi::rotation_angle(rz), kPi / 2, 1e-15);
  // body frame: Log_q p = hat(rotation vector of q^T p)
  const Eigen::Matrix3d q = oracle::rotation(Eigen::Vector3d(0.2, 0.5, -0.4));
  const Eigen::Matrix3d p = oracle::rotation(Eigen::Vector3d(-0.6, 0.1, 0.3));
  EXPECT_LE((thi::vee(SO3::log(q, p)) - oracle::rotation_vector(q.transpose() * p)).norm(), 1e-13);
}

TEST(SO3, CutLocusThrows)
{
  const Eigen::Matrix3d i = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d half_turn = oracle::rotation(Eigen::Vector3d(kPi, 0, 0));
  EXPECT_THROW(SO3::log(i, half_turn), thi::CutLocusError);
}

TEST(SO3, RoundTrips)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 0.9 * kPi);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Matrix3d q = random_rotation(rng);
    const Eigen::Matrix3d v = thi::hat(u(rng) * oracle::random_unit(rng));
    EXPECT_LE((SO3::log(q, SO3::exp(q, v)) - v).cwiseAbs().maxCoeff(), 1e-11);
    const Eigen::Matrix3d p = q * oracle::rotation(u(rng) * oracle::random_unit(rng));
    EXPECT_LE((SO3::exp(q, SO3::log(q, p)) - p).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(SO3, SmallAngleLog)
{
  const Eigen::Matrix3d i = Eigen::Matrix3d::Identity();
  const Eigen::Vector3d w(3e-9, -1e-9, 2e-9);
  EXPECT_LE((thi::vee(SO3::log(i, oracle::rotation(w))) - w).norm(), 1e-22);
}

TEST(SO3, ProjectAndValidity)
{
  const Eigen::Matrix3d r = oracle::rotation(Eigen::Vector3d(0.1, 0.2, 0.3));
  Eigen::Matrix3d noisy = r;
  noisy(0, 0) += 1e-10;
  const Eigen::Matrix3d p = SO3::project(noisy, 1e-8);
  EXPECT_LE(thi::orthogonality_defect(p), 1e-14);
  EXPECT_LE((p - r).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::Matrix3d bad = r;
  bad(0, 0) += 1e-3;
  EXPECT_THROW(SO3::project(bad, 1e-8), thi::ConstraintViolation);
  EXPECT_THROW(SO3::project(-r, 1e-8), thi::ConstraintViolation); // reflection
  EXPECT_TRUE(SO3::is_tangent(r, thi::hat(Eigen::Vector3d(1, 2, 3))));
  EXPECT_FALSE(SO3::is_tangent(r, Eigen::Matrix3d::Identity()));
}

TEST(SO3, TangentRepresentation)
{
  const Eigen::Matrix3d q = oracle::rotation(Eigen::Vector3d(0.4, -0.3, 0.8));
  const Eigen::Matrix3d omega = thi::hat(Eigen::Vector3d(0.5, 0.1, -0.2));
  EXPECT_LE((SO3::from_ambient(q, SO3::to_ambient(q, omega)) - omega).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(SO3::flatten(q, omega), thi::vee(omega));
  EXPECT_EQ(SO3::unflatten(q, thi::vee(omega)), omega);
  // norm induced by (1/2) tr(A^T B) equals the rotation-vector length
  EXPECT_NEAR(SO3::norm(q, omega), std::sqrt(0.5 * (omega.transpose() * omega).trace()), 1e-15);
  const Eigen::VectorXd e = SO3::embed(q);
  EXPECT_EQ(e(1), q(0, 1));
  EXPECT_EQ(SO3::from_embedded(e), q);
}

TEST(Karcher, SinglePointIsItself)
{
  const Eigen::Vector3d p = Eigen::Vector3d(1, 2, 2) / 3.0;
  const auto r = thi::karcher_mean<Sphere>(std::vector<Eigen::Vector3d>{p});
  EXPECT_EQ(r.point, p);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Karcher, TwoSpherePointsGiveGeodesicMidpoint)
{
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d a = oracle::random_unit(rng);
    const Eigen::Vector3d b = Sphere::exp(a, random_tangent(rng, a, 2.0));
    const auto r = thi::karcher_mean<Sphere>(std::vector<Eigen::Vector3d>{a, b});
    EXPECT_LE((r.point - (a + b).normalized()).norm(), 1e-12);
    EXPECT_LE(r.gradient_norm, 1e-12);
  }
}

TEST(Karcher, RotationEquivariance)
{
  std::mt19937_64 rng(9);
  std::vector<Eigen::Matrix3d> pts;
  const Eigen::Matrix3d c = random_rotation(rng);
  std::uniform_real_distribution<double> u(0.0, 0.6);
  for (int k = 0; k < 10; ++k)
    pts.push_back(c * oracle::rotation(u(rng) * oracle::random_unit(rng)));
  const Eigen::Matrix3d g = random_rotation(rng);
  std::vector<Eigen::Matrix3d> moved;
  for (const auto& p : pts)
    moved.push_back(g * p);
  const auto a = thi::karcher_mean<SO3>(pts);
  const auto b = thi::karcher_mean<SO3>(moved);
  EXPECT_LE((g * a.point - b.point).cwiseAbs().maxCoeff(), 1e-11);

  std::vector<Eigen::Vector3d> sp, smoved;
  const Eigen::Vector3d center = oracle::random_unit(rng);
  for (int k = 0; k < 10; ++k)
    sp.push_back(Sphere::exp(center, random_tangent(rng, center, 0.5)));
  for (const auto& p : sp)
    smoved.push_back(g * p);
  EXPECT_LE((g * thi::karcher_mean<Sphere>(sp).point - thi::karcher_mean<Sphere>(smoved).point).norm(), 1e-11);
}

TEST(Karcher, SymmetricRotationSamplesAverageToIdentity)
{
  // so3-simple on a symmetric 7x7 grid: the generators cancel in the mean.
  const Eigen::MatrixXd grid = thi::SamplingPlan{thi::GridKind::uniform, 7, -0.5, 0.5}.grid();
  std::vector<Eigen::Matrix3d> pts;
  for (Eigen::Index j = 0; j < grid.rows(); ++j)
    pts.push_back(thi::so3_simple(grid.row(j).transpose()).p);
  ASSERT_EQ(pts.size(), 49u);
  const auto r = thi::karcher_mean<SO3>(pts);
  EXPECT_LE((r.point - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(r.gradient_norm, 1e-12);
}

TEST(Karcher, NonConvergenceIsReported)
{
  const std::vector<Eigen::Vector3d> pts{Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()};
  EXPECT_THROW(thi::karcher_mean<Sphere>(std::span<const Eigen::Vector3d>(pts), 0), thi::KarcherNonConvergence<Sphere>);
  EXPECT_THROW(thi::karcher_mean<Sphere>(std::span<const Eigen::Vector3d>(pts), 0), thi::NumericalFailure);
  EXPECT_THROW(thi::karcher_mean<Sphere>(std::vector<Eigen::Vector3d>{}), std::invalid_argument);
}

TEST(Transport, IdentityAtBasePoint)
{
  const Eigen::Vector3d q = Eigen::Vector3d(1, 2, 2) / 3.0;
  const Eigen::Vector3d v = Sphere::from_ambient(q, Eigen::Vector3d(0.3, -0.1, 0.7));
  EXPECT_LE((thi::transport_derivative<Sphere>(q, q, v) - v).norm(), 1e-9);
  const Eigen::Matrix3d r = oracle::rotation(Eigen::Vector3d(0.3, 0.1, -0.2));
  const Eigen::Matrix3d w = thi::hat(Eigen::Vector3d(0.2, 0.4, 0.1));
  EXPECT_LE((thi::transport_derivative<SO3>(r, r, w) - w).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Transport, SecondOrderInStep)
{
  // Richardson: successive differences shrink by 4 when the step halves.
  const Eigen::Vector3d q(0, 0, 1);
  const Eigen::Vector3d p = Sphere::exp(q, Eigen::Vector3d(0.6, -0.3, 0));
  const Eigen::Vector3d v = Sphere::from_ambient(p, Eigen::Vector3d(0.4, 0.9, -0.2));
  const double h = 0.04;
  const Eigen::Vector3d d1 = thi::transport_derivative<Sphere>(q, p, v, h);
  const Eigen::Vector3d d2 = thi::transport_derivative<Sphere>(q, p, v, h / 2);
  const Eigen::Vector3d d4 = thi::transport_derivative<Sphere>(q, p, v, h / 4);
  const double ratio = (d1 - d2).norm() / (d2 - d4).norm();
  EXPECT_NEAR(ratio, 4.0, 0.05);
  EXPECT_THROW(thi::transport_derivative<Sphere>(q, p, v, 0.0), std::invalid_argument);
}

TEST(Transport, MatchesDifferentialOfLogOnSO3)
{
  // Against the log differential of an explicit curve, computed with the oracle conversion.
  const Eigen::Matrix3d q0 = oracle::rotation(Eigen::Vector3d(0.1, -0.2, 0.05));
  const Eigen::Matrix3d p = oracle::rotation(Eigen::Vector3d(0.5, 0.3, -0.4));
  const Eigen::Vector3d w(0.7, -0.2, 0.3);
  const double h = 1e-4;
  const Eigen::Vector3d want = (oracle::rotation_vector(q0.transpose() * p * oracle::rotation(h * w)) -
                                oracle::rotation_vector(q0.transpose() * p * oracle::rotation(-h * w))) /
                               (2 * h);
  const Eigen::Vector3d got = thi::vee(thi::transport_derivative<SO3>(q0, p, thi::hat(w)));
  EXPECT_LE((got - want).norm(), 1e-7);
}
