#include <gtest/gtest.h>

#include <cstdlib>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "thi/experiments.hpp"
#include "thi/thi.hpp"

using thi::Sphere;
using thi::SO3;

namespace {

template <thi::Manifold M>
std::vector<thi::ManifoldSample<M>> table_samples(int id)
{
  const auto c = thi::table_case(id);
  return thi::sample_function<M>(c.function, c.plan.grid());
}

Eigen::MatrixXd random_queries(std::uint64_t seed, Eigen::Index n, double a = -0.5, double b = 0.5)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(a, b);
  Eigen::MatrixXd q(n, 2);
  for (Eigen::Index i = 0; i < q.size(); ++i)
    q(i) = u(rng);
  return q;
}

} // namespace

TEST(Thi, ConstantRotationIsReproduced)
{
  const Eigen::MatrixXd grid = thi::SamplingPlan{thi::GridKind::uniform, 4, -0.5, 0.5}.grid();
  const auto samples = thi::sample_function<SO3>(thi::TestFunction::so3_constant, grid);
  const auto model = thi::thi_fit<SO3>(samples, 3, true);
  const auto pred = thi::thi_eval(model, random_queries(1, 30));
  for (const auto& p : pred.points)
    EXPECT_LE(SO3::distance(p, samples.front().p), 1e-14);
}

TEST(Thi, ConstantSpherePointIsReproduced)
{
  const Eigen::MatrixXd grid = thi::SamplingPlan{thi::GridKind::uniform, 3, -1.0, 1.0}.grid();
  const auto samples = thi::sample_function<Sphere>(thi::TestFunction::s2_constant, grid);
  const auto model = thi::thi_fit<Sphere>(samples, 2, false);
  for (const auto& p : thi::thi_eval(model, random_queries(2, 30)).points)
    EXPECT_LE(Sphere::distance(p, samples.front().p), 1e-15);
}

TEST(Thi, TrainingResidualsInInterpolationRegime)
{
  const auto samples = table_samples<SO3>(1);
  const auto model = thi::thi_fit<SO3>(samples, 6, true);
  Eigen::MatrixXd nodes(static_cast<Eigen::Index>(samples.size()), 2);
  for (std::size_t j = 0; j < samples.size(); ++j)
    nodes.row(static_cast<Eigen::Index>(j)) = samples[j].omega.transpose();
  const auto pred = thi::thi_eval(model, nodes);
  for (std::size_t j = 0; j < samples.size(); ++j)
    EXPECT_LE(SO3::distance(pred.points[j], samples[j].p), 1e-9);
}

TEST(Thi, FrameChoiceDoesNotChangePredictions)
{
  const double t = 0.83;
  Eigen::Matrix2d r2;
  r2 << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  thi::ThiOptions<Sphere> so;
  so.frame_rotation = r2;
  const auto s = table_samples<Sphere>(5);
  const auto q = random_queries(3, 100);
  const auto a = thi::thi_eval(thi::thi_fit<Sphere>(s, 10, true), q);
  const auto b = thi::thi_eval(thi::thi_fit<Sphere>(s, 10, true, so), q);
  for (std::size_t j = 0; j < a.points.size(); ++j)
    EXPECT_LE(Sphere::distance(a.points[j], b.points[j]), 1e-12);

  thi::ThiOptions<SO3> ro;
  ro.frame_rotation = oracle::rotation(Eigen::Vector3d(0.4, -1.0, 0.6));
  const auto r = table_samples<SO3>(1);
  const auto c = thi::thi_eval(thi::thi_fit<SO3>(r, 6, true), q);
  const auto d = thi::thi_eval(thi::thi_fit<SO3>(r, 6, true, ro), q);
  for (std::size_t j = 0; j < c.points.size(); ++j)
    EXPECT_LE(SO3::distance(c.points[j], d.points[j]), 1e-12);
}

TEST(Thi, PredictionLiesOnManifoldAndMatchesTangentPolynomial)
{
  const auto model = thi::thi_fit<Sphere>(table_samples<Sphere>(7), 15, true);
  const auto pred = thi::thi_eval(model, random_queries(4, 200, -1.0, 1.0));
  for (std::size_t j = 0; j < pred.points.size(); ++j) {
    EXPECT_NEAR(pred.points[j].norm(), 1.0, 1e-15);
    const Eigen::Vector2d back = model.coords_of(Sphere::log(model.base, pred.points[j]));
    EXPECT_LE((back - pred.tangent_coords[j]).norm(), 1e-12);
  }
}

TEST(Thi, PredictedDerivativesMatchTruth)
{
  const auto model = thi::thi_fit<SO3>(table_samples<SO3>(1), 6, true);
  const auto q = random_queries(5, 40);
  const auto pred = thi::thi_eval(model, q, true);
  ASSERT_EQ(pred.derivs.size(), 40u);
  for (Eigen::Index j = 0; j < q.rows(); ++j) {
    const auto truth = thi::so3_simple(q.row(j).transpose());
    for (std::size_t i = 0; i < 2; ++i) {
      const Eigen::Matrix3d amb = SO3::to_ambient(pred.points[j], pred.derivs[j][i]);
      EXPECT_LE((amb - truth.v[i]).cwiseAbs().maxCoeff(), 1e-8);
    }
  }

  const auto smodel = thi::thi_fit<Sphere>(table_samples<Sphere>(5), 15, true);
  const auto spred = thi::thi_eval(smodel, q, true);
  for (Eigen::Index j = 0; j < q.rows(); ++j) {
    const auto truth = thi::helicoid_gauss(q.row(j).transpose());
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_LE((spred.derivs[j][i] - truth.v[i]).norm(), 1e-6);
  }
}

TEST(Thi, EmptyQueries)
{
  const auto model = thi::thi_fit<SO3>(table_samples<SO3>(2), 6, false);
  const auto pred = thi::thi_eval(model, Eigen::MatrixXd(0, 2));
  EXPECT_TRUE(pred.points.empty());
  EXPECT_THROW(thi::thi_eval(model, Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
}

TEST(Thi, RejectsBadSamples)
{
  EXPECT_THROW(thi::thi_fit<Sphere>({}, 2, false), std::invalid_argument);
  auto s = table_samples<Sphere>(6);
  s[3].omega = Eigen::Vector3d::Zero();
  EXPECT_THROW(thi::thi_fit<Sphere>(s, 2, false), std::invalid_argument);
  auto t = table_samples<Sphere>(6);
  t[0].derivs.clear();
  EXPECT_THROW(thi::thi_fit<Sphere>(t, 2, true), std::invalid_argument);
}

TEST(Thi, ThreadCountDoesNotChangeResults)
{
  const auto model = thi::thi_fit<Sphere>(table_samples<Sphere>(7), 15, true);
  const auto q = random_queries(6, 997, -1.0, 1.0);
  ::setenv("THI_NUM_THREADS", "1", 1);
  const auto a = thi::thi_eval(model, q, true);
  ::setenv("THI_NUM_THREADS", "4", 1);
  const auto b = thi::thi_eval(model, q, true);
  ::unsetenv("THI_NUM_THREADS");
  for (std::size_t j = 0; j < a.points.size(); ++j) {
    ASSERT_EQ(a.points[j], b.points[j]);
    ASSERT_EQ(a.derivs[j][0], b.derivs[j][0]);
  }
}

TEST(Thi, ParallelChunksCoverRangeAndPropagateErrors)
{
  std::vector<int> hits(1000, 0);
  thi::parallel_chunks(
      hits.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
          ++hits[i];
      },
      7);
  for (int h : hits)
    ASSERT_EQ(h, 1);
  EXPECT_THROW(thi::parallel_chunks(
                   100, [](std::size_t b, std::size_t) {
                     if (b > 0)
                       throw std::runtime_error("boom");
                   },
                   4),
               std::runtime_error);
}

TEST(Thi, ErrorReportOnExactModelIsTiny)
{
  const auto model = thi::thi_fit<Sphere>(
      thi::sample_function<Sphere>(thi::TestFunction::s2_constant,
                                   thi::SamplingPlan{thi::GridKind::uniform, 3, -0.5, 0.5}.grid()),
      1, false);
  auto truth = [](const Eigen::VectorXd&) { return Eigen::Vector3d(Eigen::Vector3d(1, 2, 2) / 3.0); };
  const auto r = thi::error_report(model, truth, random_queries(7, 25));
  EXPECT_LE(r.avg_err, 1e-15);
  EXPECT_LE(r.max_err, 1e-15);
  EXPECT_LE(r.fd_err_d(0), 1e-11);
  EXPECT_EQ(r.fd_err.size(), 2u);
  EXPECT_LE(r.tangent_sup_err, 1e-15);
}

TEST(Thi, ErrorNonIncreasingInDegreeUntilPlateau)
{
  // Smooth SO(3) data on a 15 x 15 grid; below 1e-10 the error is roundoff.
  thi::BenchmarkCase base;
  base.function = thi::TestFunction::so3_simple;
  base.plan = {thi::GridKind::uniform, 15, -0.5, 0.5};
  base.test_per_axis = 20;
  const auto rows = thi::convergence_study(base, {2, 3, 4, 5, 6});
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const bool plateau = rows[k].avg_err < 1e-10 && rows[k - 1].avg_err < 1e-10;
    EXPECT_TRUE(plateau || rows[k].avg_err <= rows[k - 1].avg_err) << "degree " << rows[k].degree;
  }
  // past the pre-asymptotic range the oscillatory case decreases strictly
  base.function = thi::TestFunction::so3_oscillatory;
  const auto osc = thi::convergence_study(base, {10, 12, 14, 16, 18, 20});
  for (std::size_t k = 1; k < osc.size(); ++k)
    EXPECT_LT(osc[k].avg_err, osc[k - 1].avg_err) << "degree " << osc[k].degree;
}
