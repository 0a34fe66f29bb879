#ifndef THI_EXPERIMENTS_HPP
#define THI_EXPERIMENTS_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thi/manifolds/matrix_exp.hpp"
#include "thi/manifolds/riemannian.hpp"
#include "thi/thi.hpp"

namespace thi {

// ---------------------------------------------------------------------------
// Sampling plans

enum class GridKind { uniform, chebyshev_first_kind, chebyshev_second_kind };

inline std::string_view to_string(GridKind k)
{
  switch (k) {
  case GridKind::uniform:
    return "uniform";
  case GridKind::chebyshev_first_kind:
    return "cheb1";
  default:
    return "cheb2";
  }
}

inline GridKind grid_kind_from_string(std::string_view s)
{
  if (s == "uniform")
    return GridKind::uniform;
  if (s == "cheb1")
    return GridKind::chebyshev_first_kind;
  if (s == "cheb2")
    return GridKind::chebyshev_second_kind;
  throw std::invalid_argument("unknown grid kind '" + std::string(s) + "'");
}

/// Tensor grid on [a, b]^2 with `per_axis` nodes per coordinate.
struct SamplingPlan
{
  GridKind kind = GridKind::uniform;
  int per_axis = 7;
  double a = -0.5;
  double b = 0.5;

  std::vector<double> nodes_1d() const
  {
    if (per_axis < 1)
      throw std::invalid_argument("SamplingPlan: need at least one node per axis");
    const int n = per_axis;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
      double v;
      switch (kind) {
      case GridKind::uniform:
        v = n == 1 ? mid : a + (b - a) * (j - 1) / (n - 1);
        break;
      case GridKind::chebyshev_first_kind:
        v = mid + half * std::cos((2.0 * j - 1.0) * std::numbers::pi / (2.0 * n));
        break;
      default:
        v = mid + half * std::cos(j * std::numbers::pi / (n + 1.0));
        break;
      }
      x[static_cast<std::size_t>(j - 1)] = v;
    }
    return x;
  }

  /// Cartesian product, first coordinate varying slowest. One point per row.
  Eigen::MatrixXd grid() const
  {
    const std::vector<double> x = nodes_1d();
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd g(n * n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        g.row(i * n + j) << x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)];
    return g;
  }
};

// ---------------------------------------------------------------------------
// Test functions. Derivatives are ambient (3x3 matrices on SO(3), 3-vectors on S^2).

struct So3Value
{
  Eigen::Matrix3d p;
  std::array<Eigen::Matrix3d, 2> v;
};

struct SphereValue
{
  Eigen::Vector3d p;
  std::array<Eigen::Vector3d, 2> v;
};

inline Eigen::Matrix3d skew_from_entries(double x01, double x02, double x12)
{
  Eigen::Matrix3d x;
  x << 0.0, x01, x02, -x01, 0.0, x12, -x02, -x12, 0.0;
  return x;
}

inline So3Value so3_from_generator(const Eigen::Matrix3d& x, const Eigen::Matrix3d& dx1, const Eigen::Matrix3d& dx2)
{
  return {matrix_exp(x), {dexp_mathias(x, dx1), dexp_mathias(x, dx2)}};
}

/// expm(X(w)) with X entries (w1, w2, w1 w2) above the diagonal.
inline So3Value so3_simple(const Eigen::Vector2d& w)
{
  return so3_from_generator(skew_from_entries(w(0), w(1), w(0) * w(1)), skew_from_entries(1.0, 0.0, w(1)),
                            skew_from_entries(0.0, 1.0, w(0)));
}

/// expm(X(w)) with entries (w1^2 + w2/2, sin(4 pi (w1^2 + w2^2)), w1 + w2^2).
inline So3Value so3_oscillatory(const Eigen::Vector2d& w)
{
  const double arg = 4.0 * std::numbers::pi * (w(0) * w(0) + w(1) * w(1));
  const double dsin = std::cos(arg) * 8.0 * std::numbers::pi;
  return so3_from_generator(skew_from_entries(w(0) * w(0) + 0.5 * w(1), std::sin(arg), w(0) + w(1) * w(1)),
                            skew_from_entries(2.0 * w(0), dsin * w(0), 1.0),
                            skew_from_entries(0.5, dsin * w(1), 2.0 * w(1)));
}

/// Gauss map of the helicoid; `freq` multiplies the second variable (1 or 2).
inline SphereValue helicoid_gauss(const Eigen::Vector2d& w, double freq = 1.0)
{
  const double e1 = std::exp(w(0));
  const double e2 = std::exp(2.0 * w(0));
  const double den = e2 + 1.0;
  const double c = std::cos(freq * w(1));
  const double s = std::sin(freq * w(1));
  const Eigen::Vector3d raw(2.0 * e1 * c, 2.0 * e1 * s, e2 - 1.0);
  SphereValue out;
  out.p = raw / den;
  out.v[0] = (-2.0 * e2 / (den * den)) * raw + (2.0 / den) * Eigen::Vector3d(e1 * c, e1 * s, e2);
  out.v[1] = (1.0 / den) * Eigen::Vector3d(-2.0 * freq * e1 * s, 2.0 * freq * e1 * c, 0.0);
  return out;
}

inline SphereValue helicoid_gauss_2x(const Eigen::Vector2d& w) { return helicoid_gauss(w, 2.0); }

enum class ManifoldKind { so3, s2 };

inline std::string_view to_string(ManifoldKind m) { return m == ManifoldKind::so3 ? "so3" : "s2"; }

inline ManifoldKind manifold_from_string(std::string_view s)
{
  if (s == "so3")
    return ManifoldKind::so3;
  if (s == "s2")
    return ManifoldKind::s2;
  throw std::invalid_argument("unknown manifold '" + std::string(s) + "'");
}

enum class TestFunction { so3_simple, so3_oscillatory, so3_constant, helicoid, helicoid_2x, s2_constant };

inline ManifoldKind manifold_of(TestFunction f)
{
  switch (f) {
  case TestFunction::so3_simple:
  case TestFunction::so3_oscillatory:
  case TestFunction::so3_constant:
    return ManifoldKind::so3;
  default:
    return ManifoldKind::s2;
  }
}

inline std::string_view to_string(TestFunction f)
{
  switch (f) {
  case TestFunction::so3_simple:
    return "so3-simple";
  case TestFunction::so3_oscillatory:
    return "so3-oscillatory";
  case TestFunction::so3_constant:
    return "so3-constant";
  case TestFunction::helicoid:
    return "helicoid";
  case TestFunction::helicoid_2x:
    return "helicoid-2x";
  default:
    return "s2-constant";
  }
}

inline TestFunction test_function_from_string(std::string_view s)
{
  for (auto f : {TestFunction::so3_simple, TestFunction::so3_oscillatory, TestFunction::so3_constant,
                 TestFunction::helicoid, TestFunction::helicoid_2x, TestFunction::s2_constant})
    if (to_string(f) == s)
      return f;
  throw std::invalid_argument("unknown test function '" + std::string(s) + "'");
}

/// Value and ambient partials of a registered test function on manifold M.
template <Manifold M>
struct TestValue;

template <>
struct TestValue<SO3>
{
  static So3Value eval(TestFunction f, const Eigen::Vector2d& w)
  {
    switch (f) {
    case TestFunction::so3_simple:
      return so3_simple(w);
    case TestFunction::so3_oscillatory:
      return so3_oscillatory(w);
    case TestFunction::so3_constant:
      return {rodrigues_exp(hat(Eigen::Vector3d(0.3, -0.2, 0.1))), {Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero()}};
    default:
      throw std::invalid_argument("test function is not defined on so3");
    }
  }
};

template <>
struct TestValue<Sphere>
{
  static SphereValue eval(TestFunction f, const Eigen::Vector2d& w)
  {
    switch (f) {
    case TestFunction::helicoid:
      return helicoid_gauss(w);
    case TestFunction::helicoid_2x:
      return helicoid_gauss_2x(w);
    case TestFunction::s2_constant:
      return {Eigen::Vector3d(1.0, 2.0, 2.0) / 3.0, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()}};
    default:
      throw std::invalid_argument("test function is not defined on s2");
    }
  }
};

/// Input sanitation shared by benchmark generation and file parsing, so both
/// paths feed identical bits to the fit.
inline constexpr double kRotationAcceptTolerance = 1e-8;
inline constexpr double kSphereAcceptTolerance = 1e-8;

template <Manifold M>
double accept_tolerance()
{
  if constexpr (std::is_same_v<M, SO3>)
    return kRotationAcceptTolerance;
  else
    return kSphereAcceptTolerance;
}

/// Sample a test function on the rows of `grid`.
template <Manifold M>
std::vector<ManifoldSample<M>> sample_function(TestFunction f, const Eigen::Ref<const Eigen::MatrixXd>& grid)
{
  std::vector<ManifoldSample<M>> out;
  out.reserve(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index j = 0; j < grid.rows(); ++j) {
    const Eigen::Vector2d w = grid.row(j).transpose();
    const auto tv = TestValue<M>::eval(f, w);
    ManifoldSample<M> s;
    s.omega = w;
    s.p = M::project(tv.p, accept_tolerance<M>());
    for (const auto& v : tv.v)
      s.derivs.push_back(M::from_ambient(s.p, v));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark cases

struct BenchmarkCase
{
  int table = 0; // 0 for ad-hoc cases
  TestFunction function = TestFunction::so3_simple;
  SamplingPlan plan;
  int degree = 6;
  bool with_derivatives = true;
  int test_per_axis = 40;           // 40 x 40 = 1600 test points
  bool random_test_points = false;  // uniform random instead of a grid
  std::uint64_t seed = 0;
  double fd_step = kReportFdStep;
  double transport_step = kTransportStep;

  ManifoldKind manifold() const { return manifold_of(function); }
  std::size_t test_count() const { return static_cast<std::size_t>(test_per_axis) * static_cast<std::size_t>(test_per_axis); }
};

inline constexpr int kTableCount = 8;

/// The registered benchmark tables 1..8.
inline BenchmarkCase table_case(int id)
{
  BenchmarkCase c;
  c.table = id;
  switch (id) {
  case 1:
  case 2:
    c.function = TestFunction::so3_simple;
    c.plan = {GridKind::uniform, 7, -0.5, 0.5};
    c.degree = 6;
    break;
  case 3:
    c.function = TestFunction::so3_oscillatory;
    c.plan = {GridKind::chebyshev_first_kind, 10, -0.5, 0.5};
    c.degree = 20;
    break;
  case 4:
    c.function = TestFunction::so3_oscillatory;
    c.plan = {GridKind::chebyshev_first_kind, 15, -0.5, 0.5};
    c.degree = 20;
    break;
  case 5:
  case 6:
    c.function = TestFunction::helicoid;
    c.plan = {GridKind::uniform, 8, -0.5, 0.5};
    c.degree = 15;
    break;
  case 7:
  case 8:
    c.function = TestFunction::helicoid_2x;
    c.plan = {GridKind::chebyshev_second_kind, 10, -1.0, 1.0};
    c.degree = 15;
    break;
  default:
    throw std::out_of_range("table id must lie in 1.." + std::to_string(kTableCount));
  }
  c.with_derivatives = (id % 2) == 1;
  return c;
}

/// Reference avg error for each table.
inline double reference_avg_error(int id)
{
  static constexpr double ref[] = {1.7312e-12, 4.0359e-12, 4.5319e-05, 3.7499e-04,
                                   4.6558e-10, 7.0428e-06, 8.9908e-06, 3.3172e-04};
  if (id < 1 || id > kTableCount)
    throw std::out_of_range("table id must lie in 1.." + std::to_string(kTableCount));
  return ref[id - 1];
}

/// Test points for a case: a test_per_axis^2 uniform grid over the plan's
/// box, or the same number of uniform random points when requested.
inline Eigen::MatrixXd test_points(const BenchmarkCase& c)
{
  if (!c.random_test_points)
    return SamplingPlan{GridKind::uniform, c.test_per_axis, c.plan.a, c.plan.b}.grid();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(c.plan.a, c.plan.b);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(c.test_count()), 2);
  for (Eigen::Index j = 0; j < g.rows(); ++j) {
    const double x = u(rng);
    const double y = u(rng);
    g.row(j) << x, y;
  }
  return g;
}

struct CaseReport
{
  int table = 0;
  std::string manifold;
  std::string function;
  std::string grid;
  int per_axis = 0;
  int degree = 0;
  bool with_derivatives = false;
  std::size_t sample_count = 0;
  std::size_t basis_size = 0;
  std::size_t rank = 0;
  std::size_t observed_rows = 0;
  double offline_time = 0.0;
  double online_time_per_query = 0.0;
  double avg_err = 0.0;
  double max_err = 0.0;
  double fd_err_d1 = 0.0;
  double fd_err_d2 = 0.0;
  double max_frobenius_err = 0.0;
  double tangent_sup_err = 0.0;
  double orthogonality_err = 0.0;
};

template <Manifold M>
CaseReport run_case_on(const BenchmarkCase& c)
{
  using clock = std::chrono::steady_clock;
  const std::vector<ManifoldSample<M>> samples = sample_function<M>(c.function, c.plan.grid());

  ThiOptions<M> opts;
  opts.transport_step = c.transport_step;
  const auto t0 = clock::now();
  const ThiModel<M> model = thi_fit<M>(samples, static_cast<std::size_t>(c.degree), c.with_derivatives, opts);
  const auto t1 = clock::now();

  const Eigen::MatrixXd tests = test_points(c);
  const auto t2 = clock::now();
  const ThiPrediction<M> timed = thi_eval(model, tests);
  const auto t3 = clock::now();
  (void)timed;

  auto truth = [&](const Eigen::VectorXd& w) { return TestValue<M>::eval(c.function, Eigen::Vector2d(w)).p; };
  const ErrorMetrics em = error_report(model, truth, tests, c.fd_step);

  CaseReport r;
  r.table = c.table;
  r.manifold = std::string(M::name);
  r.function = std::string(to_string(c.function));
  r.grid = std::string(to_string(c.plan.kind));
  r.per_axis = c.plan.per_axis;
  r.degree = c.degree;
  r.with_derivatives = c.with_derivatives;
  r.sample_count = samples.size();
  r.basis_size = model.arnoldi.basis.size();
  r.rank = model.arnoldi.rank;
  r.observed_rows = model.arnoldi.selection.observed.size();
  r.offline_time = std::chrono::duration<double>(t1 - t0).count();
  r.online_time_per_query =
      tests.rows() > 0 ? std::chrono::duration<double>(t3 - t2).count() / static_cast<double>(tests.rows()) : 0.0;
  r.avg_err = em.avg_err;
  r.max_err = em.max_err;
  r.fd_err_d1 = em.fd_err_d(0);
  r.fd_err_d2 = em.fd_err_d(1);
  r.max_frobenius_err = em.max_frobenius;
  r.tangent_sup_err = em.tangent_sup_err;
  r.orthogonality_err = orthogonality_error(model.arnoldi);
  return r;
}

/// Fit on the case's sampling plan, evaluate on its test points, report.
inline CaseReport run_case(const BenchmarkCase& c)
{
  if (c.manifold() == ManifoldKind::so3)
    return run_case_on<SO3>(c);
  return run_case_on<Sphere>(c);
}

struct ConvergenceRow
{
  int degree;
  std::size_t points;
  std::size_t rank;
  double avg_err;
  double max_err;
};

/// Maps a degree to the sampling plan used at that degree.
using PlanFamily = std::function<SamplingPlan(int degree)>;

/// run_case over increasing degrees; the plan is `base.plan` unless a family
/// is given. Every degree needs at least as many observed rows as columns.
inline std::vector<ConvergenceRow> convergence_study(const BenchmarkCase& base, const std::vector<int>& degrees,
                                                     const PlanFamily& plans = {})
{
  std::vector<ConvergenceRow> rows;
  int last = -1;
  for (int n : degrees) {
    if (n <= last)
      throw std::invalid_argument("convergence_study: degrees must be increasing");
    last = n;
    BenchmarkCase c = base;
    c.degree = n;
    if (plans)
      c.plan = plans(n);
    const std::size_t m = static_cast<std::size_t>(c.plan.per_axis) * static_cast<std::size_t>(c.plan.per_axis);
    const std::size_t observed = c.with_derivatives ? 3 * m : m;
    if (observed < basis_size(2, static_cast<std::size_t>(n)))
      throw std::invalid_argument("convergence_study: degree " + std::to_string(n) +
                                  " has more basis columns than observed rows");
    const CaseReport r = run_case(c);
    rows.push_back({n, r.sample_count, r.rank, r.avg_err, r.max_err});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report formats

/// "metric,value" rows. The first six are the table metrics.
inline std::string to_csv(const CaseReport& r)
{
  std::ostringstream os;
  os.precision(17);
  os << "metric,value\n";
  os << "offline_time," << r.offline_time << '\n';
  os << "online_time_per_query," << r.online_time_per_query << '\n';
  os << "max_err," << r.max_err << '\n';
  os << "avg_err," << r.avg_err << '\n';
  os << "fd_err_d1," << r.fd_err_d1 << '\n';
  os << "fd_err_d2," << r.fd_err_d2 << '\n';
  os << "rank," << r.rank << '\n';
  os << "basis_size," << r.basis_size << '\n';
  os << "sample_count," << r.sample_count << '\n';
  os << "observed_rows," << r.observed_rows << '\n';
  os << "max_frobenius_err," << r.max_frobenius_err << '\n';
  os << "tangent_sup_err," << r.tangent_sup_err << '\n';
  os << "orthogonality_err," << r.orthogonality_err << '\n';
  return os.str();
}

inline nlohmann::json to_json(const CaseReport& r)
{
  return nlohmann::json{{"table", r.table},
                        {"manifold", r.manifold},
                        {"function", r.function},
                        {"grid", r.grid},
                        {"per_axis", r.per_axis},
                        {"degree", r.degree},
                        {"with_derivatives", r.with_derivatives},
                        {"sample_count", r.sample_count},
                        {"basis_size", r.basis_size},
                        {"rank", r.rank},
                        {"observed_rows", r.observed_rows},
                        {"offline_time", r.offline_time},
                        {"online_time_per_query", r.online_time_per_query},
                        {"avg_err", r.avg_err},
                        {"max_err", r.max_err},
                        {"fd_err_d1", r.fd_err_d1},
                        {"fd_err_d2", r.fd_err_d2},
                        {"max_frobenius_err", r.max_frobenius_err},
                        {"tangent_sup_err", r.tangent_sup_err},
                        {"orthogonality_err", r.orthogonality_err}};
}

} // namespace thi

#endif // THI_EXPERIMENTS_HPP
