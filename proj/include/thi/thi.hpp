#ifndef THI_THI_HPP
#define THI_THI_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "thi/garnoldi.hpp"
#include "thi/manifolds/riemannian.hpp"
#include "thi/parallel.hpp"
#include "thi/polybasis.hpp"

namespace thi {

/// One datum f(omega) = p, optionally with the partials d_i f(omega) as
/// tangent vectors at p (in the manifold's tangent representation).
template <Manifold M>
struct ManifoldSample
{
  Eigen::VectorXd omega;
  typename M::Point p;
  std::vector<typename M::Tangent> derivs;
};

/// Fitted tangent-space interpolant: f_hat(omega) = Exp_{q0}(F * P(omega)),
/// where P stacks one polynomial per tangent coordinate in the frame F.
template <Manifold M>
struct ThiModel
{
  using Frame = Eigen::Matrix<double, 3, M::tangent_dim>;

  typename M::Point base;
  Frame frame;
  GArnoldiModel arnoldi;
  Eigen::MatrixXd coeffs; // rank x tangent_dim
  double karcher_residual = 0.0;

  static constexpr int tangent_dim = M::tangent_dim;
  std::size_t param_dim() const { return arnoldi.basis.dim(); }

  typename M::Tangent tangent_from_coords(const Eigen::Matrix<double, M::tangent_dim, 1>& c) const
  {
    return M::unflatten(base, frame * c);
  }
  Eigen::Matrix<double, M::tangent_dim, 1> coords_of(const typename M::Tangent& v) const
  {
    return frame.transpose() * M::flatten(base, v);
  }
};

template <Manifold M>
struct ThiOptions
{
  double transport_step = kTransportStep;
  /// Orthogonal map applied to the default tangent frame (F <- F * R).
  std::optional<Eigen::Matrix<double, M::tangent_dim, M::tangent_dim>> frame_rotation;
  /// Base point override; by default the Karcher mean of the samples.
  std::optional<typename M::Point> base;
};

/// Pull the samples back to T_{q0}, fit each tangent coordinate with the
/// shared G-Arnoldi basis of total degree `degree`, store the coefficients.
///
/// With `use_derivatives` the selection observes values and first partials;
/// otherwise only values (the basis and stacked layout are unchanged).
template <Manifold M>
ThiModel<M> thi_fit(const std::vector<ManifoldSample<M>>& samples, std::size_t degree, bool use_derivatives,
                    const ThiOptions<M>& opts = {})
{
  if (samples.empty())
    throw std::invalid_argument("thi_fit: no samples");
  const auto d = static_cast<std::size_t>(samples.front().omega.size());
  if (d == 0)
    throw std::invalid_argument("thi_fit: parameter dimension must be at least 1");
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.omega.size()) != d)
      throw std::invalid_argument("thi_fit: samples have inconsistent parameter dimension");
    if (use_derivatives && s.derivs.size() != d)
      throw std::invalid_argument("thi_fit: derivative data requires exactly d tangent vectors per sample");
  }

  ThiModel<M> model;
  if (opts.base) {
    model.base = *opts.base;
  } else {
    std::vector<typename M::Point> points;
    points.reserve(samples.size());
    for (const auto& s : samples)
      points.push_back(s.p);
    const KarcherResult<M> mean = karcher_mean<M>(points);
    model.base = mean.point;
    model.karcher_residual = mean.gradient_norm;
  }
  model.frame = M::default_frame(model.base);
  if (opts.frame_rotation)
    model.frame = model.frame * (*opts.frame_rotation);

  const std::size_t m = samples.size();
  Eigen::MatrixXd nodes(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < m; ++j)
    nodes.row(static_cast<Eigen::Index>(j)) = samples[j].omega.transpose();

  const DerivativeOrder order(1, d);
  const SelectionSpec selection =
      use_derivatives ? SelectionSpec::full(m, order) : SelectionSpec::values_only(m, order);

  // tangent-space data per (node, slot)
  constexpr int k = M::tangent_dim;
  const std::size_t dt = order.stacked_dim();
  std::vector<Eigen::Matrix<double, k, 1>> data(m * dt, Eigen::Matrix<double, k, 1>::Zero());
  for (std::size_t j = 0; j < m; ++j) {
    data[j] = model.coords_of(M::log(model.base, samples[j].p));
    if (use_derivatives) {
      for (std::size_t i = 0; i < d; ++i) {
        const auto moved = transport_derivative<M>(model.base, samples[j].p, samples[j].derivs[i], opts.transport_step);
        data[DerivativeOrder::first_slot(i) * m + j] = model.coords_of(moved);
      }
    }
  }

  const MonomialBasis basis = enumerate_basis(d, degree);
  model.arnoldi = fit(nodes, basis, selection);

  Eigen::MatrixXd b(static_cast<Eigen::Index>(selection.observed.size()), k);
  for (std::size_t l = 0; l < selection.observed.size(); ++l)
    b.row(static_cast<Eigen::Index>(l)) = data[selection.row_of(selection.observed[l])].transpose();
  model.coeffs = solve_coefficients(model.arnoldi, b);
  return model;
}

template <Manifold M>
struct ThiPrediction
{
  std::vector<typename M::Point> points;
  /// Per query, d tangent vectors at the predicted point (only when requested).
  std::vector<std::vector<typename M::Tangent>> derivs;
  /// Per query, the tangent-space prediction w_hat(omega) in frame coordinates.
  std::vector<Eigen::Matrix<double, M::tangent_dim, 1>> tangent_coords;
};

/// f_hat at each query row: Exp_{q0}(w_hat(omega)). With `with_derivatives`
/// also the partials, pushing the polynomial Jacobian through Exp_{q0} by
/// central differences with step `push_step`.
template <Manifold M>
ThiPrediction<M> thi_eval(const ThiModel<M>& model, const Eigen::Ref<const Eigen::MatrixXd>& queries,
                          bool with_derivatives = false, double push_step = kTransportStep)
{
  constexpr int k = M::tangent_dim;
  const auto n = static_cast<std::size_t>(queries.rows());
  const std::size_t d = model.param_dim();
  if (n > 0 && static_cast<std::size_t>(queries.cols()) != d)
    throw std::invalid_argument("thi_eval: query dimension does not match the model");

  ThiPrediction<M> out;
  out.points.resize(n);
  out.tangent_coords.resize(n);
  if (with_derivatives)
    out.derivs.resize(n);
  const int order = with_derivatives ? 1 : 0;

  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd xi;
    for (std::size_t j = begin; j < end; ++j) {
      const Eigen::MatrixXd stacked =
          predict_point(model.arnoldi, model.coeffs, queries.row(static_cast<Eigen::Index>(j)).transpose(), order, xi);
      const Eigen::Matrix<double, k, 1> c = stacked.row(0).transpose();
      const typename M::Tangent w = model.tangent_from_coords(c);
      out.tangent_coords[j] = c;
      out.points[j] = M::exp(model.base, w);
      if (with_derivatives) {
        auto& dj = out.derivs[j];
        dj.reserve(d);
        for (std::size_t i = 0; i < d; ++i) {
          const Eigen::Matrix<double, k, 1> dc = stacked.row(static_cast<Eigen::Index>(1 + i)).transpose();
          const typename M::Tangent dw = model.tangent_from_coords(dc);
          const Eigen::VectorXd ambient = (M::embed(M::exp(model.base, w + push_step * dw)) -
                                           M::embed(M::exp(model.base, w - push_step * dw))) /
                                          (2.0 * push_step);
          dj.push_back(M::from_ambient(out.points[j], M::from_embedded(ambient)));
        }
      }
    }
  });
  return out;
}

/// Accuracy of a model against the true map on a test grid.
struct ErrorMetrics
{
  double avg_err = 0.0;       // mean geodesic distance
  double max_err = 0.0;       // max geodesic distance
  double max_frobenius = 0.0; // max ambient (Frobenius / Euclidean) distance
  std::vector<double> fd_err; // per direction: max-abs difference of central-FD partials
  double tangent_sup_err = 0.0; // max |w_hat - log_{q0} f| in the tangent metric
  double tangent_avg_err = 0.0;

  double fd_err_d(std::size_t i) const { return i < fd_err.size() ? fd_err[i] : 0.0; }
};

inline constexpr double kReportFdStep = 1e-4;

/// Compare the model with `truth` (omega -> Point) at the rows of `test_grid`.
template <Manifold M, typename TruthFn>
ErrorMetrics error_report(const ThiModel<M>& model, TruthFn&& truth, const Eigen::Ref<const Eigen::MatrixXd>& test_grid,
                          double fd_step = kReportFdStep)
{
  const auto n = static_cast<std::size_t>(test_grid.rows());
  const std::size_t d = model.param_dim();
  ErrorMetrics r;
  r.fd_err.assign(d, 0.0);
  if (n == 0)
    return r;

  const ThiPrediction<M> pred = thi_eval(model, test_grid);
  double sum = 0.0, tsum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::VectorXd omega = test_grid.row(static_cast<Eigen::Index>(j)).transpose();
    const typename M::Point f = truth(omega);
    const double e = M::distance(f, pred.points[j]);
    sum += e;
    r.max_err = std::max(r.max_err, e);
    r.max_frobenius = std::max(r.max_frobenius, (M::embed(f) - M::embed(pred.points[j])).norm());
    const typename M::Tangent wt = M::log(model.base, f);
    const double te = M::norm(model.base, model.tangent_from_coords(pred.tangent_coords[j]) - wt);
    tsum += te;
    r.tangent_sup_err = std::max(r.tangent_sup_err, te);
  }
  r.avg_err = sum / static_cast<double>(n);
  r.tangent_avg_err = tsum / static_cast<double>(n);

  for (std::size_t i = 0; i < d; ++i) {
    Eigen::MatrixXd plus = test_grid, minus = test_grid;
    plus.col(static_cast<Eigen::Index>(i)).array() += fd_step;
    minus.col(static_cast<Eigen::Index>(i)).array() -= fd_step;
    const ThiPrediction<M> pp = thi_eval(model, plus);
    const ThiPrediction<M> pm = thi_eval(model, minus);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::VectorXd dtrue =
          (M::embed(truth(Eigen::VectorXd(plus.row(static_cast<Eigen::Index>(j)).transpose()))) -
           M::embed(truth(Eigen::VectorXd(minus.row(static_cast<Eigen::Index>(j)).transpose())))) /
          (2.0 * fd_step);
      const Eigen::VectorXd dmodel = (M::embed(pp.points[j]) - M::embed(pm.points[j])) / (2.0 * fd_step);
      worst = std::max(worst, (dtrue - dmodel).cwiseAbs().maxCoeff());
    }
    r.fd_err[i] = worst;
  }
  return r;
}

} // namespace thi

#endif // THI_THI_HPP
