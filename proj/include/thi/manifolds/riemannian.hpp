#ifndef THI_MANIFOLDS_RIEMANNIAN_HPP
#define THI_MANIFOLDS_RIEMANNIAN_HPP

#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thi/errors.hpp"
#include "thi/manifolds/so3.hpp"
#include "thi/manifolds/sphere.hpp"

namespace thi {

/// What the interpolation pipeline needs from a manifold.
template <typename M>
concept Manifold = requires(const typename M::Point& p, const typename M::Tangent& v, const Eigen::Vector3d& f) {
  { M::exp(p, v) } -> std::convertible_to<typename M::Point>;
  { M::log(p, p) } -> std::convertible_to<typename M::Tangent>;
  { M::distance(p, p) } -> std::convertible_to<double>;
  { M::norm(p, v) } -> std::convertible_to<double>;
  { M::flatten(p, v) } -> std::convertible_to<Eigen::Vector3d>;
  { M::unflatten(p, f) } -> std::convertible_to<typename M::Tangent>;
  { M::embed(p) } -> std::convertible_to<Eigen::VectorXd>;
  M::default_frame(p);
  M::tangent_dim;
};

static_assert(Manifold<Sphere>);
static_assert(Manifold<SO3>);

inline double geodesic_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& q) { return Sphere::distance(p, q); }
inline double geodesic_distance(const Eigen::Matrix3d& p, const Eigen::Matrix3d& q) { return SO3::distance(p, q); }

inline constexpr int kKarcherMaxIterations = 200;
inline constexpr double kKarcherTolerance = 1e-12;

/// Karcher iteration failed to reach the gradient tolerance.
template <Manifold M>
class KarcherNonConvergence : public NumericalFailure
{
public:
  KarcherNonConvergence(typename M::Point last, double gradient_norm)
      : NumericalFailure("karcher mean did not converge: gradient norm " + std::to_string(gradient_norm)),
        last_iterate(std::move(last)), residual(gradient_norm)
  {}
  typename M::Point last_iterate;
  double residual;
};

template <Manifold M>
struct KarcherResult
{
  typename M::Point point;
  double gradient_norm;
  int iterations;
};

/// Riemannian barycenter by the unit-step fixed point q <- Exp_q(mean Log_q p_j),
/// started at the first point.
template <Manifold M>
KarcherResult<M> karcher_mean(std::span<const typename M::Point> points,
                              int max_iterations = kKarcherMaxIterations, double tol = kKarcherTolerance)
{
  if (points.empty())
    throw std::invalid_argument("karcher_mean: no points");
  typename M::Point q = points[0];
  const double inv_k = 1.0 / static_cast<double>(points.size());
  double residual = 0.0;
  for (int it = 0; it <= max_iterations; ++it) {
    typename M::Tangent grad = M::zero_tangent(q);
    for (const auto& p : points)
      grad += M::log(q, p);
    grad *= inv_k;
    residual = M::norm(q, grad);
    if (residual <= tol)
      return {q, residual, it};
    if (it == max_iterations)
      break;
    q = M::exp(q, grad);
  }
  throw KarcherNonConvergence<M>(q, residual);
}

template <Manifold M>
KarcherResult<M> karcher_mean(const std::vector<typename M::Point>& points)
{
  return karcher_mean<M>(std::span<const typename M::Point>(points));
}

inline constexpr double kTransportStep = 1e-5;

/// Central-difference approximation of d(log_{q0})_{p}[v].
template <Manifold M>
typename M::Tangent transport_derivative(const typename M::Point& q0, const typename M::Point& p,
                                         const typename M::Tangent& v, double dt = kTransportStep)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("transport_derivative: step must be positive");
  const typename M::Tangent plus = M::log(q0, M::exp(p, dt * v));
  const typename M::Tangent minus = M::log(q0, M::exp(p, -dt * v));
  return (plus - minus) / (2.0 * dt);
}

} // namespace thi

#endif // THI_MANIFOLDS_RIEMANNIAN_HPP
