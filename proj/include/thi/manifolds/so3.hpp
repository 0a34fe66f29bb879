#ifndef THI_MANIFOLDS_SO3_HPP
#define THI_MANIFOLDS_SO3_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "thi/errors.hpp"
#include "thi/manifolds/matrix_exp.hpp"
#include "thi/manifolds/sphere.hpp"

namespace thi {

/// Nearest rotation to m in the Frobenius sense (polar factor).
inline Eigen::Matrix3d polar_project(const Eigen::Matrix3d& m)
{
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0)
    u.col(2) *= -1.0;
  return u * v.transpose();
}

inline double orthogonality_defect(const Eigen::Matrix3d& r)
{
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

/// Rotation angle of r in [0, pi], atan2 form.
inline double rotation_angle(const Eigen::Matrix3d& r)
{
  const double s = vee(r).norm(); // = sin(theta) for the skew part (r - r^T)/2
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

/// Rotation group SO(3). Tangent vectors at q are stored base-relative as the
/// skew matrix Omega = q^T V, so Exp_q(Omega) = q expm(Omega).
///
/// The metric is <A, B> = tr(A^T B) / 2, under which the generators hat(e_k)
/// are orthonormal and the geodesic distance is the rotation angle.
struct SO3
{
  using Point = Eigen::Matrix3d;
  using Tangent = Eigen::Matrix3d;

  static constexpr std::string_view name = "so3";
  static constexpr int tangent_dim = 3;
  static constexpr int ambient_size = 9;

  static Point exp(const Point& q, const Tangent& omega)
  {
    Point p = q * rodrigues_exp(omega);
    if (orthogonality_defect(p) > 1e-12)
      p = polar_project(p);
    return p;
  }

  static Tangent log(const Point& q, const Point& p)
  {
    const Eigen::Matrix3d r = q.transpose() * p;
    const Eigen::Vector3d w = vee(r);
    const double s = w.norm();
    const double c = 0.5 * (r.trace() - 1.0);
    const double theta = std::atan2(s, c);
    if (theta > std::numbers::pi - kAntipodalMargin)
      throw CutLocusError("so3 log: rotation angle " + std::to_string(theta) + " is at the cut locus");
    double scale;
    if (theta < 1e-4) {
      const double t2 = theta * theta;
      scale = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
    } else {
      scale = theta / s;
    }
    return hat(scale * w);
  }

  static double distance(const Point& p, const Point& q) { return rotation_angle(p.transpose() * q); }
  static double frobenius_distance(const Point& p, const Point& q) { return (p - q).norm(); }

  static double norm(const Point&, const Tangent& omega) { return vee(omega).norm(); }
  static Tangent zero_tangent(const Point&) { return Tangent::Zero(); }

  static Eigen::Vector3d flatten(const Point&, const Tangent& omega) { return vee(omega); }
  static Tangent unflatten(const Point&, const Eigen::Vector3d& f) { return hat(f); }

  /// Coordinates along the generators hat(e_1), hat(e_2), hat(e_3).
  static Eigen::Matrix3d default_frame(const Point&) { return Eigen::Matrix3d::Identity(); }

  static Eigen::VectorXd embed(const Point& p)
  {
    Eigen::VectorXd e(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        e(3 * i + j) = p(i, j);
    return e;
  }

  static Point from_embedded(const Eigen::Ref<const Eigen::VectorXd>& e)
  {
    Point p;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        p(i, j) = e(3 * i + j);
    return p;
  }

  /// Ambient tangent V at p to its base-relative skew form.
  static Tangent from_ambient(const Point& p, const Eigen::Matrix3d& v)
  {
    const Eigen::Matrix3d omega = p.transpose() * v;
    return 0.5 * (omega - omega.transpose());
  }
  static Eigen::Matrix3d to_ambient(const Point& p, const Tangent& omega) { return p * omega; }

  /// Accept rotations within `tol` of orthogonality; re-project when the
  /// defect exceeds 1e-12.
  static Point project(const Point& p, double tol)
  {
    const double err = orthogonality_defect(p);
    if (!(err <= tol) || p.determinant() <= 0.0)
      throw ConstraintViolation("rotation has |R^T R - I|_max = " + std::to_string(err) +
                                " (tolerance " + std::to_string(tol) + ") or non-positive determinant");
    return err > 1e-12 ? polar_project(p) : p;
  }

  static bool is_valid(const Point& p, double tol = 1e-10)
  {
    return orthogonality_defect(p) <= tol && std::abs(p.determinant() - 1.0) <= tol;
  }
  static bool is_tangent(const Point&, const Tangent& omega, double tol = 1e-10)
  {
    return (omega + omega.transpose()).cwiseAbs().maxCoeff() <= tol;
  }
};

inline Eigen::Matrix3d so3_expmap(const Eigen::Matrix3d& q, const Eigen::Matrix3d& omega) { return SO3::exp(q, omega); }
inline Eigen::Matrix3d so3_logmap(const Eigen::Matrix3d& q, const Eigen::Matrix3d& p) { return SO3::log(q, p); }

} // namespace thi

#endif // THI_MANIFOLDS_SO3_HPP
