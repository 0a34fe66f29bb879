#ifndef THI_MANIFOLDS_SPHERE_HPP
#define THI_MANIFOLDS_SPHERE_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "thi/errors.hpp"

namespace thi {

/// Logs refuse inputs whose angle exceeds pi minus this margin.
inline constexpr double kAntipodalMargin = 1e-6;

/// Unit sphere S^2 in R^3. Points and tangent vectors are ambient 3-vectors.
struct Sphere
{
  using Point = Eigen::Vector3d;
  using Tangent = Eigen::Vector3d;

  static constexpr std::string_view name = "s2";
  static constexpr int tangent_dim = 2;
  static constexpr int ambient_size = 3;

  static Point exp(const Point& q, const Tangent& v)
  {
    const double theta = v.norm();
    if (theta == 0.0)
      return q;
    Point p = std::cos(theta) * q + (std::sin(theta) / theta) * v;
    return p / p.norm();
  }

  static Tangent log(const Point& q, const Point& p)
  {
    const double c = q.dot(p);
    const Eigen::Vector3d r = p - c * q;
    const double s = r.norm();
    const double theta = std::atan2(s, c);
    if (theta > std::numbers::pi - kAntipodalMargin)
      throw CutLocusError("sphere log: points are antipodal (angle " + std::to_string(theta) + ")");
    if (s == 0.0)
      return Tangent::Zero();
    Tangent v = (theta / s) * r;
    return v - q.dot(v) * q;
  }

  /// Great-circle angle, atan2 form (accurate for nearby points).
  static double distance(const Point& p, const Point& q)
  {
    return std::atan2(p.cross(q).norm(), p.dot(q));
  }

  static double norm(const Point&, const Tangent& v) { return v.norm(); }
  static Tangent zero_tangent(const Point&) { return Tangent::Zero(); }

  /// Tangent vector as 3 coordinates in an orthonormal ambient basis.
  static Eigen::Vector3d flatten(const Point&, const Tangent& v) { return v; }
  static Tangent unflatten(const Point&, const Eigen::Vector3d& f) { return f; }

  /// Orthonormal pair completing q, built from its largest-magnitude coordinate.
  static Eigen::Matrix<double, 3, 2> default_frame(const Point& q)
  {
    Eigen::Index big = 0;
    q.cwiseAbs().maxCoeff(&big);
    // pick the axis after the dominant one as the seed
    Eigen::Vector3d seed = Eigen::Vector3d::Zero();
    seed((big + 1) % 3) = 1.0;
    Eigen::Vector3d e1 = seed - q.dot(seed) * q;
    e1.normalize();
    Eigen::Vector3d e2 = q.cross(e1);
    e2.normalize();
    Eigen::Matrix<double, 3, 2> f;
    f.col(0) = e1;
    f.col(1) = e2;
    return f;
  }

  static Eigen::VectorXd embed(const Point& p) { return p; }
  static Tangent from_ambient(const Point& p, const Eigen::Vector3d& a) { return a - p.dot(a) * p; }
  static Eigen::Vector3d to_ambient(const Point&, const Tangent& v) { return v; }

  static Point from_embedded(const Eigen::Ref<const Eigen::VectorXd>& e) { return e.head<3>(); }

  /// Renormalize; reject inputs off the sphere by more than `tol`.
  static Point project(const Point& p, double tol)
  {
    const double err = std::abs(p.norm() - 1.0);
    if (!(err <= tol))
      throw ConstraintViolation("sphere point has |norm - 1| = " + std::to_string(err) + " > tolerance " +
                                std::to_string(tol));
    return err > 0.0 ? Point(p / p.norm()) : p;
  }

  static bool is_valid(const Point& p, double tol = 1e-12) { return std::abs(p.norm() - 1.0) <= tol; }
  static bool is_tangent(const Point& q, const Tangent& v, double tol = 1e-10) { return std::abs(q.dot(v)) <= tol; }
};

inline Eigen::Vector3d sphere_exp(const Eigen::Vector3d& q, const Eigen::Vector3d& v) { return Sphere::exp(q, v); }
inline Eigen::Vector3d sphere_log(const Eigen::Vector3d& q, const Eigen::Vector3d& p) { return Sphere::log(q, p); }

} // namespace thi

#endif // THI_MANIFOLDS_SPHERE_HPP
