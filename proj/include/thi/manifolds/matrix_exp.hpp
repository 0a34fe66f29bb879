#ifndef THI_MANIFOLDS_MATRIX_EXP_HPP
#define THI_MANIFOLDS_MATRIX_EXP_HPP

#include <cmath>

#include <Eigen/Dense>

namespace thi {

/// General matrix exponential: scaling and squaring with the degree-13 Pade
/// approximant (Higham 2005 coefficients).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>
matrix_exp(const Eigen::MatrixBase<Derived>& a_in)
{
  using Mat = Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  Mat a = a_in;
  const Eigen::Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0)
    return Mat::Identity(a.rows(), a.cols());
  int squarings = 0;
  if (norm1 > theta13)
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  if (squarings > 0)
    a /= std::ldexp(1.0, squarings);

  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const Mat u = a * u_inner;
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k)
    r = (r * r).eval();
  return r;
}

/// Skew matrix of w: hat(w) y = w x y.
inline Eigen::Matrix3d hat(const Eigen::Vector3d& w)
{
  Eigen::Matrix3d m;
  m << 0.0, -w(2), w(1), w(2), 0.0, -w(0), -w(1), w(0), 0.0;
  return m;
}

/// Axial vector of the skew part of m.
inline Eigen::Vector3d vee(const Eigen::Matrix3d& m)
{
  return 0.5 * Eigen::Vector3d(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

/// exp of a skew matrix via the Rodrigues closed form.
inline Eigen::Matrix3d rodrigues_exp(const Eigen::Matrix3d& skew)
{
  const Eigen::Vector3d w = vee(skew);
  const double theta = w.norm();
  const Eigen::Matrix3d k = hat(w);
  double a, c;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    c = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + c * k * k;
}

/// Directional derivative d(exp)(X)[E] from the top-right block of
/// exp([[X, E], [0, X]]).
inline Eigen::Matrix3d dexp_mathias(const Eigen::Matrix3d& x, const Eigen::Matrix3d& e)
{
  Eigen::Matrix<double, 6, 6> block = Eigen::Matrix<double, 6, 6>::Zero();
  block.topLeftCorner<3, 3>() = x;
  block.topRightCorner<3, 3>() = e;
  block.bottomRightCorner<3, 3>() = x;
  const Eigen::Matrix<double, 6, 6> ex = matrix_exp(block);
  return ex.topRightCorner<3, 3>();
}

} // namespace thi

#endif // THI_MANIFOLDS_MATRIX_EXP_HPP
