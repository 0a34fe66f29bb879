#ifndef THI_POLYBASIS_HPP
#define THI_POLYBASIS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace thi {

/// Exponent vector of a monomial x^alpha in d variables.
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& alpha)
{
  int s = 0;
  for (int a : alpha)
    s += a;
  return s;
}

/// Grevlex comparison for two exponent vectors of equal length.
/// Returns true when a precedes b in the basis list: lower total degree
/// first, and within a degree the grevlex-larger monomial first (x1 > x2 > ...).
inline bool grevlex_before(const MultiIndex& a, const MultiIndex& b)
{
  const int da = total_degree(a);
  const int db = total_degree(b);
  if (da != db)
    return da < db;
  for (std::size_t k = a.size(); k-- > 0;) {
    if (a[k] != b[k])
      return a[k] < b[k];
  }
  return false;
}

/// Number of stacked derivative slots for a given order.
///
/// Slot layout: value, then d first partials, then the d(d+1)/2 second
/// partials d_jk (j <= k) in upper-triangular row-major order.
struct DerivativeOrder
{
  int order = 0;
  std::size_t dim = 1;

  DerivativeOrder() = default;
  DerivativeOrder(int order_, std::size_t dim_) : order(order_), dim(dim_)
  {
    if (order < 0 || order > 2)
      throw std::invalid_argument("derivative order must be 0, 1 or 2");
    if (dim == 0)
      throw std::invalid_argument("dimension must be at least 1");
  }

  std::size_t stacked_dim() const { return slots_for(order, dim); }

  static std::size_t slots_for(int order, std::size_t d)
  {
    switch (order) {
    case 0:
      return 1;
    case 1:
      return 1 + d;
    default:
      return 1 + d + d * (d + 1) / 2;
    }
  }

  /// Slot of the first partial d_j (0-based coordinate).
  static std::size_t first_slot(std::size_t j) { return 1 + j; }

  /// Slot of the second partial d_jk (0-based, any order of j and k).
  static std::size_t second_slot(std::size_t d, std::size_t j, std::size_t k)
  {
    if (j > k)
      std::swap(j, k);
    // rows 0..j-1 of the upper triangle hold d + (d-1) + ... entries
    const std::size_t before = j * d - j * (j - 1) / 2;
    return 1 + d + before + (k - j);
  }

  friend bool operator==(const DerivativeOrder&, const DerivativeOrder&) = default;
};

/// binomial(n + d, d), or throws std::overflow_error if it does not fit an int.
inline std::size_t basis_size(std::size_t d, std::size_t n)
{
  if (n == 0)
    return 1;
  // the result is at least max(n, d) + 1, and bounding both keeps c * (n + k) below 2^63
  const auto limit = static_cast<std::uint64_t>(std::numeric_limits<int>::max());
  if (n >= limit || d >= limit)
    throw std::overflow_error("polynomial basis dimension exceeds representable size");
  std::uint64_t c = 1;
  for (std::size_t k = 1; k <= d; ++k) {
    c = c * (n + k) / k; // exact: c * (n+k) is divisible by k at every step
    if (c > limit)
      throw std::overflow_error("polynomial basis dimension exceeds representable size");
  }
  return static_cast<std::size_t>(c);
}

/// Parent decomposition phi_i = x_u * phi_s.
struct Parent
{
  std::size_t s; // basis index of the parent
  std::size_t u; // coordinate
  friend bool operator==(const Parent&, const Parent&) = default;
};

/// Monomials of total degree <= n in d variables, in grevlex order, with the
/// parent links that drive the Arnoldi recurrence. Immutable once built.
///
/// The public index contract is 1-based (phi_1 is the constant); the
/// `*_zero_based` accessors serve the numerical kernels.
class MonomialBasis
{
public:
  MonomialBasis() = default;

  std::size_t dim() const { return dim_; }
  std::size_t degree() const { return degree_; }
  std::size_t size() const { return indices_.size(); }

  /// Exponent vector of phi_i, 1-based.
  const MultiIndex& index(std::size_t i) const { return indices_.at(i - 1); }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  /// (s_i, u_i) for 2 <= i <= g, both 1-based.
  Parent parent_of(std::size_t i) const
  {
    if (i < 2 || i > size())
      throw std::out_of_range("parent_of: index must lie in 2..g");
    const Parent& p = parents_[i - 1];
    return {p.s + 1, p.u + 1};
  }

  /// Parent of column i (0-based, i >= 1) with 0-based s and u.
  const Parent& parent_zero_based(std::size_t i) const { return parents_[i]; }

  friend MonomialBasis enumerate_basis(std::size_t d, std::size_t n);

private:
  std::size_t dim_ = 0;
  std::size_t degree_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<Parent> parents_; // parents_[0] unused
};

/// Build the grevlex basis of P_{d,n} and precompute all parent links.
inline MonomialBasis enumerate_basis(std::size_t d, std::size_t n)
{
  if (d == 0)
    throw std::invalid_argument("enumerate_basis: dimension must be at least 1");
  const std::size_t g = basis_size(d, n);

  MonomialBasis basis;
  basis.dim_ = d;
  basis.degree_ = n;
  basis.indices_.reserve(g);

  // all exponent vectors with total degree <= n, odometer style
  MultiIndex alpha(d, 0);
  for (;;) {
    basis.indices_.push_back(alpha);
    std::size_t k = 0;
    for (; k < d; ++k) {
      ++alpha[k];
      if (static_cast<std::size_t>(total_degree(alpha)) <= n)
        break;
      alpha[k] = 0;
    }
    if (k == d)
      break;
  }
  std::sort(basis.indices_.begin(), basis.indices_.end(), grevlex_before);

  std::map<MultiIndex, std::size_t> position;
  for (std::size_t i = 0; i < g; ++i)
    position.emplace(basis.indices_[i], i);

  basis.parents_.assign(g, Parent{0, 0});
  for (std::size_t i = 1; i < g; ++i) {
    Parent best{g, 0};
    MultiIndex beta = basis.indices_[i];
    for (std::size_t u = 0; u < d; ++u) {
      if (beta[u] == 0)
        continue;
      --beta[u];
      const std::size_t j = position.at(beta);
      if (j < best.s)
        best = {j, u};
      ++beta[u];
    }
    basis.parents_[i] = best;
  }
  return basis;
}

/// Free-function form of MonomialBasis::parent_of (1-based).
inline Parent parent_of(const MonomialBasis& basis, std::size_t i)
{
  return basis.parent_of(i);
}

} // namespace thi

#endif // THI_POLYBASIS_HPP
