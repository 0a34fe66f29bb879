#ifndef THI_GARNOLDI_HPP
#define THI_GARNOLDI_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thi/errors.hpp"
#include "thi/polybasis.hpp"

namespace thi {

/// One measured row of the stacked evaluation: derivative slot at a node.
struct ObservedRow
{
  std::size_t node;
  std::size_t slot;
  friend bool operator==(const ObservedRow&, const ObservedRow&) = default;
};

/// Which rows of the stacked evaluation are measured. Induces the selection
/// matrix L and G = L^T L; neither is ever formed.
struct SelectionSpec
{
  std::size_t node_count = 0;
  DerivativeOrder deriv;
  std::vector<ObservedRow> observed;

  SelectionSpec() = default;
  SelectionSpec(std::size_t m, DerivativeOrder order, std::vector<ObservedRow> rows)
      : node_count(m), deriv(order), observed(std::move(rows))
  {
    validate();
  }

  /// L = I: every slot at every node, slot-major (values first).
  static SelectionSpec full(std::size_t m, DerivativeOrder order)
  {
    return up_to_slot(m, order, order.stacked_dim());
  }

  /// Function values only; the derivative rows are carried but unobserved.
  static SelectionSpec values_only(std::size_t m, DerivativeOrder order)
  {
    return up_to_slot(m, order, 1);
  }

  std::size_t stacked_dim() const { return deriv.stacked_dim(); }
  std::size_t total_rows() const { return node_count * stacked_dim(); }

  /// Row of (node, slot) in the stacked layout: derivative blocks of m rows.
  std::size_t row_of(const ObservedRow& r) const { return r.slot * node_count + r.node; }

  std::vector<Eigen::Index> observed_rows() const
  {
    std::vector<Eigen::Index> rows;
    rows.reserve(observed.size());
    for (const auto& r : observed)
      rows.push_back(static_cast<Eigen::Index>(row_of(r)));
    return rows;
  }

  bool is_full() const
  {
    if (observed.size() != total_rows())
      return false;
    for (std::size_t i = 0; i < observed.size(); ++i)
      if (row_of(observed[i]) != i)
        return false;
    return true;
  }

  void validate() const
  {
    const std::size_t dt = stacked_dim();
    for (const auto& r : observed) {
      if (r.node >= node_count || r.slot >= dt)
        throw std::out_of_range("SelectionSpec: observed row (node " + std::to_string(r.node) +
                                ", slot " + std::to_string(r.slot) + ") out of bounds");
    }
  }

private:
  static SelectionSpec up_to_slot(std::size_t m, DerivativeOrder order, std::size_t slots)
  {
    std::vector<ObservedRow> rows;
    rows.reserve(m * slots);
    for (std::size_t s = 0; s < slots; ++s)
      for (std::size_t j = 0; j < m; ++j)
        rows.push_back({j, s});
    return SelectionSpec(m, order, std::move(rows));
  }
};

/// Action of the lower-triangular operator X_u on one stacked vector at a
/// point whose u-th coordinate is xu: multiplication by x_u with the product
/// rule applied to every derivative slot. `in` and `out` must not alias.
inline void apply_x_operator(std::size_t u, double xu, std::size_t d, int order,
                             std::span<const double> in, std::span<double> out)
{
  out[0] = xu * in[0];
  if (order >= 1) {
    for (std::size_t j = 0; j < d; ++j)
      out[1 + j] = xu * in[1 + j] + (j == u ? in[0] : 0.0);
  }
  if (order >= 2) {
    std::size_t slot = 1 + d;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = j; k < d; ++k, ++slot) {
        double v = xu * in[slot];
        if (j == u)
          v += in[1 + k];
        if (k == u)
          v += in[1 + j];
        out[slot] = v;
      }
    }
  }
}

/// Operator form: coordinate u at point x.
struct XOperator
{
  std::size_t u;
  Eigen::VectorXd x;
  DerivativeOrder deriv;

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& stacked) const
  {
    if (static_cast<std::size_t>(stacked.size()) != deriv.stacked_dim())
      throw std::invalid_argument("XOperator: stacked vector has wrong length");
    Eigen::VectorXd out(stacked.size());
    apply_x_operator(u, x(static_cast<Eigen::Index>(u)), deriv.dim, deriv.order,
                     std::span<const double>(stacked.data(), stacked.size()),
                     std::span<double>(out.data(), out.size()));
    return out;
  }
};

inline Eigen::VectorXd apply_x_operator(const XOperator& op, const Eigen::VectorXd& stacked)
{
  return op.apply(stacked);
}

/// Stacked evaluation of t basis columns at m points. Row slot*m + j holds
/// the derivative slot `slot` at point j.
struct StackedEvaluation
{
  std::size_t point_count = 0;
  std::size_t stacked_dim = 1;
  Eigen::MatrixXd values;

  double at(std::size_t point, std::size_t slot, std::size_t column) const
  {
    return values(static_cast<Eigen::Index>(slot * point_count + point),
                  static_cast<Eigen::Index>(column));
  }
};

/// Result of the fitting stage: recurrence coefficients R (t x t, upper
/// triangular) plus the G-orthonormal training evaluation Q.
struct GArnoldiModel
{
  MonomialBasis basis;
  DerivativeOrder deriv;
  Eigen::MatrixXd rmat;
  std::size_t rank = 0;
  Eigen::MatrixXd qmat; // empty for a model restored from disk
  SelectionSpec selection;

  /// A = L Q, the observed rows of Q.
  Eigen::MatrixXd observed_q() const
  {
    return qmat(selection.observed_rows(), Eigen::all);
  }
};

namespace detail {

inline double g_norm(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows)
{
  double s = 0.0;
  for (Eigen::Index r : rows)
    s += v(r) * v(r);
  return std::sqrt(s);
}

inline void gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows,
                   Eigen::Ref<Eigen::VectorXd> out)
{
  for (std::size_t l = 0; l < rows.size(); ++l)
    out(static_cast<Eigen::Index>(l)) = v(rows[l]);
}

/// Apply S_u (block-diagonal X_u over all points) to a stacked column.
inline void apply_s_operator(const Eigen::Ref<const Eigen::MatrixXd>& points, std::size_t u,
                             int order, const Eigen::VectorXd& in, Eigen::VectorXd& out)
{
  const auto m = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  const std::size_t dt = DerivativeOrder::slots_for(order, d);
  std::vector<double> a(dt), b(dt);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t s = 0; s < dt; ++s)
      a[s] = in(static_cast<Eigen::Index>(s * m + j));
    apply_x_operator(u, points(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(u)), d,
                     order, a, b);
    for (std::size_t s = 0; s < dt; ++s)
      out(static_cast<Eigen::Index>(s * m + j)) = b[s];
  }
}

} // namespace detail

/// Relative breakdown threshold on ||q_i||_G / ||k_i||_G.
inline constexpr double kBreakdownTolerance = 1e-14;

/// Fitting stage. Builds Q and R column by column from k_i = X_{u_i} q_{s_i},
/// with two classical Gram-Schmidt passes in the G-inner product per column.
/// On breakdown the rank is truncated to the columns built so far.
inline GArnoldiModel fit(const Eigen::Ref<const Eigen::MatrixXd>& nodes, const MonomialBasis& basis,
                         const SelectionSpec& selection)
{
  const auto m = static_cast<std::size_t>(nodes.rows());
  const std::size_t d = basis.dim();
  if (m == 0)
    throw std::invalid_argument("fit: at least one node is required");
  if (static_cast<std::size_t>(nodes.cols()) != d)
    throw std::invalid_argument("fit: node dimension does not match the basis");
  if (selection.node_count != m || selection.deriv.dim != d)
    throw std::invalid_argument("fit: selection is inconsistent with the nodes");
  selection.validate();

  const int order = selection.deriv.order;
  const std::size_t g = basis.size();
  const auto rows = static_cast<Eigen::Index>(selection.total_rows());
  const std::vector<Eigen::Index> obs = selection.observed_rows();
  const auto nobs = static_cast<Eigen::Index>(obs.size());

  Eigen::MatrixXd q_all = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(g));
  Eigen::MatrixXd a_all = Eigen::MatrixXd::Zero(nobs, static_cast<Eigen::Index>(g));
  Eigen::MatrixXd r_all = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));

  // constant polynomial: value rows 1, derivative rows 0
  Eigen::VectorXd q = Eigen::VectorXd::Zero(rows);
  q.head(static_cast<Eigen::Index>(m)).setOnes();
  const double e_norm = detail::g_norm(q, obs);
  if (!(e_norm > 0.0) || !std::isfinite(e_norm))
    throw DegenerateInput("fit: the constant column has zero G-norm (no function values observed)");
  r_all(0, 0) = e_norm;
  q_all.col(0) = q / e_norm;
  detail::gather(q_all.col(0), obs, a_all.col(0));

  std::size_t t = g;
  Eigen::VectorXd lq(nobs);
  for (std::size_t i = 1; i < g; ++i) {
    const Parent& par = basis.parent_zero_based(i);
    const auto ii = static_cast<Eigen::Index>(i);
    detail::apply_s_operator(nodes, par.u, order, q_all.col(static_cast<Eigen::Index>(par.s)), q);
    const double k_norm = detail::g_norm(q, obs);

    for (int pass = 0; pass < 2; ++pass) {
      detail::gather(q, obs, lq);
      const Eigen::VectorXd s = a_all.leftCols(ii).transpose() * lq;
      q.noalias() -= q_all.leftCols(ii) * s;
      r_all.col(ii).head(ii) += s;
    }

    const double q_norm = detail::g_norm(q, obs);
    if (!(q_norm > kBreakdownTolerance * k_norm)) {
      t = i;
      break;
    }
    r_all(ii, ii) = q_norm;
    q_all.col(ii) = q / q_norm;
    detail::gather(q_all.col(ii), obs, a_all.col(ii));
  }

  GArnoldiModel model;
  model.basis = basis;
  model.deriv = selection.deriv;
  model.rank = t;
  const auto tt = static_cast<Eigen::Index>(t);
  model.rmat = r_all.topLeftCorner(tt, tt);
  model.qmat = q_all.leftCols(tt);
  model.selection = selection;
  return model;
}

/// Evaluate all t basis columns (value and derivatives up to `order`) at one
/// point. Result is stacked_dim x t, column i holding xi_i.
inline void evaluate_point(const GArnoldiModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           int order, Eigen::MatrixXd& xi)
{
  const std::size_t d = model.basis.dim();
  const std::size_t dt = DerivativeOrder::slots_for(order, d);
  const auto t = static_cast<Eigen::Index>(model.rank);
  xi.setZero(static_cast<Eigen::Index>(dt), t);
  if (t == 0)
    return;
  xi(0, 0) = 1.0 / model.rmat(0, 0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(dt));
  for (Eigen::Index i = 1; i < t; ++i) {
    const Parent& par = model.basis.parent_zero_based(static_cast<std::size_t>(i));
    const auto s = static_cast<Eigen::Index>(par.s);
    apply_x_operator(par.u, x(static_cast<Eigen::Index>(par.u)), d, order,
                     std::span<const double>(xi.col(s).data(), dt), std::span<double>(w.data(), dt));
    for (Eigen::Index k = 0; k < i; ++k)
      w -= model.rmat(k, i) * xi.col(k);
    xi.col(i) = w / model.rmat(i, i);
  }
}

/// Evaluation stage at a batch of query points (rows of `queries`).
/// `order` defaults to the model's derivative order; any order up to 2 is
/// valid since the recurrence for lower slots never reads higher ones.
inline StackedEvaluation evaluate_basis(const GArnoldiModel& model,
                                        const Eigen::Ref<const Eigen::MatrixXd>& queries, int order = -1)
{
  if (model.rank < 1)
    throw std::invalid_argument("evaluate_basis: model has rank 0");
  if (static_cast<std::size_t>(queries.cols()) != model.basis.dim())
    throw std::invalid_argument("evaluate_basis: query dimension does not match the model");
  if (order < 0)
    order = model.deriv.order;
  const auto m = static_cast<std::size_t>(queries.rows());
  const std::size_t dt = DerivativeOrder::slots_for(order, model.basis.dim());

  StackedEvaluation out;
  out.point_count = m;
  out.stacked_dim = dt;
  out.values.resize(static_cast<Eigen::Index>(m * dt), static_cast<Eigen::Index>(model.rank));
  Eigen::MatrixXd xi;
  for (std::size_t j = 0; j < m; ++j) {
    evaluate_point(model, queries.row(static_cast<Eigen::Index>(j)).transpose(), order, xi);
    for (std::size_t s = 0; s < dt; ++s)
      out.values.row(static_cast<Eigen::Index>(s * m + j)) = xi.row(static_cast<Eigen::Index>(s));
  }
  return out;
}

/// c = A^T b with A = L Q. `observations` may hold several right-hand sides
/// as columns, ordered like selection.observed.
inline Eigen::MatrixXd solve_coefficients(const GArnoldiModel& model,
                                          const Eigen::Ref<const Eigen::MatrixXd>& observations)
{
  if (model.qmat.size() == 0)
    throw std::logic_error("solve_coefficients: model carries no Q (restored models cannot be refit)");
  if (static_cast<std::size_t>(observations.rows()) != model.selection.observed.size())
    throw std::invalid_argument("solve_coefficients: observation count does not match the selection");
  return model.observed_q().transpose() * observations;
}

/// Value and derivatives of sum_i c_i xi_i at a single point, for each
/// coefficient column: stacked_dim x coeffs.cols().
inline Eigen::MatrixXd predict_point(const GArnoldiModel& model, const Eigen::Ref<const Eigen::MatrixXd>& coeffs,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, int order, Eigen::MatrixXd& xi)
{
  evaluate_point(model, x, order, xi);
  return xi * coeffs;
}

/// Per query (rows), the stacked (value, d_1..d_d, d_11..d_dd) of sum_i c_i xi_i.
inline Eigen::MatrixXd predict(const GArnoldiModel& model, const Eigen::VectorXd& c,
                               const Eigen::Ref<const Eigen::MatrixXd>& queries, int order = -1)
{
  if (static_cast<std::size_t>(c.size()) != model.rank)
    throw std::invalid_argument("predict: coefficient length must equal the model rank");
  if (static_cast<std::size_t>(queries.cols()) != model.basis.dim())
    throw std::invalid_argument("predict: query dimension does not match the model");
  if (order < 0)
    order = model.deriv.order;
  const std::size_t dt = DerivativeOrder::slots_for(order, model.basis.dim());
  Eigen::MatrixXd out(queries.rows(), static_cast<Eigen::Index>(dt));
  Eigen::MatrixXd xi;
  for (Eigen::Index j = 0; j < queries.rows(); ++j)
    out.row(j) = predict_point(model, c, queries.row(j).transpose(), order, xi).transpose();
  return out;
}

/// max |(LQ)^T (LQ) - I|.
inline double orthogonality_error(const GArnoldiModel& model)
{
  const Eigen::MatrixXd a = model.observed_q();
  const Eigen::MatrixXd gram = a.transpose() * a;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

} // namespace thi

#endif // THI_GARNOLDI_HPP
