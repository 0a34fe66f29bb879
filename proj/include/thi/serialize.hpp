#ifndef THI_SERIALIZE_HPP
#define THI_SERIALIZE_HPP

#include <array>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thi/thi.hpp"

namespace thi {

/// Model file identification. Version bumps on any layout change.
inline constexpr const char* kModelFormat = "thi-model";
inline constexpr int kModelVersion = 1;

/// Model document is malformed or does not match the requested manifold.
class ModelFormatError : public std::runtime_error
{
public:
  explicit ModelFormatError(const std::string& what) : std::runtime_error("model file: " + what) {}
};

namespace detail {

template <typename Mat>
nlohmann::json matrix_to_json(const Mat& m)
{
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j)
{
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw ModelFormatError("matrix shape does not match its data");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  return m;
}

} // namespace detail

/// Everything needed to predict: d, n, parent links, R, q0, frame, coefficients.
/// Q is not stored, so a restored model can predict but not be refit.
template <Manifold M>
nlohmann::json model_to_json(const ThiModel<M>& model)
{
  const GArnoldiModel& a = model.arnoldi;
  std::vector<std::array<std::size_t, 2>> parents;
  for (std::size_t i = 2; i <= a.rank; ++i) {
    const Parent p = a.basis.parent_of(i);
    parents.push_back({p.s, p.u});
  }
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"manifold", std::string(M::name)},
          {"dim", a.basis.dim()},
          {"degree", a.basis.degree()},
          {"derivative_order", a.deriv.order},
          {"rank", a.rank},
          {"parents", parents},
          {"rmat", detail::matrix_to_json(a.rmat)},
          {"base", detail::matrix_to_json(model.base)},
          {"frame", detail::matrix_to_json(model.frame)},
          {"coeffs", detail::matrix_to_json(model.coeffs)},
          {"observed_rows", a.selection.observed.size()},
          {"node_count", a.selection.node_count}};
}

template <Manifold M>
ThiModel<M> model_from_json_unchecked(const nlohmann::json& j)
{
  if (!j.is_object())
    throw ModelFormatError("top level is not an object");
  if (j.value("format", std::string{}) != kModelFormat)
    throw ModelFormatError("not a thi-model document");
  if (j.at("version").get<int>() != kModelVersion)
    throw ModelFormatError("unsupported version " + std::to_string(j.at("version").get<int>()));
  const auto manifold = j.at("manifold").get<std::string>();
  if (manifold != M::name)
    throw ModelFormatError("manifold is '" + manifold + "', expected '" + std::string(M::name) + "'");

  ThiModel<M> model;
  GArnoldiModel& a = model.arnoldi;
  a.basis = enumerate_basis(j.at("dim").get<std::size_t>(), j.at("degree").get<std::size_t>());
  a.deriv = DerivativeOrder(j.at("derivative_order").get<int>(), a.basis.dim());
  a.rank = j.at("rank").get<std::size_t>();
  if (a.rank < 1 || a.rank > a.basis.size())
    throw ModelFormatError("rank out of range");

  const auto parents = j.at("parents").get<std::vector<std::array<std::size_t, 2>>>();
  if (parents.size() != a.rank - 1)
    throw ModelFormatError("parent list has wrong length");
  for (std::size_t i = 2; i <= a.rank; ++i) {
    const Parent p = a.basis.parent_of(i);
    if (parents[i - 2][0] != p.s || parents[i - 2][1] != p.u)
      throw ModelFormatError("parent link of column " + std::to_string(i) +
                               " disagrees with the grevlex basis");
  }

  a.rmat = detail::matrix_from_json(j.at("rmat"));
  const auto t = static_cast<Eigen::Index>(a.rank);
  if (a.rmat.rows() != t || a.rmat.cols() != t)
    throw ModelFormatError("R has wrong shape");
  a.selection.node_count = j.value("node_count", std::size_t{0});
  a.selection.deriv = a.deriv;

  const Eigen::MatrixXd base = detail::matrix_from_json(j.at("base"));
  if (base.rows() != model.base.rows() || base.cols() != model.base.cols())
    throw ModelFormatError("base point has wrong shape");
  model.base = base;
  const Eigen::MatrixXd frame = detail::matrix_from_json(j.at("frame"));
  if (frame.rows() != 3 || frame.cols() != M::tangent_dim)
    throw ModelFormatError("frame has wrong shape");
  model.frame = frame;
  model.coeffs = detail::matrix_from_json(j.at("coeffs"));
  if (model.coeffs.rows() != t || model.coeffs.cols() != M::tangent_dim)
    throw ModelFormatError("coefficient block has wrong shape");
  return model;
}

/// Restore a model; missing or mistyped fields raise ModelFormatError.
template <Manifold M>
ThiModel<M> model_from_json(const nlohmann::json& j)
{
  try {
    return model_from_json_unchecked<M>(j);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(e.what());
  }
}

template <Manifold M>
void save_model(const ThiModel<M>& model, std::ostream& os)
{
  os << model_to_json(model).dump(1) << '\n';
}

/// Whole-stream JSON parse; trailing content is an error.
inline nlohmann::json parse_model_document(std::istream& is)
{
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(e.what());
  }
}

template <Manifold M>
ThiModel<M> load_model(std::istream& is)
{
  return model_from_json<M>(parse_model_document(is));
}

/// Manifold name recorded in a model document.
inline std::string model_manifold(const nlohmann::json& j)
{
  if (!j.is_object() || !j.contains("manifold") || !j.at("manifold").is_string())
    throw ModelFormatError("no manifold name");
  return j.at("manifold").get<std::string>();
}

} // namespace thi

#endif // THI_SERIALIZE_HPP
