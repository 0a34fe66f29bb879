#ifndef THI_SAMPLE_IO_HPP
#define THI_SAMPLE_IO_HPP

#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thi/errors.hpp"
#include "thi/experiments.hpp"
#include "thi/thi.hpp"

namespace thi {

/// Malformed text input. `line` is 1-based.
class ParseError : public std::runtime_error
{
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

namespace detail {

/// Whitespace-separated doubles of every non-blank, non-comment line,
/// tagged with the source line number.
inline std::vector<std::pair<std::size_t, std::vector<double>>> read_numeric_lines(std::istream& is)
{
  std::vector<std::pair<std::size_t, std::vector<double>>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw ParseError(lineno, "not a number: '" + tok + "'");
      }
      if (used != tok.size())
        throw ParseError(lineno, "not a number: '" + tok + "'");
      if (!std::isfinite(v))
        throw ParseError(lineno, "non-finite value '" + tok + "'");
      vals.push_back(v);
    }
    if (!vals.empty())
      out.emplace_back(lineno, std::move(vals));
  }
  return out;
}

inline void write_row(std::ostream& os, const double* v, std::size_t n)
{
  for (std::size_t i = 0; i < n; ++i) {
    if (i)
      os << ' ';
    os << v[i];
  }
}

} // namespace detail

/// Sample lines hold d parameters, the point in its ambient embedding
/// (3 floats on S^2, 9 row-major on SO(3)) and, optionally, d ambient
/// partials of the same size. Points are re-projected with the manifold's
/// acceptance tolerance; partials are projected onto the tangent space.
template <Manifold M>
std::vector<ManifoldSample<M>> read_samples(std::istream& is, std::size_t d)
{
  if (d == 0)
    throw std::invalid_argument("read_samples: parameter dimension must be at least 1");
  constexpr auto a = static_cast<std::size_t>(M::ambient_size);
  const std::size_t bare = d + a;
  const std::size_t full = bare + d * a;

  std::vector<ManifoldSample<M>> out;
  std::size_t expected = 0;
  for (auto& [lineno, v] : detail::read_numeric_lines(is)) {
    if (v.size() != bare && v.size() != full)
      throw ParseError(lineno, "expected " + std::to_string(bare) + " or " + std::to_string(full) + " numbers, got " +
                                   std::to_string(v.size()));
    if (expected == 0)
      expected = v.size();
    else if (v.size() != expected)
      throw ParseError(lineno, "derivative columns present on some lines but not others");

    ManifoldSample<M> s;
    s.omega = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(d));
    const Eigen::Map<const Eigen::VectorXd> emb(v.data() + d, static_cast<Eigen::Index>(a));
    try {
      s.p = M::project(M::from_embedded(emb), accept_tolerance<M>());
    } catch (const ConstraintViolation& e) {
      throw ParseError(lineno, e.what());
    }
    if (v.size() == full) {
      for (std::size_t i = 0; i < d; ++i) {
        const Eigen::Map<const Eigen::VectorXd> amb(v.data() + bare + i * a, static_cast<Eigen::Index>(a));
        s.derivs.push_back(M::from_ambient(s.p, M::from_embedded(amb)));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Query lines hold d parameters each.
inline Eigen::MatrixXd read_queries(std::istream& is, std::size_t d)
{
  const auto lines = detail::read_numeric_lines(is);
  Eigen::MatrixXd q(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& [lineno, v] = lines[r];
    if (v.size() != d)
      throw ParseError(lineno, "expected " + std::to_string(d) + " numbers, got " + std::to_string(v.size()));
    for (std::size_t i = 0; i < d; ++i)
      q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = v[i];
  }
  return q;
}

inline void write_queries(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& q)
{
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    const Eigen::VectorXd row = q.row(r).transpose();
    detail::write_row(os, row.data(), static_cast<std::size_t>(row.size()));
    os << '\n';
  }
  os.precision(old);
}

/// Raw (unprojected) values and ambient partials of a registered test
/// function, in the sample-file layout. Reading the file back reproduces
/// `sample_function` bit for bit.
template <Manifold M>
void write_test_function_samples(std::ostream& os, TestFunction f, const Eigen::Ref<const Eigen::MatrixXd>& grid,
                                 bool with_derivatives)
{
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index j = 0; j < grid.rows(); ++j) {
    const Eigen::Vector2d w = grid.row(j).transpose();
    const auto tv = TestValue<M>::eval(f, w);
    detail::write_row(os, w.data(), 2);
    const Eigen::VectorXd p = M::embed(tv.p);
    os << ' ';
    detail::write_row(os, p.data(), static_cast<std::size_t>(p.size()));
    if (with_derivatives) {
      for (const auto& v : tv.v) {
        const Eigen::VectorXd e = M::embed(v); // partials share the point's layout
        os << ' ';
        detail::write_row(os, e.data(), static_cast<std::size_t>(e.size()));
      }
    }
    os << '\n';
  }
  os.precision(old);
}

/// One line per query: the predicted point in its embedding, followed by
/// the d ambient partials when present.
template <Manifold M>
void write_predictions(std::ostream& os, const ThiPrediction<M>& pred)
{
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < pred.points.size(); ++j) {
    const Eigen::VectorXd p = M::embed(pred.points[j]);
    detail::write_row(os, p.data(), static_cast<std::size_t>(p.size()));
    if (j < pred.derivs.size()) {
      for (const auto& v : pred.derivs[j]) {
        const Eigen::VectorXd e = M::embed(M::to_ambient(pred.points[j], v));
        os << ' ';
        detail::write_row(os, e.data(), static_cast<std::size_t>(e.size()));
      }
    }
    os << '\n';
  }
  os.precision(old);
}

} // namespace thi

#endif // THI_SAMPLE_IO_HPP
