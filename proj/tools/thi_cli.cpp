// thi: benchmark runner, model fitting and evaluation from data files.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or parse error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "thi/errors.hpp"
#include "thi/experiments.hpp"
#include "thi/sample_io.hpp"
#include "thi/serialize.hpp"
#include "thi/thi.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

/// Usage problems detected after CLI11 parsing (bad ids, missing files).
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct CaseOverrides
{
  std::optional<int> degree;
  bool no_derivatives = false;
  std::optional<std::string> grid;
  std::optional<int> per_axis;
  std::vector<double> domain;
  std::optional<double> fd_step;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> manifold;

  void register_on(CLI::App* cmd)
  {
    cmd->add_option("--degree", degree, "Total polynomial degree")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--no-derivatives", no_derivatives, "Fit function values only");
    cmd->add_option("--grid", grid, "Sampling grid")->check(CLI::IsMember({"uniform", "cheb1", "cheb2"}));
    cmd->add_option("--n-per-axis", per_axis, "Sampling nodes per parameter axis")->check(CLI::PositiveNumber);
    cmd->add_option("--domain", domain, "Parameter box [a, b]^2")->expected(2);
    cmd->add_option("--fd-step", fd_step, "Step of the finite-difference derivative error")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Use uniform random test points drawn with this seed");
    cmd->add_option("--manifold", manifold, "Manifold the case must live on")->check(CLI::IsMember({"so3", "s2"}));
  }

  thi::BenchmarkCase apply(thi::BenchmarkCase c) const
  {
    if (degree)
      c.degree = *degree;
    if (no_derivatives)
      c.with_derivatives = false;
    if (grid)
      c.plan.kind = thi::grid_kind_from_string(*grid);
    if (per_axis)
      c.plan.per_axis = *per_axis;
    if (domain.size() == 2) {
      if (!(domain[0] < domain[1]))
        throw UsageError("--domain requires a < b");
      c.plan.a = domain[0];
      c.plan.b = domain[1];
    }
    if (fd_step)
      c.fd_step = *fd_step;
    if (seed) {
      c.random_test_points = true;
      c.seed = *seed;
    }
    if (manifold && thi::manifold_from_string(*manifold) != c.manifold())
      throw UsageError("function '" + std::string(thi::to_string(c.function)) + "' does not live on " + *manifold);
    return c;
  }
};

std::vector<int> parse_table_list(const std::string& list)
{
  std::vector<int> ids;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    int id = 0;
    try {
      id = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw UsageError("--tables: '" + tok + "' is not a table id");
    }
    if (used != tok.size() || id < 1 || id > thi::kTableCount)
      throw UsageError("--tables: ids must lie in 1.." + std::to_string(thi::kTableCount) + ", got '" + tok + "'");
    ids.push_back(id);
  }
  if (ids.empty())
    throw UsageError("--tables: no table ids given");
  return ids;
}

std::ifstream open_input(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write '" + path.string() + "'");
  return out;
}

/// Writes to --out when given, else stdout.
template <typename Fn>
void emit(const std::string& out_path, Fn&& write)
{
  if (out_path.empty()) {
    write(std::cout);
    std::cout.flush();
  } else {
    std::ofstream out = open_output(out_path);
    write(out);
  }
}

std::string render(const thi::CaseReport& r, const std::string& format)
{
  if (format == "json")
    return thi::to_json(r).dump(2) + "\n";
  return thi::to_csv(r);
}

void print_rank_line(const thi::CaseReport& r)
{
  std::cerr << "table " << r.table << ": " << r.function << " on " << r.manifold << ", degree " << r.degree
            << ", rank t = " << r.rank << " of " << r.basis_size << ", avg_err = " << r.avg_err << '\n';
}

// ---------------------------------------------------------------------------

struct BenchArgs
{
  std::string tables = "1,2,3,4,5,6,7,8";
  std::optional<std::string> function;
  std::string format = "csv";
  std::string out;
  CaseOverrides overrides;
};

int cmd_bench(const BenchArgs& a)
{
  std::vector<thi::BenchmarkCase> cases;
  if (a.function) {
    thi::BenchmarkCase c;
    c.function = thi::test_function_from_string(*a.function);
    cases.push_back(a.overrides.apply(c));
  } else {
    for (int id : parse_table_list(a.tables))
      cases.push_back(a.overrides.apply(thi::table_case(id)));
  }

  // --out names a directory when several reports are produced
  const bool to_dir = !a.out.empty() && (cases.size() > 1 || std::filesystem::is_directory(a.out));
  if (to_dir)
    std::filesystem::create_directories(a.out);

  for (const auto& c : cases) {
    const thi::CaseReport r = thi::run_case(c);
    print_rank_line(r);
    const std::string text = render(r, a.format);
    if (to_dir) {
      const std::string stem = c.table > 0 ? "table_" + std::to_string(c.table) : std::string(thi::to_string(c.function));
      std::ofstream out = open_output(std::filesystem::path(a.out) / (stem + "." + a.format));
      out << text;
    } else if (!a.out.empty()) {
      std::ofstream out = open_output(a.out);
      out << text;
    } else {
      if (cases.size() > 1 && a.format == "csv")
        std::cout << "# table " << c.table << '\n';
      std::cout << text;
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs
{
  std::string samples;
  std::string manifold = "so3";
  int degree = 6;
  int dim = 2;
  bool no_derivatives = false;
  std::string out;
};

template <thi::Manifold M>
int fit_on(const FitArgs& a)
{
  std::ifstream in = open_input(a.samples);
  const auto samples = thi::read_samples<M>(in, static_cast<std::size_t>(a.dim));
  if (samples.empty())
    throw UsageError("'" + a.samples + "' contains no samples");
  const bool use_derivatives = !a.no_derivatives && !samples.front().derivs.empty();
  const thi::ThiModel<M> model = thi::thi_fit<M>(samples, static_cast<std::size_t>(a.degree), use_derivatives);
  std::cerr << "fit: " << samples.size() << " samples, rank t = " << model.arnoldi.rank << " of "
            << model.arnoldi.basis.size() << (use_derivatives ? ", with derivatives" : ", values only") << '\n';
  emit(a.out, [&](std::ostream& os) { thi::save_model(model, os); });
  return kExitOk;
}

int cmd_fit(const FitArgs& a)
{
  if (a.manifold == "so3")
    return fit_on<thi::SO3>(a);
  return fit_on<thi::Sphere>(a);
}

// ---------------------------------------------------------------------------

struct EvalArgs
{
  std::string model;
  std::string queries;
  std::string out;
  bool derivatives = false;
  std::optional<std::string> truth;
  std::string report;
  std::string format = "csv";
  double fd_step = thi::kReportFdStep;
};

template <thi::Manifold M>
int eval_on(const EvalArgs& a, const nlohmann::json& doc)
{
  const thi::ThiModel<M> model = thi::model_from_json<M>(doc);
  std::ifstream qin = open_input(a.queries);
  const Eigen::MatrixXd q = thi::read_queries(qin, model.param_dim());
  const thi::ThiPrediction<M> pred = thi::thi_eval(model, q, a.derivatives);
  emit(a.out, [&](std::ostream& os) { thi::write_predictions(os, pred); });

  if (a.truth) {
    const thi::TestFunction f = thi::test_function_from_string(*a.truth);
    if (thi::manifold_of(f) != thi::manifold_from_string(M::name))
      throw UsageError("--truth function does not live on " + std::string(M::name));
    if (model.param_dim() != 2)
      throw UsageError("--truth requires a two-parameter model");
    auto truth = [&](const Eigen::VectorXd& w) { return thi::TestValue<M>::eval(f, Eigen::Vector2d(w)).p; };
    const thi::ErrorMetrics em = thi::error_report(model, truth, q, a.fd_step);
    thi::CaseReport r;
    r.manifold = std::string(M::name);
    r.function = *a.truth;
    r.degree = static_cast<int>(model.arnoldi.basis.degree());
    r.basis_size = model.arnoldi.basis.size();
    r.rank = model.arnoldi.rank;
    r.avg_err = em.avg_err;
    r.max_err = em.max_err;
    r.fd_err_d1 = em.fd_err_d(0);
    r.fd_err_d2 = em.fd_err_d(1);
    r.max_frobenius_err = em.max_frobenius;
    r.tangent_sup_err = em.tangent_sup_err;
    r.orthogonality_err = std::numeric_limits<double>::quiet_NaN(); // Q is not stored
    const std::string text = render(r, a.format);
    if (a.report.empty())
      std::cerr << text;
    else
      open_output(a.report) << text;
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& a)
{
  std::ifstream in = open_input(a.model);
  const nlohmann::json doc = thi::parse_model_document(in);
  const std::string manifold = thi::model_manifold(doc);
  if (manifold == thi::SO3::name)
    return eval_on<thi::SO3>(a, doc);
  if (manifold == thi::Sphere::name)
    return eval_on<thi::Sphere>(a, doc);
  throw UsageError("'" + a.model + "' names unknown manifold '" + manifold + "'");
}

// ---------------------------------------------------------------------------

struct ConvergenceArgs
{
  std::string function = "so3-simple";
  std::vector<int> degrees{2, 3, 4, 5, 6};
  std::string out;
  CaseOverrides overrides;
};

int cmd_convergence(const ConvergenceArgs& a)
{
  thi::BenchmarkCase base;
  base.function = thi::test_function_from_string(a.function);
  base.plan = {thi::GridKind::uniform, 15, -0.5, 0.5};
  base = a.overrides.apply(base);
  const auto rows = thi::convergence_study(base, a.degrees);
  emit(a.out, [&](std::ostream& os) {
    const auto old = os.precision(17);
    os << "degree,points,rank,avg_err,max_err\n";
    for (const auto& r : rows)
      os << r.degree << ',' << r.points << ',' << r.rank << ',' << r.avg_err << ',' << r.max_err << '\n';
    os.precision(old);
  });
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs
{
  int table = 1;
  std::string samples_out;
  std::string queries_out;
  CaseOverrides overrides;
};

int cmd_export(const ExportArgs& a)
{
  if (a.table < 1 || a.table > thi::kTableCount)
    throw UsageError("--table must lie in 1.." + std::to_string(thi::kTableCount));
  const thi::BenchmarkCase c = a.overrides.apply(thi::table_case(a.table));
  const Eigen::MatrixXd grid = c.plan.grid();
  if (!a.samples_out.empty()) {
    std::ofstream out = open_output(a.samples_out);
    if (c.manifold() == thi::ManifoldKind::so3)
      thi::write_test_function_samples<thi::SO3>(out, c.function, grid, c.with_derivatives);
    else
      thi::write_test_function_samples<thi::Sphere>(out, c.function, grid, c.with_derivatives);
  }
  if (!a.queries_out.empty()) {
    std::ofstream out = open_output(a.queries_out);
    thi::write_queries(out, thi::test_points(c));
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Tangent-space Hermite interpolation on SO(3) and S^2"};
  app.require_subcommand(1);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run benchmark tables and report error metrics");
  bench_cmd->add_option("--tables", bench.tables, "Comma-separated table ids (1..8)");
  bench_cmd->add_option("--function", bench.function, "Run an ad-hoc case of this test function instead of tables");
  bench_cmd->add_option("--format", bench.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--out", bench.out, "Report file, or directory for several reports");
  bench.overrides.register_on(bench_cmd);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a sample file");
  fit_cmd->add_option("samples", fit.samples, "Sample file")->required();
  fit_cmd->add_option("--manifold", fit.manifold, "Manifold of the samples")->check(CLI::IsMember({"so3", "s2"}));
  fit_cmd->add_option("--degree", fit.degree, "Total polynomial degree")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--dim", fit.dim, "Parameter dimension d")->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--no-derivatives", fit.no_derivatives, "Ignore derivative columns");
  fit_cmd->add_option("--out", fit.out, "Model file (default stdout)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model at query points");
  eval_cmd->add_option("model", eval.model, "Model file")->required();
  eval_cmd->add_option("queries", eval.queries, "Query file")->required();
  eval_cmd->add_option("--out", eval.out, "Predictions file (default stdout)");
  eval_cmd->add_flag("--derivatives", eval.derivatives, "Also write the d ambient partials per query");
  eval_cmd->add_option("--truth", eval.truth, "Report errors against this registered test function");
  eval_cmd->add_option("--report", eval.report, "Error report file (default stderr)");
  eval_cmd->add_option("--format", eval.format, "Error report format")->check(CLI::IsMember({"csv", "json"}));
  eval_cmd->add_option("--fd-step", eval.fd_step, "Step of the finite-difference derivative error")
      ->check(CLI::PositiveNumber);

  ConvergenceArgs conv;
  auto* conv_cmd = app.add_subcommand("convergence", "Average error against polynomial degree");
  conv_cmd->add_option("--function", conv.function, "Test function");
  conv_cmd->add_option("--degrees", conv.degrees, "Increasing degrees")->delimiter(',');
  conv_cmd->add_option("--out", conv.out, "CSV file (default stdout)");
  conv.overrides.register_on(conv_cmd);

  ExportArgs exp;
  auto* exp_cmd = app.add_subcommand("export", "Write a table's training samples and test points as data files");
  exp_cmd->add_option("--table", exp.table, "Table id (1..8)")->required();
  exp_cmd->add_option("--samples-out", exp.samples_out, "Sample file");
  exp_cmd->add_option("--queries-out", exp.queries_out, "Query file");
  exp.overrides.register_on(exp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*bench_cmd)
      return cmd_bench(bench);
    if (*fit_cmd)
      return cmd_fit(fit);
    if (*eval_cmd)
      return cmd_eval(eval);
    if (*conv_cmd)
      return cmd_convergence(conv);
    return cmd_export(exp);
  } catch (const thi::ParseError& e) {
    std::cerr << "thi: parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const thi::ModelFormatError& e) {
    std::cerr << "thi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "thi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const thi::NumericalFailure& e) {
    std::cerr << "thi: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const thi::CutLocusError& e) {
    std::cerr << "thi: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "thi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "thi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "thi: error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
