#include "amalgam/io.hpp"

#include <cctype>
#include <sstream>

#include "json.hpp"

namespace amalgam::io {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json matrix_to_value(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_value(const json& v, const char* what) {
  if (!v.is_array() || v.empty())
    throw ParseError(std::string(what) + ": matrix must be a nonempty array of rows");
  int rows = static_cast<int>(v.size());
  int cols = -1;
  Matrix m;
  for (int i = 0; i < rows; ++i) {
    const json& row = v[i];
    if (!row.is_array())
      throw ParseError(std::string(what) + ": row " + std::to_string(i) +
                       " is not an array");
    if (cols < 0) {
      cols = static_cast<int>(row.size());
      m = Matrix::Zero(rows, cols);
    }
    if (static_cast<int>(row.size()) != cols)
      throw ParseError(std::string(what) + ": ragged row " + std::to_string(i));
    for (int j = 0; j < cols; ++j) {
      const json& e = row[j];
      if (e.is_number()) {
        m(i, j) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(i, j) = alg::Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ParseError(std::string(what) + ": entry (" + std::to_string(i) + "," +
                         std::to_string(j) + ") must be a number or [re, im]");
      }
    }
  }
  return m;
}

json witness_to_value(const freeness::Witness& w) {
  return {{"vars", w.vars},
          {"order", w.order},
          {"draw", w.draw},
          {"residual", w.residual},
          {"detail", w.detail}};
}

json report_to_value(const freeness::TestReport& r) {
  return {{"name", r.name},
          {"pass", r.pass},
          {"tol", r.tol},
          {"worst", r.worst},
          {"worst_witness", witness_to_value(r.worst_witness)},
          {"per_order", r.per_order},
          {"queries", r.queries},
          {"note", r.note}};
}

json entry_to_value(const liberation::ResidualEntry& e) {
  return {{"m", e.m}, {"shape", e.shape}, {"residual", e.residual}};
}

}  // namespace

std::string matrix_to_json(const Matrix& m) { return matrix_to_value(m).dump(); }

Matrix matrix_from_json(const std::string& text) {
  return matrix_from_value(parse(text, "matrix"), "matrix");
}

std::string context_to_json(const alg::AlgebraContext& ctx) {
  json blocks = json::array();
  for (const auto& b : ctx.dspec().blocks)
    blocks.push_back({{"dim", b.dim}, {"mult", b.mult}});
  json weights = json::array();
  for (int j = 0; j < ctx.num_blocks(); ++j) weights.push_back(ctx.weight(j));
  return json{{"d", ctx.d()}, {"k", ctx.k()}, {"D_blocks", blocks},
              {"trace_weights", weights}}
      .dump();
}

std::shared_ptr<const alg::AlgebraContext> context_from_json(const std::string& text) {
  json v = parse(text, "context");
  if (!v.is_object() || !v.contains("d") || !v.contains("k") || !v.contains("D_blocks"))
    throw ParseError("context: need object with d, k, D_blocks");
  alg::SubalgebraSpec spec;
  for (const auto& b : v["D_blocks"]) {
    if (!b.contains("dim") || !b.contains("mult"))
      throw ParseError("context: each D_block needs dim and mult");
    spec.blocks.push_back({b["dim"].get<int>(), b["mult"].get<int>()});
  }
  std::vector<double> weights;
  if (v.contains("trace_weights") && !v["trace_weights"].is_null())
    weights = v["trace_weights"].get<std::vector<double>>();
  try {
    return std::make_shared<const alg::AlgebraContext>(v["d"].get<int>(),
                                                       v["k"].get<int>(), spec, weights);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("context: ") + e.what());
  }
}

std::shared_ptr<const Model> matrix_model_from_json(
    std::shared_ptr<const alg::AlgebraContext> ctx, const std::string& text) {
  json v = parse(text, "model");
  if (!v.is_object() || !v.contains("variables"))
    throw ParseError("model: need object with variables");
  std::vector<Matrix> vars;
  for (const auto& mv : v["variables"])
    vars.push_back(matrix_from_value(mv, "model variable"));
  try {
    return std::make_shared<MatrixModel>(std::move(ctx), std::move(vars));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

std::vector<Matrix> matrix_list_from_json(const std::string& text) {
  json v = parse(text, "matrix list");
  if (!v.is_array()) throw ParseError("matrix list: need an array");
  std::vector<Matrix> out;
  for (const auto& mv : v) out.push_back(matrix_from_value(mv, "matrix list"));
  return out;
}

std::string formal_element_to_json(const FormalElement& e) {
  json terms = json::array();
  for (const auto& t : e.terms()) {
    json coeffs = json::array();
    for (const auto& c : t.coeffs) coeffs.push_back(matrix_to_value(c));
    terms.push_back({{"vars", t.vars}, {"coeffs", std::move(coeffs)}});
  }
  return json{{"terms", std::move(terms)}}.dump();
}

namespace {

FormalElement formal_element_from_value(const json& v, int d) {
  if (!v.is_object() || !v.contains("terms"))
    throw ParseError("element: need object with terms");
  FormalElement out;
  for (const auto& t : v["terms"]) {
    if (!t.contains("vars") || !t.contains("coeffs"))
      throw ParseError("element: each term needs vars and coeffs");
    auto vars = t["vars"].get<std::vector<int>>();
    if (t["coeffs"].size() != vars.size() + 1)
      throw ParseError("element: a term needs vars+1 coefficient matrices");
    FormalElement term;
    bool first = true;
    // rebuild b_0 x_{v_1} b_1 ... as a product of constants and variables
    for (std::size_t i = 0; i <= vars.size(); ++i) {
      Matrix c = matrix_from_value(t["coeffs"][i], "element coefficient");
      if (c.rows() != d || c.cols() != d)
        throw ParseError("element: coefficients must be d x d");
      FormalElement piece = FormalElement::constant(std::move(c));
      term = first ? piece : term * piece;
      first = false;
      if (i < vars.size()) term = term * FormalElement::variable(vars[i], d);
    }
    out = out.empty() ? term : out + term;
  }
  return out;
}

}  // namespace

FormalElement formal_element_from_json(const std::string& text, int d) {
  return formal_element_from_value(parse(text, "element"), d);
}

std::vector<FormalElement> formal_element_list_from_json(const std::string& text, int d) {
  json v = parse(text, "element list");
  if (!v.is_array()) throw ParseError("element list: need an array");
  std::vector<FormalElement> out;
  for (const auto& ev : v) out.push_back(formal_element_from_value(ev, d));
  return out;
}

std::string table_series_to_json(const fock::TableSeries& series) {
  json table = json::array();
  for (const auto& [vars, terms] : series.table()) {
    json jterms = json::array();
    for (const auto& term : terms) {
      json js = json::array();
      for (const auto& m : term) js.push_back(matrix_to_value(m));
      jterms.push_back(std::move(js));
    }
    table.push_back({{"vars", vars}, {"terms", std::move(jterms)}});
  }
  return json{{"num_vars", series.num_vars()},
              {"d", series.dim()},
              {"max_order", series.max_order()},
              {"table", std::move(table)}}
      .dump();
}

std::shared_ptr<fock::TableSeries> table_series_from_json(const std::string& text) {
  json v = parse(text, "cumulant table");
  if (!v.is_object() || !v.contains("num_vars") || !v.contains("d") ||
      !v.contains("table"))
    throw ParseError("cumulant table: need num_vars, d, table");
  int max_order = v.value("max_order", 8);
  auto series = std::make_shared<fock::TableSeries>(v["num_vars"].get<int>(),
                                                    v["d"].get<int>(), max_order);
  for (const auto& row : v["table"]) {
    if (!row.contains("vars") || !row.contains("terms"))
      throw ParseError("cumulant table: each row needs vars and terms");
    auto vars = row["vars"].get<std::vector<int>>();
    std::vector<std::vector<Matrix>> terms;
    for (const auto& term : row["terms"]) {
      std::vector<Matrix> ms;
      for (const auto& mv : term) ms.push_back(matrix_from_value(mv, "cumulant table"));
      terms.push_back(std::move(ms));
    }
    try {
      series->set(vars, std::move(terms));
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("cumulant table: ") + e.what());
    }
  }
  return series;
}

std::string profile_to_csv(const rmt::VarianceProfile& p) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < p.g(); ++i) {
    for (int j = 0; j < p.g(); ++j) {
      if (j) out << ',';
      out << p.sigma(i, j);
    }
    out << '\n';
  }
  return out.str();
}

rmt::VarianceProfile profile_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_line;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        double val = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument("trailing garbage");
        row.push_back(val);
      } catch (const std::exception&) {
        throw ParseError("profile csv: line " + std::to_string(lineno) +
                         ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
    row_line.push_back(lineno);
  }
  if (rows.empty()) throw ParseError("profile csv: empty input");
  int g = static_cast<int>(rows.size());
  Eigen::MatrixXd grid(g, g);
  for (int i = 0; i < g; ++i) {
    if (static_cast<int>(rows[i].size()) != g)
      throw ParseError("profile csv: line " + std::to_string(row_line[i]) +
                       ": expected " + std::to_string(g) + " columns, got " +
                       std::to_string(rows[i].size()));
    for (int j = 0; j < g; ++j) grid(i, j) = rows[i][j];
  }
  try {
    return rmt::VarianceProfile(std::move(grid));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("profile csv: ") + e.what());
  }
}

std::string check_report_to_json(const alg::CheckReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"name", e.name},
                       {"residual", e.residual},
                       {"tol", e.tol},
                       {"pass", e.pass}});
  return json{{"entries", std::move(entries)}, {"pass", r.pass}, {"note", r.note}}.dump();
}

std::string test_report_to_json(const freeness::TestReport& r) {
  return report_to_value(r).dump();
}

std::string restriction_report_to_json(const freeness::RestrictionReport& r) {
  return json{{"report", report_to_value(r.report)},
              {"hypothesis_holds", r.hypothesis_holds},
              {"hypothesis_worst", r.hypothesis_worst}}
      .dump();
}

std::string summary_to_json(const freeness::Summary& s) {
  json reports = json::array();
  for (const auto& r : s.reports) reports.push_back(report_to_value(r));
  return json{{"reports", std::move(reports)}, {"pass", s.pass}}.dump();
}

std::string residual_report_to_json(const liberation::ResidualReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back(entry_to_value(e));
  return json{{"name", r.name},
              {"pass", r.pass},
              {"tol", r.tol},
              {"worst", r.worst},
              {"worst_entry", entry_to_value(r.worst_entry)},
              {"entries", std::move(entries)},
              {"queries", r.queries},
              {"note", r.note}}
      .dump();
}

std::string histogram_to_json(const rmt::HistogramResult& h) {
  return json{{"edges", h.edges},
              {"masses", h.masses},
              {"moments", h.moments},
              {"trials", h.trials},
              {"seed", h.seed}}
      .dump();
}

std::string band_verdict_to_json(const rmt::BandVerdict& v) {
  return json{{"constant_rows", v.constant_rows},
              {"row_deviation", v.row_deviation},
              {"moments_semicircular", v.moments_semicircular},
              {"worst_cumulant", v.worst_cumulant},
              {"kappa2", v.kappa2},
              {"moments", v.moments}}
      .dump();
}

std::string conjugation_report_to_json(const rmt::ConjugationReport& r) {
  return json{{"d", r.d},
              {"max_power", r.max_power},
              {"ks", r.ks},
              {"trials", r.trials},
              {"seed", r.seed},
              {"commutant_err", r.commutant_err},
              {"cyclic_moment_err", r.cyclic_moment_err},
              {"power_norms", r.power_norms},
              {"mixed_residual", r.mixed_residual}}
      .dump();
}

}  // namespace amalgam::io
