#pragma once

#include <memory>
#include <string>
#include <vector>

#include "amalgam/algebra.hpp"
#include "amalgam/fock.hpp"
#include "amalgam/freeness.hpp"
#include "amalgam/liberation.hpp"
#include "amalgam/model.hpp"
#include "amalgam/randmat.hpp"

// Frozen text formats (documented in docs/formats.md): JSON for contexts,
// models, cumulant tables, formal elements and reports; CSV for variance
// profiles. Parse errors throw io::ParseError with a position diagnostic.
namespace amalgam::io {

using alg::Matrix;

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// --- matrices ------------------------------------------------------------
// matrix = array of rows; entry = [re, im]
std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& text);

// --- contexts ------------------------------------------------------------
// {"d": int, "k": int, "D_blocks": [{"dim": int, "mult": int}, ...],
//  "trace_weights": [..] (optional)}
std::string context_to_json(const alg::AlgebraContext& ctx);
std::shared_ptr<const alg::AlgebraContext> context_from_json(const std::string& text);

// --- models --------------------------------------------------------------
// {"variables": [matrix, ...]}; variables are N x N over the supplied
// context, self-adjointness is detected from the matrices
std::shared_ptr<const Model> matrix_model_from_json(
    std::shared_ptr<const alg::AlgebraContext> ctx, const std::string& text);

// list of d x d matrices: [matrix, ...]
std::vector<Matrix> matrix_list_from_json(const std::string& text);

// --- formal elements -----------------------------------------------------
// {"terms": [{"vars": [int, ...], "coeffs": [matrix x (vars+1)]}, ...]}
std::string formal_element_to_json(const FormalElement& e);
FormalElement formal_element_from_json(const std::string& text, int d);
std::vector<FormalElement> formal_element_list_from_json(const std::string& text, int d);

// --- cumulant tables -----------------------------------------------------
// {"num_vars": int, "d": int, "max_order": int,
//  "table": [{"vars": [...], "terms": [[matrix x len(vars)], ...]}, ...]}
// term [V_0..V_{n-1}] contributes V_0 b_1 V_1 ... V_{n-1} b_n
std::string table_series_to_json(const fock::TableSeries& series);
std::shared_ptr<fock::TableSeries> table_series_from_json(const std::string& text);

// --- variance profiles ---------------------------------------------------
// CSV: g rows of g comma-separated nonnegative reals
std::string profile_to_csv(const rmt::VarianceProfile& p);
rmt::VarianceProfile profile_from_csv(const std::string& text);

// --- reports -------------------------------------------------------------
std::string check_report_to_json(const alg::CheckReport& r);
std::string test_report_to_json(const freeness::TestReport& r);
std::string restriction_report_to_json(const freeness::RestrictionReport& r);
std::string summary_to_json(const freeness::Summary& s);
std::string residual_report_to_json(const liberation::ResidualReport& r);
std::string histogram_to_json(const rmt::HistogramResult& h);
std::string band_verdict_to_json(const rmt::BandVerdict& v);
std::string conjugation_report_to_json(const rmt::ConjugationReport& r);

}  // namespace amalgam::io
