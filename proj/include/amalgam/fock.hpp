#pragma once

#include <map>
#include <memory>
#include <vector>

#include "amalgam/cumulants.hpp"
#include "amalgam/model.hpp"

namespace amalgam::fock {

// Prescribed cumulant family kappa(x_{v_1} b_1, ..., x_{v_n} b_n) with
// right-attached coefficients, same argument convention as the engine.
class CumulantSeries {
 public:
  virtual ~CumulantSeries() = default;
  virtual int num_vars() const = 0;
  virtual int dim() const = 0;
  virtual int max_order() const = 0;
  virtual Matrix kappa(const std::vector<int>& vars,
                       const std::vector<Matrix>& right_coeffs) const = 0;
};

// b -> sum_t V_t b W_t; every balanced linear map on a matrix algebra has
// this shape, so tables built from these lose no generality
struct SandwichMap {
  std::vector<std::pair<Matrix, Matrix>> terms;
  Matrix apply(const Matrix& b) const;
  static SandwichMap scaled_identity(int d, Complex g);  // b -> g b
  // b -> g tau_B(b) 1; factorizes through the trace, so it is D-balanced
  // for every choice of D
  static SandwichMap trace_times_identity(const AlgebraContext& ctx, Complex g);
};

// Explicit sandwich tables keyed by variable tuple; absent tuples vanish.
// Term t for an n-tuple holds V_0..V_{n-1} and evaluates
// V_0 b_1 V_1 b_2 ... b_{n-1} V_{n-1} b_n.
class TableSeries : public CumulantSeries {
 public:
  TableSeries(int num_vars, int d, int max_order = 8);
  void set(const std::vector<int>& vars, std::vector<std::vector<Matrix>> terms);

  int num_vars() const override { return num_vars_; }
  int dim() const override { return d_; }
  int max_order() const override { return max_order_; }
  Matrix kappa(const std::vector<int>& vars,
               const std::vector<Matrix>& right_coeffs) const override;
  const std::map<std::vector<int>, std::vector<std::vector<Matrix>>>& table() const {
    return table_;
  }

 private:
  int num_vars_, d_, max_order_;
  std::map<std::vector<int>, std::vector<std::vector<Matrix>>> table_;
};

// Mean + covariance only: kappa_1(x_i b) = mean_i b,
// kappa_2(x_i b, x_j c) = cov(i,j)(b) c, everything higher vanishes.
class SemicircularSeries : public CumulantSeries {
 public:
  SemicircularSeries(int num_vars, int d);
  void set_mean(int i, Matrix mean);
  void set_covariance(int i, int j, SandwichMap eta);

  int num_vars() const override { return num_vars_; }
  int dim() const override { return d_; }
  int max_order() const override { return 64; }
  Matrix kappa(const std::vector<int>& vars,
               const std::vector<Matrix>& right_coeffs) const override;

 private:
  int num_vars_, d_;
  std::vector<Matrix> means_;
  std::map<std::pair<int, int>, SandwichMap> cov_;
};

// D-valued cumulants of an existing model, with coefficients compressed
// through F = E_D before evaluation.
class CompressedSeries : public CumulantSeries {
 public:
  CompressedSeries(std::shared_ptr<const Model> source, int max_order = 8);

  int num_vars() const override { return eng_->model().num_vars(); }
  int dim() const override { return eng_->model().context().d(); }
  int max_order() const override { return eng_->max_order(); }
  Matrix kappa(const std::vector<int>& vars,
               const std::vector<Matrix>& right_coeffs) const override;

 private:
  std::shared_ptr<cum::CumulantEngine> eng_;
};

// Variables split into groups; mixed tuples vanish by construction and
// within-group tuples delegate to that group's series.
class FreeProductSeries : public CumulantSeries {
 public:
  explicit FreeProductSeries(std::vector<std::shared_ptr<const CumulantSeries>> groups);

  int num_vars() const override { return static_cast<int>(var_map_.size()); }
  int dim() const override;
  int max_order() const override;
  Matrix kappa(const std::vector<int>& vars,
               const std::vector<Matrix>& right_coeffs) const override;
  std::pair<int, int> locate(int var) const { return var_map_.at(var); }

 private:
  std::vector<std::shared_ptr<const CumulantSeries>> groups_;
  std::vector<std::pair<int, int>> var_map_;  // global var -> (group, local)
};

// --- word calculus -------------------------------------------------------
// Letters of the canonical realization: Star(j) creates a j-slot, Gen(j, q)
// closes a block by consuming the q nearest unconsumed stars to its left
// (stack order, which is what forces noncrossing patterns), Coeff carries
// algebra elements between letters.
struct Letter {
  enum class Kind { Star, Gen, Coeff };
  Kind kind;
  int var = -1;
  int depth = 0;
  Matrix coeff;

  static Letter star(int var) { return {Kind::Star, var, 0, {}}; }
  static Letter gen(int var, int depth) { return {Kind::Gen, var, depth, {}}; }
  static Letter coefficient(Matrix b) { return {Kind::Coeff, -1, 0, std::move(b)}; }
};

using LetterWord = std::vector<Letter>;

enum class Strategy { LeftmostInner, RightmostInner };

struct ReduceResult {
  bool reduced = false;  // normal form is a single coefficient (or empty)
  Matrix value;          // that coefficient if reduced, zero otherwise
  LetterWord normal_form;
  int steps = 0;
};

// Rewrite to normal form: a matchable Gen(j, q) sees, walking left, q groups
// of [optional single Coeff] Star; the matched segment
//   Star(j_1) C(b_1) ... Star(j_q) C(b_q) Gen(j, q)
// becomes Coeff(kappa(x_{j_1} b_1, ..., x_{j_q} b_q, x_j)), and adjacent
// coefficients merge. The vacuum expectation of a word is its reduced value.
ReduceResult reduce_word(const CumulantSeries& series, LetterWord w,
                         Strategy strategy = Strategy::LeftmostInner);

// E(c_0 x_{v_1} c_1 ... x_{v_n} c_n) of the canonical variables of `series`:
// sums the reduced values over all star/gen component assignments (stack
// pruned). Equals the NC moment formula for the same cumulants.
Matrix canonical_moment(const CumulantSeries& series, const std::vector<int>& vars,
                        const std::vector<Matrix>& coeffs);

// Whether the series values land in D (coefficients get compressed through F
// on entry) or honestly take values in all of B.
enum class SeriesTarget { B, D };

// Model realized from a prescribed cumulant series via the word calculus.
class CanonicalModel : public Model {
 public:
  CanonicalModel(std::shared_ptr<const AlgebraContext> ctx,
                 std::shared_ptr<const CumulantSeries> series,
                 SeriesTarget target = SeriesTarget::D, std::vector<bool> sa_flags = {});

  const AlgebraContext& context() const override { return *ctx_; }
  int num_vars() const override { return series_->num_vars(); }
  Matrix expect(const ModelWord& w) const override;
  bool self_adjoint(int var) const override;
  const CumulantSeries& series() const { return *series_; }
  SeriesTarget series_target() const { return target_; }

 private:
  std::shared_ptr<const AlgebraContext> ctx_;
  std::shared_ptr<const CumulantSeries> series_;
  SeriesTarget target_;
  std::vector<bool> sa_flags_;
};

// Family that is exactly free with amalgamation over D: one group of
// variables per source model, each with its compressed D-valued series,
// mixed cumulants vanishing identically. Variables are concatenated in
// group order.
std::shared_ptr<CanonicalModel> construct_free_model(
    std::shared_ptr<const AlgebraContext> ctx,
    const std::vector<std::shared_ptr<const Model>>& groups, int max_order = 8);

}  // namespace amalgam::fock
