#pragma once

#include <memory>
#include <vector>

#include "amalgam/algebra.hpp"

namespace amalgam {

using alg::AlgebraContext;
using alg::Complex;
using alg::Matrix;

// Alternating word b_0 x_{v_1} b_1 x_{v_2} ... x_{v_n} b_n with B-side (d x d)
// coefficients; coeffs.size() == vars.size() + 1. Empty vars means a bare
// coefficient, whose expectation is itself.
struct ModelWord {
  std::vector<int> vars;
  std::vector<Matrix> coeffs;
};

// A family (x_1..x_m) in some tracial setup over the tower D c B c M, exposed
// only through B-valued expectations of coefficient words. Everything downstream
// (cumulants, freeness tests, liberation residuals) consumes this interface.
class Model {
 public:
  virtual ~Model() = default;
  virtual const AlgebraContext& context() const = 0;
  virtual int num_vars() const = 0;
  // E_B(b_0 x_{v_1} b_1 ... x_{v_n} b_n), d x d
  virtual Matrix expect(const ModelWord& w) const = 0;
  virtual bool self_adjoint(int var) const = 0;

 protected:
  void validate(const ModelWord& w) const;
};

// Concrete N x N matrices over a finite-dimensional context.
class MatrixModel : public Model {
 public:
  MatrixModel(std::shared_ptr<const AlgebraContext> ctx, std::vector<Matrix> vars);

  const AlgebraContext& context() const override { return *ctx_; }
  int num_vars() const override { return static_cast<int>(vars_.size()); }
  Matrix expect(const ModelWord& w) const override;
  bool self_adjoint(int var) const override;
  const Matrix& var(int i) const { return vars_.at(i); }
  std::shared_ptr<const AlgebraContext> context_ptr() const { return ctx_; }

 private:
  std::shared_ptr<const AlgebraContext> ctx_;
  std::vector<Matrix> vars_;
};

// Noncommutative polynomial in model variables with B-side coefficients,
// kept as an explicit sum of coefficient words.
class FormalElement {
 public:
  struct Term {
    std::vector<int> vars;
    std::vector<Matrix> coeffs;  // vars.size() + 1 entries, d x d
  };

  FormalElement() = default;

  static FormalElement variable(int var, int d);
  static FormalElement constant(Matrix b);

  FormalElement operator+(const FormalElement& o) const;
  FormalElement operator-(const FormalElement& o) const;
  FormalElement operator*(const FormalElement& o) const;
  FormalElement scaled(Complex s) const;
  // star of the element; vars map through `star_var` (identity = self-adjoint)
  FormalElement adjoint() const;
  FormalElement adjoint(const std::vector<int>& star_var) const;

  const std::vector<Term>& terms() const { return terms_; }
  int max_var() const;
  bool empty() const { return terms_.empty(); }

  // evaluate on concrete matrices (lifting the coefficients), N x N result
  Matrix eval(const AlgebraContext& ctx, const std::vector<Matrix>& vars) const;

 private:
  std::vector<Term> terms_;
};

// termwise E_B of a polynomial, d x d
Matrix expect_element(const Model& m, const FormalElement& e);
Complex tau_element(const Model& m, const FormalElement& e);
// ||e||_2 = tau(e e*)^{1/2}; uses the identity star map, so the model's
// variables must be self-adjoint
double l2_norm(const Model& m, const FormalElement& e);

// Variables that are formal polynomials in the variables of a base model;
// expectations distribute over terms and delegate to the base.
class DerivedModel : public Model {
 public:
  DerivedModel(std::shared_ptr<const Model> base, std::vector<FormalElement> elements,
               std::vector<bool> sa_flags = {});

  const AlgebraContext& context() const override { return base_->context(); }
  int num_vars() const override { return static_cast<int>(elements_.size()); }
  Matrix expect(const ModelWord& w) const override;
  bool self_adjoint(int var) const override;
  const FormalElement& element(int i) const { return elements_.at(i); }
  const Model& base() const { return *base_; }

 private:
  std::shared_ptr<const Model> base_;
  std::vector<FormalElement> elements_;
  std::vector<bool> sa_flags_;
};

}  // namespace amalgam
