#include "amalgam/model.hpp"

#include <cmath>
#include <stdexcept>

namespace amalgam {

void Model::validate(const ModelWord& w) const {
  if (w.coeffs.size() != w.vars.size() + 1)
    throw std::invalid_argument("model: word needs vars+1 coefficients");
  int d = context().d();
  for (const auto& c : w.coeffs)
    if (c.rows() != d || c.cols() != d)
      throw std::invalid_argument("model: coefficients must be d x d");
  for (int v : w.vars)
    if (v < 0 || v >= num_vars()) throw std::invalid_argument("model: variable out of range");
}

MatrixModel::MatrixModel(std::shared_ptr<const AlgebraContext> ctx, std::vector<Matrix> vars)
    : ctx_(std::move(ctx)), vars_(std::move(vars)) {
  if (!ctx_) throw std::invalid_argument("matrix model: null context");
  for (const auto& v : vars_)
    if (v.rows() != ctx_->N() || v.cols() != ctx_->N())
      throw std::invalid_argument("matrix model: variables must be N x N");
}

Matrix MatrixModel::expect(const ModelWord& w) const {
  validate(w);
  Matrix acc = ctx_->lift(w.coeffs[0]);
  for (std::size_t i = 0; i < w.vars.size(); ++i)
    acc = acc * vars_[w.vars[i]] * ctx_->lift(w.coeffs[i + 1]);
  return ctx_->cond_exp_B(acc);
}

bool MatrixModel::self_adjoint(int var) const {
  const Matrix& v = vars_.at(var);
  return alg::frob(v - Matrix(v.adjoint())) < 1e-12 * (1.0 + alg::frob(v));
}

FormalElement FormalElement::variable(int var, int d) {
  if (var < 0) throw std::invalid_argument("formal: negative variable");
  FormalElement e;
  Term t;
  t.vars = {var};
  t.coeffs = {Matrix::Identity(d, d), Matrix::Identity(d, d)};
  e.terms_.push_back(std::move(t));
  return e;
}

FormalElement FormalElement::constant(Matrix b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("formal: constant must be square");
  FormalElement e;
  Term t;
  t.coeffs = {std::move(b)};
  e.terms_.push_back(std::move(t));
  return e;
}

FormalElement FormalElement::operator+(const FormalElement& o) const {
  FormalElement e = *this;
  e.terms_.insert(e.terms_.end(), o.terms_.begin(), o.terms_.end());
  return e;
}

FormalElement FormalElement::operator-(const FormalElement& o) const {
  return *this + o.scaled(-1.0);
}

FormalElement FormalElement::operator*(const FormalElement& o) const {
  FormalElement e;
  for (const auto& a : terms_)
    for (const auto& b : o.terms_) {
      Term t;
      t.vars = a.vars;
      t.vars.insert(t.vars.end(), b.vars.begin(), b.vars.end());
      t.coeffs.assign(a.coeffs.begin(), a.coeffs.end() - 1);
      t.coeffs.push_back(a.coeffs.back() * b.coeffs.front());
      t.coeffs.insert(t.coeffs.end(), b.coeffs.begin() + 1, b.coeffs.end());
      e.terms_.push_back(std::move(t));
    }
  return e;
}

FormalElement FormalElement::scaled(Complex s) const {
  FormalElement e = *this;
  for (auto& t : e.terms_) t.coeffs.front() *= s;
  return e;
}

FormalElement FormalElement::adjoint() const { return adjoint({}); }

FormalElement FormalElement::adjoint(const std::vector<int>& star_var) const {
  FormalElement e;
  for (const auto& t : terms_) {
    Term s;
    s.vars.assign(t.vars.rbegin(), t.vars.rend());
    if (!star_var.empty())
      for (auto& v : s.vars) {
        if (v >= static_cast<int>(star_var.size()))
          throw std::invalid_argument("formal: star map too short");
        v = star_var[v];
      }
    for (auto it = t.coeffs.rbegin(); it != t.coeffs.rend(); ++it)
      s.coeffs.push_back(it->adjoint());
    e.terms_.push_back(std::move(s));
  }
  return e;
}

int FormalElement::max_var() const {
  int m = -1;
  for (const auto& t : terms_)
    for (int v : t.vars) m = std::max(m, v);
  return m;
}

Matrix FormalElement::eval(const AlgebraContext& ctx, const std::vector<Matrix>& vars) const {
  Matrix acc = Matrix::Zero(ctx.N(), ctx.N());
  for (const auto& t : terms_) {
    Matrix p = ctx.lift(t.coeffs[0]);
    for (std::size_t i = 0; i < t.vars.size(); ++i) {
      if (t.vars[i] >= static_cast<int>(vars.size()))
        throw std::invalid_argument("formal: eval variable out of range");
      p = p * vars[t.vars[i]] * ctx.lift(t.coeffs[i + 1]);
    }
    acc += p;
  }
  return acc;
}

DerivedModel::DerivedModel(std::shared_ptr<const Model> base,
                           std::vector<FormalElement> elements, std::vector<bool> sa_flags)
    : base_(std::move(base)), elements_(std::move(elements)), sa_flags_(std::move(sa_flags)) {
  if (!base_) throw std::invalid_argument("derived model: null base");
  if (!sa_flags_.empty() && sa_flags_.size() != elements_.size())
    throw std::invalid_argument("derived model: one flag per element");
  for (const auto& e : elements_)
    if (e.max_var() >= base_->num_vars())
      throw std::invalid_argument("derived model: element references unknown base variable");
}

Matrix DerivedModel::expect(const ModelWord& w) const {
  validate(w);
  int d = context().d();
  Matrix acc = Matrix::Zero(d, d);
  std::vector<int> vars;
  std::vector<Matrix> coeffs;
  // expand the product of term sums into base-model words; `pending` carries
  // the coefficient accumulated since the last emitted base variable
  auto rec = [&](auto&& self, std::size_t slot, const Matrix& pending) -> void {
    if (slot == w.vars.size()) {
      ModelWord base_word;
      base_word.vars = vars;
      base_word.coeffs = coeffs;
      base_word.coeffs.push_back(pending);
      acc += base_->expect(base_word);
      return;
    }
    const FormalElement& el = elements_[w.vars[slot]];
    for (const auto& t : el.terms()) {
      if (t.vars.empty()) {
        self(self, slot + 1, Matrix(pending * t.coeffs[0] * w.coeffs[slot + 1]));
        continue;
      }
      std::size_t nvars = vars.size(), ncoeffs = coeffs.size();
      coeffs.push_back(pending * t.coeffs[0]);
      vars.push_back(t.vars[0]);
      for (std::size_t i = 1; i < t.vars.size(); ++i) {
        coeffs.push_back(t.coeffs[i]);
        vars.push_back(t.vars[i]);
      }
      self(self, slot + 1, Matrix(t.coeffs.back() * w.coeffs[slot + 1]));
      vars.resize(nvars);
      coeffs.resize(ncoeffs);
    }
  };
  rec(rec, 0, w.coeffs[0]);
  return acc;
}

bool DerivedModel::self_adjoint(int var) const {
  if (var < 0 || var >= num_vars()) throw std::invalid_argument("derived model: bad variable");
  return sa_flags_.empty() ? false : sa_flags_[var];
}

Matrix expect_element(const Model& m, const FormalElement& e) {
  const int d = m.context().d();
  Matrix out = Matrix::Zero(d, d);
  for (const auto& t : e.terms()) {
    ModelWord w;
    w.vars = t.vars;
    w.coeffs = t.coeffs;
    out += m.expect(w);
  }
  return out;
}

Complex tau_element(const Model& m, const FormalElement& e) {
  return m.context().trace_B(expect_element(m, e));
}

double l2_norm(const Model& m, const FormalElement& e) {
  double n2 = tau_element(m, e * e.adjoint()).real();
  return std::sqrt(std::max(0.0, n2));
}

}  // namespace amalgam
