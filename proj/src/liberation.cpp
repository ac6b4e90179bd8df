#include "amalgam/liberation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "amalgam/rng.hpp"

namespace amalgam::liberation {

namespace {

void require_tracial(const AlgebraContext& ctx, const char* who) {
  if (!ctx.uniform_weights())
    throw std::invalid_argument(std::string(who) + ": needs a tracial state (uniform weights)");
}

void track(ResidualReport& rep, ResidualEntry e) {
  ++rep.queries;
  if (e.residual > rep.worst) {
    rep.worst = e.residual;
    rep.worst_entry = e;
  }
  rep.entries.push_back(std::move(e));
}

std::string tuple_str(const std::vector<int>& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ")";
  return os.str();
}

// all length-m tuples over [0,n), shuffled and truncated to cap
std::vector<std::vector<int>> var_tuples(int n, int m, int cap, Rng& rng) {
  std::vector<std::vector<int>> out;
  double total = 1.0;
  for (int i = 0; i < m; ++i) total *= n;
  if (total <= 4096.0) {
    std::vector<int> cur(m);
    auto rec = [&](auto&& self, int pos) -> void {
      if (pos == m) {
        out.push_back(cur);
        return;
      }
      for (int v = 0; v < n; ++v) {
        cur[pos] = v;
        self(self, pos + 1);
      }
    };
    rec(rec, 0);
    if (static_cast<int>(out.size()) > cap) {
      for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.u64() % i]);
      out.resize(cap);
    }
  } else {
    for (int t = 0; t < cap; ++t) {
      std::vector<int> cur(m);
      for (int i = 0; i < m; ++i) cur[i] = static_cast<int>(rng.u64() % n);
      out.push_back(std::move(cur));
    }
  }
  return out;
}

ModelWord subword(const ModelWord& w, int var_begin, int var_end, bool lead_identity,
                  bool trail_identity, int d) {
  // variables [var_begin, var_end); lead/trail identity replace the boundary
  // coefficients that stay with the other side of a split
  ModelWord out;
  for (int t = var_begin; t < var_end; ++t) out.vars.push_back(w.vars[t]);
  if (lead_identity) out.coeffs.push_back(Matrix::Identity(d, d));
  for (int t = lead_identity ? var_begin + 1 : var_begin; t <= var_end; ++t)
    out.coeffs.push_back(w.coeffs[t]);
  if (trail_identity) out.coeffs.back() = Matrix::Identity(d, d);
  return out;
}

FormalElement word_element(const ModelWord& w, int d) {
  FormalElement e = FormalElement::constant(w.coeffs[0]);
  for (std::size_t t = 0; t < w.vars.size(); ++t)
    e = e * FormalElement::variable(w.vars[t], d) * FormalElement::constant(w.coeffs[t + 1]);
  return e;
}

ModelWord adjoint_word(const ModelWord& w) {
  ModelWord out;
  out.vars.assign(w.vars.rbegin(), w.vars.rend());
  for (auto it = w.coeffs.rbegin(); it != w.coeffs.rend(); ++it)
    out.coeffs.push_back(it->adjoint());
  return out;
}

ModelWord concat_words(const ModelWord& a, const ModelWord& b) {
  ModelWord out;
  out.vars = a.vars;
  out.vars.insert(out.vars.end(), b.vars.begin(), b.vars.end());
  out.coeffs.assign(a.coeffs.begin(), a.coeffs.end() - 1);
  out.coeffs.push_back(a.coeffs.back() * b.coeffs.front());
  out.coeffs.insert(out.coeffs.end(), b.coeffs.begin() + 1, b.coeffs.end());
  return out;
}

// tau(J_i u) prescribed by the conjugate equations: u = b_1 X_{i_1} ... b_{m+1}
Complex conjugate_rhs(const Model& model, int i, const ModelWord& u) {
  const auto& ctx = model.context();
  const int d = ctx.d();
  Complex out = 0.0;
  for (int r = 0; r < static_cast<int>(u.vars.size()); ++r) {
    if (u.vars[r] != i) continue;
    Complex head = ctx.trace_B(model.expect(subword(u, 0, r, false, false, d)));
    Complex tail = ctx.trace_B(
        model.expect(subword(u, r + 1, static_cast<int>(u.vars.size()), false, false, d)));
    out += head * tail;
  }
  return out;
}

Matrix basis_unit(int d, int a, int b) {
  Matrix m = Matrix::Zero(d, d);
  m(a, b) = 1.0;
  return m;
}

}  // namespace

ResidualReport verify_conjugate(std::shared_ptr<const Model> model,
                                const std::vector<FormalElement>& J, const Options& opt) {
  if (!model) throw std::invalid_argument("verify_conjugate: null model");
  const auto& ctx = model->context();
  require_tracial(ctx, "verify_conjugate");
  const int n = model->num_vars();
  if (static_cast<int>(J.size()) != n)
    throw std::invalid_argument("verify_conjugate: one candidate per variable");
  const int d = ctx.d();

  ResidualReport rep;
  rep.name = "conjugate_moment_form";
  rep.tol = opt.tol;

  auto probe = [&](int i, const ModelWord& u, const std::string& shape) {
    Complex lhs = tau_element(*model, J[i] * word_element(u, d));
    Complex rhs = conjugate_rhs(*model, i, u);
    track(rep, {static_cast<int>(u.vars.size()), shape, std::abs(lhs - rhs)});
  };

  for (int i = 0; i < n; ++i) {
    // m = 0 with a full basis sweep: tau(J_i b) = 0 for all b in B
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        ModelWord u;
        u.coeffs = {basis_unit(d, a, b)};
        probe(i, u, "J_" + std::to_string(i) + " basis");
      }
    // m = 1 basis sweep: the equations are linear in each coefficient, so
    // sweeping unit pairs is exhaustive at this order
    for (int j = 0; j < n; ++j)
      for (int a1 = 0; a1 < d * d; ++a1)
        for (int a2 = 0; a2 < d * d; ++a2) {
          ModelWord u;
          u.vars = {j};
          u.coeffs = {basis_unit(d, a1 / d, a1 % d), basis_unit(d, a2 / d, a2 % d)};
          probe(i, u, "J_" + std::to_string(i) + " basis (" + std::to_string(j) + ")");
        }
    for (int m = 1; m <= opt.max_m; ++m) {
      Rng trng = Rng(opt.seed).stream(10 * i + m);
      auto tuples = var_tuples(n, m, opt.tuple_cap, trng);
      for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
        Rng crng = Rng(opt.seed).stream(10 * i + m).stream(ti + 1);
        for (int draw = 0; draw < opt.coeff_draws; ++draw) {
          ModelWord u;
          u.vars = tuples[ti];
          for (int t = 0; t <= m; ++t) u.coeffs.push_back(ctx.random_B(crng));
          probe(i, u, "J_" + std::to_string(i) + " " + tuple_str(tuples[ti]));
        }
      }
    }
  }
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

ResidualReport verify_conjugate_cumulant_form(std::shared_ptr<const Model> model,
                                              const std::vector<FormalElement>& J,
                                              const Options& opt) {
  if (!model) throw std::invalid_argument("verify_conjugate_cumulant_form: null model");
  const auto& ctx = model->context();
  require_tracial(ctx, "verify_conjugate_cumulant_form");
  const int n = model->num_vars();
  if (static_cast<int>(J.size()) != n)
    throw std::invalid_argument("verify_conjugate_cumulant_form: one candidate per variable");
  if (opt.target == cum::Target::Scalar)
    throw std::invalid_argument("verify_conjugate_cumulant_form: target must be B or D");
  const int d = ctx.d();
  const Matrix id = Matrix::Identity(d, d);

  // derived family: the candidates, the variables, the identity, B probes
  std::vector<FormalElement> elems = J;
  for (int j = 0; j < n; ++j) elems.push_back(FormalElement::variable(j, d));
  elems.push_back(FormalElement::constant(id));
  Rng prng = Rng(opt.seed).stream(77);
  const int num_probes = 3;
  for (int p = 0; p < num_probes; ++p)
    elems.push_back(FormalElement::constant(ctx.random_B(prng)));
  auto derived = std::make_shared<DerivedModel>(model, elems);
  auto eng = std::make_shared<cum::CumulantEngine>(derived, opt.target, opt.max_m + 1);
  const int num_args = n + 1 + num_probes;  // indices n .. 2n+num_probes
  auto draw_coeff = [&](Rng& r) {
    return opt.target == cum::Target::D ? ctx.random_D(r) : ctx.random_B(r);
  };

  ResidualReport rep;
  rep.name = "conjugate_cumulant_form";
  rep.tol = opt.tol;

  for (int i = 0; i < n; ++i) {
    track(rep, {1, "kappa(J_" + std::to_string(i) + ")", alg::frob(eng->cumulant({i}))});
    // second family: kappa(J_i, d a) = delta_{a,X_i} tau(d) 1
    Rng crng = Rng(opt.seed).stream(100 + i);
    for (int a = 0; a < num_args; ++a) {
      for (int draw = 0; draw < opt.coeff_draws; ++draw) {
        Matrix dc = draw_coeff(crng);
        Matrix got = eng->cumulant({i, n + a}, {dc, id});
        Matrix want = (a == i) ? Matrix(ctx.trace_B(dc) * id) : Matrix(Matrix::Zero(d, d));
        track(rep, {2, "kappa(J_" + std::to_string(i) + ", d a_" + std::to_string(a) + ")",
                    alg::frob(got - want)});
      }
    }
    // all longer cumulants vanish
    for (int m = 2; m <= opt.max_m; ++m) {
      Rng trng = Rng(opt.seed).stream(200 + 10 * i + m);
      auto tuples = var_tuples(num_args, m, opt.tuple_cap, trng);
      for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
        Rng drng = Rng(opt.seed).stream(200 + 10 * i + m).stream(ti + 1);
        for (int draw = 0; draw < opt.coeff_draws; ++draw) {
          std::vector<int> args{i};
          std::vector<Matrix> rc;
          for (int t = 0; t < m; ++t) {
            args.push_back(n + tuples[ti][t]);
            rc.push_back(draw_coeff(drng));
          }
          rc.push_back(id);
          track(rep, {m + 1, "kappa(J_" + std::to_string(i) + ", " + tuple_str(tuples[ti]) + ")",
                      alg::frob(eng->cumulant(args, rc))});
        }
      }
    }
  }
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

double fisher_info(const Model& model, const std::vector<FormalElement>& J, double sa_tol) {
  require_tracial(model.context(), "fisher_info");
  if (static_cast<int>(J.size()) != model.num_vars())
    throw std::invalid_argument("fisher_info: one candidate per variable");
  double out = 0.0;
  for (const auto& j : J) {
    if (l2_norm(model, j - j.adjoint()) > sa_tol)
      throw std::invalid_argument("fisher_info: candidate not self-adjoint");
    out += tau_element(model, j * j).real();
  }
  return out;
}

Matrix gradient_rhs(const Model& model, const std::vector<int>& sides, const ModelWord& w,
                    cum::Target target) {
  const auto& ctx = model.context();
  const int d = ctx.d();
  if (static_cast<int>(sides.size()) != model.num_vars())
    throw std::invalid_argument("gradient_rhs: one side tag per variable");
  for (int s : sides)
    if (s != 1 && s != 2) throw std::invalid_argument("gradient_rhs: sides must be 1 or 2");
  auto E = [&](const ModelWord& u) {
    Matrix e = model.expect(u);
    return target == cum::Target::D ? ctx.cond_exp_D(e) : e;
  };
  const int m = static_cast<int>(w.vars.size());
  Matrix out = Matrix::Zero(d, d);
  for (int t = 0; t < m; ++t) {
    if (sides[w.vars[t]] != 1) continue;
    Matrix pre_x = E(subword(w, 0, t + 1, false, true, d));
    Matrix post = E(subword(w, t + 1, m, false, false, d));
    Matrix pre = E(subword(w, 0, t, false, false, d));
    Matrix x_post = E(subword(w, t, m, true, false, d));
    out += pre_x * post - pre * x_post;
  }
  return out;
}

GradientFunctionalModel::GradientFunctionalModel(std::shared_ptr<const Model> base,
                                                 std::vector<int> sides, cum::Target target)
    : base_(std::move(base)), sides_(std::move(sides)), target_(target) {
  if (!base_) throw std::invalid_argument("gradient functional: null base");
  require_tracial(base_->context(), "gradient functional");
  if (static_cast<int>(sides_.size()) != base_->num_vars())
    throw std::invalid_argument("gradient functional: one side tag per variable");
  for (int s : sides_)
    if (s != 1 && s != 2)
      throw std::invalid_argument("gradient functional: sides must be 1 or 2");
  if (target_ == cum::Target::Scalar)
    throw std::invalid_argument("gradient functional: target must be B or D");
}

Matrix GradientFunctionalModel::expect(const ModelWord& w) const {
  const int d = context().d();
  if (w.coeffs.size() != w.vars.size() + 1)
    throw std::invalid_argument("gradient functional: word needs vars+1 coefficients");
  int jcount = 0;
  for (int v : w.vars) {
    if (v < 0 || v > j_var())
      throw std::invalid_argument("gradient functional: variable out of range");
    if (v == j_var()) ++jcount;
  }
  if (jcount == 0) return base_->expect(w);
  if (jcount > 1 || w.vars[0] != j_var() ||
      alg::frob(Matrix(w.coeffs[0] - Matrix::Identity(d, d))) > 1e-9)
    throw std::logic_error("gradient functional: j is only defined leading a word");
  ModelWord rest;
  rest.vars.assign(w.vars.begin() + 1, w.vars.end());
  rest.coeffs.assign(w.coeffs.begin() + 1, w.coeffs.end());
  return gradient_rhs(*base_, sides_, rest, target_);
}

bool GradientFunctionalModel::self_adjoint(int var) const {
  if (var == j_var()) return true;
  return base_->self_adjoint(var);
}

ResidualReport verify_liberation_gradient(std::shared_ptr<const Model> model,
                                          const FormalElement& j_cand,
                                          const std::vector<int>& sides, const Options& opt) {
  if (!model) throw std::invalid_argument("verify_liberation_gradient: null model");
  const auto& ctx = model->context();
  require_tracial(ctx, "verify_liberation_gradient");
  const int n = model->num_vars();
  if (n == 0) throw std::invalid_argument("verify_liberation_gradient: no generators");
  if (static_cast<int>(sides.size()) != n)
    throw std::invalid_argument("verify_liberation_gradient: one side tag per variable");
  bool has1 = false, has2 = false;
  for (int s : sides) {
    if (s != 1 && s != 2)
      throw std::invalid_argument("verify_liberation_gradient: sides must be 1 or 2");
    (s == 1 ? has1 : has2) = true;
  }
  if (!has1 || !has2)
    throw std::invalid_argument("verify_liberation_gradient: both sides need generators");
  if (opt.target == cum::Target::Scalar)
    throw std::invalid_argument("verify_liberation_gradient: target must be B or D");
  const int d = ctx.d();
  const Matrix id = Matrix::Identity(d, d);
  auto project = [&](const Matrix& m) {
    return opt.target == cum::Target::D ? ctx.cond_exp_D(m) : m;
  };
  auto draw_coeff = [&](Rng& r) {
    return opt.target == cum::Target::D ? ctx.random_D(r) : ctx.random_B(r);
  };
  std::vector<int> swapped(sides);
  for (int& s : swapped) s = 3 - s;

  ResidualReport rep;
  rep.name = "liberation_gradient";
  rep.tol = opt.tol;

  track(rep, {0, "E(j)", alg::frob(project(expect_element(*model, j_cand)))});

  // moment telescopes and functional antisymmetry
  for (int m = 1; m <= opt.max_m; ++m) {
    Rng trng = Rng(opt.seed).stream(300 + m);
    auto tuples = var_tuples(n, m, opt.tuple_cap, trng);
    for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
      Rng crng = Rng(opt.seed).stream(300 + m).stream(ti + 1);
      for (int draw = 0; draw < opt.coeff_draws; ++draw) {
        ModelWord w;
        w.vars = tuples[ti];
        for (int t = 0; t <= m; ++t) w.coeffs.push_back(draw_coeff(crng));
        Matrix rhs = gradient_rhs(*model, sides, w, opt.target);
        Matrix lhs = project(expect_element(*model, j_cand * word_element(w, d)));
        track(rep, {m, "moment " + tuple_str(tuples[ti]), alg::frob(lhs - rhs)});
        Matrix rhs_swapped = gradient_rhs(*model, swapped, w, opt.target);
        track(rep, {m, "antisym " + tuple_str(tuples[ti]), alg::frob(rhs + rhs_swapped)});
      }
    }
  }

  // endpoint sign rules for the cumulants
  std::vector<FormalElement> elems{j_cand};
  for (int j = 0; j < n; ++j) elems.push_back(FormalElement::variable(j, d));
  auto derived = std::make_shared<DerivedModel>(model, elems);
  auto eng = std::make_shared<cum::CumulantEngine>(derived, opt.target, opt.max_m + 1);
  for (int m = 1; m <= opt.max_m; ++m) {
    Rng trng = Rng(opt.seed).stream(400 + m);
    auto tuples = var_tuples(n, m, opt.tuple_cap, trng);
    for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
      Rng drng = Rng(opt.seed).stream(400 + m).stream(ti + 1);
      for (int draw = 0; draw < opt.coeff_draws; ++draw) {
        const auto& tup = tuples[ti];
        std::vector<Matrix> rc;
        for (int t = 0; t < m; ++t) rc.push_back(draw_coeff(drng));
        rc.push_back(id);
        std::vector<int> args{0};
        for (int t = 0; t < m; ++t) args.push_back(tup[t] + 1);
        Matrix kj = eng->cumulant(args, rc);
        Matrix want = Matrix::Zero(d, d);
        if (m >= 2 && sides[tup[0]] != sides[tup[m - 1]]) {
          std::vector<int> bare;
          for (int t = 0; t < m; ++t) bare.push_back(tup[t] + 1);
          std::vector<Matrix> brc(rc.begin() + 1, rc.end());
          Matrix ka = rc[0] * eng->cumulant(bare, brc);
          want = sides[tup[0]] == 1 ? Matrix(-ka) : ka;
        }
        track(rep, {m + 1, "kappa " + tuple_str(tup), alg::frob(kj - want)});
      }
    }
  }
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

FormalElement cond_exp_commutant_formal(const AlgebraContext& ctx, const FormalElement& e) {
  FormalElement out;
  for (int j = 0; j < ctx.num_blocks(); ++j) {
    const int dim = ctx.dspec().blocks[j].dim;
    FormalElement block;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        FormalElement term = FormalElement::constant(ctx.d_unit(j, a, b)) * e *
                             FormalElement::constant(ctx.d_unit(j, b, a));
        block = block.empty() ? term : block + term;
      }
    block = block.scaled(1.0 / dim);
    out = out.empty() ? block : out + block;
  }
  return out;
}

FormalElement commutator_projection(const AlgebraContext& ctx,
                                    const std::vector<FormalElement>& J) {
  if (J.empty()) throw std::invalid_argument("commutator_projection: empty candidate");
  const int d = ctx.d();
  FormalElement sum;
  for (std::size_t i = 0; i < J.size(); ++i) {
    FormalElement x = FormalElement::variable(static_cast<int>(i), d);
    FormalElement comm = J[i] * x - x * J[i];
    sum = sum.empty() ? comm : sum + comm;
  }
  Matrix scale = ctx.central_element_inverse() * static_cast<double>(ctx.dim_D());
  return cond_exp_commutant_formal(ctx, sum) * FormalElement::constant(scale);
}

std::vector<ModelWord> decorated_span(int num_vars, const std::vector<Matrix>& basis,
                                      int max_len) {
  if (basis.empty()) throw std::invalid_argument("decorated_span: empty basis");
  std::vector<ModelWord> out;
  for (int len = 0; len <= max_len; ++len) {
    ModelWord cur;
    cur.vars.assign(len, 0);
    cur.coeffs.assign(len + 1, basis[0]);
    auto rec = [&](auto&& self, int slot) -> void {
      // slots alternate coefficient 0, var 0, coefficient 1, ..., var len-1,
      // coefficient len
      if (slot == 2 * len + 1) {
        out.push_back(cur);
        return;
      }
      if (slot % 2 == 0) {
        for (const auto& b : basis) {
          cur.coeffs[slot / 2] = b;
          self(self, slot + 1);
        }
      } else {
        for (int v = 0; v < num_vars; ++v) {
          cur.vars[slot / 2] = v;
          self(self, slot + 1);
        }
      }
    };
    rec(rec, 0);
  }
  return out;
}

namespace {

struct GramSolve {
  Eigen::MatrixXcd pinv;
  int rank = 0;
};

GramSolve gram_pinv(const Eigen::MatrixXcd& g, double cutoff) {
  Eigen::MatrixXcd h = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const auto& ev = es.eigenvalues();
  double top = ev.size() ? std::max(0.0, ev.maxCoeff()) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  GramSolve out;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff * std::max(top, 1e-300)) {
      inv(i) = 1.0 / ev(i);
      ++out.rank;
    }
  out.pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
  return out;
}

}  // namespace

SpanSolution solve_conjugate_span(const Model& model, const std::vector<ModelWord>& span,
                                  double cutoff) {
  const auto& ctx = model.context();
  require_tracial(ctx, "solve_conjugate_span");
  if (span.empty()) throw std::invalid_argument("solve_conjugate_span: empty span");
  const int p = static_cast<int>(span.size());
  const int n = model.num_vars();
  const int d = ctx.d();

  std::vector<ModelWord> adj(p);
  for (int s = 0; s < p; ++s) adj[s] = adjoint_word(span[s]);
  Eigen::MatrixXcd g(p, p);
  for (int s = 0; s < p; ++s)
    for (int t = 0; t < p; ++t)
      g(s, t) = ctx.trace_B(model.expect(concat_words(adj[s], span[t])));
  GramSolve gs = gram_pinv(g, cutoff);

  SpanSolution sol;
  sol.span_size = p;
  sol.rank = gs.rank;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXcd y(p);
    for (int s = 0; s < p; ++s) y(s) = conjugate_rhs(model, i, adj[s]);
    Eigen::VectorXcd alpha = gs.pinv * y;
    FormalElement e;
    for (int t = 0; t < p; ++t) {
      if (std::abs(alpha(t)) < 1e-14) continue;
      FormalElement w = word_element(span[t], d).scaled(alpha(t));
      e = e.empty() ? w : e + w;
    }
    sol.elems.push_back(std::move(e));
    double n2 = std::max(0.0, (y.adjoint() * alpha)(0, 0).real());
    sol.norm2.push_back(n2);
    sol.fisher += n2;
  }
  return sol;
}

SpanSolution solve_gradient_span(const Model& model, const std::vector<int>& sides,
                                 const std::vector<std::vector<int>>& span_words,
                                 double cutoff) {
  const auto& ctx = model.context();
  require_tracial(ctx, "solve_gradient_span");
  if (span_words.empty()) throw std::invalid_argument("solve_gradient_span: empty span");
  const int p = static_cast<int>(span_words.size());
  const int d = ctx.d();
  const Matrix id = Matrix::Identity(d, d);
  auto to_word = [&](const std::vector<int>& vars) {
    ModelWord w;
    w.vars = vars;
    w.coeffs.assign(vars.size() + 1, id);
    return w;
  };

  std::vector<ModelWord> words(p), adj(p);
  for (int s = 0; s < p; ++s) {
    words[s] = to_word(span_words[s]);
    adj[s] = adjoint_word(words[s]);
  }
  Eigen::MatrixXcd g(p, p);
  for (int s = 0; s < p; ++s)
    for (int t = 0; t < p; ++t)
      g(s, t) = ctx.trace_B(model.expect(concat_words(adj[s], words[t])));
  GramSolve gs = gram_pinv(g, cutoff);

  Eigen::VectorXcd y(p);
  for (int s = 0; s < p; ++s)
    y(s) = ctx.trace_B(gradient_rhs(model, sides, adj[s], cum::Target::B));
  Eigen::VectorXcd alpha = gs.pinv * y;

  SpanSolution sol;
  sol.span_size = p;
  sol.rank = gs.rank;
  FormalElement e;
  for (int t = 0; t < p; ++t) {
    if (std::abs(alpha(t)) < 1e-14) continue;
    FormalElement w = word_element(words[t], d).scaled(alpha(t));
    e = e.empty() ? w : e + w;
  }
  sol.elems.push_back(std::move(e));
  double n2 = std::max(0.0, (y.adjoint() * alpha)(0, 0).real());
  sol.norm2.push_back(n2);
  sol.fisher = n2;
  return sol;
}

}  // namespace amalgam::liberation
