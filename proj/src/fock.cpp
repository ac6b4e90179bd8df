#include "amalgam/fock.hpp"

#include <stdexcept>

namespace amalgam::fock {

namespace {

bool same_shape(const AlgebraContext& a, const AlgebraContext& b) {
  if (a.d() != b.d() || a.k() != b.k() || a.num_blocks() != b.num_blocks()) return false;
  for (int j = 0; j < a.num_blocks(); ++j) {
    if (a.dspec().blocks[j].dim != b.dspec().blocks[j].dim) return false;
    if (a.dspec().blocks[j].mult != b.dspec().blocks[j].mult) return false;
    if (std::abs(a.weight(j) - b.weight(j)) > 1e-12) return false;
  }
  return true;
}

void check_kappa_args(const CumulantSeries& s, const std::vector<int>& vars,
                      const std::vector<Matrix>& rc) {
  if (vars.empty()) throw std::invalid_argument("series: empty argument list");
  if (static_cast<int>(vars.size()) > s.max_order())
    throw std::runtime_error("series: order above cap");
  if (rc.size() != vars.size())
    throw std::invalid_argument("series: need one right coefficient per argument");
  for (int v : vars)
    if (v < 0 || v >= s.num_vars()) throw std::invalid_argument("series: variable out of range");
  for (const auto& m : rc)
    if (m.rows() != s.dim() || m.cols() != s.dim())
      throw std::invalid_argument("series: coefficient shape mismatch");
}

}  // namespace

Matrix SandwichMap::apply(const Matrix& b) const {
  Matrix acc = Matrix::Zero(b.rows(), b.cols());
  for (const auto& [v, w] : terms) acc += v * b * w;
  return acc;
}

SandwichMap SandwichMap::scaled_identity(int d, Complex g) {
  SandwichMap m;
  m.terms.push_back({g * Matrix::Identity(d, d), Matrix::Identity(d, d)});
  return m;
}

SandwichMap SandwichMap::trace_times_identity(const AlgebraContext& ctx, Complex g) {
  // tau_B(b) 1 = sum_i t_i b_ii 1 = sum_{i,p} (t_i E_pi) b E_ip
  int d = ctx.d();
  SandwichMap m;
  for (int j = 0; j < ctx.num_blocks(); ++j) {
    const auto& blk = ctx.dspec().blocks[j];
    int len = blk.dim * blk.mult;
    double t = ctx.weight(j) / double(len);
    for (int i = ctx.block_offset(j); i < ctx.block_offset(j) + len; ++i)
      for (int p = 0; p < d; ++p) {
        Matrix v = Matrix::Zero(d, d), w = Matrix::Zero(d, d);
        v(p, i) = g * t;
        w(i, p) = 1.0;
        m.terms.push_back({std::move(v), std::move(w)});
      }
  }
  return m;
}

TableSeries::TableSeries(int num_vars, int d, int max_order)
    : num_vars_(num_vars), d_(d), max_order_(max_order) {
  if (num_vars_ < 1 || d_ < 1 || max_order_ < 1)
    throw std::invalid_argument("table series: bad shape");
}

void TableSeries::set(const std::vector<int>& vars,
                      std::vector<std::vector<Matrix>> terms) {
  if (vars.empty() || static_cast<int>(vars.size()) > max_order_)
    throw std::invalid_argument("table series: bad tuple length");
  for (int v : vars)
    if (v < 0 || v >= num_vars_) throw std::invalid_argument("table series: bad variable");
  for (const auto& t : terms) {
    if (t.size() != vars.size())
      throw std::invalid_argument("table series: term needs one matrix per argument");
    for (const auto& m : t)
      if (m.rows() != d_ || m.cols() != d_)
        throw std::invalid_argument("table series: matrices must be d x d");
  }
  table_[vars] = std::move(terms);
}

Matrix TableSeries::kappa(const std::vector<int>& vars,
                          const std::vector<Matrix>& rc) const {
  check_kappa_args(*this, vars, rc);
  Matrix acc = Matrix::Zero(d_, d_);
  auto it = table_.find(vars);
  if (it == table_.end()) return acc;
  for (const auto& term : it->second) {
    Matrix p = term[0];
    for (std::size_t i = 1; i < term.size(); ++i) p = p * rc[i - 1] * term[i];
    acc += p * rc.back();
  }
  return acc;
}

SemicircularSeries::SemicircularSeries(int num_vars, int d) : num_vars_(num_vars), d_(d) {
  if (num_vars_ < 1 || d_ < 1) throw std::invalid_argument("semicircular series: bad shape");
  means_.assign(num_vars_, Matrix::Zero(d_, d_));
}

void SemicircularSeries::set_mean(int i, Matrix mean) {
  if (i < 0 || i >= num_vars_) throw std::invalid_argument("semicircular series: bad variable");
  if (mean.rows() != d_ || mean.cols() != d_)
    throw std::invalid_argument("semicircular series: mean must be d x d");
  means_[i] = std::move(mean);
}

void SemicircularSeries::set_covariance(int i, int j, SandwichMap eta) {
  if (i < 0 || i >= num_vars_ || j < 0 || j >= num_vars_)
    throw std::invalid_argument("semicircular series: bad variable");
  cov_[{i, j}] = std::move(eta);
}

Matrix SemicircularSeries::kappa(const std::vector<int>& vars,
                                 const std::vector<Matrix>& rc) const {
  check_kappa_args(*this, vars, rc);
  if (vars.size() == 1) return means_[vars[0]] * rc[0];
  if (vars.size() == 2) {
    auto it = cov_.find({vars[0], vars[1]});
    if (it == cov_.end()) return Matrix::Zero(d_, d_);
    return it->second.apply(rc[0]) * rc[1];
  }
  return Matrix::Zero(d_, d_);
}

CompressedSeries::CompressedSeries(std::shared_ptr<const Model> source, int max_order)
    : eng_(std::make_shared<cum::CumulantEngine>(std::move(source), cum::Target::D,
                                                 max_order)) {}

Matrix CompressedSeries::kappa(const std::vector<int>& vars,
                               const std::vector<Matrix>& rc) const {
  check_kappa_args(*this, vars, rc);
  const auto& ctx = eng_->model().context();
  std::vector<Matrix> proj;
  proj.reserve(rc.size());
  for (const auto& m : rc) proj.push_back(ctx.cond_exp_D(m));
  return eng_->cumulant(vars, proj);
}

FreeProductSeries::FreeProductSeries(
    std::vector<std::shared_ptr<const CumulantSeries>> groups)
    : groups_(std::move(groups)) {
  if (groups_.empty()) throw std::invalid_argument("free product series: no groups");
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (!groups_[g]) throw std::invalid_argument("free product series: null group");
    if (groups_[g]->dim() != groups_[0]->dim())
      throw std::invalid_argument("free product series: dimension mismatch");
    for (int l = 0; l < groups_[g]->num_vars(); ++l)
      var_map_.push_back({static_cast<int>(g), l});
  }
}

int FreeProductSeries::dim() const { return groups_[0]->dim(); }

int FreeProductSeries::max_order() const {
  int m = groups_[0]->max_order();
  for (const auto& g : groups_) m = std::min(m, g->max_order());
  return m;
}

Matrix FreeProductSeries::kappa(const std::vector<int>& vars,
                                const std::vector<Matrix>& rc) const {
  check_kappa_args(*this, vars, rc);
  int group = var_map_[vars[0]].first;
  std::vector<int> local(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (var_map_[vars[i]].first != group) return Matrix::Zero(dim(), dim());
    local[i] = var_map_[vars[i]].second;
  }
  return groups_[group]->kappa(local, rc);
}

namespace {

void merge_coeffs(LetterWord& w) {
  LetterWord out;
  for (auto& l : w) {
    if (l.kind == Letter::Kind::Coeff && !out.empty() &&
        out.back().kind == Letter::Kind::Coeff) {
      out.back().coeff = out.back().coeff * l.coeff;
    } else {
      out.push_back(std::move(l));
    }
  }
  w = std::move(out);
}

// gen at `pos` can fire iff q groups of [optional Coeff] Star sit directly
// to its left; on success fills the block cumulant arguments and the start
// of the matched segment
bool matchable(const LetterWord& w, int pos, int d, int* start, std::vector<int>* kvars,
               std::vector<Matrix>* krc) {
  int q = w[pos].depth;
  std::vector<int> jv(q);
  std::vector<Matrix> av(q);
  int i = pos - 1;
  for (int t = q; t >= 1; --t) {
    Matrix b = Matrix::Identity(d, d);
    if (i >= 0 && w[i].kind == Letter::Kind::Coeff) {
      b = w[i].coeff;
      --i;
    }
    if (i < 0 || w[i].kind != Letter::Kind::Star) return false;
    jv[t - 1] = w[i].var;
    av[t - 1] = std::move(b);
    --i;
  }
  *start = i + 1;
  *kvars = std::move(jv);
  kvars->push_back(w[pos].var);
  *krc = std::move(av);
  krc->push_back(Matrix::Identity(d, d));
  return true;
}

}  // namespace

ReduceResult reduce_word(const CumulantSeries& series, LetterWord w, Strategy strategy) {
  const int d = series.dim();
  for (const auto& l : w) {
    if (l.kind == Letter::Kind::Coeff) {
      if (l.coeff.rows() != d || l.coeff.cols() != d)
        throw std::invalid_argument("reduce: coefficient must be d x d");
    } else {
      if (l.var < 0 || l.var >= series.num_vars())
        throw std::invalid_argument("reduce: variable out of range");
      if (l.kind == Letter::Kind::Gen && l.depth < 0)
        throw std::invalid_argument("reduce: negative depth");
    }
  }
  ReduceResult res;
  merge_coeffs(w);
  for (;;) {
    int pick = -1, start = -1;
    std::vector<int> kvars;
    std::vector<Matrix> krc;
    for (int si = 0; si < static_cast<int>(w.size()); ++si) {
      int pos = strategy == Strategy::LeftmostInner ? si : static_cast<int>(w.size()) - 1 - si;
      if (w[pos].kind != Letter::Kind::Gen) continue;
      if (matchable(w, pos, d, &start, &kvars, &krc)) {
        pick = pos;
        break;
      }
    }
    if (pick < 0) break;
    Matrix value = series.kappa(kvars, krc);
    LetterWord next(w.begin(), w.begin() + start);
    next.push_back(Letter::coefficient(std::move(value)));
    next.insert(next.end(), w.begin() + pick + 1, w.end());
    w = std::move(next);
    merge_coeffs(w);
    ++res.steps;
  }
  res.normal_form = w;
  if (w.empty()) {
    res.reduced = true;
    res.value = Matrix::Identity(d, d);
  } else if (w.size() == 1 && w[0].kind == Letter::Kind::Coeff) {
    res.reduced = true;
    res.value = w[0].coeff;
  } else {
    res.reduced = false;
    res.value = Matrix::Zero(d, d);
  }
  return res;
}

Matrix canonical_moment(const CumulantSeries& series, const std::vector<int>& vars,
                        const std::vector<Matrix>& coeffs) {
  const int d = series.dim();
  const std::size_t n = vars.size();
  if (coeffs.size() != n + 1)
    throw std::invalid_argument("canonical moment: word needs vars+1 coefficients");
  if (static_cast<int>(n) > series.max_order())
    throw std::runtime_error("canonical moment: word longer than series cap");
  for (int v : vars)
    if (v < 0 || v >= series.num_vars())
      throw std::invalid_argument("canonical moment: variable out of range");
  for (const auto& c : coeffs)
    if (c.rows() != d || c.cols() != d)
      throw std::invalid_argument("canonical moment: coefficients must be d x d");

  struct Ent {
    int var;
    Matrix acc;  // coefficient material gathered since this star
  };
  Matrix total = Matrix::Zero(d, d);
  // enumerate star/gen assignments; the stack tracks open stars, `prefix`
  // holds the value accumulated below the stack
  auto absorb = [&](std::vector<Ent>& stack, Matrix& prefix, const Matrix& c) {
    if (stack.empty())
      prefix = prefix * c;
    else
      stack.back().acc = stack.back().acc * c;
  };
  auto rec = [&](auto&& self, std::size_t slot, std::vector<Ent> stack,
                 Matrix prefix) -> void {
    absorb(stack, prefix, coeffs[slot]);
    if (slot == n) {
      if (stack.empty()) total += prefix;
      return;
    }
    int v = vars[slot];
    {
      auto s2 = stack;
      s2.push_back({v, Matrix::Identity(d, d)});
      self(self, slot + 1, std::move(s2), prefix);
    }
    for (int q = 0; q <= static_cast<int>(stack.size()); ++q) {
      std::vector<int> kvars(q + 1);
      std::vector<Matrix> krc(q + 1);
      for (int t = 0; t < q; ++t) {
        const Ent& e = stack[stack.size() - q + t];
        kvars[t] = e.var;
        krc[t] = e.acc;
      }
      kvars[q] = v;
      krc[q] = Matrix::Identity(d, d);
      Matrix value = series.kappa(kvars, krc);
      auto s2 = std::vector<Ent>(stack.begin(), stack.end() - q);
      Matrix p2 = prefix;
      absorb(s2, p2, value);
      self(self, slot + 1, std::move(s2), std::move(p2));
    }
  };
  rec(rec, 0, {}, Matrix::Identity(d, d));
  return total;
}

CanonicalModel::CanonicalModel(std::shared_ptr<const AlgebraContext> ctx,
                               std::shared_ptr<const CumulantSeries> series,
                               SeriesTarget target, std::vector<bool> sa_flags)
    : ctx_(std::move(ctx)), series_(std::move(series)), target_(target),
      sa_flags_(std::move(sa_flags)) {
  if (!ctx_ || !series_) throw std::invalid_argument("canonical model: null input");
  if (series_->dim() != ctx_->d())
    throw std::invalid_argument("canonical model: series dimension mismatch");
  if (!sa_flags_.empty() && static_cast<int>(sa_flags_.size()) != series_->num_vars())
    throw std::invalid_argument("canonical model: one flag per variable");
}

Matrix CanonicalModel::expect(const ModelWord& w) const {
  validate(w);
  if (target_ == SeriesTarget::B) return canonical_moment(*series_, w.vars, w.coeffs);
  std::vector<Matrix> proj;
  proj.reserve(w.coeffs.size());
  for (const auto& c : w.coeffs) proj.push_back(ctx_->cond_exp_D(c));
  return canonical_moment(*series_, w.vars, proj);
}

bool CanonicalModel::self_adjoint(int var) const {
  if (var < 0 || var >= num_vars())
    throw std::invalid_argument("canonical model: bad variable");
  return sa_flags_.empty() ? true : sa_flags_[var];
}

std::shared_ptr<CanonicalModel> construct_free_model(
    std::shared_ptr<const AlgebraContext> ctx,
    const std::vector<std::shared_ptr<const Model>>& groups, int max_order) {
  if (!ctx) throw std::invalid_argument("free model: null context");
  if (groups.empty()) throw std::invalid_argument("free model: no groups");
  std::vector<std::shared_ptr<const CumulantSeries>> parts;
  std::vector<bool> sa;
  for (const auto& g : groups) {
    if (!g) throw std::invalid_argument("free model: null group");
    if (!same_shape(g->context(), *ctx))
      throw std::invalid_argument("free model: group context shape mismatch");
    parts.push_back(std::make_shared<CompressedSeries>(g, max_order));
    for (int v = 0; v < g->num_vars(); ++v) sa.push_back(g->self_adjoint(v));
  }
  auto series = std::make_shared<FreeProductSeries>(std::move(parts));
  return std::make_shared<CanonicalModel>(std::move(ctx), std::move(series),
                                          SeriesTarget::D, std::move(sa));
}

}  // namespace amalgam::fock
