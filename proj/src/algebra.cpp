#include "amalgam/algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace amalgam::alg {

namespace {

constexpr double kWeightTol = 1e-12;

Matrix ginibre(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.cgauss();
  return m;
}

}  // namespace

AlgebraContext::AlgebraContext(int d, int k, SubalgebraSpec dspec,
                               std::vector<double> trace_weights)
    : d_(d), k_(k), dspec_(std::move(dspec)) {
  if (d_ < 1 || k_ < 1) throw std::invalid_argument("algebra: d and k must be >= 1");
  if (dspec_.blocks.empty()) throw std::invalid_argument("algebra: empty D spec");
  for (const auto& b : dspec_.blocks)
    if (b.dim < 1 || b.mult < 1)
      throw std::invalid_argument("algebra: block dim and mult must be >= 1");
  if (dspec_.b_dim() != d_)
    throw std::invalid_argument("algebra: D blocks must tile M_d (sum dim*mult == d)");

  offsets_.resize(dspec_.blocks.size());
  int off = 0;
  for (std::size_t j = 0; j < dspec_.blocks.size(); ++j) {
    offsets_[j] = off;
    off += dspec_.blocks[j].dim * dspec_.blocks[j].mult;
  }

  if (trace_weights.empty()) {
    uniform_ = true;
    weights_.resize(dspec_.blocks.size());
    for (std::size_t j = 0; j < dspec_.blocks.size(); ++j)
      weights_[j] = double(dspec_.blocks[j].dim * dspec_.blocks[j].mult) / d_;
  } else {
    if (trace_weights.size() != dspec_.blocks.size())
      throw std::invalid_argument("algebra: one trace weight per D block");
    double sum = 0.0;
    for (double w : trace_weights) {
      if (!(w > 0.0)) throw std::invalid_argument("algebra: trace weights must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightTol)
      throw std::invalid_argument("algebra: trace weights must sum to 1");
    weights_ = std::move(trace_weights);
    uniform_ = true;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      double u = double(dspec_.blocks[j].dim * dspec_.blocks[j].mult) / d_;
      if (std::abs(weights_[j] - u) > kWeightTol) uniform_ = false;
    }
  }
}

Complex AlgebraContext::trace(const Matrix& m) const {
  if (m.rows() != N() || m.cols() != N()) throw std::invalid_argument("trace: need N x N");
  Complex acc = 0.0;
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    int lo = offsets_[j] * k_, len = blk.dim * blk.mult * k_;
    Complex t = 0.0;
    for (int i = lo; i < lo + len; ++i) t += m(i, i);
    acc += weights_[j] * t / double(len);
  }
  return acc;
}

Complex AlgebraContext::trace_B(const Matrix& b) const {
  if (b.rows() != d_ || b.cols() != d_) throw std::invalid_argument("trace_B: need d x d");
  Complex acc = 0.0;
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    int lo = offsets_[j], len = blk.dim * blk.mult;
    Complex t = 0.0;
    for (int i = lo; i < lo + len; ++i) t += b(i, i);
    acc += weights_[j] * t / double(len);
  }
  return acc;
}

Matrix AlgebraContext::cond_exp_B(const Matrix& m) const {
  if (m.rows() != N() || m.cols() != N()) throw std::invalid_argument("cond_exp_B: need N x N");
  Matrix b = Matrix::Zero(d_, d_);
  for (int p = 0; p < d_; ++p)
    for (int q = 0; q < d_; ++q) {
      Complex t = 0.0;
      for (int s = 0; s < k_; ++s) t += m(p * k_ + s, q * k_ + s);
      b(p, q) = t / double(k_);
    }
  return b;
}

Matrix AlgebraContext::cond_exp_D(const Matrix& b) const {
  if (b.rows() != d_ || b.cols() != d_) throw std::invalid_argument("cond_exp_D: need d x d");
  Matrix out = Matrix::Zero(d_, d_);
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    int off = offsets_[j];
    Matrix cell = Matrix::Zero(blk.dim, blk.dim);
    for (int u = 0; u < blk.mult; ++u)
      cell += b.block(off + u * blk.dim, off + u * blk.dim, blk.dim, blk.dim);
    cell /= double(blk.mult);
    for (int u = 0; u < blk.mult; ++u)
      out.block(off + u * blk.dim, off + u * blk.dim, blk.dim, blk.dim) = cell;
  }
  return out;
}

Matrix AlgebraContext::cond_exp_commutant(const Matrix& m) const {
  if (m.rows() != N() || m.cols() != N())
    throw std::invalid_argument("cond_exp_commutant: need N x N");
  Matrix out = Matrix::Zero(N(), N());
  // Within central block j the commutant is 1_dim (x) M_{mult*k}: average each
  // dim x dim cell onto tr(cell)/dim * 1. Across blocks everything dies.
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    int off = offsets_[j];
    auto row0 = [&](int u, int s) { return (off + u * blk.dim) * k_ + s; };
    for (int u = 0; u < blk.mult; ++u)
      for (int s = 0; s < k_; ++s)
        for (int v = 0; v < blk.mult; ++v)
          for (int t = 0; t < k_; ++t) {
            Complex tr = 0.0;
            for (int a = 0; a < blk.dim; ++a)
              tr += m(row0(u, s) + a * k_, row0(v, t) + a * k_);
            tr /= double(blk.dim);
            for (int a = 0; a < blk.dim; ++a)
              out(row0(u, s) + a * k_, row0(v, t) + a * k_) = tr;
          }
  }
  return out;
}

Matrix AlgebraContext::cond_exp_commutant_mc(const Matrix& m, int samples, Rng& rng) const {
  if (samples < 1) throw std::invalid_argument("cond_exp_commutant_mc: samples must be >= 1");
  if (m.rows() != N() || m.cols() != N())
    throw std::invalid_argument("cond_exp_commutant_mc: need N x N");
  Matrix acc = Matrix::Zero(N(), N());
  for (int i = 0; i < samples; ++i) {
    Matrix u = lift(haar_unitary_D(rng));
    acc += u * m * u.adjoint();
  }
  return acc / double(samples);
}

Matrix AlgebraContext::integral_D_mc(const Matrix& m, int samples, Rng& rng) const {
  if (samples < 1) throw std::invalid_argument("integral_D_mc: samples must be >= 1");
  if (m.rows() != N() || m.cols() != N())
    throw std::invalid_argument("integral_D_mc: need N x N");
  Matrix acc = Matrix::Zero(d_, d_);
  for (int i = 0; i < samples; ++i) {
    Matrix u = haar_unitary_D(rng);
    acc += u * trace(lift(u).adjoint() * m);
  }
  acc /= double(samples);
  return double(dim_D()) * (central_element_inverse() * acc);
}

Matrix AlgebraContext::central_projection(int j) const {
  if (j < 0 || j >= num_blocks()) throw std::invalid_argument("central_projection: bad index");
  Matrix p = Matrix::Zero(d_, d_);
  const auto& blk = dspec_.blocks[j];
  for (int i = 0; i < blk.dim * blk.mult; ++i) p(offsets_[j] + i, offsets_[j] + i) = 1.0;
  return p;
}

Matrix AlgebraContext::central_element() const {
  Matrix c = Matrix::Zero(d_, d_);
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    double v = double(dim_D()) * weights_[j] / double(blk.dim * blk.dim);
    for (int i = 0; i < blk.dim * blk.mult; ++i) c(offsets_[j] + i, offsets_[j] + i) = v;
  }
  return c;
}

Matrix AlgebraContext::central_element_inverse() const {
  Matrix c = central_element();
  for (int i = 0; i < d_; ++i) c(i, i) = 1.0 / c(i, i);
  return c;
}

Matrix AlgebraContext::d_unit(int j, int a, int b) const {
  if (j < 0 || j >= num_blocks()) throw std::invalid_argument("d_unit: bad block");
  const auto& blk = dspec_.blocks[j];
  if (a < 0 || a >= blk.dim || b < 0 || b >= blk.dim)
    throw std::invalid_argument("d_unit: bad cell index");
  Matrix m = Matrix::Zero(d_, d_);
  for (int u = 0; u < blk.mult; ++u)
    m(offsets_[j] + u * blk.dim + a, offsets_[j] + u * blk.dim + b) = 1.0;
  return m;
}

Matrix AlgebraContext::embed_D(const std::vector<Matrix>& xj) const {
  if (static_cast<int>(xj.size()) != num_blocks())
    throw std::invalid_argument("embed_D: one matrix per block");
  Matrix m = Matrix::Zero(d_, d_);
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    if (xj[j].rows() != blk.dim || xj[j].cols() != blk.dim)
      throw std::invalid_argument("embed_D: block size mismatch");
    for (int u = 0; u < blk.mult; ++u)
      m.block(offsets_[j] + u * blk.dim, offsets_[j] + u * blk.dim, blk.dim, blk.dim) = xj[j];
  }
  return m;
}

Matrix AlgebraContext::lift(const Matrix& b) const {
  if (b.rows() != d_ || b.cols() != d_) throw std::invalid_argument("lift: need d x d");
  Matrix m = Matrix::Zero(N(), N());
  for (int p = 0; p < d_; ++p)
    for (int q = 0; q < d_; ++q)
      if (b(p, q) != 0.0)
        for (int s = 0; s < k_; ++s) m(p * k_ + s, q * k_ + s) = b(p, q);
  return m;
}

Matrix haar_unitary(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("haar_unitary: n must be >= 1");
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.cgauss();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    Complex rii = r(i, i);
    Complex phase = std::abs(rii) > 0 ? rii / std::abs(rii) : Complex(1.0);
    q.col(i) *= phase;
  }
  return q;
}

Matrix AlgebraContext::haar_unitary_B(Rng& rng) const { return haar_unitary(d_, rng); }

Matrix AlgebraContext::haar_unitary_D(Rng& rng) const {
  std::vector<Matrix> blocks;
  blocks.reserve(num_blocks());
  for (int j = 0; j < num_blocks(); ++j)
    blocks.push_back(haar_unitary(dspec_.blocks[j].dim, rng));
  return embed_D(blocks);
}

Matrix AlgebraContext::random_element(Rng& rng) const { return ginibre(N(), N(), rng); }

Matrix AlgebraContext::random_hermitian(Rng& rng) const {
  // tau(X^2) ~ 1, semicircle radius 2 in the large-N limit
  Matrix g = ginibre(N(), N(), rng);
  return (g + Matrix(g.adjoint())) / std::sqrt(2.0 * N());
}

Matrix AlgebraContext::random_B(Rng& rng) const { return ginibre(d_, d_, rng); }

Matrix AlgebraContext::random_B_hermitian(Rng& rng) const {
  Matrix g = ginibre(d_, d_, rng);
  return (g + Matrix(g.adjoint())) / 2.0;
}

Matrix AlgebraContext::random_D(Rng& rng) const {
  std::vector<Matrix> blocks;
  blocks.reserve(num_blocks());
  for (int j = 0; j < num_blocks(); ++j)
    blocks.push_back(ginibre(dspec_.blocks[j].dim, dspec_.blocks[j].dim, rng));
  return embed_D(blocks);
}

Matrix AlgebraContext::random_D_hermitian(Rng& rng) const {
  Matrix g = random_D(rng);
  return (g + Matrix(g.adjoint())) / 2.0;
}

Matrix AlgebraContext::random_commutant(Rng& rng) const {
  Matrix m = Matrix::Zero(N(), N());
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    int off = offsets_[j];
    int cells = blk.mult * k_;
    Matrix w = ginibre(cells, cells, rng);
    auto row0 = [&](int u, int s) { return (off + u * blk.dim) * k_ + s; };
    for (int u = 0; u < blk.mult; ++u)
      for (int s = 0; s < k_; ++s)
        for (int v = 0; v < blk.mult; ++v)
          for (int t = 0; t < k_; ++t)
            for (int a = 0; a < blk.dim; ++a)
              m(row0(u, s) + a * k_, row0(v, t) + a * k_) = w(u * k_ + s, v * k_ + t);
  }
  return m;
}

Matrix AlgebraContext::random_block_diagonal(Rng& rng) const {
  Matrix m = Matrix::Zero(N(), N());
  for (int j = 0; j < num_blocks(); ++j) {
    const auto& blk = dspec_.blocks[j];
    int lo = offsets_[j] * k_, len = blk.dim * blk.mult * k_;
    m.block(lo, lo, len, len) = ginibre(len, len, rng);
  }
  return m;
}

double frob(const Matrix& m) { return m.norm(); }

bool approx_zero(const Matrix& m, double tol) { return frob(m) <= tol; }

CheckReport AlgebraContext::check(double tol, int mc_samples, Rng& rng) const {
  CheckReport rep;
  auto add = [&](const std::string& name, double residual, double t) {
    bool ok = residual <= t;
    rep.entries.push_back({name, residual, t, ok});
    rep.pass = rep.pass && ok;
  };

  Matrix id_N = Matrix::Identity(N(), N());
  Matrix id_B = Matrix::Identity(d_, d_);
  add("trace_normalized", std::abs(trace(id_N) - 1.0), tol);
  add("trace_B_normalized", std::abs(trace_B(id_B) - 1.0), tol);

  Matrix x = random_element(rng), y = random_element(rng);
  if (uniform_) {
    add("trace_tracial", std::abs(trace(x * y) - trace(y * x)), tol * frob(x) * frob(y));
  } else {
    // weighted trace is tracial only against the block-diagonal sector
    Matrix xb = random_block_diagonal(rng), yb = random_block_diagonal(rng);
    add("trace_tracial_blockdiag", std::abs(trace(xb * yb) - trace(yb * xb)),
        tol * frob(xb) * frob(yb));
    rep.note = "non-uniform weights: traciality restricted to the block-diagonal sector";
  }

  // faithfulness on a positive element
  Matrix pos = x * Matrix(x.adjoint());
  add("trace_faithful_margin", trace(pos).real() > 1e-9 ? 0.0 : 1.0, 0.5);

  // E_B: idempotent, unital, bimodule over B, trace-compatible
  Matrix b1 = random_B(rng), b2 = random_B(rng);
  add("EB_unital", frob(cond_exp_B(id_N) - id_B), tol);
  add("EB_fixes_B", frob(cond_exp_B(lift(b1)) - b1), tol * frob(b1));
  add("EB_bimodule",
      frob(cond_exp_B(lift(b1) * x * lift(b2)) - b1 * cond_exp_B(x) * b2),
      tol * frob(b1) * frob(b2) * frob(x));
  add("EB_trace_compatible", std::abs(trace(x) - trace_B(cond_exp_B(x))), tol * frob(x));
  add("EB_adjoint", frob(cond_exp_B(Matrix(x.adjoint())) - Matrix(cond_exp_B(x).adjoint())),
      tol * frob(x));

  // F = E_D on B
  Matrix dd = random_D(rng);
  add("F_idempotent", frob(cond_exp_D(cond_exp_D(b1)) - cond_exp_D(b1)), tol * frob(b1));
  add("F_fixes_D", frob(cond_exp_D(dd) - dd), tol * frob(dd));
  add("F_bimodule", frob(cond_exp_D(dd * b1 * dd) - dd * cond_exp_D(b1) * dd),
      tol * frob(dd) * frob(dd) * frob(b1));
  add("F_trace_compatible", std::abs(trace_B(b1) - trace_B(cond_exp_D(b1))), tol * frob(b1));
  add("ED_tower", frob(cond_exp_D_full(x) - cond_exp_D(cond_exp_B(x))), tol * frob(x));
  add("ED_trace_compatible", std::abs(trace(x) - trace_B(cond_exp_D_full(x))), tol * frob(x));

  // E_D positivity on a sampled positive element
  Matrix ed_pos = cond_exp_D_full(pos);
  Eigen::SelfAdjointEigenSolver<Matrix> es(ed_pos);
  add("ED_positive", std::max(0.0, -es.eigenvalues().minCoeff()), tol * frob(pos));

  // E_{D'}: idempotent, fixes commutant, kills off-diagonal D-action
  Matrix cm = random_commutant(rng);
  add("EDc_idempotent", frob(cond_exp_commutant(cond_exp_commutant(x)) - cond_exp_commutant(x)),
      tol * frob(x));
  add("EDc_fixes_commutant", frob(cond_exp_commutant(cm) - cm), tol * frob(cm));
  // D elements slide through E_{D'} (normalized trace on the D factor is tracial)
  Matrix du = lift(random_D(rng));
  add("EDc_D_slides", frob(cond_exp_commutant(du * x) - cond_exp_commutant(x * du)),
      tol * frob(du) * frob(x));
  Matrix cm2 = random_commutant(rng);
  add("EDc_bimodule",
      frob(cond_exp_commutant(cm * x * cm2) - cm * cond_exp_commutant(x) * cm2),
      tol * frob(cm) * frob(cm2) * frob(x));
  add("EDc_trace_compatible", std::abs(trace(cond_exp_commutant(x)) - trace(x)), tol * frob(x));
  // commutation: E_{D'}(m) commutes with every lifted D element
  Matrix e = cond_exp_commutant(x);
  add("EDc_output_commutes", frob(du * e - e * du), tol * frob(du) * frob(x));

  // central element: lives in the center of D, positive, normalized
  Matrix c = central_element();
  Matrix dc = random_D(rng);
  add("c_central_in_D", frob(c * dc - dc * c), tol * frob(dc) * frob(c));
  add("c_in_D", frob(cond_exp_D(c) - c), tol * frob(c));
  double cmin = 1e300;
  for (int i = 0; i < d_; ++i) cmin = std::min(cmin, c(i, i).real());
  add("c_positive_margin", cmin > 1e-12 ? 0.0 : 1.0, 0.5);
  add("c_inverse_trace", std::abs(trace_B(central_element_inverse()) - 1.0), tol);

  if (mc_samples > 0) {
    Matrix viaInt = integral_D_mc(x, mc_samples, rng);
    double mc_tol = 8.0 * frob(x) * double(dim_D()) / std::sqrt(double(mc_samples));
    add("ED_integral_identity_mc", frob(viaInt - cond_exp_D_full(x)), mc_tol);
    Matrix viaTwirl = cond_exp_commutant_mc(x, mc_samples, rng);
    add("EDc_twirl_mc", frob(viaTwirl - cond_exp_commutant(x)),
        8.0 * frob(x) / std::sqrt(double(mc_samples)));
  }
  return rep;
}

Element::Element(const AlgebraContext& ctx, Matrix value) : ctx_(&ctx), value_(std::move(value)) {
  if (value_.rows() != ctx.N() || value_.cols() != ctx.N())
    throw std::invalid_argument("element: need N x N value");
}

const AlgebraContext& Element::context() const {
  if (!ctx_) throw std::logic_error("element: empty");
  return *ctx_;
}

void Element::require_same(const Element& o) const {
  if (!ctx_ || !o.ctx_ || ctx_ != o.ctx_)
    throw std::invalid_argument("element: context mismatch");
}

Element Element::operator+(const Element& o) const {
  require_same(o);
  return Element(*ctx_, value_ + o.value_);
}

Element Element::operator-(const Element& o) const {
  require_same(o);
  return Element(*ctx_, value_ - o.value_);
}

Element Element::operator*(const Element& o) const {
  require_same(o);
  return Element(*ctx_, value_ * o.value_);
}

Element Element::operator*(Complex s) const { return Element(*ctx_, value_ * s); }

Element Element::adjoint() const { return Element(*ctx_, value_.adjoint()); }

}  // namespace amalgam::alg
