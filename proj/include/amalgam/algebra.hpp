#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "amalgam/rng.hpp"

namespace amalgam::alg {

using Matrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// One direct summand of D: a full matrix block M_dim embedded with the given
// multiplicity (x -> diag(x,...,x), mult copies) into the ambient B = M_d.
struct DBlock {
  int dim = 1;
  int mult = 1;
};

struct SubalgebraSpec {
  std::vector<DBlock> blocks;

  int b_dim() const {
    int s = 0;
    for (const auto& b : blocks) s += b.dim * b.mult;
    return s;
  }
  // linear dimension of D as an algebra, sum of dim^2
  int alg_dim() const {
    int s = 0;
    for (const auto& b : blocks) s += b.dim * b.dim;
    return s;
  }
};

struct CheckEntry {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = true;
};

struct CheckReport {
  std::vector<CheckEntry> entries;
  bool pass = true;
  std::string note;
};

// Finite-dimensional model M = M_d (x) M_k with the subalgebra tower
// D c B = M_d (x) 1 c M. The trace is tau(m) = sum_j w_j tr_j(m) with one
// weight per central block of D (w_j = tau(p_j)); uniform weights reproduce
// the normalized matrix trace. Non-uniform weights keep every conditional
// expectation trace-compatible but are tracial only on the block-diagonal
// subalgebra cut out by the p_j, and check() says so.
class AlgebraContext {
 public:
  AlgebraContext(int d, int k, SubalgebraSpec dspec,
                 std::vector<double> trace_weights = {});

  int d() const { return d_; }
  int k() const { return k_; }
  int N() const { return d_ * k_; }
  const SubalgebraSpec& dspec() const { return dspec_; }
  int num_blocks() const { return static_cast<int>(dspec_.blocks.size()); }
  int block_offset(int j) const { return offsets_[j]; }
  double weight(int j) const { return weights_[j]; }
  bool uniform_weights() const { return uniform_; }
  int dim_D() const { return dspec_.alg_dim(); }

  // --- traces ------------------------------------------------------------
  Complex trace(const Matrix& m) const;    // on M, N x N input
  Complex trace_B(const Matrix& b) const;  // on B, d x d input

  // --- conditional expectations ------------------------------------------
  // E_B: normalized partial trace over the amplification factor, N x N -> d x d
  Matrix cond_exp_B(const Matrix& m) const;
  // F = E_D restricted to B, d x d -> d x d (block-wise compression)
  Matrix cond_exp_D(const Matrix& b) const;
  // E_D on all of M = F o E_B
  Matrix cond_exp_D_full(const Matrix& m) const { return cond_exp_D(cond_exp_B(m)); }
  // E_{D'}: projection onto the commutant of D inside M, exact closed form
  Matrix cond_exp_commutant(const Matrix& m) const;
  // Monte-Carlo oracle for E_{D'} via Haar conjugation averages; samples >= 1
  Matrix cond_exp_commutant_mc(const Matrix& m, int samples, Rng& rng) const;
  // Monte-Carlo right side of the dim(D) c^{-1} int u tau(u* m) du identity,
  // d x d output comparable with cond_exp_D_full
  Matrix integral_D_mc(const Matrix& m, int samples, Rng& rng) const;

  // --- D structure --------------------------------------------------------
  Matrix central_projection(int j) const;  // p_j, d x d
  // c = dim(D) * sum_j (tau(p_j)/dim_j^2) p_j: positive, central, invertible
  Matrix central_element() const;
  Matrix central_element_inverse() const;
  // embedded matrix units of D; unit(j,a,b), d x d
  Matrix d_unit(int j, int a, int b) const;
  // embed per-block matrices x_j (dim_j x dim_j) into M_d
  Matrix embed_D(const std::vector<Matrix>& xj) const;
  // b (x) 1_k
  Matrix lift(const Matrix& b) const;

  // --- sampling -----------------------------------------------------------
  Matrix haar_unitary_B(Rng& rng) const;  // U(d)
  Matrix haar_unitary_D(Rng& rng) const;  // U(D) c M_d, block-replicated
  Matrix random_element(Rng& rng) const;       // N x N Ginibre
  Matrix random_hermitian(Rng& rng) const;     // N x N GUE-normalized
  Matrix random_B(Rng& rng) const;             // d x d Ginibre
  Matrix random_B_hermitian(Rng& rng) const;
  Matrix random_D(Rng& rng) const;             // random element of D, d x d
  Matrix random_D_hermitian(Rng& rng) const;
  Matrix random_commutant(Rng& rng) const;     // random element of D' in M, N x N
  // block-diagonal element (p_j M p_j summands); tracial sector for any weights
  Matrix random_block_diagonal(Rng& rng) const;

  // invariant suite; mc_samples controls the Haar-integral oracles
  CheckReport check(double tol, int mc_samples, Rng& rng) const;

  bool same(const AlgebraContext& o) const { return this == &o; }

 private:
  int d_, k_;
  SubalgebraSpec dspec_;
  std::vector<double> weights_;
  std::vector<int> offsets_;
  bool uniform_;
};

// Haar unitary on U(n): complex Ginibre, QR, phases of R's diagonal folded in
Matrix haar_unitary(int n, Rng& rng);

double frob(const Matrix& m);  // Frobenius norm
bool approx_zero(const Matrix& m, double tol);

// Context-tagged matrix with checked arithmetic; cross-context operations
// throw std::invalid_argument.
class Element {
 public:
  Element() = default;
  Element(const AlgebraContext& ctx, Matrix value);

  const AlgebraContext& context() const;
  const Matrix& value() const { return value_; }

  Element operator+(const Element& o) const;
  Element operator-(const Element& o) const;
  Element operator*(const Element& o) const;
  Element operator*(Complex s) const;
  Element adjoint() const;

 private:
  void require_same(const Element& o) const;
  const AlgebraContext* ctx_ = nullptr;
  Matrix value_;
};

}  // namespace amalgam::alg
