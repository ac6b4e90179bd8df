#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "amalgam/cumulants.hpp"
#include "amalgam/model.hpp"

namespace amalgam::liberation {

struct ResidualEntry {
  int m = 0;  // word length / argument count of the probed equation
  std::string shape;
  double residual = 0.0;
};

struct ResidualReport {
  std::string name;
  bool pass = true;
  double tol = 0.0;
  double worst = 0.0;
  ResidualEntry worst_entry;
  std::vector<ResidualEntry> entries;
  int queries = 0;
  std::string note;
};

struct Options {
  int max_m = 4;        // highest word length / cumulant order probed
  int coeff_draws = 8;  // coefficient sets per word shape
  int tuple_cap = 40;   // per-order cap on index tuples
  double tol = 1e-8;
  std::uint64_t seed = 1;
  cum::Target target = cum::Target::D;  // for the gradient / cumulant forms
};

// Candidate conjugate system J_1..J_n for the model variables X_1..X_n,
// given as polynomials in the same variables. All verifiers need a tracial
// state, hence uniform trace weights.

// Moment form: tau(J_i b_1 X_{i_1} ... b_m X_{i_m} b_{m+1}) telescopes into
// sum_r delta_{i,i_r} tau(head_r) tau(tail_r); m = 0 reads tau(J_i b) = 0.
// Coefficients: seeded B draws, plus an exhaustive B-basis sweep for m <= 1.
ResidualReport verify_conjugate(std::shared_ptr<const Model> model,
                                const std::vector<FormalElement>& J,
                                const Options& opt = {});

// Cumulant form over the target subalgebra (D or B): kappa(J_i) = 0,
// kappa(J_i, d a) = delta_{a,X_i} tau(d) 1, and all higher kappa(J_i, d_1 a_1,
// ..., d_m a_m) = 0, with a ranging over the variables, the identity, and
// seeded B probes.
ResidualReport verify_conjugate_cumulant_form(std::shared_ptr<const Model> model,
                                              const std::vector<FormalElement>& J,
                                              const Options& opt = {});

// sum_i tau(J_i^2); throws if some J_i is not self-adjoint within sa_tol
double fisher_info(const Model& model, const std::vector<FormalElement>& J,
                   double sa_tol = 1e-6);

// E (x) E of the canonical derivation applied to the word w: variables tagged
// side 1 are differentiated, side 2 (and all coefficients) are inert. Target
// picks E = E_B or E = E_D.
Matrix gradient_rhs(const Model& model, const std::vector<int>& sides,
                    const ModelWord& w, cum::Target target);

// Base model extended by one symbolic variable j with E(j w) := the gradient
// functional above. Only words with at most one leading j are defined, which
// is all the cumulant engine ever asks for when j heads the tuple.
class GradientFunctionalModel : public Model {
 public:
  GradientFunctionalModel(std::shared_ptr<const Model> base, std::vector<int> sides,
                          cum::Target target = cum::Target::B);

  const AlgebraContext& context() const override { return base_->context(); }
  int num_vars() const override { return base_->num_vars() + 1; }
  Matrix expect(const ModelWord& w) const override;
  bool self_adjoint(int var) const override;
  int j_var() const { return base_->num_vars(); }

 private:
  std::shared_ptr<const Model> base_;
  std::vector<int> sides_;
  cum::Target target_;
};

// Checks a gradient candidate against both characterizations: the moment
// telescopes E(j w) = E (x) E(delta w) for word lengths m <= max_m (m = 0 is
// E(j) = 0), the endpoint sign rules kappa(j, a_1..a_m) = 0 / -kappa / +kappa,
// and the antisymmetry of the defining functional under swapping the sides.
ResidualReport verify_liberation_gradient(std::shared_ptr<const Model> model,
                                          const FormalElement& j_cand,
                                          const std::vector<int>& sides,
                                          const Options& opt = {});

// E_{D'} as a finite sandwich sum over D matrix units; exact on polynomials,
// matching the context's matrix-side conditional expectation.
FormalElement cond_exp_commutant_formal(const AlgebraContext& ctx, const FormalElement& e);

// E_{D'}(sum_i [J_i, X_i]) c^{-1} dim(D): the projected commutator element
// whose vanishing characterizes freeness from B with amalgamation over D.
FormalElement commutator_projection(const AlgebraContext& ctx,
                                    const std::vector<FormalElement>& J);

// Least-squares representation of a conjugate system / gradient inside the
// span of decorated words, via the Gram matrix of the span under tau and its
// pseudo-inverse. norm2[i] = y* G^+ y is the squared L2 norm of the projected
// solution, so fisher is a lower bound for the true Fisher information.
struct SpanSolution {
  std::vector<FormalElement> elems;
  std::vector<double> norm2;
  double fisher = 0.0;
  int rank = 0;
  int span_size = 0;
};

// every word b_0 X_{v_1} b_1 ... X_{v_l} b_l with l <= max_len and all
// decorations from `basis`; size grows like (|basis| num_vars)^len
std::vector<ModelWord> decorated_span(int num_vars, const std::vector<Matrix>& basis,
                                      int max_len);

SpanSolution solve_conjugate_span(const Model& model, const std::vector<ModelWord>& span,
                                  double cutoff = 1e-10);

// span restricted to plain variable words; sides tag the derivation
SpanSolution solve_gradient_span(const Model& model, const std::vector<int>& sides,
                                 const std::vector<std::vector<int>>& span_words,
                                 double cutoff = 1e-10);

}  // namespace amalgam::liberation
