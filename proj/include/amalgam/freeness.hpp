#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "amalgam/cumulants.hpp"
#include "amalgam/model.hpp"

namespace amalgam::freeness {

struct Witness {
  std::vector<int> vars;
  int order = 0;
  int draw = 0;
  double residual = 0.0;
  std::string detail;
};

struct TestReport {
  std::string name;
  bool pass = true;
  double tol = 0.0;
  double worst = 0.0;
  Witness worst_witness;
  std::vector<double> per_order;  // worst residual at each probed order
  int queries = 0;
  std::string note;
};

struct Options {
  int max_order = 4;       // cumulant / word orders probed
  int coeff_draws = 20;    // random coefficient sets per tuple shape
  int tuple_cap = 120;     // per-order cap on enumerated tuples
  double tol = 1e-8;
  std::uint64_t seed = 1;
};

using Groups = std::vector<std::vector<int>>;

// Mixed D-valued cumulants across the groups must vanish.
TestReport mixed_cumulant_test(std::shared_ptr<const Model> model, const Groups& groups,
                               const Options& opt = {});

// E_D of alternating products of D-centered group elements must vanish
// (moment factorization form of freeness with amalgamation).
TestReport factorization_test(std::shared_ptr<const Model> model, const Groups& groups,
                              const Options& opt = {});

// Restriction from B to D: when the B-valued cumulants stay in D on
// D-coefficients (the hypothesis, reported separately), the D-valued
// cumulants must be their restrictions.
struct RestrictionReport {
  TestReport report;
  bool hypothesis_holds = true;
  double hypothesis_worst = 0.0;
};
RestrictionReport restriction_test(std::shared_ptr<const Model> model,
                                   const Options& opt = {});

// Entry cumulants of one matrix variable over the amplification trace must
// vanish off cyclic index patterns (j_t = i_{t+1} cyclically). Uniform trace
// weights only.
TestReport r_cyclic_test(std::shared_ptr<const Model> model, int var,
                         const Options& opt = {});

// Scalar cumulants of one variable: kappa_1 and everything of order >= 3
// must vanish; the report's note carries the fitted variance kappa_2.
TestReport scalar_semicircular_test(std::shared_ptr<const Model> model, int var,
                                    const Options& opt = {});

struct Summary {
  std::vector<TestReport> reports;
  bool pass = true;
};

// The three group-based tests bundled (mixed, factorization, restriction).
Summary run_group_tests(std::shared_ptr<const Model> model, const Groups& groups,
                        const Options& opt = {});

}  // namespace amalgam::freeness
