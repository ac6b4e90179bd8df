#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "amalgam/model.hpp"
#include "amalgam/nc.hpp"

namespace amalgam::cum {

// Which conditional expectation the cumulants are taken against.
enum class Target { B, D, Scalar };

// Block functional kappa(x_{v_1} b_1, ..., x_{v_n} b_n): arguments are
// variable indices with right-attached coefficients on the value side
// (d x d for B/D targets, 1 x 1 for the scalar trace).
using BlockFn =
    std::function<Matrix(const std::vector<int>&, const std::vector<Matrix>&)>;

// Evaluate the partitioned functional f_pi on (x_{v_1} b_1, ..., x_{v_n} b_n):
// nested blocks are evaluated innermost-first and their values are absorbed
// into the enclosing block's gap coefficients. `leaf` supplies the block
// values; the same evaluator serves the cumulant recursion (leaf = cumulant)
// and moment reconstruction (leaf = any cumulant functional).
Matrix evaluate_partition(const nc::NCPartition& pi, const std::vector<int>& vars,
                          const std::vector<Matrix>& right_coeffs, const BlockFn& leaf);

// sum over all of NC(n): the moment functional of the cumulant family `kappa`
Matrix moment_from_cumulants(const BlockFn& kappa, const std::vector<int>& vars,
                             const std::vector<Matrix>& right_coeffs);

// Moment-cumulant engine over a model, fixed target, memoized on the exact
// byte pattern of the query so repeated evaluations are cache hits.
class CumulantEngine {
 public:
  explicit CumulantEngine(std::shared_ptr<const Model> model, Target target = Target::B,
                          int max_order = 8);

  const Model& model() const { return *model_; }
  Target target() const { return target_; }
  int max_order() const { return max_order_; }
  int value_dim() const { return value_dim_; }

  // E(x_{v_1} b_1 ... x_{v_n} b_n) under the target expectation
  Matrix moment(const std::vector<int>& vars, const std::vector<Matrix>& right_coeffs);
  Matrix moment(const std::vector<int>& vars);
  // kappa_n(x_{v_1} b_1, ..., x_{v_n} b_n)
  Matrix cumulant(const std::vector<int>& vars, const std::vector<Matrix>& right_coeffs);
  Matrix cumulant(const std::vector<int>& vars);
  // kappa_pi for one fixed noncrossing partition
  Matrix partitioned_cumulant(const nc::NCPartition& pi, const std::vector<int>& vars,
                              const std::vector<Matrix>& right_coeffs);

  std::size_t cache_size() const;
  std::size_t cache_hits() const { return hits_; }

 private:
  std::vector<Matrix> normalize_coeffs(const std::vector<int>& vars,
                                       const std::vector<Matrix>& rc) const;
  Matrix moment_impl(const std::vector<int>& vars, const std::vector<Matrix>& rc);
  Matrix cumulant_impl(const std::vector<int>& vars, const std::vector<Matrix>& rc);

  std::shared_ptr<const Model> model_;
  Target target_;
  int max_order_;
  int value_dim_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Matrix> moments_, cumulants_;
  std::size_t hits_ = 0;
};

}  // namespace amalgam::cum
