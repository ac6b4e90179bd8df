#include "amalgam/cumulants.hpp"

#include <cstring>
#include <stdexcept>

namespace amalgam::cum {

namespace {

// partitions of a fixed small n recur constantly; share one enumeration
const std::vector<nc::NCPartition>& nc_list(int n) {
  static std::mutex mu;
  static std::unordered_map<int, std::vector<nc::NCPartition>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, nc::enumerate_nc(n)).first;
  return it->second;
}

std::string make_key(const std::vector<int>& vars, const std::vector<Matrix>& rc) {
  std::string s;
  s.reserve(8 + vars.size() * 4 + rc.size() * 16);
  auto put_int = [&](int v) { s.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put_int(static_cast<int>(vars.size()));
  for (int v : vars) put_int(v);
  for (const auto& m : rc) {
    put_int(static_cast<int>(m.rows()));
    s.append(reinterpret_cast<const char*>(m.data()),
             sizeof(Complex) * static_cast<std::size_t>(m.size()));
  }
  return s;
}

}  // namespace

Matrix evaluate_partition(const nc::NCPartition& pi, const std::vector<int>& vars,
                          const std::vector<Matrix>& right_coeffs, const BlockFn& leaf) {
  const int n = static_cast<int>(vars.size());
  if (pi.n != n) throw std::invalid_argument("cumulants: partition size mismatch");
  if (right_coeffs.size() != vars.size())
    throw std::invalid_argument("cumulants: need one right coefficient per argument");
  if (n == 0) throw std::invalid_argument("cumulants: empty argument list");
  const int dim = static_cast<int>(right_coeffs[0].rows());
  Matrix id = Matrix::Identity(dim, dim);

  nc::NestingForest forest = nc::nesting_forest(pi);
  std::vector<Matrix> value(forest.nodes.size());
  // innermost-first: evaluate a node once all children are done
  auto eval_node = [&](auto&& self, int idx) -> void {
    const auto& node = forest.nodes[idx];
    for (int c : node.children) self(self, c);
    const int r = static_cast<int>(node.elements.size());
    std::vector<int> bvars(r);
    std::vector<Matrix> brc(r, id);
    for (int t = 0; t < r; ++t) bvars[t] = vars[node.elements[t]];
    for (int t = 0; t + 1 < r; ++t) {
      Matrix g = right_coeffs[node.elements[t]];
      for (int c : node.children)
        if (forest.nodes[c].gap == t)
          g = g * value[c] * right_coeffs[forest.nodes[c].elements.back()];
      brc[t] = std::move(g);
    }
    value[idx] = leaf(bvars, brc);
  };
  Matrix out = id;
  for (int ridx : forest.roots) {
    eval_node(eval_node, ridx);
    out = out * value[ridx] * right_coeffs[forest.nodes[ridx].elements.back()];
  }
  return out;
}

Matrix moment_from_cumulants(const BlockFn& kappa, const std::vector<int>& vars,
                             const std::vector<Matrix>& right_coeffs) {
  const int n = static_cast<int>(vars.size());
  if (n == 0) throw std::invalid_argument("cumulants: empty argument list");
  Matrix acc;
  bool first = true;
  for (const auto& pi : nc_list(n)) {
    Matrix term = evaluate_partition(pi, vars, right_coeffs, kappa);
    if (first) {
      acc = term;
      first = false;
    } else {
      acc += term;
    }
  }
  return acc;
}

CumulantEngine::CumulantEngine(std::shared_ptr<const Model> model, Target target,
                               int max_order)
    : model_(std::move(model)), target_(target), max_order_(max_order) {
  if (!model_) throw std::invalid_argument("cumulants: null model");
  if (max_order_ < 1 || max_order_ > nc::kMaxN)
    throw std::invalid_argument("cumulants: bad max order");
  value_dim_ = target_ == Target::Scalar ? 1 : model_->context().d();
}

std::vector<Matrix> CumulantEngine::normalize_coeffs(const std::vector<int>& vars,
                                                     const std::vector<Matrix>& rc) const {
  if (rc.size() != vars.size())
    throw std::invalid_argument("cumulants: need one right coefficient per argument");
  const int d = model_->context().d();
  std::vector<Matrix> out;
  out.reserve(rc.size());
  for (const auto& c : rc) {
    if (target_ == Target::Scalar) {
      if (c.rows() == 1 && c.cols() == 1) {
        out.push_back(c);
      } else if (c.rows() == d && c.cols() == d) {
        Complex lambda = c(0, 0);
        if (alg::frob(c - lambda * Matrix::Identity(d, d)) >
            1e-12 * (1.0 + std::abs(lambda)))
          throw std::invalid_argument(
              "cumulants: scalar target needs scalar multiples of the identity");
        Matrix one(1, 1);
        one(0, 0) = lambda;
        out.push_back(one);
      } else {
        throw std::invalid_argument("cumulants: bad coefficient shape");
      }
    } else {
      if (c.rows() != d || c.cols() != d)
        throw std::invalid_argument("cumulants: coefficients must be d x d");
      out.push_back(c);
    }
  }
  return out;
}

Matrix CumulantEngine::moment(const std::vector<int>& vars,
                              const std::vector<Matrix>& right_coeffs) {
  return moment_impl(vars, normalize_coeffs(vars, right_coeffs));
}

Matrix CumulantEngine::moment(const std::vector<int>& vars) {
  std::vector<Matrix> rc(vars.size(), Matrix::Identity(value_dim_, value_dim_));
  return moment_impl(vars, rc);
}

Matrix CumulantEngine::moment_impl(const std::vector<int>& vars,
                                   const std::vector<Matrix>& rc) {
  if (vars.empty()) return Matrix::Identity(value_dim_, value_dim_);
  std::string k = make_key(vars, rc);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = moments_.find(k);
    if (it != moments_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const auto& ctx = model_->context();
  const int d = ctx.d();
  ModelWord w;
  w.vars = vars;
  w.coeffs.push_back(Matrix::Identity(d, d));
  for (const auto& c : rc)
    w.coeffs.push_back(c.rows() == 1 ? Matrix(c(0, 0) * Matrix::Identity(d, d)) : c);
  Matrix e = model_->expect(w);
  Matrix out;
  switch (target_) {
    case Target::B:
      out = e;
      break;
    case Target::D:
      out = ctx.cond_exp_D(e);
      break;
    case Target::Scalar:
      out = Matrix(1, 1);
      out(0, 0) = ctx.trace_B(e);
      break;
  }
  std::lock_guard<std::mutex> lock(mu_);
  moments_.emplace(std::move(k), out);
  return out;
}

Matrix CumulantEngine::cumulant(const std::vector<int>& vars,
                                const std::vector<Matrix>& right_coeffs) {
  return cumulant_impl(vars, normalize_coeffs(vars, right_coeffs));
}

Matrix CumulantEngine::cumulant(const std::vector<int>& vars) {
  std::vector<Matrix> rc(vars.size(), Matrix::Identity(value_dim_, value_dim_));
  return cumulant_impl(vars, rc);
}

Matrix CumulantEngine::cumulant_impl(const std::vector<int>& vars,
                                     const std::vector<Matrix>& rc) {
  const int n = static_cast<int>(vars.size());
  if (n == 0) throw std::invalid_argument("cumulants: empty argument list");
  if (n > max_order_) throw std::runtime_error("cumulants: order above engine cap");
  std::string k = make_key(vars, rc);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cumulants_.find(k);
    if (it != cumulants_.end()) {
      ++hits_;
      return it->second;
    }
  }
  Matrix out = moment_impl(vars, rc);
  if (n > 1) {
    BlockFn leaf = [this](const std::vector<int>& v, const std::vector<Matrix>& b) {
      return cumulant_impl(v, b);
    };
    for (const auto& pi : nc_list(n)) {
      if (static_cast<int>(pi.blocks.size()) == 1) continue;  // skip 1_n
      out -= evaluate_partition(pi, vars, rc, leaf);
    }
  }
  std::lock_guard<std::mutex> lock(mu_);
  cumulants_.emplace(std::move(k), out);
  return out;
}

Matrix CumulantEngine::partitioned_cumulant(const nc::NCPartition& pi,
                                            const std::vector<int>& vars,
                                            const std::vector<Matrix>& right_coeffs) {
  auto rc = normalize_coeffs(vars, right_coeffs);
  BlockFn leaf = [this](const std::vector<int>& v, const std::vector<Matrix>& b) {
    return cumulant_impl(v, b);
  };
  return evaluate_partition(pi, vars, rc, leaf);
}

std::size_t CumulantEngine::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return moments_.size() + cumulants_.size();
}

}  // namespace amalgam::cum
