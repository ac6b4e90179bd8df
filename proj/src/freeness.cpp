#include "amalgam/freeness.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "amalgam/nc.hpp"
#include "amalgam/rng.hpp"

namespace amalgam::freeness {

namespace {

void track(TestReport& rep, const Witness& w) {
  ++rep.queries;
  if (static_cast<int>(rep.per_order.size()) <= w.order) rep.per_order.resize(w.order + 1, 0.0);
  rep.per_order[w.order] = std::max(rep.per_order[w.order], w.residual);
  if (w.residual > rep.worst) {
    rep.worst = w.residual;
    rep.worst_witness = w;
  }
}

std::string tuple_str(const std::vector<int>& vars) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < vars.size(); ++i) os << (i ? "," : "") << vars[i];
  os << ")";
  return os.str();
}

// all length-n tuples over `alphabet` passing `keep`, deterministically
// subsampled to `cap` when the enumeration is larger
std::vector<std::vector<int>> sample_tuples(
    const std::vector<int>& alphabet, int n, int cap, Rng& rng,
    const std::function<bool(const std::vector<int>&)>& keep) {
  std::vector<std::vector<int>> out;
  double total = 1.0;
  for (int i = 0; i < n; ++i) total *= static_cast<double>(alphabet.size());
  if (total <= 4096.0) {
    std::vector<int> cur(n);
    auto rec = [&](auto&& self, int pos) -> void {
      if (pos == n) {
        if (keep(cur)) out.push_back(cur);
        return;
      }
      for (int a : alphabet) {
        cur[pos] = a;
        self(self, pos + 1);
      }
    };
    rec(rec, 0);
    if (static_cast<int>(out.size()) > cap) {
      for (std::size_t i = out.size(); i > 1; --i)
        std::swap(out[i - 1], out[rng.u64() % i]);
      out.resize(cap);
    }
  } else {
    int attempts = 0;
    while (static_cast<int>(out.size()) < cap && attempts < cap * 64) {
      std::vector<int> cur(n);
      for (int i = 0; i < n; ++i) cur[i] = alphabet[rng.u64() % alphabet.size()];
      if (keep(cur)) out.push_back(std::move(cur));
      ++attempts;
    }
  }
  return out;
}

std::vector<int> flatten_groups(const Model& model, const Groups& groups,
                                std::vector<int>* group_of) {
  if (groups.size() < 2) throw std::invalid_argument("freeness: need at least two groups");
  group_of->assign(model.num_vars(), -1);
  std::vector<int> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw std::invalid_argument("freeness: empty group");
    for (int v : groups[g]) {
      if (v < 0 || v >= model.num_vars())
        throw std::invalid_argument("freeness: variable out of range");
      if ((*group_of)[v] != -1) throw std::invalid_argument("freeness: groups overlap");
      (*group_of)[v] = static_cast<int>(g);
      all.push_back(v);
    }
  }
  return all;
}

}  // namespace

TestReport mixed_cumulant_test(std::shared_ptr<const Model> model, const Groups& groups,
                               const Options& opt) {
  if (!model) throw std::invalid_argument("freeness: null model");
  std::vector<int> group_of;
  std::vector<int> all = flatten_groups(*model, groups, &group_of);
  TestReport rep;
  rep.name = "mixed_cumulants";
  rep.tol = opt.tol;
  auto eng = std::make_shared<cum::CumulantEngine>(model, cum::Target::D, opt.max_order);
  const auto& ctx = model->context();
  auto mixed = [&](const std::vector<int>& t) {
    for (std::size_t i = 1; i < t.size(); ++i)
      if (group_of[t[i]] != group_of[t[0]]) return true;
    return false;
  };
  for (int n = 2; n <= opt.max_order; ++n) {
    Rng trng = Rng(opt.seed).stream(n);
    auto tuples = sample_tuples(all, n, opt.tuple_cap, trng, mixed);
    for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
      Rng crng = Rng(opt.seed).stream(n).stream(ti + 1);
      for (int draw = 0; draw < opt.coeff_draws; ++draw) {
        std::vector<Matrix> rc;
        for (int i = 0; i < n; ++i) rc.push_back(ctx.random_D(crng));
        Witness w{tuples[ti], n, draw, alg::frob(eng->cumulant(tuples[ti], rc)),
                  "mixed tuple " + tuple_str(tuples[ti])};
        track(rep, w);
      }
    }
  }
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

TestReport factorization_test(std::shared_ptr<const Model> model, const Groups& groups,
                              const Options& opt) {
  if (!model) throw std::invalid_argument("freeness: null model");
  std::vector<int> group_of;
  flatten_groups(*model, groups, &group_of);
  TestReport rep;
  rep.name = "factorization";
  rep.tol = opt.tol;
  const auto& ctx = model->context();
  const int d = ctx.d();
  for (int n = 2; n <= opt.max_order; ++n) {
    for (int draw = 0; draw < opt.coeff_draws; ++draw) {
      Rng rng = Rng(opt.seed).stream(500 + n).stream(draw);
      // alternating group pattern, then one centered element per slot
      std::vector<int> chosen;
      std::vector<FormalElement> elems;
      int prev = -1;
      for (int t = 0; t < n; ++t) {
        int g;
        do {
          g = static_cast<int>(rng.u64() % groups.size());
        } while (g == prev);
        prev = g;
        int v = groups[g][rng.u64() % groups[g].size()];
        chosen.push_back(v);
        Matrix dl = ctx.random_D(rng), dr = ctx.random_D(rng);
        ModelWord single;
        single.vars = {v};
        single.coeffs = {dl, dr};
        Matrix mean = ctx.cond_exp_D(model->expect(single));
        FormalElement f = FormalElement::constant(dl) * FormalElement::variable(v, d) *
                              FormalElement::constant(dr) -
                          FormalElement::constant(mean);
        elems.push_back(std::move(f));
      }
      DerivedModel centered(model, elems);
      ModelWord w;
      for (int t = 0; t < n; ++t) w.vars.push_back(t);
      w.coeffs.assign(n + 1, Matrix::Identity(d, d));
      double r = alg::frob(ctx.cond_exp_D(centered.expect(w)));
      Witness wit{chosen, n, draw, r, "alternating word " + tuple_str(chosen)};
      track(rep, wit);
    }
  }
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

RestrictionReport restriction_test(std::shared_ptr<const Model> model, const Options& opt) {
  if (!model) throw std::invalid_argument("freeness: null model");
  RestrictionReport out;
  TestReport& rep = out.report;
  rep.name = "restriction";
  rep.tol = opt.tol;
  const auto& ctx = model->context();
  auto engB = std::make_shared<cum::CumulantEngine>(model, cum::Target::B, opt.max_order);
  auto engD = std::make_shared<cum::CumulantEngine>(model, cum::Target::D, opt.max_order);
  std::vector<int> all(model->num_vars());
  for (int i = 0; i < model->num_vars(); ++i) all[i] = i;
  for (int n = 1; n <= opt.max_order; ++n) {
    Rng trng = Rng(opt.seed).stream(1000 + n);
    auto tuples = sample_tuples(all, n, opt.tuple_cap, trng,
                                [](const std::vector<int>&) { return true; });
    for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
      Rng crng = Rng(opt.seed).stream(1000 + n).stream(ti + 1);
      for (int draw = 0; draw < opt.coeff_draws; ++draw) {
        std::vector<Matrix> rc;
        for (int i = 0; i < n; ++i) rc.push_back(ctx.random_D(crng));
        Matrix kb = engB->cumulant(tuples[ti], rc);
        Matrix kbD = ctx.cond_exp_D(kb);
        out.hypothesis_worst = std::max(out.hypothesis_worst, alg::frob(kb - kbD));
        Witness w{tuples[ti], n, draw, alg::frob(engD->cumulant(tuples[ti], rc) - kbD),
                  "tuple " + tuple_str(tuples[ti])};
        track(rep, w);
      }
    }
  }
  out.hypothesis_holds = out.hypothesis_worst <= opt.tol;
  if (out.hypothesis_holds) {
    rep.pass = rep.worst <= rep.tol;
    rep.note = "B-cumulants stay in D on D-coefficients";
  } else {
    rep.pass = true;
    std::ostringstream os;
    os << "hypothesis fails (worst " << out.hypothesis_worst
       << "): restriction not applicable, conclusion reported unchecked";
    rep.note = os.str();
  }
  return out;
}

TestReport r_cyclic_test(std::shared_ptr<const Model> model, int var, const Options& opt) {
  if (!model) throw std::invalid_argument("freeness: null model");
  if (var < 0 || var >= model->num_vars())
    throw std::invalid_argument("freeness: variable out of range");
  const auto& ctx = model->context();
  if (!ctx.uniform_weights())
    throw std::invalid_argument("freeness: entry cumulants need the uniform trace");
  const int d = ctx.d();
  if (d < 2) throw std::invalid_argument("freeness: entry cumulants need d >= 2");

  TestReport rep;
  rep.name = "r_cyclic";
  rep.tol = opt.tol;

  auto unit = [&](int a, int b) {
    Matrix m = Matrix::Zero(d, d);
    m(a, b) = 1.0;
    return m;
  };
  // phi(X_{i_1 j_1} ... X_{i_n j_n}) over the entry trace, via one d-side
  // matrix-unit sandwich per factor
  std::map<std::vector<int>, Complex> mom_cache, kap_cache;
  auto mom = [&](const std::vector<int>& tuple) -> Complex {
    auto it = mom_cache.find(tuple);
    if (it != mom_cache.end()) return it->second;
    int n = static_cast<int>(tuple.size()) / 2;
    ModelWord w;
    w.vars.assign(n, var);
    w.coeffs.push_back(unit(0, tuple[0]));
    for (int t = 0; t + 1 < n; ++t) w.coeffs.push_back(unit(tuple[2 * t + 1], tuple[2 * t + 2]));
    w.coeffs.push_back(unit(tuple[2 * n - 1], 0));
    Complex v = static_cast<double>(d) * ctx.trace_B(model->expect(w));
    mom_cache[tuple] = v;
    return v;
  };
  auto kappa = [&](auto&& self, const std::vector<int>& tuple) -> Complex {
    auto it = kap_cache.find(tuple);
    if (it != kap_cache.end()) return it->second;
    int n = static_cast<int>(tuple.size()) / 2;
    Complex v = mom(tuple);
    if (n > 1) {
      for (const auto& pi : nc::enumerate_nc(n)) {
        if (pi.blocks.size() == 1) continue;
        Complex term = 1.0;
        for (const auto& blk : pi.blocks) {
          std::vector<int> sub;
          for (int e : blk) {
            sub.push_back(tuple[2 * e]);
            sub.push_back(tuple[2 * e + 1]);
          }
          term *= self(self, sub);
        }
        v -= term;
      }
    }
    kap_cache[tuple] = v;
    return v;
  };
  auto cyclic = [](const std::vector<int>& tuple) {
    int n = static_cast<int>(tuple.size()) / 2;
    for (int t = 0; t < n; ++t)
      if (tuple[2 * t + 1] != tuple[(2 * t + 2) % (2 * n)]) return false;
    return true;
  };

  std::vector<int> pair_alphabet(d * d);
  for (int i = 0; i < d * d; ++i) pair_alphabet[i] = i;
  double cyclic_worst = 0.0;
  for (int n = 1; n <= opt.max_order; ++n) {
    Rng rng = Rng(opt.seed).stream(2000 + n);
    auto pats = sample_tuples(pair_alphabet, n, opt.tuple_cap, rng,
                              [](const std::vector<int>&) { return true; });
    for (const auto& packed : pats) {
      std::vector<int> tuple;
      for (int p : packed) {
        tuple.push_back(p / d);
        tuple.push_back(p % d);
      }
      double mag = std::abs(kappa(kappa, tuple));
      if (cyclic(tuple)) {
        cyclic_worst = std::max(cyclic_worst, mag);
      } else {
        Witness w{tuple, n, 0, mag, "entry pattern " + tuple_str(tuple)};
        track(rep, w);
      }
    }
  }
  std::ostringstream os;
  os << "largest cyclic entry cumulant " << cyclic_worst;
  rep.note = os.str();
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

TestReport scalar_semicircular_test(std::shared_ptr<const Model> model, int var,
                                    const Options& opt) {
  if (!model) throw std::invalid_argument("freeness: null model");
  if (var < 0 || var >= model->num_vars())
    throw std::invalid_argument("freeness: variable out of range");
  TestReport rep;
  rep.name = "scalar_semicircular";
  rep.tol = opt.tol;
  auto eng = std::make_shared<cum::CumulantEngine>(model, cum::Target::Scalar,
                                                   std::max(3, opt.max_order));
  Witness k1{{var}, 1, 0, std::abs(eng->cumulant({var})(0, 0)), "first cumulant"};
  track(rep, k1);
  Complex sigma2 = eng->cumulant({var, var})(0, 0);
  for (int n = 3; n <= std::max(3, opt.max_order); ++n) {
    Rng rng = Rng(opt.seed).stream(3000 + n);
    for (int draw = 0; draw < opt.coeff_draws; ++draw) {
      std::vector<Matrix> rc;
      for (int i = 0; i < n; ++i) {
        Matrix one(1, 1);
        one(0, 0) = 0.25 + rng.uniform();
        rc.push_back(one);
      }
      std::vector<int> vars(n, var);
      Witness w{vars, n, draw, std::abs(eng->cumulant(vars, rc)(0, 0)),
                "pure power tuple"};
      track(rep, w);
    }
  }
  std::ostringstream os;
  os << "kappa_2 = " << sigma2.real();
  if (std::abs(sigma2.imag()) > 1e-14) os << " + " << sigma2.imag() << "i";
  rep.note = os.str();
  rep.pass = rep.worst <= rep.tol;
  return rep;
}

Summary run_group_tests(std::shared_ptr<const Model> model, const Groups& groups,
                        const Options& opt) {
  Summary s;
  s.reports.push_back(mixed_cumulant_test(model, groups, opt));
  s.reports.push_back(factorization_test(model, groups, opt));
  s.reports.push_back(restriction_test(model, opt).report);
  for (const auto& r : s.reports) s.pass = s.pass && r.pass;
  return s;
}

}  // namespace amalgam::freeness
