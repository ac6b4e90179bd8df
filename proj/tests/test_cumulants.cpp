#include "doctest.h"

#include <memory>
#include <vector>

#include "amalgam/cumulants.hpp"
#include "amalgam/model.hpp"
#include "amalgam/nc.hpp"
#include "amalgam/rng.hpp"

using namespace amalgam;
using alg::SubalgebraSpec;
using cum::CumulantEngine;
using cum::Target;

namespace {

std::shared_ptr<AlgebraContext> make_ctx() {
  SubalgebraSpec s;
  s.blocks = {{2, 1}, {1, 1}};
  return std::make_shared<AlgebraContext>(3, 2, s);
}

std::shared_ptr<MatrixModel> random_model(std::shared_ptr<AlgebraContext> ctx, int nvars,
                                          Rng& rng) {
  std::vector<Matrix> vars;
  for (int i = 0; i < nvars; ++i) vars.push_back(ctx->random_hermitian(rng));
  return std::make_shared<MatrixModel>(ctx, std::move(vars));
}

// Kreweras complement by brute force: the coarsest sigma whose interleaved
// union with pi stays noncrossing. Small n only; independent of everything
// in the production code except the NC predicate itself.
nc::NCPartition kreweras(const nc::NCPartition& pi) {
  int n = pi.n;
  nc::NCPartition best;
  int best_blocks = n + 1, ties = 0;
  for (const auto& sigma : nc::enumerate_nc(n)) {
    std::vector<std::vector<int>> blocks;
    for (const auto& b : pi.blocks) {
      std::vector<int> bb;
      for (int e : b) bb.push_back(2 * e);
      blocks.push_back(bb);
    }
    for (const auto& b : sigma.blocks) {
      std::vector<int> bb;
      for (int e : b) bb.push_back(2 * e + 1);
      blocks.push_back(bb);
    }
    if (!nc::is_noncrossing(nc::normalize(2 * n, blocks))) continue;
    int nb = static_cast<int>(sigma.blocks.size());
    if (nb < best_blocks) {
      best = sigma;
      best_blocks = nb;
      ties = 1;
    } else if (nb == best_blocks) {
      ++ties;
    }
  }
  REQUIRE(ties == 1);
  return best;
}

double mobius_to_top(const nc::NCPartition& pi) {
  // mu(pi, 1_n) = prod over Kreweras blocks of signed Catalans
  double m = 1.0;
  for (const auto& b : kreweras(pi).blocks) {
    int s = static_cast<int>(b.size());
    double c = static_cast<double>(nc::count_nc(s - 1));
    m *= ((s - 1) % 2 == 0 ? 1.0 : -1.0) * c;
  }
  return m;
}

// Moebius-inversion oracle: kappa_n = sum_pi mu(pi, 1_n) E_pi with E_pi the
// nested moment functional. Dual route to the engine's recursive subtraction.
Matrix mobius_cumulant(CumulantEngine& eng, const std::vector<int>& vars,
                       const std::vector<Matrix>& rc) {
  cum::BlockFn mom = [&](const std::vector<int>& v, const std::vector<Matrix>& b) {
    return eng.moment(v, b);
  };
  Matrix acc = Matrix::Zero(rc[0].rows(), rc[0].cols());
  for (const auto& pi : nc::enumerate_nc(static_cast<int>(vars.size())))
    acc += mobius_to_top(pi) * cum::evaluate_partition(pi, vars, rc, mom);
  return acc;
}

}  // namespace

TEST_CASE("matrix model validates words and reduces to E_B") {
  auto ctx = make_ctx();
  Rng rng(2);
  auto mod = random_model(ctx, 2, rng);
  ModelWord w;
  w.vars = {0, 1};
  w.coeffs = {ctx->random_B(rng), ctx->random_B(rng), ctx->random_B(rng)};
  Matrix direct = ctx->cond_exp_B(ctx->lift(w.coeffs[0]) * mod->var(0) * ctx->lift(w.coeffs[1]) *
                                  mod->var(1) * ctx->lift(w.coeffs[2]));
  CHECK(alg::frob(mod->expect(w) - direct) < 1e-12);
  CHECK(mod->self_adjoint(0));

  ModelWord bad = w;
  bad.coeffs.pop_back();
  CHECK_THROWS_AS(mod->expect(bad), std::invalid_argument);
  ModelWord oob = w;
  oob.vars = {0, 5};
  CHECK_THROWS_AS(mod->expect(oob), std::invalid_argument);
  ModelWord small = w;
  small.coeffs[1] = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(mod->expect(small), std::invalid_argument);
  ModelWord empty;
  empty.coeffs = {w.coeffs[0]};
  CHECK(alg::frob(mod->expect(empty) - w.coeffs[0]) < 1e-13);
}

TEST_CASE("formal elements evaluate and derive consistently") {
  auto ctx = make_ctx();
  Rng rng(5);
  auto base = random_model(ctx, 2, rng);
  Matrix b = ctx->random_B(rng);

  FormalElement X = FormalElement::variable(0, 3);
  FormalElement Y = FormalElement::variable(1, 3);
  FormalElement e1 = X * Y + FormalElement::constant(b) * X;
  FormalElement e2 = X * X - Y.scaled(2.0);

  // evaluation matches assembling the same polynomial by hand
  Matrix m1 = base->var(0) * base->var(1) + ctx->lift(b) * base->var(0);
  Matrix m2 = base->var(0) * base->var(0) - 2.0 * base->var(1);
  CHECK(alg::frob(e1.eval(*ctx, {base->var(0), base->var(1)}) - m1) < 1e-12);
  CHECK(alg::frob(e2.eval(*ctx, {base->var(0), base->var(1)}) - m2) < 1e-12);

  // derived-model expectations agree with a matrix model built from the
  // evaluated polynomials, across random coefficient words
  DerivedModel derived(base, {e1, e2});
  MatrixModel direct(ctx, {m1, m2});
  for (int trial = 0; trial < 5; ++trial) {
    ModelWord w;
    int len = 1 + trial % 3;
    for (int i = 0; i < len; ++i) w.vars.push_back(trial % 2 == 0 ? i % 2 : 1 - i % 2);
    for (int i = 0; i <= len; ++i) w.coeffs.push_back(ctx->random_B(rng));
    CHECK(alg::frob(derived.expect(w) - direct.expect(w)) < 1e-10);
  }

  // adjoint: reverse, star coefficients, map variables
  FormalElement adj = e1.adjoint();
  Matrix madj = adj.eval(*ctx, {base->var(0), base->var(1)});
  CHECK(alg::frob(madj - Matrix(m1.adjoint())) < 1e-12);  // vars hermitian here
  FormalElement swapped = X.adjoint({1});
  CHECK(swapped.terms()[0].vars[0] == 1);
}

TEST_CASE("first cumulants match hand formulas") {
  auto ctx = make_ctx();
  Rng rng(7);
  auto mod = random_model(ctx, 3, rng);
  auto eng = CumulantEngine(mod, Target::B);
  Matrix b1 = ctx->random_B(rng), b2 = ctx->random_B(rng), b3 = ctx->random_B(rng);
  auto E = [&](const std::vector<int>& v, const std::vector<Matrix>& c) {
    ModelWord w;
    w.vars = v;
    w.coeffs.push_back(Matrix::Identity(3, 3));
    for (const auto& m : c) w.coeffs.push_back(m);
    return mod->expect(w);
  };

  CHECK(alg::frob(eng.cumulant({0}, {b1}) - E({0}, {b1})) < 1e-12);

  Matrix k2 = E({0, 1}, {b1, b2}) - E({0}, {b1}) * E({1}, {b2});
  CHECK(alg::frob(eng.cumulant({0, 1}, {b1, b2}) - k2) < 1e-12);

  // kappa_3 = E(123) - E(1)E(23) - E(1 E(2) 3) - E(12)E(3) + 2 E(1)E(2)E(3)
  Matrix k3 = E({0, 1, 2}, {b1, b2, b3}) - E({0}, {b1}) * E({1, 2}, {b2, b3}) -
              E({0, 2}, {Matrix(b1 * E({1}, {b2})), b3}) -
              E({0, 1}, {b1, b2}) * E({2}, {b3}) +
              2.0 * E({0}, {b1}) * E({1}, {b2}) * E({2}, {b3});
  CHECK(alg::frob(eng.cumulant({0, 1, 2}, {b1, b2, b3}) - k3) < 1e-11);
}

TEST_CASE("engine agrees with Moebius inversion over NC up to order five") {
  auto ctx = make_ctx();
  Rng rng(11);
  auto mod = random_model(ctx, 2, rng);
  for (Target t : {Target::B, Target::D, Target::Scalar}) {
    auto eng = CumulantEngine(mod, t);
    for (int n = 1; n <= 5; ++n) {
      std::vector<int> vars;
      std::vector<Matrix> rc;
      for (int i = 0; i < n; ++i) {
        vars.push_back((i * 5 + n) % 2);
        if (t == Target::Scalar) {
          Matrix one(1, 1);
          one(0, 0) = Complex(rng.gauss(), rng.gauss());
          rc.push_back(one);
        } else if (t == Target::D) {
          rc.push_back(ctx->random_D(rng));
        } else {
          rc.push_back(ctx->random_B(rng));
        }
      }
      Matrix got = eng.cumulant(vars, rc);
      Matrix want = mobius_cumulant(eng, vars, rc);
      INFO("target ", static_cast<int>(t), " order ", n);
      CHECK(alg::frob(got - want) < 1e-9 * (1.0 + alg::frob(want)));
    }
  }
}

TEST_CASE("moments rebuild from cumulants for every target") {
  auto ctx = make_ctx();
  Rng rng(13);
  auto mod = random_model(ctx, 2, rng);
  for (Target t : {Target::B, Target::D, Target::Scalar}) {
    auto eng = CumulantEngine(mod, t);
    cum::BlockFn kappa = [&](const std::vector<int>& v, const std::vector<Matrix>& b) {
      return eng.cumulant(v, b);
    };
    for (int n = 1; n <= 5; ++n) {
      std::vector<int> vars;
      std::vector<Matrix> rc;
      for (int i = 0; i < n; ++i) {
        vars.push_back((i + n) % 2);
        if (t == Target::Scalar) {
          Matrix one(1, 1);
          one(0, 0) = 0.7 - 0.1 * i;
          rc.push_back(one);
        } else if (t == Target::D) {
          rc.push_back(ctx->random_D_hermitian(rng));
        } else {
          rc.push_back(ctx->random_B(rng));
        }
      }
      Matrix rebuilt = cum::moment_from_cumulants(kappa, vars, rc);
      CHECK(alg::frob(rebuilt - eng.moment(vars, rc)) < 1e-9);
    }
  }
}

TEST_CASE("cumulants with a constant entry vanish beyond order one") {
  auto ctx = make_ctx();
  Rng rng(17);
  Matrix x = ctx->random_hermitian(rng);
  Matrix y = ctx->random_hermitian(rng);
  Matrix cb = ctx->lift(ctx->random_B(rng));  // variable that lives in B
  auto mod = std::make_shared<MatrixModel>(ctx, std::vector<Matrix>{x, y, cb});
  auto eng = CumulantEngine(mod, Target::B);
  for (int n = 2; n <= 4; ++n)
    for (int pos = 0; pos < n; ++pos) {
      std::vector<int> vars(n);
      std::vector<Matrix> rc;
      for (int i = 0; i < n; ++i) {
        vars[i] = i == pos ? 2 : i % 2;
        rc.push_back(ctx->random_B(rng));
      }
      INFO("order ", n, " constant at ", pos);
      CHECK(alg::frob(eng.cumulant(vars, rc)) < 1e-9);
    }
}

TEST_CASE("trailing coefficient factors out of a cumulant") {
  auto ctx = make_ctx();
  Rng rng(19);
  auto mod = random_model(ctx, 2, rng);
  auto eng = CumulantEngine(mod, Target::B);
  Matrix b1 = ctx->random_B(rng), b2 = ctx->random_B(rng), bn = ctx->random_B(rng);
  Matrix id = Matrix::Identity(3, 3);
  CHECK(alg::frob(eng.cumulant({0, 1}, {b1, bn}) - eng.cumulant({0, 1}, {b1, id}) * bn) <
        1e-11);
  CHECK(alg::frob(eng.cumulant({0, 1, 0}, {b1, b2, bn}) -
                  eng.cumulant({0, 1, 0}, {b1, b2, id}) * bn) < 1e-11);
}

TEST_CASE("cache hits on repeated queries, misses on changed bytes") {
  auto ctx = make_ctx();
  Rng rng(23);
  auto mod = random_model(ctx, 2, rng);
  auto eng = CumulantEngine(mod, Target::B);
  Matrix b = ctx->random_B(rng);
  eng.cumulant({0, 1, 0}, {b, b, b});
  std::size_t size1 = eng.cache_size();
  std::size_t hits1 = eng.cache_hits();
  eng.cumulant({0, 1, 0}, {b, b, b});
  CHECK(eng.cache_hits() > hits1);
  CHECK(eng.cache_size() == size1);
  Matrix bp = b;
  bp(0, 0) += 1e-14;  // different bytes, different key
  eng.cumulant({0, 1, 0}, {bp, b, b});
  CHECK(eng.cache_size() > size1);
}

TEST_CASE("engine guards its order cap and argument shapes") {
  auto ctx = make_ctx();
  Rng rng(29);
  auto mod = random_model(ctx, 1, rng);
  auto eng = CumulantEngine(mod, Target::B, 3);
  CHECK_THROWS_AS(eng.cumulant({0, 0, 0, 0}), std::runtime_error);
  CHECK_THROWS_AS(eng.cumulant({}), std::invalid_argument);
  CHECK_THROWS_AS(eng.cumulant({0}, {}), std::invalid_argument);
  auto seng = CumulantEngine(mod, Target::Scalar);
  Matrix notscalar = ctx->random_B(rng);
  CHECK_THROWS_AS(seng.cumulant({0}, {notscalar}), std::invalid_argument);
  Matrix scal = Complex(0.5, 0.0) * Matrix::Identity(3, 3);
  CHECK_NOTHROW(seng.cumulant({0}, {scal}));
}
