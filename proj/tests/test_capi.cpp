#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "amalgam/capi.h"
#include "amalgam/fock.hpp"
#include "amalgam/io.hpp"
#include "amalgam/liberation.hpp"
#include "amalgam/randmat.hpp"

using namespace amalgam;
using nlohmann::json;

namespace {

// take ownership of a char* result and return it as std::string
std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  amg_string_free(s);
  return out;
}

std::string ctx_json(int d, int k, const std::vector<std::pair<int, int>>& blocks) {
  json jb = json::array();
  for (auto [dim, mult] : blocks) jb.push_back({{"dim", dim}, {"mult", mult}});
  return json{{"d", d}, {"k", k}, {"D_blocks", jb}}.dump();
}

struct CtxHandle {
  amg_context* p = nullptr;
  ~CtxHandle() { amg_context_free(p); }
};

struct ModelHandle {
  amg_model* p = nullptr;
  ~ModelHandle() { amg_model_free(p); }
};

std::string matrices_json(const std::vector<Matrix>& vars) {
  json jv = json::array();
  for (const auto& v : vars) jv.push_back(json::parse(io::matrix_to_json(v)));
  return json{{"variables", jv}}.dump();
}

// identity-covariance semicircular family as a cumulant table
std::string semicircular_table_json(int nvars, int d) {
  json table = json::array();
  json eye = json::parse(io::matrix_to_json(Matrix::Identity(d, d)));
  for (int i = 0; i < nvars; ++i)
    table.push_back({{"vars", {i, i}}, {"terms", json::array({json::array({eye, eye})})}});
  return json{{"num_vars", nvars}, {"d", d}, {"max_order", 6}, {"table", table}}.dump();
}

}  // namespace

TEST_CASE("version and error strings") {
  CHECK(std::string(amg_version()) == "1.0.0");
  long long c = 0;
  CHECK(amg_nc_count(3, &c) == AMG_OK);
  CHECK(std::string(amg_last_error()).empty());
  CHECK(amg_nc_count(-1, &c) != AMG_OK);
  CHECK(!std::string(amg_last_error()).empty());
  CHECK(amg_nc_count(3, &c) == AMG_OK);
  CHECK(std::string(amg_last_error()).empty());
}

TEST_CASE("nc count and list") {
  const long long catalan[] = {1, 1, 2, 5, 14, 42, 132};
  for (int n = 1; n <= 6; ++n) {
    long long c = 0;
    REQUIRE(amg_nc_count(n, &c) == AMG_OK);
    CHECK(c == catalan[n]);
  }
  CHECK(amg_nc_count(0, nullptr) == AMG_ERR_INVALID);

  char* out = nullptr;
  REQUIRE(amg_nc_list_json(4, &out) == AMG_OK);
  json list = json::parse(take(out));
  CHECK(list.size() == 14);
  for (const auto& p : list) {
    int count = 0;
    for (const auto& b : p) count += static_cast<int>(b.size());
    CHECK(count == 4);
  }
  CHECK(amg_nc_list_json(99, &out) != AMG_OK);
}

TEST_CASE("context create, serialize, check") {
  CtxHandle h;
  REQUIRE(amg_context_create(ctx_json(4, 2, {{2, 1}, {1, 2}}).c_str(), &h.p) == AMG_OK);

  char* out = nullptr;
  REQUIRE(amg_context_to_json(h.p, &out) == AMG_OK);
  json v = json::parse(take(out));
  CHECK(v["d"] == 4);
  CHECK(v["k"] == 2);
  CHECK(v["D_blocks"].size() == 2);
  CHECK(v["trace_weights"].size() == 2);

  int pass = 0;
  REQUIRE(amg_context_check(h.p, 1e-9, 50, 7, &out, &pass) == AMG_OK);
  CHECK(pass == 1);
  json report = json::parse(take(out));
  CHECK(report["pass"] == true);
  CHECK(report["entries"].size() > 5);
  for (const auto& e : report["entries"]) {
    CHECK(e.contains("name"));
    CHECK(e.contains("residual"));
  }

  amg_context* bad = nullptr;
  CHECK(amg_context_create("{ not json", &bad) == AMG_ERR_PARSE);
  CHECK(amg_context_create(ctx_json(5, 2, {{2, 1}}).c_str(), &bad) == AMG_ERR_PARSE);
  CHECK(amg_context_create("[1,2]", &bad) == AMG_ERR_PARSE);
}

TEST_CASE("matrix model moments and cumulants against direct evaluation") {
  CtxHandle h;
  REQUIRE(amg_context_create(ctx_json(2, 2, {{1, 2}}).c_str(), &h.p) == AMG_OK);
  auto ctx = io::context_from_json(ctx_json(2, 2, {{1, 2}}));

  Rng rng(21);
  std::vector<Matrix> vars = {ctx->random_hermitian(rng), ctx->random_hermitian(rng)};
  ModelHandle m;
  REQUIRE(amg_model_from_matrices(h.p, matrices_json(vars).c_str(), &m.p) == AMG_OK);

  int nv = 0;
  REQUIRE(amg_model_num_vars(m.p, &nv) == AMG_OK);
  CHECK(nv == 2);

  // E_B(x0 x1 x0) through the C API vs the context computed directly
  int idx[] = {0, 1, 0};
  char* out = nullptr;
  REQUIRE(amg_moment_json(m.p, 0, idx, 3, nullptr, &out) == AMG_OK);
  Matrix got = io::matrix_from_json(take(out));
  Matrix want = ctx->cond_exp_B(vars[0] * vars[1] * vars[0]);
  CHECK((got - want).norm() < 1e-10);

  // kappa_1 = E
  int one[] = {1};
  REQUIRE(amg_cumulant_json(m.p, 1, one, 1, nullptr, &out) == AMG_OK);
  got = io::matrix_from_json(take(out));
  want = ctx->cond_exp_D_full(vars[1]);
  CHECK((got - want).norm() < 1e-10);

  // kappa_2(x0 c, x0) = E(x0 c x0) - E(x0) c E(x0) with a right coefficient
  Matrix c = Matrix::Zero(2, 2);
  c(0, 1) = 0.7;
  c(1, 0) = 0.3;
  std::string coeffs =
      "[" + io::matrix_to_json(c) + "," + io::matrix_to_json(Matrix::Identity(2, 2)) + "]";
  int pair[] = {0, 0};
  REQUIRE(amg_cumulant_json(m.p, 0, pair, 2, coeffs.c_str(), &out) == AMG_OK);
  got = io::matrix_from_json(take(out));
  Matrix cl = ctx->lift(c);
  want = ctx->cond_exp_B(vars[0] * cl * vars[0]) -
         ctx->cond_exp_B(vars[0]) * c * ctx->cond_exp_B(vars[0]);
  CHECK((got - want).norm() < 1e-10);

  // scalar target gives the 1 x 1 trace
  REQUIRE(amg_moment_json(m.p, 2, idx, 3, nullptr, &out) == AMG_OK);
  got = io::matrix_from_json(take(out));
  CHECK(got.rows() == 1);
  CHECK(std::abs(got(0, 0) - ctx->trace(vars[0] * vars[1] * vars[0])) < 1e-10);

  CHECK(amg_moment_json(m.p, 5, idx, 3, nullptr, &out) == AMG_ERR_INVALID);
  CHECK(amg_cumulant_json(m.p, 0, idx, 0, nullptr, &out) == AMG_ERR_INVALID);
  CHECK(amg_cumulant_json(m.p, 0, idx, 2, "[[[1]]]", &out) == AMG_ERR_INVALID);
}

TEST_CASE("freeness through the C API on a canonical free pair") {
  CtxHandle h;
  REQUIRE(amg_context_create(ctx_json(2, 2, {{1, 2}}).c_str(), &h.p) == AMG_OK);
  ModelHandle m;
  REQUIRE(amg_model_from_table(h.p, semicircular_table_json(2, 2).c_str(), 1, &m.p) ==
          AMG_OK);

  int groups[] = {1, 2};
  char* out = nullptr;
  int pass = 0;
  REQUIRE(amg_freeness_json(m.p, "mixed", groups, 2, 0, 4, 1e-8, 6, 3, &out, &pass) ==
          AMG_OK);
  CHECK(pass == 1);
  json rep = json::parse(take(out));
  CHECK(rep["pass"] == true);
  CHECK(rep["worst"].get<double>() < 1e-8);
  CHECK(rep["queries"].get<int>() > 0);
  CHECK(rep.contains("worst_witness"));

  REQUIRE(amg_freeness_json(m.p, "factorization", groups, 2, 0, 4, 1e-8, 6, 3, &out,
                            &pass) == AMG_OK);
  CHECK(pass == 1);

  REQUIRE(amg_freeness_json(m.p, "restriction", nullptr, 0, 0, 3, 1e-8, 4, 3, &out,
                            &pass) == AMG_OK);
  CHECK(pass == 1);
  rep = json::parse(take(out));
  CHECK(rep.contains("hypothesis_holds"));
  CHECK(rep["report"]["pass"] == true);

  REQUIRE(amg_freeness_json(m.p, "semicircular", nullptr, 0, 0, 6, 1e-8, 4, 3, &out,
                            &pass) == AMG_OK);
  CHECK(pass == 1);

  CHECK(amg_freeness_json(m.p, "mixed", groups, 1, 0, 4, 1e-8, 6, 3, &out, &pass) ==
        AMG_ERR_INVALID);
  CHECK(amg_freeness_json(m.p, "nonsense", groups, 2, 0, 4, 1e-8, 6, 3, &out, &pass) ==
        AMG_ERR_INVALID);
}

TEST_CASE("freeness through the C API flags a non-free pair") {
  CtxHandle h;
  REQUIRE(amg_context_create(ctx_json(2, 3, {{1, 2}}).c_str(), &h.p) == AMG_OK);
  auto ctx = io::context_from_json(ctx_json(2, 3, {{1, 2}}));
  Rng rng(5);
  Matrix x = ctx->random_hermitian(rng);
  ModelHandle m;
  REQUIRE(amg_model_from_matrices(h.p, matrices_json({x, x}).c_str(), &m.p) == AMG_OK);

  int groups[] = {1, 2};
  char* out = nullptr;
  int pass = 1;
  REQUIRE(amg_freeness_json(m.p, "mixed", groups, 2, 0, 2, 1e-8, 4, 3, &out, &pass) ==
          AMG_OK);
  CHECK(pass == 0);
  json rep = json::parse(take(out));
  CHECK(rep["pass"] == false);
  CHECK(rep["worst"].get<double>() > 1e-4);
  CHECK(rep["worst_witness"]["vars"].size() >= 2);
}

TEST_CASE("liberation through the C API") {
  // scalar semicircular: J = X is its own conjugate system
  CtxHandle h;
  REQUIRE(amg_context_create(ctx_json(1, 4, {{1, 1}}).c_str(), &h.p) == AMG_OK);
  json eye = json::parse(io::matrix_to_json(Matrix::Identity(1, 1)));
  json table = json::array(
      {{{"vars", {0, 0}}, {"terms", json::array({json::array({eye, eye})})}}});
  std::string spec =
      json{{"num_vars", 1}, {"d", 1}, {"max_order", 6}, {"table", table}}.dump();
  ModelHandle m;
  REQUIRE(amg_model_from_table(h.p, spec.c_str(), 0, &m.p) == AMG_OK);

  FormalElement X = FormalElement::variable(0, 1);
  std::string jx = "[" + io::formal_element_to_json(X) + "]";
  char* out = nullptr;
  int pass = 0;
  REQUIRE(amg_liberation_json(m.p, "conjugate", jx.c_str(), nullptr, 0, 3, 1e-8, 1, 1,
                              &out, &pass) == AMG_OK);
  CHECK(pass == 1);
  json rep = json::parse(take(out));
  CHECK(rep["pass"] == true);
  CHECK(rep["worst"].get<double>() < 1e-8);
  CHECK(rep["entries"].size() > 0);

  REQUIRE(amg_liberation_json(m.p, "conjugate-cumulants", jx.c_str(), nullptr, 0, 3,
                              1e-8, 1, 1, &out, &pass) == AMG_OK);
  CHECK(pass == 1);

  // zero candidate fails
  std::string jz = "[" + io::formal_element_to_json(X - X) + "]";
  REQUIRE(amg_liberation_json(m.p, "conjugate", jz.c_str(), nullptr, 0, 3, 1e-8, 1, 1,
                              &out, &pass) == AMG_OK);
  CHECK(pass == 0);

  CHECK(amg_liberation_json(m.p, "what", jx.c_str(), nullptr, 0, 3, 1e-8, 1, 1, &out,
                            &pass) == AMG_ERR_INVALID);
}

TEST_CASE("liberation gradient and commutator through the C API") {
  CtxHandle h;
  REQUIRE(amg_context_create(ctx_json(2, 2, {{1, 2}}).c_str(), &h.p) == AMG_OK);
  ModelHandle m;
  REQUIRE(amg_model_from_table(h.p, semicircular_table_json(2, 2).c_str(), 1, &m.p) ==
          AMG_OK);

  // free pair: the zero element is the liberation gradient
  FormalElement zero;
  std::string jz = io::formal_element_to_json(zero + FormalElement::constant(
                                                         Matrix::Zero(2, 2)));
  int sides[] = {1, 2};
  char* out = nullptr;
  int pass = 0;
  REQUIRE(amg_liberation_json(m.p, "gradient", jz.c_str(), sides, 2, 3, 1e-8, 1, 1,
                              &out, &pass) == AMG_OK);
  CHECK(pass == 1);
  json rep = json::parse(take(out));
  CHECK(rep["worst"].get<double>() < 1e-8);

  // commutator projection of the conjugate system of a free family vanishes
  std::string jj = "[" + io::formal_element_to_json(FormalElement::variable(0, 2)) +
                   "," + io::formal_element_to_json(FormalElement::variable(1, 2)) + "]";
  REQUIRE(amg_liberation_json(m.p, "commutator", jj.c_str(), nullptr, 0, 2, 1e-8, 1, 1,
                              &out, &pass) == AMG_OK);
  CHECK(pass == 1);
  rep = json::parse(take(out));
  CHECK(rep["norm"].get<double>() < 1e-8);
  CHECK(rep.contains("element"));

  CHECK(amg_liberation_json(m.p, "gradient", jz.c_str(), sides, 1, 3, 1e-8, 1, 1, &out,
                            &pass) == AMG_ERR_INVALID);
}

TEST_CASE("band limit and simulate through the C API") {
  rmt::VarianceProfile flat = rmt::VarianceProfile::constant(32, 1.0);
  std::string csv = io::profile_to_csv(flat);

  char* out = nullptr;
  int pass = 0;
  REQUIRE(amg_band_limit_json(csv.c_str(), 8, &out, &pass) == AMG_OK);
  CHECK(pass == 1);
  json v = json::parse(take(out));
  CHECK(v["constant_rows"] == true);
  CHECK(v["moments_semicircular"] == true);
  CHECK(std::abs(v["moments"][4].get<double>() - 2.0) < 1e-10);

  auto linear = rmt::VarianceProfile::from_function(
      32, [](double x, double y) { return x + y; });
  std::string csv2 = io::profile_to_csv(linear);
  REQUIRE(amg_band_limit_json(csv2.c_str(), 8, &out, &pass) == AMG_OK);
  CHECK(pass == 0);
  v = json::parse(take(out));
  CHECK(v["constant_rows"] == false);

  REQUIRE(amg_band_simulate_json(csv.c_str(), 64, 3, 40, 11, &out) == AMG_OK);
  std::string first = take(out);
  v = json::parse(first);
  CHECK(v["edges"].size() == 41);
  CHECK(v["masses"].size() == 40);
  double mass = 0;
  for (const auto& x : v["masses"]) mass += x.get<double>();
  CHECK(mass == doctest::Approx(1.0));
  CHECK(v["seed"] == 11);
  CHECK(v["trials"] == 3);

  // bit-identical rerun with the same seed
  REQUIRE(amg_band_simulate_json(csv.c_str(), 64, 3, 40, 11, &out) == AMG_OK);
  CHECK(take(out) == first);

  CHECK(amg_band_limit_json("1,2\n3", 8, &out, &pass) == AMG_ERR_PARSE);
  CHECK(amg_band_limit_json("1,x\n0,1\n", 8, &out, &pass) == AMG_ERR_PARSE);
}

TEST_CASE("haar conjugation through the C API") {
  int ks[] = {3, 6};
  char* out = nullptr;
  REQUIRE(amg_haar_conjugation_json(2, ks, 2, 4, 2, 17, &out) == AMG_OK);
  json v = json::parse(take(out));
  CHECK(v["d"] == 2);
  CHECK(v["ks"].size() == 2);
  CHECK(v["power_norms"].size() == 2);
  for (const auto& e : v["commutant_err"]) CHECK(e.get<double>() < 1e-10);
  CHECK(v["seed"] == 17);

  CHECK(amg_haar_conjugation_json(1, ks, 2, 4, 2, 17, &out) == AMG_ERR_INVALID);
}

TEST_CASE("io: matrix and context round trips") {
  Rng rng(3);
  Matrix m(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = rng.cgauss();
  Matrix back = io::matrix_from_json(io::matrix_to_json(m));
  CHECK(back.rows() == 3);
  CHECK((back - m).norm() == 0.0);  // shortest-round-trip doubles are exact

  CHECK_THROWS_AS(io::matrix_from_json("[[1,2],[3]]"), io::ParseError);
  CHECK_THROWS_AS(io::matrix_from_json("[]"), io::ParseError);
  CHECK_THROWS_AS(io::matrix_from_json("[[\"a\"]]"), io::ParseError);
  CHECK_THROWS_AS(io::matrix_from_json("{}"), io::ParseError);

  // real entries may be written as bare numbers
  Matrix r = io::matrix_from_json("[[1, 2.5], [[0,1], -3]]");
  CHECK(r(0, 1).real() == 2.5);
  CHECK(r(1, 0) == Complex(0, 1));

  auto ctx = io::context_from_json(
      R"({"d": 4, "k": 2, "D_blocks": [{"dim": 2, "mult": 1}, {"dim": 1, "mult": 2}],
          "trace_weights": [0.6, 0.4]})");
  CHECK(ctx->d() == 4);
  CHECK(ctx->weight(0) == doctest::Approx(0.6));
  auto ctx2 = io::context_from_json(io::context_to_json(*ctx));
  CHECK(ctx2->k() == ctx->k());
  CHECK(ctx2->weight(1) == ctx->weight(1));
  CHECK(ctx2->dspec().blocks.size() == 2);
}

TEST_CASE("io: formal element and table series round trips") {
  Rng rng(9);
  int d = 2;
  auto rand_mat = [&] {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = rng.cgauss();
    return m;
  };

  FormalElement e = FormalElement::constant(rand_mat()) *
                        FormalElement::variable(0, d) *
                        FormalElement::constant(rand_mat()) +
                    FormalElement::variable(1, d).scaled(Complex(0.5, -1.0));
  FormalElement back = io::formal_element_from_json(io::formal_element_to_json(e), d);

  auto ctx = io::context_from_json(ctx_json(2, 2, {{1, 2}}));
  std::vector<Matrix> vals = {ctx->random_element(rng), ctx->random_element(rng)};
  CHECK((e.eval(*ctx, vals) - back.eval(*ctx, vals)).norm() < 1e-12);

  auto list = io::formal_element_list_from_json(
      "[" + io::formal_element_to_json(e) + "," + io::formal_element_to_json(back) + "]",
      d);
  CHECK(list.size() == 2);

  CHECK_THROWS_AS(io::formal_element_from_json("{\"terms\": [{\"vars\": [0]}]}", d),
                  io::ParseError);
  CHECK_THROWS_AS(io::formal_element_from_json(
                      "{\"terms\": [{\"vars\": [0], \"coeffs\": [[[1]]]}]}", d),
                  io::ParseError);

  fock::TableSeries ts(2, d, 5);
  ts.set({0, 0}, {{rand_mat(), rand_mat()}});
  ts.set({0, 1, 1}, {{rand_mat(), rand_mat(), rand_mat()}, {rand_mat(), rand_mat(), rand_mat()}});
  auto ts2 = io::table_series_from_json(io::table_series_to_json(ts));
  CHECK(ts2->num_vars() == 2);
  CHECK(ts2->max_order() == 5);
  REQUIRE(ts2->table().size() == ts.table().size());
  for (const auto& [vars, terms] : ts.table()) {
    auto it = ts2->table().find(vars);
    REQUIRE(it != ts2->table().end());
    REQUIRE(it->second.size() == terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t)
      for (std::size_t i = 0; i < terms[t].size(); ++i)
        CHECK((it->second[t][i] - terms[t][i]).norm() == 0.0);
  }
}

TEST_CASE("io: profile csv round trip and diagnostics") {
  auto p = rmt::VarianceProfile::from_function(
      16, [](double x, double y) { return 1.0 + 0.5 * std::cos(2 * M_PI * (x - y)); });
  auto q = io::profile_from_csv(io::profile_to_csv(p));
  CHECK(q.g() == 16);
  CHECK((q.sigma - p.sigma).norm() == 0.0);

  try {
    io::profile_from_csv("1.0,2.0\n3.0,oops\n");
    FAIL("expected ParseError");
  } catch (const io::ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(io::profile_from_csv(""), io::ParseError);
  CHECK_THROWS_AS(io::profile_from_csv("1,2,3\n4,5\n"), io::ParseError);
  CHECK_THROWS_AS(io::profile_from_csv("1,2\n2,-1\n"), io::ParseError);
}
