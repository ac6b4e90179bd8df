#include "amalgam/capi.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <string>

#include "json.hpp"

#include "amalgam/cumulants.hpp"
#include "amalgam/fock.hpp"
#include "amalgam/freeness.hpp"
#include "amalgam/io.hpp"
#include "amalgam/liberation.hpp"
#include "amalgam/nc.hpp"
#include "amalgam/randmat.hpp"

using namespace amalgam;

struct amg_context {
  std::shared_ptr<const alg::AlgebraContext> ctx;
};

struct amg_model {
  std::shared_ptr<const Model> model;
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const io::ParseError& e) {
    return fail(AMG_ERR_PARSE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AMG_ERR_INVALID, e.what());
  } catch (const std::exception& e) {
    return fail(AMG_ERR_RUNTIME, e.what());
  }
}

cum::Target target_from_int(int t) {
  switch (t) {
    case 0: return cum::Target::B;
    case 1: return cum::Target::D;
    case 2: return cum::Target::Scalar;
    default: throw std::invalid_argument("target must be 0 (B), 1 (D) or 2 (scalar)");
  }
}

std::vector<Matrix> parse_coeffs(const char* coeffs_json, int n, int d) {
  if (!coeffs_json) return std::vector<Matrix>(n, Matrix::Identity(d, d));
  auto coeffs = io::matrix_list_from_json(coeffs_json);
  if (static_cast<int>(coeffs.size()) != n)
    throw std::invalid_argument("expected " + std::to_string(n) +
                                " coefficient matrices, got " +
                                std::to_string(coeffs.size()));
  for (const auto& c : coeffs)
    if (c.rows() != d || c.cols() != d)
      throw std::invalid_argument("coefficients must be d x d");
  return coeffs;
}

int eval_engine(const amg_model* m, int target, const int* indices, int n,
                const char* coeffs_json, char** out, bool cumulant) {
  if (!m || !out || (n > 0 && !indices))
    return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    if (n < 1) throw std::invalid_argument("need at least one index");
    std::vector<int> vars(indices, indices + n);
    cum::Target tgt = target_from_int(target);
    int d = tgt == cum::Target::Scalar ? 1 : m->model->context().d();
    auto coeffs = parse_coeffs(coeffs_json, n, d);
    cum::CumulantEngine eng(m->model, tgt, std::max(n, 2));
    Matrix result = cumulant ? eng.cumulant(vars, coeffs) : eng.moment(vars, coeffs);
    *out = dup(io::matrix_to_json(result));
    return AMG_OK;
  });
}

}  // namespace

const char* amg_version(void) { return "1.0.0"; }

const char* amg_last_error(void) { return g_last_error.c_str(); }

void amg_string_free(char* s) { std::free(s); }

int amg_nc_count(int n, long long* count_out) {
  if (!count_out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    *count_out = nc::count_nc(n);
    return AMG_OK;
  });
}

int amg_nc_list_json(int n, char** json_out) {
  if (!json_out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    nlohmann::json list = nlohmann::json::array();
    nc::visit_nc(n, [&](const nc::NCPartition& p) { list.push_back(p.blocks); });
    *json_out = dup(list.dump());
    return AMG_OK;
  });
}

int amg_context_create(const char* json, amg_context** out) {
  if (!json || !out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = new amg_context{io::context_from_json(json)};
    return AMG_OK;
  });
}

void amg_context_free(amg_context* ctx) { delete ctx; }

int amg_context_to_json(const amg_context* ctx, char** json_out) {
  if (!ctx || !json_out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    *json_out = dup(io::context_to_json(*ctx->ctx));
    return AMG_OK;
  });
}

int amg_context_check(const amg_context* ctx, double tol, int mc_samples,
                      uint64_t seed, char** report_json_out, int* pass_out) {
  if (!ctx || !report_json_out || !pass_out)
    return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    Rng rng(seed);
    auto report = ctx->ctx->check(tol, mc_samples, rng);
    *report_json_out = dup(io::check_report_to_json(report));
    *pass_out = report.pass ? 1 : 0;
    return AMG_OK;
  });
}

int amg_model_from_matrices(const amg_context* ctx, const char* json,
                            amg_model** out) {
  if (!ctx || !json || !out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = new amg_model{io::matrix_model_from_json(ctx->ctx, json)};
    return AMG_OK;
  });
}

int amg_model_from_table(const amg_context* ctx, const char* json, int target_d,
                         amg_model** out) {
  if (!ctx || !json || !out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    auto series = io::table_series_from_json(json);
    auto target = target_d ? fock::SeriesTarget::D : fock::SeriesTarget::B;
    *out = new amg_model{
        std::make_shared<fock::CanonicalModel>(ctx->ctx, series, target)};
    return AMG_OK;
  });
}

void amg_model_free(amg_model* m) { delete m; }

int amg_model_num_vars(const amg_model* m, int* num_vars_out) {
  if (!m || !num_vars_out) return fail(AMG_ERR_INVALID, "null argument");
  *num_vars_out = m->model->num_vars();
  return AMG_OK;
}

int amg_moment_json(const amg_model* m, int target, const int* indices, int n,
                    const char* coeffs_json, char** matrix_json_out) {
  return eval_engine(m, target, indices, n, coeffs_json, matrix_json_out, false);
}

int amg_cumulant_json(const amg_model* m, int target, const int* indices, int n,
                      const char* coeffs_json, char** matrix_json_out) {
  return eval_engine(m, target, indices, n, coeffs_json, matrix_json_out, true);
}

int amg_freeness_json(const amg_model* m, const char* mode, const int* groups,
                      int groups_len, int var, int order, double tol, int draws,
                      uint64_t seed, char** report_json_out, int* pass_out) {
  if (!m || !mode || !report_json_out || !pass_out)
    return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    freeness::Options opt;
    if (order > 0) opt.max_order = order;
    if (tol > 0) opt.tol = tol;
    if (draws > 0) opt.coeff_draws = draws;
    opt.seed = seed;

    std::string name(mode);
    if (name == "mixed" || name == "factorization") {
      if (!groups || groups_len != m->model->num_vars())
        throw std::invalid_argument("need one group label per variable");
      std::map<int, std::vector<int>> by_label;
      for (int i = 0; i < groups_len; ++i) by_label[groups[i]].push_back(i);
      freeness::Groups gs;
      for (auto& [label, vars] : by_label) gs.push_back(std::move(vars));
      if (gs.size() < 2) throw std::invalid_argument("need at least two groups");
      auto report = name == "mixed" ? freeness::mixed_cumulant_test(m->model, gs, opt)
                                    : freeness::factorization_test(m->model, gs, opt);
      *report_json_out = dup(io::test_report_to_json(report));
      *pass_out = report.pass ? 1 : 0;
    } else if (name == "restriction") {
      auto report = freeness::restriction_test(m->model, opt);
      *report_json_out = dup(io::restriction_report_to_json(report));
      *pass_out = report.report.pass ? 1 : 0;
    } else if (name == "rcyclic") {
      auto report = freeness::r_cyclic_test(m->model, var, opt);
      *report_json_out = dup(io::test_report_to_json(report));
      *pass_out = report.pass ? 1 : 0;
    } else if (name == "semicircular") {
      auto report = freeness::scalar_semicircular_test(m->model, var, opt);
      *report_json_out = dup(io::test_report_to_json(report));
      *pass_out = report.pass ? 1 : 0;
    } else {
      throw std::invalid_argument("unknown freeness mode '" + name + "'");
    }
    return AMG_OK;
  });
}

int amg_liberation_json(const amg_model* m, const char* mode,
                        const char* candidates_json, const int* sides,
                        int sides_len, int order, double tol, uint64_t seed,
                        int target, char** json_out, int* pass_out) {
  if (!m || !mode || !candidates_json || !json_out || !pass_out)
    return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    liberation::Options opt;
    if (order > 0) opt.max_m = order;
    if (tol > 0) opt.tol = tol;
    opt.seed = seed;
    opt.target = target_from_int(target);
    int d = m->model->context().d();

    std::string name(mode);
    if (name == "conjugate" || name == "conjugate-cumulants") {
      auto J = io::formal_element_list_from_json(candidates_json, d);
      auto report = name == "conjugate"
                        ? liberation::verify_conjugate(m->model, J, opt)
                        : liberation::verify_conjugate_cumulant_form(m->model, J, opt);
      *json_out = dup(io::residual_report_to_json(report));
      *pass_out = report.pass ? 1 : 0;
    } else if (name == "gradient") {
      if (!sides || sides_len != m->model->num_vars())
        throw std::invalid_argument("need one side tag per variable");
      auto j = io::formal_element_from_json(candidates_json, d);
      std::vector<int> side_tags(sides, sides + sides_len);
      auto report = liberation::verify_liberation_gradient(m->model, j, side_tags, opt);
      *json_out = dup(io::residual_report_to_json(report));
      *pass_out = report.pass ? 1 : 0;
    } else if (name == "commutator") {
      auto J = io::formal_element_list_from_json(candidates_json, d);
      auto elem = liberation::commutator_projection(m->model->context(), J);
      double norm = l2_norm(*m->model, elem);
      bool pass = norm <= opt.tol;
      nlohmann::json out = {{"element", nlohmann::json::parse(
                                            io::formal_element_to_json(elem))},
                            {"norm", norm},
                            {"tol", opt.tol},
                            {"pass", pass}};
      *json_out = dup(out.dump());
      *pass_out = pass ? 1 : 0;
    } else {
      throw std::invalid_argument("unknown liberation mode '" + name + "'");
    }
    return AMG_OK;
  });
}

int amg_band_limit_json(const char* profile_csv, int order, char** json_out,
                        int* pass_out) {
  if (!profile_csv || !json_out || !pass_out)
    return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    auto profile = io::profile_from_csv(profile_csv);
    auto verdict = rmt::band_semicircle_verdict(profile, order > 0 ? order : 8);
    *json_out = dup(io::band_verdict_to_json(verdict));
    *pass_out = verdict.moments_semicircular ? 1 : 0;
    return AMG_OK;
  });
}

int amg_band_simulate_json(const char* profile_csv, int n, int trials, int bins,
                           uint64_t seed, char** json_out) {
  if (!profile_csv || !json_out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    auto profile = io::profile_from_csv(profile_csv);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    Rng master(seed);
    std::vector<Matrix> samples;
    for (int t = 0; t < trials; ++t) {
      Rng rng = master.stream(t);
      samples.push_back(rmt::sample_band_matrix(n, profile, rng));
    }
    auto hist = rmt::empirical_spectrum(samples, bins > 0 ? bins : 60);
    hist.trials = trials;
    hist.seed = seed;
    *json_out = dup(io::histogram_to_json(hist));
    return AMG_OK;
  });
}

int amg_haar_conjugation_json(int d, const int* ks, int ks_len, int trials,
                              int max_power, uint64_t seed, char** json_out) {
  if (!ks || ks_len < 1 || !json_out) return fail(AMG_ERR_INVALID, "null argument");
  return guarded([&] {
    std::vector<int> kvals(ks, ks + ks_len);
    auto report = rmt::haar_conjugation_experiment(d, kvals, trials, max_power, seed);
    *json_out = dup(io::conjugation_report_to_json(report));
    return AMG_OK;
  });
}
