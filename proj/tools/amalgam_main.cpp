// amalgam: command-line front end over the C API. JSON/CSV in, JSON/CSV out,
// exit 0 on pass verdicts, 1 on fail verdicts, 2 on errors.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "amalgam/capi.h"

using nlohmann::json;

namespace {

struct ApiError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_api(int status) {
  if (status != AMG_OK) throw ApiError(amg_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  amg_string_free(s);
  return out;
}

struct Ctx {
  amg_context* p = nullptr;
  ~Ctx() { amg_context_free(p); }
};

struct Mdl {
  amg_model* p = nullptr;
  ~Mdl() { amg_model_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// relative --out paths land in AMALGAM_OUT_DIR when it is set
std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  const char* dir = std::getenv("AMALGAM_OUT_DIR");
  if (!dir || !*dir) return path;
  return (std::filesystem::path(dir) / p).string();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::string full = resolve_out(out_path);
  std::ofstream f(full, std::ios::binary);
  if (!f) throw ApiError("cannot write file: " + full);
  f << text << "\n";
}

int target_code(const std::string& name) {
  if (name == "B" || name == "b") return 0;
  if (name == "D" || name == "d") return 1;
  if (name == "scalar") return 2;
  throw ApiError("target must be B, D or scalar, got '" + name + "'");
}

// shared command state filled by CLI11 options
struct Run {
  std::uint64_t seed = 1;
  double tol = 0;       // 0 = module default
  int order = 0;        // 0 = module default
  std::string out;      // empty = stdout
  std::string format = "json";

  std::string context_file, model_file, table_file, elements_file, spec_file;
  std::string candidates_file, coeffs_file, profile_file;
  std::string target = "B", series_target = "D", mode;
  std::vector<int> indices, groups, sides, ks;
  int n = 0, var = 0, trials = 0, draws = 0, bins = 60, samples = 200, d = 2;
  bool as_json = false, moment = false;

  int exit_code = 0;

  void require_json_format() const {
    if (format != "json")
      throw ApiError("only --format json is available for this subcommand");
  }

  Ctx load_context() const {
    Ctx c;
    check_api(amg_context_create(read_file(context_file).c_str(), &c.p));
    return c;
  }

  // model matrices from --model, or a cumulant table from --table
  Mdl load_model(const Ctx& c) const {
    Mdl m;
    if (!model_file.empty()) {
      check_api(amg_model_from_matrices(c.p, read_file(model_file).c_str(), &m.p));
    } else if (!table_file.empty()) {
      check_api(amg_model_from_table(c.p, read_file(table_file).c_str(),
                                     target_code(series_target) == 1, &m.p));
    } else {
      throw ApiError("need --model or --table");
    }
    return m;
  }

  std::string coeffs_or_null() const {
    return coeffs_file.empty() ? std::string() : read_file(coeffs_file);
  }

  json envelope(const std::string& subcommand, const json& report) const {
    json env = {{"subcommand", subcommand}, {"seed", seed},
                {"order", order},          {"tol", tol},
                {"report", report}};
    if (!mode.empty()) env["mode"] = mode;
    return env;
  }
};

void run_nc(Run& r, bool count) {
  r.require_json_format();
  if (count) {
    long long c = 0;
    check_api(amg_nc_count(r.n, &c));
    if (r.as_json)
      emit(json{{"n", r.n}, {"count", c}}.dump(), r.out);
    else
      emit(std::to_string(c), r.out);
  } else {
    char* out = nullptr;
    check_api(amg_nc_list_json(r.n, &out));
    emit(take(out), r.out);
  }
}

void run_algebra_check(Run& r) {
  r.require_json_format();
  Ctx c = r.load_context();
  char* out = nullptr;
  int pass = 0;
  check_api(amg_context_check(c.p, r.tol > 0 ? r.tol : 1e-9, r.samples, r.seed, &out,
                              &pass));
  emit(r.envelope("algebra check", json::parse(take(out))).dump(), r.out);
  r.exit_code = pass ? 0 : 1;
}

void run_cumulant(Run& r) {
  r.require_json_format();
  Ctx c = r.load_context();
  Mdl m;
  check_api(amg_model_from_matrices(c.p, read_file(r.elements_file).c_str(), &m.p));
  std::string coeffs = r.coeffs_or_null();
  char* out = nullptr;
  int status;
  if (r.moment)
    status = amg_moment_json(m.p, target_code(r.target), r.indices.data(),
                             static_cast<int>(r.indices.size()),
                             coeffs.empty() ? nullptr : coeffs.c_str(), &out);
  else
    status = amg_cumulant_json(m.p, target_code(r.target), r.indices.data(),
                               static_cast<int>(r.indices.size()),
                               coeffs.empty() ? nullptr : coeffs.c_str(), &out);
  check_api(status);
  emit(take(out), r.out);
}

void run_freeness(Run& r) {
  r.require_json_format();
  Ctx c = r.load_context();
  Mdl m = r.load_model(c);
  char* out = nullptr;
  int pass = 0;
  check_api(amg_freeness_json(m.p, r.mode.c_str(),
                              r.groups.empty() ? nullptr : r.groups.data(),
                              static_cast<int>(r.groups.size()), r.var, r.order, r.tol,
                              r.draws, r.seed, &out, &pass));
  emit(r.envelope("freeness", json::parse(take(out))).dump(), r.out);
  r.exit_code = pass ? 0 : 1;
}

void run_fock_moment(Run& r) {
  r.require_json_format();
  std::string table = read_file(r.spec_file);
  Ctx c;
  if (!r.context_file.empty()) {
    check_api(amg_context_create(read_file(r.context_file).c_str(), &c.p));
  } else {
    // default context: B = M_d with D = C 1 scalar, read d off the table
    json t = json::parse(table, nullptr, false);
    if (t.is_discarded() || !t.contains("d")) throw ApiError("spec: need a d field");
    int d = t["d"].get<int>();
    json ctx = {{"d", d},
                {"k", 1},
                {"D_blocks", json::array({{{"dim", 1}, {"mult", d}}})}};
    check_api(amg_context_create(ctx.dump().c_str(), &c.p));
  }
  Mdl m;
  check_api(
      amg_model_from_table(c.p, table.c_str(), target_code(r.series_target) == 1, &m.p));
  std::string coeffs = r.coeffs_or_null();
  char* out = nullptr;
  check_api(amg_moment_json(m.p, target_code(r.target), r.indices.data(),
                            static_cast<int>(r.indices.size()),
                            coeffs.empty() ? nullptr : coeffs.c_str(), &out));
  emit(take(out), r.out);
}

void run_liberation(Run& r) {
  r.require_json_format();
  Ctx c = r.load_context();
  Mdl m = r.load_model(c);
  std::string candidates = read_file(r.candidates_file);
  char* out = nullptr;
  int pass = 0;
  check_api(amg_liberation_json(m.p, r.mode.c_str(), candidates.c_str(),
                                r.sides.empty() ? nullptr : r.sides.data(),
                                static_cast<int>(r.sides.size()), r.order, r.tol,
                                r.seed, target_code(r.target), &out, &pass));
  emit(r.envelope("liberation", json::parse(take(out))).dump(), r.out);
  r.exit_code = pass ? 0 : 1;
}

void run_band_limit(Run& r) {
  r.require_json_format();
  char* out = nullptr;
  int pass = 0;
  check_api(amg_band_limit_json(read_file(r.profile_file).c_str(), r.order, &out,
                                &pass));
  emit(json::parse(take(out)).dump(), r.out);
  r.exit_code = pass ? 0 : 1;
}

std::string histogram_csv(const json& h) {
  std::ostringstream out;
  out.precision(17);
  out << "# seed," << h["seed"].get<std::uint64_t>() << "\n";
  out << "# trials," << h["trials"].get<int>() << "\n";
  out << "bin_lo,bin_hi,mass\n";
  const auto& edges = h["edges"];
  const auto& masses = h["masses"];
  for (std::size_t i = 0; i < masses.size(); ++i)
    out << edges[i].get<double>() << "," << edges[i + 1].get<double>() << ","
        << masses[i].get<double>() << "\n";
  return out.str();
}

void run_band_simulate(Run& r) {
  if (r.trials <= 0) r.trials = 10;
  char* out = nullptr;
  check_api(amg_band_simulate_json(read_file(r.profile_file).c_str(), r.n, r.trials,
                                   r.bins, r.seed, &out));
  std::string result = take(out);
  if (r.format == "csv")
    emit(histogram_csv(json::parse(result)), r.out);
  else if (r.format == "json")
    emit(result, r.out);
  else
    throw ApiError("format must be json or csv");
}

void run_band_conjugation(Run& r) {
  r.require_json_format();
  if (r.trials <= 0) r.trials = 20;
  if (r.order <= 0) r.order = 2;
  char* out = nullptr;
  check_api(amg_haar_conjugation_json(r.d, r.ks.data(),
                                      static_cast<int>(r.ks.size()), r.trials, r.order,
                                      r.seed, &out));
  emit(take(out), r.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-valued free probability over finite-dimensional models"};
  app.require_subcommand(1);
  app.fallthrough();

  Run r;
  app.add_option("--seed", r.seed, "master seed recorded in outputs");
  app.add_option("--tol", r.tol, "residual tolerance (0 = module default)");
  app.add_option("--order", r.order, "max order / power (0 = module default)");
  app.add_option("--out", r.out,
                 "output file (relative paths land in $AMALGAM_OUT_DIR); default stdout");
  app.add_option("--format", r.format, "output format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  std::vector<std::function<void(Run&)>> todo;
  auto arm = [&todo](CLI::App* cmd, void (*fn)(Run&)) {
    cmd->callback([&todo, fn] { todo.push_back(fn); });
  };

  auto* nc = app.add_subcommand("nc", "noncrossing partition lattice");
  auto* nc_count = nc->add_subcommand("count", "number of noncrossing partitions");
  nc_count->add_option("--n", r.n, "ground set size")->required();
  nc_count->add_flag("--json", r.as_json, "wrap the count in a JSON object");
  arm(nc_count, [](Run& rr) { run_nc(rr, true); });
  auto* nc_list = nc->add_subcommand("list", "all noncrossing partitions as JSON");
  nc_list->add_option("--n", r.n, "ground set size")->required();
  nc_list->add_flag("--json", r.as_json, "accepted for symmetry; list is always JSON");
  arm(nc_list, [](Run& rr) { run_nc(rr, false); });
  nc->require_subcommand(1);

  auto* algebra = app.add_subcommand("algebra", "context utilities");
  auto* algcheck = algebra->add_subcommand("check", "run the structural invariant suite");
  algcheck->add_option("--context", r.context_file, "context JSON file")->required();
  algcheck->add_option("--samples", r.samples, "Monte Carlo samples for spot checks");
  arm(algcheck, run_algebra_check);
  algebra->require_subcommand(1);

  auto* cumulant = app.add_subcommand("cumulant", "evaluate a cumulant (or moment)");
  cumulant->add_option("--context", r.context_file, "context JSON file")->required();
  cumulant->add_option("--elements", r.elements_file, "model JSON file with variables")
      ->required();
  cumulant->add_option("--indices", r.indices, "variable indices i1,i2,...")
      ->required()
      ->delimiter(',');
  cumulant->add_option("--target", r.target, "B | D | scalar");
  cumulant->add_option("--coeffs", r.coeffs_file, "right coefficients JSON file");
  cumulant->add_flag("--moment", r.moment, "evaluate the moment instead");
  arm(cumulant, run_cumulant);

  auto* freeness = app.add_subcommand("freeness", "freeness-with-amalgamation tests");
  freeness->add_option("mode", r.mode, "mixed | factorization | restriction | rcyclic")
      ->required()
      ->check(CLI::IsMember({"mixed", "factorization", "restriction", "rcyclic",
                             "semicircular"}));
  freeness->add_option("--context", r.context_file, "context JSON file")->required();
  freeness->add_option("--model", r.model_file, "model JSON file with variables");
  freeness->add_option("--table", r.table_file, "cumulant table JSON file");
  freeness->add_option("--series-target", r.series_target,
                       "expectation the table is read against: B | D");
  freeness->add_option("--groups", r.groups, "group label per variable g1,g2,...")
      ->delimiter(',');
  freeness->add_option("--var", r.var, "variable index for rcyclic/semicircular");
  freeness->add_option("--draws", r.draws, "random coefficient draws per query");
  arm(freeness, run_freeness);

  auto* fock = app.add_subcommand("fock", "canonical models from cumulant tables");
  auto* fockm = fock->add_subcommand("moment", "moment of a canonical model");
  fockm->add_option("--spec", r.spec_file, "cumulant table JSON file")->required();
  fockm->add_option("--indices", r.indices, "variable indices i1,i2,...")
      ->required()
      ->delimiter(',');
  fockm->add_option("--coeffs", r.coeffs_file, "right coefficients JSON file");
  fockm->add_option("--context", r.context_file,
                    "context JSON file (default: M_d over scalar D)");
  fockm->add_option("--series-target", r.series_target,
                    "expectation the table is read against: B | D");
  fockm->add_option("--target", r.target, "expectation to evaluate: B | D | scalar");
  arm(fockm, run_fock_moment);
  fock->require_subcommand(1);

  auto* liberation =
      app.add_subcommand("liberation", "conjugate variables and liberation gradients");
  liberation
      ->add_option("mode", r.mode,
                   "conjugate | conjugate-cumulants | gradient | commutator")
      ->required()
      ->check(CLI::IsMember(
          {"conjugate", "conjugate-cumulants", "gradient", "commutator"}));
  liberation->add_option("--context", r.context_file, "context JSON file")->required();
  liberation->add_option("--model", r.model_file, "model JSON file with variables");
  liberation->add_option("--table", r.table_file, "cumulant table JSON file");
  liberation->add_option("--series-target", r.series_target,
                         "expectation the table is read against: B | D");
  liberation
      ->add_option("--candidates", r.candidates_file,
                   "formal element JSON file (list; single element for gradient)")
      ->required();
  liberation->add_option("--sides", r.sides, "side tag per variable for gradient")
      ->delimiter(',');
  liberation->add_option("--target", r.target, "cumulant target: B | D");
  arm(liberation, run_liberation);

  auto* band = app.add_subcommand("bandmatrix", "Gaussian band matrix experiments");
  auto* limit = band->add_subcommand("limit", "exact limiting moments of a profile");
  limit->add_option("--profile", r.profile_file, "variance profile CSV file")
      ->required();
  arm(limit, run_band_limit);
  auto* sim = band->add_subcommand("simulate", "sample spectra and bin eigenvalues");
  sim->add_option("--profile", r.profile_file, "variance profile CSV file")->required();
  sim->add_option("--n", r.n, "matrix size")->required();
  sim->add_option("--trials", r.trials, "independent samples");
  sim->add_option("--bins", r.bins, "histogram bins");
  arm(sim, run_band_simulate);
  auto* conj = band->add_subcommand("conjugation",
                                    "block-Haar conjugation against a diagonal");
  conj->add_option("--d", r.d, "block dimension d");
  conj->add_option("--ks", r.ks, "block counts k1,k2,...")->required()->delimiter(',');
  conj->add_option("--trials", r.trials, "independent samples per k");
  arm(conj, run_band_conjugation);
  band->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& fn : todo) fn(r);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return r.exit_code;
}
