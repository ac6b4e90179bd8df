#pragma once

/* C interface to the amalgam core: opaque handles, integer status codes,
 * JSON/CSV text in and out. Every function returns AMG_OK (0) on success or
 * an error code; amg_last_error() describes the most recent failure on the
 * calling thread. Strings returned through char** are heap-allocated and
 * must be released with amg_string_free(). */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  AMG_OK = 0,
  AMG_ERR_INVALID = 1, /* bad argument or inconsistent input */
  AMG_ERR_PARSE = 2,   /* malformed JSON/CSV text */
  AMG_ERR_RUNTIME = 3  /* anything else */
};

typedef struct amg_context amg_context;
typedef struct amg_model amg_model;

const char* amg_version(void);
/* message for the last failing call on this thread; "" if none */
const char* amg_last_error(void);
void amg_string_free(char* s);

/* --- noncrossing partitions ------------------------------------------- */

int amg_nc_count(int n, long long* count_out);
/* array of partitions, each a list of blocks of 0-based elements */
int amg_nc_list_json(int n, char** json_out);

/* --- contexts ---------------------------------------------------------- */

/* json: {"d", "k", "D_blocks": [{"dim", "mult"}...], "trace_weights"?} */
int amg_context_create(const char* json, amg_context** out);
void amg_context_free(amg_context* ctx);
int amg_context_to_json(const amg_context* ctx, char** json_out);
/* runs the structural invariant suite; *pass_out = 1 iff all checks hold */
int amg_context_check(const amg_context* ctx, double tol, int mc_samples,
                      uint64_t seed, char** report_json_out, int* pass_out);

/* --- models ------------------------------------------------------------ */

/* json: {"variables": [matrix...]}, N x N over ctx */
int amg_model_from_matrices(const amg_context* ctx, const char* json,
                            amg_model** out);
/* json: cumulant table {"num_vars", "d", "max_order", "table"}; target_d
 * selects whether the table is read against E_D (1) or E_B (0) */
int amg_model_from_table(const amg_context* ctx, const char* json, int target_d,
                         amg_model** out);
void amg_model_free(amg_model* m);
int amg_model_num_vars(const amg_model* m, int* num_vars_out);

/* --- moments and cumulants --------------------------------------------- */

/* E(x_{i_1} c_1 ... x_{i_n} c_n) / kappa_n(x_{i_1} c_1, ..., x_{i_n} c_n).
 * coeffs_json: optional JSON array of n d x d right coefficients (NULL =
 * identities). target: 0 = B, 1 = D, 2 = scalar trace. Result is a matrix
 * JSON (1 x 1 for the scalar target). */
int amg_moment_json(const amg_model* m, int target, const int* indices, int n,
                    const char* coeffs_json, char** matrix_json_out);
int amg_cumulant_json(const amg_model* m, int target, const int* indices, int n,
                      const char* coeffs_json, char** matrix_json_out);

/* --- freeness tests ----------------------------------------------------- */

/* mode: "mixed" | "factorization" | "restriction" | "rcyclic".
 * groups: group label per variable (len = num_vars), used by mixed and
 * factorization; var: variable index for rcyclic. order/tol/draws/seed
 * fill the test options; draws <= 0 keeps the default. *pass_out = 1 iff
 * the report verdict is pass. */
int amg_freeness_json(const amg_model* m, const char* mode, const int* groups,
                      int groups_len, int var, int order, double tol, int draws,
                      uint64_t seed, char** report_json_out, int* pass_out);

/* --- conjugate variables and liberation gradients ----------------------- */

/* mode "conjugate": candidates_json = JSON list of formal elements, one per
 *   variable; verifies the defining moment relations.
 * mode "conjugate-cumulants": same input, cumulant-form verification.
 * mode "gradient": candidates_json = a single formal element; sides = side
 *   tag (1 or 2) per variable, len = num_vars.
 * mode "commutator": candidates_json = JSON list as above; emits the
 *   projected commutator element and its L2 norm, pass iff norm <= tol.
 * target: 0 = B, 1 = D cumulant target where applicable. */
int amg_liberation_json(const amg_model* m, const char* mode,
                        const char* candidates_json, const int* sides,
                        int sides_len, int order, double tol, uint64_t seed,
                        int target, char** json_out, int* pass_out);

/* --- band matrices ------------------------------------------------------ */

/* limit verdict for a variance profile (CSV grid): limiting even moments up
 * to `order`, free cumulants, and the constant-row / semicircularity checks.
 * *pass_out = 1 iff the limit is semicircular. */
int amg_band_limit_json(const char* profile_csv, int order, char** json_out,
                        int* pass_out);
/* pooled eigenvalue histogram of `trials` samples of size n */
int amg_band_simulate_json(const char* profile_csv, int n, int trials, int bins,
                           uint64_t seed, char** json_out);
/* block-Haar conjugation experiment over block counts ks */
int amg_haar_conjugation_json(int d, const int* ks, int ks_len, int trials,
                              int max_power, uint64_t seed, char** json_out);

#ifdef __cplusplus
}
#endif
