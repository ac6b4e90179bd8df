#include "amalgam/randmat.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "amalgam/cumulants.hpp"
#include "amalgam/freeness.hpp"
#include "amalgam/model.hpp"
#include "amalgam/nc.hpp"

namespace amalgam::rmt {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

VarianceProfile::VarianceProfile(Eigen::MatrixXd grid) : sigma(std::move(grid)) {
  if (sigma.rows() < 1 || sigma.rows() != sigma.cols())
    throw std::invalid_argument("variance profile: grid must be square");
  for (int i = 0; i < sigma.rows(); ++i)
    for (int j = 0; j <= i; ++j) {
      if (sigma(i, j) != sigma(j, i))
        throw std::invalid_argument("variance profile: grid must be symmetric");
      if (!(sigma(i, j) >= 0.0))
        throw std::invalid_argument("variance profile: grid must be nonnegative");
    }
}

VarianceProfile VarianceProfile::constant(int g, double c) {
  return VarianceProfile(Eigen::MatrixXd::Constant(g, g, c));
}

VarianceProfile VarianceProfile::from_function(
    int g, const std::function<double(double, double)>& f) {
  Eigen::MatrixXd grid(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j <= i; ++j) {
      double x = (i + 0.5) / g, y = (j + 0.5) / g;
      // symmetrize so float evaluation order cannot break the exact invariant
      double v = 0.5 * (f(x, y) + f(y, x));
      grid(i, j) = grid(j, i) = v;
    }
  return VarianceProfile(grid);
}

double VarianceProfile::value(double x, double y) const {
  int n = g();
  auto cell = [n](double t) {
    int i = static_cast<int>(std::floor(t * n));
    return std::clamp(i, 0, n - 1);
  };
  return sigma(cell(x), cell(y));
}

double VarianceProfile::integral() const { return sigma.mean(); }

Eigen::VectorXd VarianceProfile::row_integrals() const {
  return sigma.rowwise().mean();
}

Eigen::VectorXd VarianceProfile::apply_kernel(const Eigen::VectorXd& f) const {
  if (f.size() != g()) throw std::invalid_argument("apply_kernel: size mismatch");
  return sigma * f / static_cast<double>(g());
}

Matrix sample_band_matrix(int n, const VarianceProfile& profile, Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_band_matrix: n must be >= 2");
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) / n;
    double sd = std::sqrt(profile.value(x, x) / n);
    m(i, i) = sd * rng.gauss();  // diagonal real, full variance
    for (int j = i + 1; j < n; ++j) {
      double y = (j + 0.5) / n;
      double s = std::sqrt(profile.value(x, y) / n);
      Complex z = s * rng.cgauss();  // E|z|^2 = sigma/n
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  }
  return m;
}

std::vector<double> pooled_eigenvalues(const std::vector<Matrix>& samples) {
  if (samples.empty()) throw std::invalid_argument("pooled_eigenvalues: no samples");
  std::vector<double> eigs;
  for (const auto& m : samples) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) eigs.push_back(ev(i));
  }
  return eigs;
}

HistogramResult empirical_spectrum(const std::vector<Matrix>& samples, int bins) {
  if (samples.empty()) throw std::invalid_argument("empirical_spectrum: no samples");
  if (bins < 1) throw std::invalid_argument("empirical_spectrum: bins must be >= 1");
  HistogramResult out;
  out.trials = static_cast<int>(samples.size());

  std::vector<double> eigs = pooled_eigenvalues(samples);
  double lo = *std::min_element(eigs.begin(), eigs.end());
  double hi = *std::max_element(eigs.begin(), eigs.end());
  if (hi - lo < 1e-12) {  // degenerate spectrum: widen so the mass lands inside
    lo -= 0.5;
    hi += 0.5;
  }
  double w = (hi - lo) / bins;
  out.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) out.edges[b] = lo + b * w;
  out.masses.assign(bins, 0.0);
  double unit = 1.0 / static_cast<double>(eigs.size());
  for (double e : eigs) {
    int b = std::clamp(static_cast<int>((e - lo) / w), 0, bins - 1);
    out.masses[b] += unit;
  }

  out.moments.assign(9, 0.0);
  for (const auto& m : samples) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    int n = static_cast<int>(ev.size());
    for (int k = 0; k <= 8; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::pow(ev(i), k);
      out.moments[k] += s / n / samples.size();
    }
  }
  return out;
}

double semicircle_cdf(double t, double radius) {
  if (t <= -radius) return 0.0;
  if (t >= radius) return 1.0;
  double r2 = radius * radius;
  return 0.5 + (t * std::sqrt(r2 - t * t) + r2 * std::asin(t / radius)) / (kPi * r2);
}

double ks_distance_semicircle(std::vector<double> eigenvalues, double radius) {
  if (eigenvalues.empty())
    throw std::invalid_argument("ks_distance_semicircle: empty sample");
  std::sort(eigenvalues.begin(), eigenvalues.end());
  double n = static_cast<double>(eigenvalues.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    double f = semicircle_cdf(eigenvalues[i], radius);
    ks = std::max(ks, std::max(std::abs(f - i / n), std::abs((i + 1) / n - f)));
  }
  return ks;
}

std::vector<double> limit_moments_band(const VarianceProfile& profile, int order) {
  if (order < 0 || order % 2 != 0)
    throw std::invalid_argument("limit_moments_band: order must be even");
  if (profile.g() < 16)
    throw std::invalid_argument("limit_moments_band: grid must be at least 16");
  int g = profile.g();
  // B-valued moments of the kernel semicircular element as grid functions:
  // E(X^{2m}) = sum_j eta(E(X^{2j})) . E(X^{2m-2j-2}), one term per position
  // paired with the first letter; realizes the non-crossing pairing sum
  std::vector<Eigen::VectorXd> even{Eigen::VectorXd::Ones(g)};
  for (int m = 1; 2 * m <= order; ++m) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(g);
    for (int j = 0; j < m; ++j)
      acc += profile.apply_kernel(even[j]).cwiseProduct(even[m - j - 1]);
    even.push_back(acc);
  }
  std::vector<double> moments(order + 1, 0.0);
  for (int m = 0; 2 * m <= order; ++m) moments[2 * m] = even[m].mean();
  return moments;
}

std::vector<double> scalar_free_cumulants(const std::vector<double>& moments) {
  if (moments.empty() || std::abs(moments[0] - 1.0) > 1e-9)
    throw std::invalid_argument("scalar_free_cumulants: moments must start with m_0 = 1");
  int n = static_cast<int>(moments.size()) - 1;
  if (n > 12) throw std::invalid_argument("scalar_free_cumulants: order too large");
  std::vector<double> kappa(n + 1, 0.0);
  for (int r = 1; r <= n; ++r) {
    double rest = 0.0;
    for (const auto& part : nc::enumerate_nc(r)) {
      if (part.blocks.size() == 1) continue;  // the full block is kappa_r itself
      double prod = 1.0;
      for (const auto& blk : part.blocks) prod *= kappa[blk.size()];
      rest += prod;
    }
    kappa[r] = moments[r] - rest;
  }
  kappa.erase(kappa.begin());  // kappa_1..kappa_n
  return kappa;
}

namespace {

// scalar one-variable model driven by a frozen moment list; feeds the limit
// moments into the model-based semicircularity test
class MomentSequenceModel final : public Model {
 public:
  explicit MomentSequenceModel(std::vector<double> moments)
      : ctx_(std::make_shared<const AlgebraContext>(
            1, 1,
            [] {
              alg::SubalgebraSpec s;
              s.blocks = {{1, 1}};
              return s;
            }())),
        moments_(std::move(moments)) {}

  const AlgebraContext& context() const override { return *ctx_; }
  int num_vars() const override { return 1; }
  bool self_adjoint(int) const override { return true; }
  Matrix expect(const ModelWord& w) const override {
    validate(w);
    Complex c = 1.0;
    for (const auto& b : w.coeffs) c *= b(0, 0);
    std::size_t len = w.vars.size();
    double m = len < moments_.size() ? moments_[len] : 0.0;
    Matrix out(1, 1);
    out(0, 0) = c * m;
    return out;
  }

 private:
  std::shared_ptr<const AlgebraContext> ctx_;
  std::vector<double> moments_;
};

}  // namespace

BandVerdict band_semicircle_verdict(const VarianceProfile& profile, int order,
                                    double tol_row) {
  if (order < 2) throw std::invalid_argument("band_semicircle_verdict: order must be >= 2");
  int even_order = order - order % 2;
  BandVerdict v;

  Eigen::VectorXd r = profile.row_integrals();
  v.row_deviation = (r.array() - r.mean()).abs().maxCoeff();
  v.constant_rows = v.row_deviation <= tol_row;

  v.moments = limit_moments_band(profile, even_order);
  std::vector<double> kappa = scalar_free_cumulants(v.moments);
  v.kappa2 = kappa.size() > 1 ? kappa[1] : 0.0;
  for (int r1 = 1; r1 <= even_order; ++r1)
    if (r1 != 2) v.worst_cumulant = std::max(v.worst_cumulant, std::abs(kappa[r1 - 1]));

  auto model = std::make_shared<MomentSequenceModel>(v.moments);
  freeness::Options opt;
  opt.max_order = even_order;
  opt.coeff_draws = 3;
  opt.tuple_cap = 20;
  opt.tol = 1e-8;
  opt.seed = 2;
  v.moments_semicircular = freeness::scalar_semicircular_test(model, 0, opt).pass;
  return v;
}

namespace {

// worst difference of cyclic block moments (1/k) tr(x_{i1 i2} x_{i2 i3} ...
// x_{in i1}) between two N x N matrices, chains up to length 3
double worst_cyclic_diff(const Matrix& X, const Matrix& Y, int d, int k) {
  double worst = 0.0;
  auto blk = [&](const Matrix& m, int i, int j) { return m.block(i * k, j * k, k, k); };
  std::vector<int> idx;
  auto chain = [&](const Matrix& m) {
    Matrix prod = Matrix::Identity(k, k);
    int n = static_cast<int>(idx.size());
    for (int t = 0; t < n; ++t) prod = prod * blk(m, idx[t], idx[(t + 1) % n]);
    return prod.trace() / static_cast<double>(k);
  };
  auto rec = [&](auto&& self, int remaining) -> void {
    if (remaining == 0) {
      worst = std::max(worst, std::abs(chain(X) - chain(Y)));
      return;
    }
    for (int i = 0; i < d; ++i) {
      idx.push_back(i);
      self(self, remaining - 1);
      idx.pop_back();
    }
  };
  for (int n = 1; n <= 3; ++n) rec(rec, n);
  return worst;
}

}  // namespace

ConjugationReport haar_conjugation_experiment(
    int d, const std::vector<int>& ks, int trials, int max_power, std::uint64_t seed,
    const std::function<Matrix(const alg::AlgebraContext&, Rng&)>& draw_x) {
  if (d < 2) throw std::invalid_argument("haar_conjugation_experiment: d must be >= 2");
  if (ks.empty()) throw std::invalid_argument("haar_conjugation_experiment: no block sizes");
  for (int k : ks)
    if (k < 2) throw std::invalid_argument("haar_conjugation_experiment: k must be >= 2");
  if (trials < 1 || max_power < 1)
    throw std::invalid_argument("haar_conjugation_experiment: bad trial parameters");

  auto draw = draw_x ? draw_x : [](const alg::AlgebraContext& c, Rng& r) {
    return c.random_hermitian(r);
  };

  ConjugationReport rep;
  rep.d = d;
  rep.max_power = max_power;
  rep.ks = ks;
  rep.trials = trials;
  rep.seed = seed;

  alg::SubalgebraSpec diag;
  diag.blocks.assign(d, alg::DBlock{1, 1});
  Rng master(seed);
  // one fixed B-side witness for the mixed-cumulant residuals, shared by all k
  alg::AlgebraContext bctx(d, 2, diag);
  Rng brng = master.stream(1);
  Matrix bwit = bctx.random_B_hermitian(brng);

  const int mixed_trials = std::min(trials, 12);
  const std::vector<std::vector<int>> mixed_tuples{{0, 1}, {1, 0}, {0, 1, 0}};

  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    int k = ks[ki];
    auto ctx = std::make_shared<const alg::AlgebraContext>(d, k, diag);
    int N = ctx->N();
    double cerr = 0.0, cycerr = 0.0, mixed_acc = 0.0;
    std::vector<double> pow_acc(max_power, 0.0);

    for (int t = 0; t < trials; ++t) {
      Rng rng = master.stream(1000 * (ki + 1) + t);
      std::vector<Matrix> ub;
      for (int i = 0; i < d; ++i) ub.push_back(alg::haar_unitary(k, rng));
      Matrix u = Matrix::Zero(N, N);
      for (int i = 0; i < d; ++i) u.block(i * k, i * k, k, k) = ub[i];

      // exact commutation with the diagonal constants
      for (int j = 0; j < d; ++j) {
        Matrix e = Matrix::Zero(d, d);
        e(j, j) = 1.0;
        Matrix L = ctx->lift(e);
        cerr = std::max(cerr, alg::frob(Matrix(u * L - L * u)));
      }

      Matrix X = draw(*ctx, rng);
      Matrix Y = u * X * u.adjoint();
      cycerr = std::max(cycerr, worst_cyclic_diff(X, Y, d, k));

      // E_D(u^m) through per-block traces; equals cond_exp_D_full(u^m)
      std::vector<Matrix> upow = ub;
      for (int m = 1; m <= max_power; ++m) {
        double nrm2 = 0.0;
        for (int i = 0; i < d; ++i) nrm2 += std::norm(upow[i].trace() / static_cast<double>(k));
        pow_acc[m - 1] += std::sqrt(nrm2) / trials;
        if (m < max_power)
          for (int i = 0; i < d; ++i) upow[i] = upow[i] * ub[i];
      }

      if (t < mixed_trials) {
        auto model = std::make_shared<MatrixModel>(
            ctx, std::vector<Matrix>{Y, ctx->lift(bwit)});
        cum::CumulantEngine eng(model, cum::Target::D, 3);
        Rng crng = master.stream(5000 + 97 * ki + t);
        double worst = 0.0;
        for (const auto& tup : mixed_tuples) {
          for (int dr = 0; dr < 2; ++dr) {
            std::vector<Matrix> rc;
            for (std::size_t a = 0; a + 1 < tup.size(); ++a)
              rc.push_back(dr == 0 ? Matrix(Matrix::Identity(d, d)) : ctx->random_D(crng));
            rc.push_back(Matrix::Identity(d, d));
            worst = std::max(worst, alg::frob(eng.cumulant(tup, rc)));
          }
        }
        mixed_acc += worst / mixed_trials;
      }
    }
    rep.commutant_err.push_back(cerr);
    rep.cyclic_moment_err.push_back(cycerr);
    rep.power_norms.push_back(pow_acc);
    rep.mixed_residual.push_back(mixed_acc);
  }
  return rep;
}

}  // namespace amalgam::rmt
