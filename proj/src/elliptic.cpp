#include "tjflow/elliptic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "tjflow/errors.hpp"
#include "tjflow/pointwise.hpp"
#include "tjflow/spectral.hpp"

namespace tjflow {

EllipticProblem::EllipticProblem(JOperator op, Gauge gauge) : op_(std::move(op)), gauge_(gauge) {
  const bool theta_pd = op_.theta().min_eigenvalue().value > kPositivityTol;
  const bool rho_zero =
      std::all_of(op_.rho().begin(), op_.rho().end(), [](double r) { return r <= 0.0; });
  degenerate_ = !theta_pd && rho_zero;
}

EllipticProblem EllipticProblem::twisted(const GeometrySetup& setup, double epsilon,
                                         std::optional<double> c, Gauge gauge) {
  EllipticProblem p = twisted(setup.theta_epsilon(epsilon), c.value_or(setup.c_epsilon(epsilon)),
                              setup.beta, gauge);
  if (setup.subsolution) {
    p.subsolution_margin =
        subsolution_check(*setup.subsolution, p.op_.theta(), p.op_.psi()[0]).margin;
    p.gauge_reference = setup.subsolution;
  } else {
    p.subsolution_margin =
        subsolution_check(PotentialField(setup.grid), p.op_.theta(), p.op_.psi()[0]).margin;
  }
  return p;
}

EllipticProblem EllipticProblem::twisted(FormField theta, double c, double beta, Gauge gauge) {
  if (!(beta >= 0.0)) throw ValidationError("elliptic: beta must be non-negative");
  if (!(c > 0.0)) throw ValidationError("elliptic: c must be positive");
  return EllipticProblem(JOperator::twisted(std::move(theta), c, beta), gauge);
}

EllipticProblem EllipticProblem::generalized(FormField theta, std::vector<double> psi,
                                             std::vector<double> rho, Gauge gauge) {
  for (std::size_t p = 0; p < psi.size(); ++p) {
    if (!(psi[p] > 0.0)) {
      throw ValidationError("elliptic: psi must be positive (grid point " + std::to_string(p) +
                            ")");
    }
  }
  for (std::size_t p = 0; p < rho.size(); ++p) {
    if (!(rho[p] >= 0.0)) {
      throw ValidationError("elliptic: rho must be non-negative (grid point " +
                            std::to_string(p) + ")");
    }
  }
  return EllipticProblem(JOperator(std::move(theta), std::move(psi), std::move(rho)), gauge);
}

PotentialField EllipticProblem::normalize(const PotentialField& u) const {
  if (gauge_ == Gauge::MeanZero) return u.normalized();
  PotentialField out = u;
  double s;
  if (gauge_reference) {
    s = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < u.size(); ++p) s = std::max(s, u[p] - (*gauge_reference)[p]);
  } else {
    s = u.sup();
  }
  out += -s;
  return out;
}

double sup_norm(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

namespace {

void require_positive(const OperatorEvaluation& e) {
  if (e.min_eigenvalue > kPositivityTol) return;
  const auto worst = metric_min_eigenvalue(e.hessian);
  throw PositivityViolation(
      "elliptic: omega_u is not positive definite at grid point " + std::to_string(worst.point),
      worst.value, worst.point);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_elliptic(const FormField& c) {
  const int n = c.dim();
  for (std::size_t p = 0; p < c.grid().size(); ++p) {
    bool ok;
    if (n == 2) {
      const double a = c.plane(0, 0)[p], b = c.plane(0, 1)[p], d = c.plane(1, 1)[p];
      ok = a > 0.0 && a * d - b * b > 0.0;
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(c.at(p));
      ok = llt.info() == Eigen::Success;
    }
    if (!ok) {
      throw ConvergenceFailure("elliptic: linearization is not elliptic at grid point " +
                               std::to_string(p));
    }
  }
}

// A(d) = P(L d) + mean(d) + (I - P) d: invertible, and equal to L on the
// resolved mean-zero space up to the constant mode.
class Augmented {
 public:
  Augmented(const JOperator& op, const FormField& coeff)
      : op_(op), coeff_(coeff), scratch_(op.grid()), tmp_(op.grid().size()),
        spectral_(SpectralOps::for_grid(op.grid())) {
    const int n = coeff.dim();
    double tr = 0.0;
    for (int j = 0; j < n; ++j) tr += mean_of(coeff.plane(j, j));
    scale_ = tr / n;
  }

  void apply(std::span<const double> d, std::span<double> out) {
    op_.apply_linearization(coeff_, d, scratch_, out);
    spectral_.project(out);
    std::copy(d.begin(), d.end(), tmp_.begin());
    spectral_.project(tmp_);
    const double m = mean_of(d);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += m + (d[i] - tmp_[i]);
  }

  void precondition(std::span<const double> in, std::span<double> out) {
    spectral_.inverse_scaled_laplacian(in, scale_, out);
  }

 private:
  const JOperator& op_;
  const FormField& coeff_;
  FormField scratch_;
  std::vector<double> tmp_;
  SpectralOps& spectral_;
  double scale_;
};

struct GmresOutcome {
  int iterations = 0;
  double relative_residual = 1.0;
};

// Right-preconditioned restarted GMRES with x0 = 0.
GmresOutcome gmres(Augmented& A, std::span<const double> b, std::span<double> x, double rtol,
                   int restart, int max_iter) {
  const std::size_t size = b.size();
  std::fill(x.begin(), x.end(), 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  GmresOutcome out;
  if (bnorm == 0.0) {
    out.relative_residual = 0.0;
    return out;
  }
  const int m = restart;
  std::vector<std::vector<double>> V(static_cast<std::size_t>(m + 1),
                                     std::vector<double>(size));
  std::vector<std::vector<double>> Z(static_cast<std::size_t>(m), std::vector<double>(size));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  std::vector<double> cs(m), sn(m), g(m + 1);
  std::vector<double> r(size), w(size);

  while (out.iterations < max_iter) {
    A.apply(x, w);
    for (std::size_t i = 0; i < size; ++i) r[i] = b[i] - w[i];
    double beta = std::sqrt(dot(r, r));
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= rtol) return out;
    for (std::size_t i = 0; i < size; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    H.setZero();
    int k = 0;
    for (; k < m && out.iterations < max_iter; ++k) {
      ++out.iterations;
      A.precondition(V[k], Z[k]);
      A.apply(Z[k], w);
      for (int j = 0; j <= k; ++j) {
        const double h = dot(w, V[j]);
        H(j, k) = h;
        for (std::size_t i = 0; i < size; ++i) w[i] -= h * V[j][i];
      }
      const double hn = std::sqrt(dot(w, w));
      H(k + 1, k) = hn;
      if (hn > 0.0) {
        for (std::size_t i = 0; i < size; ++i) V[k + 1][i] = w[i] / hn;
      }
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      const double den = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / den;
      sn[k] = H(k + 1, k) / den;
      H(k, k) = den;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      out.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (out.relative_residual <= rtol || hn == 0.0) {
        ++k;
        break;
      }
    }
    // Back substitution and update x += Z y.
    std::vector<double> y(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
      y[i] = s / H(i, i);
    }
    for (int j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < size; ++i) x[i] += y[j] * Z[j][i];
    }
    if (out.relative_residual <= rtol) return out;
  }
  A.apply(x, w);
  for (std::size_t i = 0; i < size; ++i) r[i] = b[i] - w[i];
  out.relative_residual = std::sqrt(dot(r, r)) / bnorm;
  return out;
}

}  // namespace

std::vector<double> residual(const PotentialField& u, const EllipticProblem& problem) {
  if (!(u.grid() == problem.grid())) throw ValidationError("elliptic: grid mismatch");
  OperatorEvaluation e(problem.grid());
  problem.op().evaluate(u.values(), e);
  require_positive(e);
  return e.value;
}

NewtonResult newton_solve(const EllipticProblem& problem, const PotentialField& u0,
                          const NewtonOptions& options) {
  if (problem.degenerate()) {
    throw DesignedFallback(
        "elliptic: degenerate theta with rho = 0; use epsilon continuation of the flow");
  }
  if (!(options.tol > 0.0) || options.max_iter < 0 || options.gmres_restart < 1) {
    throw ValidationError("elliptic: invalid Newton options");
  }
  if (!(u0.grid() == problem.grid())) throw ValidationError("elliptic: grid mismatch");
  const Grid& grid = problem.grid();
  const JOperator& op = problem.op();
  const std::size_t size = grid.size();

  NewtonResult res{u0, false, 0, 0, 0.0, {}, {}};
  PotentialField& u = res.solution;
  SpectralOps::for_grid(grid).project(u.values());
  OperatorEvaluation eval(grid), trial(grid);
  op.evaluate(u.values(), eval);
  require_positive(eval);
  double rnorm = sup_norm(eval.value);
  res.residual_history.push_back(rnorm);

  FormField coeff(grid);
  std::vector<double> rhs(size), delta(size);
  PotentialField candidate(grid);
  while (rnorm >= options.tol) {
    if (res.iterations >= options.max_iter) {
      throw ConvergenceFailure("elliptic: Newton exceeded max_iter with residual " +
                               std::to_string(rnorm));
    }
    ++res.iterations;
    op.coefficients(eval.hessian, coeff);
    check_elliptic(coeff);
    for (std::size_t i = 0; i < size; ++i) rhs[i] = -eval.value[i];
    SpectralOps::for_grid(grid).project(rhs);
    Augmented A(op, coeff);
    const double eta = std::clamp(options.forcing * rnorm, 1e-12, 0.1);
    const GmresOutcome lin =
        gmres(A, rhs, delta, eta, options.gmres_restart, options.gmres_max_iter);
    res.linear_iterations += lin.iterations;
    if (!(lin.relative_residual < 0.5)) {
      throw ConvergenceFailure("elliptic: linear solve stagnated (relative residual " +
                               std::to_string(lin.relative_residual) + ")");
    }
    SpectralOps::for_grid(grid).project(delta);

    double s = 1.0;
    bool accepted = false;
    for (int b = 0; b <= options.max_backtracks; ++b, s *= 0.5) {
      for (std::size_t i = 0; i < size; ++i) candidate[i] = u[i] + s * delta[i];
      op.evaluate(candidate.values(), trial);
      if (!(trial.min_eigenvalue > kPositivityTol)) continue;
      const double tn = sup_norm(trial.value);
      if (std::isfinite(tn) && tn < (1.0 - 1e-4 * s) * rnorm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceFailure("elliptic: line search failed at residual " +
                               std::to_string(rnorm));
    }
    std::swap(u, candidate);
    std::swap(eval, trial);
    rnorm = sup_norm(eval.value);
    res.residual_history.push_back(rnorm);
    res.step_lengths.push_back(s);
  }
  res.converged = true;
  res.final_residual = rnorm;
  u = problem.normalize(u);
  return res;
}

UniquenessReport uniqueness_probe(const EllipticProblem& problem,
                                  const std::vector<PotentialField>& seeds,
                                  const NewtonOptions& options, double agreement_tol,
                                  int parallel) {
  UniquenessReport rep;
  const std::size_t count = seeds.size();
  std::vector<std::optional<NewtonResult>> slots(count);
  rep.failures.assign(count, {});
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i] = newton_solve(problem, seeds[i], options);
      } catch (const Error& e) {
        rep.failures[i] = e.what();
      }
    }
  };
  const int threads = std::clamp(parallel, 1, static_cast<int>(std::max<std::size_t>(count, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  bool all_ok = true;
  for (std::size_t i = 0; i < count; ++i) {
    if (slots[i]) {
      rep.runs.push_back(std::move(*slots[i]));
    } else {
      all_ok = false;
    }
  }
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.runs.size(); ++j) {
      rep.max_pairwise_distance = std::max(
          rep.max_pairwise_distance, sup_distance(rep.runs[i].solution, rep.runs[j].solution));
    }
  }
  rep.agree = all_ok && rep.max_pairwise_distance <= agreement_tol;
  return rep;
}

}  // namespace tjflow
