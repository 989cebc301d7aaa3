#include "tjflow/j_operator.hpp"

#include <algorithm>
#include <limits>

#include "tjflow/errors.hpp"
#include "tjflow/kernels.hpp"
#include "tjflow/spectral.hpp"

namespace tjflow {

namespace {

kernels::SymPlanes planes2(const FormField& f) {
  return {f.plane(0, 0).data(), f.plane(0, 1).data(), f.plane(1, 1).data()};
}

using Mat3 = Eigen::Matrix3d;

Mat3 at3(const FormField& f, std::size_t p) {
  Mat3 m;
  for (int j = 0; j < 3; ++j) {
    for (int k = j; k < 3; ++k) {
      m(j, k) = f.plane(j, k)[p];
      m(k, j) = m(j, k);
    }
  }
  return m;
}

Mat3 adjugate3(const Mat3& g) {
  Mat3 a;
  a(0, 0) = g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1);
  a(0, 1) = g(0, 2) * g(2, 1) - g(0, 1) * g(2, 2);
  a(0, 2) = g(0, 1) * g(1, 2) - g(0, 2) * g(1, 1);
  a(1, 0) = g(1, 2) * g(2, 0) - g(1, 0) * g(2, 2);
  a(1, 1) = g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0);
  a(1, 2) = g(0, 2) * g(1, 0) - g(0, 0) * g(1, 2);
  a(2, 0) = g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0);
  a(2, 1) = g(0, 1) * g(2, 0) - g(0, 0) * g(2, 1);
  a(2, 2) = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  return a;
}

}  // namespace

JOperator::JOperator(FormField theta, std::vector<double> psi, std::vector<double> rho)
    : theta_(std::move(theta)), psi_(std::move(psi)), rho_(std::move(rho)) {
  if (psi_.size() != theta_.grid().size() || rho_.size() != theta_.grid().size()) {
    throw ValidationError("JOperator: psi/rho size does not match grid");
  }
}

JOperator JOperator::twisted(FormField theta, double c, double beta) {
  const std::size_t count = theta.grid().size();
  return JOperator(std::move(theta), std::vector<double>(count, c),
                   std::vector<double>(count, beta));
}

void JOperator::evaluate(std::span<const double> u, OperatorEvaluation& out) const {
  SpectralOps::for_grid(grid()).reduced_hessian(u, out.hessian);
  const std::size_t count = grid().size();
  if (grid().dim() == 2) {
    kernels::SpeedArgs args{count,          planes2(out.hessian), planes2(theta_),
                            psi_.data(),    rho_.data(),          out.value.data(),
                            out.det.data()};
    out.min_eigenvalue = kernels::active().speed(args);
    return;
  }
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < count; ++p) {
    const Mat3 g = Mat3::Identity() + at3(out.hessian, p);
    const Mat3 adj = adjugate3(g);
    const double det = g.row(0).dot(adj.col(0));
    const double tr = (adj * at3(theta_, p)).trace() / det;
    out.value[p] = psi_[p] - tr - rho_[p] / det;
    out.det[p] = det;
    Eigen::SelfAdjointEigenSolver<Mat3> eig;
    eig.computeDirect(g, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues()(0));
  }
  out.min_eigenvalue = min_eig;
}

void JOperator::coefficients(const FormField& hessian, FormField& out) const {
  const std::size_t count = grid().size();
  if (grid().dim() == 2) {
    kernels::CoefficientArgs args{count,
                                  planes2(hessian),
                                  planes2(theta_),
                                  rho_.data(),
                                  out.plane(0, 0).data(),
                                  out.plane(0, 1).data(),
                                  out.plane(1, 1).data()};
    kernels::active().coefficients(args);
    return;
  }
  for (std::size_t p = 0; p < count; ++p) {
    const Mat3 g = Mat3::Identity() + at3(hessian, p);
    const Mat3 adj = adjugate3(g);
    const double det = g.row(0).dot(adj.col(0));
    const Mat3 ginv = adj / det;
    const Mat3 c = ginv * at3(theta_, p) * ginv + (rho_[p] / det) * ginv;
    for (int j = 0; j < 3; ++j) {
      for (int k = j; k < 3; ++k) out.plane(j, k)[p] = 0.5 * (c(j, k) + c(k, j));
    }
  }
}

void JOperator::apply_linearization(const FormField& coeff, std::span<const double> delta,
                                    FormField& scratch, std::span<double> out) const {
  SpectralOps::for_grid(grid()).reduced_hessian(delta, scratch);
  const std::size_t count = grid().size();
  if (grid().dim() == 2) {
    kernels::ContractArgs args{count, planes2(coeff), planes2(scratch), out.data()};
    kernels::active().contract(args);
    return;
  }
  const int n = grid().dim();
  for (std::size_t p = 0; p < count; ++p) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) s += coeff.plane(j, k)[p] * scratch.plane(j, k)[p];
    }
    out[p] = s;
  }
}

FormField::Extremum metric_min_eigenvalue(const FormField& hessian) {
  FormField g = hessian;
  g.add_identity(1.0);
  return g.min_eigenvalue();
}

}  // namespace tjflow
