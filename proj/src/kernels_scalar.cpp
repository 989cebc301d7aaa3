#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>

#include "tjflow/kernels.hpp"

namespace tjflow::kernels {

namespace {

double speed_scalar(const SpeedArgs& a) {
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.count; ++i) {
    const double g11 = 1.0 + a.hessian.xx[i];
    const double g12 = a.hessian.xy[i];
    const double g22 = 1.0 + a.hessian.yy[i];
    const double det = g11 * g22 - g12 * g12;
    const double cross = g12 * a.theta.xy[i];
    const double tr = (g22 * a.theta.xx[i] + g11 * a.theta.yy[i] - (cross + cross)) / det;
    a.speed[i] = a.psi[i] - tr - a.rho[i] / det;
    a.det[i] = det;
    const double m = 0.5 * (g11 + g22);
    const double h = 0.5 * (g11 - g22);
    const double lo = m - std::sqrt(h * h + g12 * g12);
    min_eig = lo < min_eig ? lo : min_eig;
  }
  return min_eig;
}

void coefficients_scalar(const CoefficientArgs& a) {
  for (std::size_t i = 0; i < a.count; ++i) {
    const double g11 = 1.0 + a.hessian.xx[i];
    const double g12 = a.hessian.xy[i];
    const double g22 = 1.0 + a.hessian.yy[i];
    const double det = g11 * g22 - g12 * g12;
    // adj(G) = [[g22, -g12], [-g12, g11]]
    const double p = a.theta.xx[i], q = a.theta.xy[i], r = a.theta.yy[i];
    const double u11 = g22 * p - g12 * q;  // (adj G * Theta) row 1
    const double u12 = g22 * q - g12 * r;
    const double u21 = g11 * q - g12 * p;  // row 2
    const double u22 = g11 * r - g12 * q;
    const double inv_det2 = 1.0 / (det * det);
    const double s = a.rho[i] / det;
    a.cxx[i] = (u11 * g22 - u12 * g12) * inv_det2 + s * (g22 / det);
    a.cxy[i] = (u12 * g11 - u11 * g12) * inv_det2 - s * (g12 / det);
    a.cyy[i] = (u22 * g11 - u21 * g12) * inv_det2 + s * (g11 / det);
  }
}

void contract_scalar(const ContractArgs& a) {
  for (std::size_t i = 0; i < a.count; ++i) {
    const double cross = a.coeff.xy[i] * a.hessian.xy[i];
    a.out[i] = a.coeff.xx[i] * a.hessian.xx[i] + (cross + cross) + a.coeff.yy[i] * a.hessian.yy[i];
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{"scalar", &speed_scalar, &coefficients_scalar, &contract_scalar};
  return table;
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("TJFLOW_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace tjflow::kernels
