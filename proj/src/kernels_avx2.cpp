// Compiled with -mavx2; only entered after a runtime CPU check.

#include <cmath>
#include <limits>

#include "tjflow/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace tjflow::kernels {

#if defined(__AVX2__)

namespace {

constexpr std::size_t kLanes = 4;

double speed_avx2(const SpeedArgs& a) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + kLanes <= a.count; i += kLanes) {
    const __m256d g11 = _mm256_add_pd(one, _mm256_loadu_pd(a.hessian.xx + i));
    const __m256d g12 = _mm256_loadu_pd(a.hessian.xy + i);
    const __m256d g22 = _mm256_add_pd(one, _mm256_loadu_pd(a.hessian.yy + i));
    const __m256d det = _mm256_sub_pd(_mm256_mul_pd(g11, g22), _mm256_mul_pd(g12, g12));
    const __m256d cross = _mm256_mul_pd(g12, _mm256_loadu_pd(a.theta.xy + i));
    const __m256d num =
        _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(g22, _mm256_loadu_pd(a.theta.xx + i)),
                                    _mm256_mul_pd(g11, _mm256_loadu_pd(a.theta.yy + i))),
                      _mm256_add_pd(cross, cross));
    const __m256d tr = _mm256_div_pd(num, det);
    const __m256d speed =
        _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(a.psi + i), tr),
                      _mm256_div_pd(_mm256_loadu_pd(a.rho + i), det));
    _mm256_storeu_pd(a.speed + i, speed);
    _mm256_storeu_pd(a.det + i, det);
    const __m256d m = _mm256_mul_pd(half, _mm256_add_pd(g11, g22));
    const __m256d h = _mm256_mul_pd(half, _mm256_sub_pd(g11, g22));
    const __m256d r =
        _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(h, h), _mm256_mul_pd(g12, g12)));
    vmin = _mm256_min_pd(_mm256_sub_pd(m, r), vmin);
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, vmin);
  double min_eig = lanes[0];
  for (std::size_t l = 1; l < kLanes; ++l) min_eig = lanes[l] < min_eig ? lanes[l] : min_eig;

  if (i < a.count) {
    SpeedArgs tail = a;
    tail.count = a.count - i;
    tail.hessian = {a.hessian.xx + i, a.hessian.xy + i, a.hessian.yy + i};
    tail.theta = {a.theta.xx + i, a.theta.xy + i, a.theta.yy + i};
    tail.psi = a.psi + i;
    tail.rho = a.rho + i;
    tail.speed = a.speed + i;
    tail.det = a.det + i;
    const double t = scalar_table().speed(tail);
    min_eig = t < min_eig ? t : min_eig;
  }
  return min_eig;
}

void coefficients_avx2(const CoefficientArgs& a) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= a.count; i += kLanes) {
    const __m256d g11 = _mm256_add_pd(one, _mm256_loadu_pd(a.hessian.xx + i));
    const __m256d g12 = _mm256_loadu_pd(a.hessian.xy + i);
    const __m256d g22 = _mm256_add_pd(one, _mm256_loadu_pd(a.hessian.yy + i));
    const __m256d det = _mm256_sub_pd(_mm256_mul_pd(g11, g22), _mm256_mul_pd(g12, g12));
    const __m256d p = _mm256_loadu_pd(a.theta.xx + i);
    const __m256d q = _mm256_loadu_pd(a.theta.xy + i);
    const __m256d r = _mm256_loadu_pd(a.theta.yy + i);
    const __m256d u11 = _mm256_sub_pd(_mm256_mul_pd(g22, p), _mm256_mul_pd(g12, q));
    const __m256d u12 = _mm256_sub_pd(_mm256_mul_pd(g22, q), _mm256_mul_pd(g12, r));
    const __m256d u21 = _mm256_sub_pd(_mm256_mul_pd(g11, q), _mm256_mul_pd(g12, p));
    const __m256d u22 = _mm256_sub_pd(_mm256_mul_pd(g11, r), _mm256_mul_pd(g12, q));
    const __m256d inv_det2 = _mm256_div_pd(one, _mm256_mul_pd(det, det));
    const __m256d s = _mm256_div_pd(_mm256_loadu_pd(a.rho + i), det);
    const __m256d cxx = _mm256_add_pd(
        _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(u11, g22), _mm256_mul_pd(u12, g12)), inv_det2),
        _mm256_mul_pd(s, _mm256_div_pd(g22, det)));
    const __m256d cxy = _mm256_sub_pd(
        _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(u12, g11), _mm256_mul_pd(u11, g12)), inv_det2),
        _mm256_mul_pd(s, _mm256_div_pd(g12, det)));
    const __m256d cyy = _mm256_add_pd(
        _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(u22, g11), _mm256_mul_pd(u21, g12)), inv_det2),
        _mm256_mul_pd(s, _mm256_div_pd(g11, det)));
    _mm256_storeu_pd(a.cxx + i, cxx);
    _mm256_storeu_pd(a.cxy + i, cxy);
    _mm256_storeu_pd(a.cyy + i, cyy);
  }
  if (i < a.count) {
    CoefficientArgs tail = a;
    tail.count = a.count - i;
    tail.hessian = {a.hessian.xx + i, a.hessian.xy + i, a.hessian.yy + i};
    tail.theta = {a.theta.xx + i, a.theta.xy + i, a.theta.yy + i};
    tail.rho = a.rho + i;
    tail.cxx = a.cxx + i;
    tail.cxy = a.cxy + i;
    tail.cyy = a.cyy + i;
    scalar_table().coefficients(tail);
  }
}

void contract_avx2(const ContractArgs& a) {
  std::size_t i = 0;
  for (; i + kLanes <= a.count; i += kLanes) {
    const __m256d cross =
        _mm256_mul_pd(_mm256_loadu_pd(a.coeff.xy + i), _mm256_loadu_pd(a.hessian.xy + i));
    const __m256d v = _mm256_add_pd(
        _mm256_add_pd(
            _mm256_mul_pd(_mm256_loadu_pd(a.coeff.xx + i), _mm256_loadu_pd(a.hessian.xx + i)),
            _mm256_add_pd(cross, cross)),
        _mm256_mul_pd(_mm256_loadu_pd(a.coeff.yy + i), _mm256_loadu_pd(a.hessian.yy + i)));
    _mm256_storeu_pd(a.out + i, v);
  }
  if (i < a.count) {
    ContractArgs tail = a;
    tail.count = a.count - i;
    tail.coeff = {a.coeff.xx + i, a.coeff.xy + i, a.coeff.yy + i};
    tail.hessian = {a.hessian.xx + i, a.hessian.xy + i, a.hessian.yy + i};
    tail.out = a.out + i;
    scalar_table().contract(tail);
  }
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable table{"avx2", &speed_avx2, &coefficients_avx2, &contract_avx2};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() noexcept { return nullptr; }

#endif

}  // namespace tjflow::kernels
