#pragma once

// Pointwise grid kernels for complex dimension 2, where every (1,1)-form is a
// field of symmetric 2x2 matrices stored as three planes (11, 12, 22).
//
// Each kernel has a scalar reference implementation and an AVX2 variant. The
// variants perform the same IEEE operations in the same order (no FMA), so
// their outputs agree bit for bit. The active table is chosen once at runtime
// from CPU support; TJFLOW_SIMD=scalar forces the reference path.

#include <cstddef>

namespace tjflow::kernels {

struct SymPlanes {
  const double* xx;
  const double* xy;
  const double* yy;
};

/// speed[i] = psi[i] - tr(G^{-1} Theta) - rho[i] / det G with G = I + H.
/// Writes det G into det[i]. Returns the smallest eigenvalue of G seen.
struct SpeedArgs {
  std::size_t count;
  SymPlanes hessian;
  SymPlanes theta;
  const double* psi;
  const double* rho;
  double* speed;
  double* det;
};

/// Coefficients of the linearised operator at G = I + H:
/// C = G^{-1} Theta G^{-1} + (rho / det G) G^{-1}.
struct CoefficientArgs {
  std::size_t count;
  SymPlanes hessian;
  SymPlanes theta;
  const double* rho;
  double* cxx;
  double* cxy;
  double* cyy;
};

/// out[i] = Cxx Hxx + 2 Cxy Hxy + Cyy Hyy.
struct ContractArgs {
  std::size_t count;
  SymPlanes coeff;
  SymPlanes hessian;
  double* out;
};

struct KernelTable {
  const char* name;
  double (*speed)(const SpeedArgs&);
  void (*coefficients)(const CoefficientArgs&);
  void (*contract)(const ContractArgs&);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table() noexcept;
/// The table selected for this process.
const KernelTable& active() noexcept;

}  // namespace tjflow::kernels
