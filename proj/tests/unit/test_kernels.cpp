#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include <Eigen/Dense>

#include "tjflow/geometry.hpp"
#include "tjflow/j_operator.hpp"
#include "tjflow/kernels.hpp"
#include "tjflow/random.hpp"

using namespace tjflow;
using namespace tjflow::kernels;

namespace {

struct Planes {
  std::vector<double> xx, xy, yy;
  explicit Planes(std::size_t n) : xx(n), xy(n), yy(n) {}
  SymPlanes view() const { return {xx.data(), xy.data(), yy.data()}; }
};

struct Inputs {
  Planes h, t;
  std::vector<double> psi, rho;
  explicit Inputs(std::size_t n) : h(n), t(n), psi(n), rho(n) {}
};

Inputs random_inputs(Rng& rng, std::size_t n) {
  Inputs in(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd g = random_spd(rng, 2, 0.05, 4.0);
    in.h.xx[i] = g(0, 0) - 1.0;
    in.h.xy[i] = g(0, 1);
    in.h.yy[i] = g(1, 1) - 1.0;
    const Eigen::MatrixXd th = random_spd(rng, 2, 0.0, 2.0);
    in.t.xx[i] = th(0, 0);
    in.t.xy[i] = th(0, 1);
    in.t.yy[i] = th(1, 1);
    in.psi[i] = rng.uniform(0.5, 3.0);
    in.rho[i] = rng.uniform(0.0, 1.0);
  }
  return in;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar kernels match a direct matrix evaluation") {
  Rng rng(41);
  const std::size_t n = 257;
  Inputs in = random_inputs(rng, n);
  std::vector<double> speed(n), det(n), cxx(n), cxy(n), cyy(n);
  const KernelTable& s = scalar_table();
  const double min_eig = s.speed({n, in.h.view(), in.t.view(), in.psi.data(), in.rho.data(),
                                  speed.data(), det.data()});
  s.coefficients({n, in.h.view(), in.t.view(), in.rho.data(), cxx.data(), cxy.data(), cyy.data()});
  double ref_min = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Matrix2d G, T;
    G << 1.0 + in.h.xx[i], in.h.xy[i], in.h.xy[i], 1.0 + in.h.yy[i];
    T << in.t.xx[i], in.t.xy[i], in.t.xy[i], in.t.yy[i];
    const Eigen::Matrix2d Gi = G.inverse();
    const double d = G.determinant();
    const double ref = in.psi[i] - (Gi * T).trace() - in.rho[i] / d;
    CHECK(std::abs(speed[i] - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    CHECK(std::abs(det[i] - d) <= 1e-13 * d);
    const Eigen::Matrix2d C = Gi * T * Gi + (in.rho[i] / d) * Gi;
    const double scale = 1.0 + C.norm();
    CHECK(std::abs(cxx[i] - C(0, 0)) <= 1e-12 * scale);
    CHECK(std::abs(cxy[i] - C(0, 1)) <= 1e-12 * scale);
    CHECK(std::abs(cyy[i] - C(1, 1)) <= 1e-12 * scale);
    ref_min = std::min(ref_min, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(G).eigenvalues()(0));
  }
  CHECK(std::abs(min_eig - ref_min) < 1e-12);
}

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
  const KernelTable* v = avx2_table();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  Rng rng(42);
  for (std::size_t n : {1u, 3u, 4u, 5u, 7u, 8u, 31u, 64u, 1001u}) {
    Inputs in = random_inputs(rng, n);
    // a few points outside the cone
    if (n > 4) in.h.xx[2] = -1.5;
    std::vector<double> s1(n), d1(n), s2(n), d2(n);
    const double m1 = scalar_table().speed(
        {n, in.h.view(), in.t.view(), in.psi.data(), in.rho.data(), s1.data(), d1.data()});
    const double m2 =
        v->speed({n, in.h.view(), in.t.view(), in.psi.data(), in.rho.data(), s2.data(), d2.data()});
    CHECK(std::memcmp(&m1, &m2, sizeof m1) == 0);
    CHECK(same_bits(s1, s2));
    CHECK(same_bits(d1, d2));

    Planes c1(n), c2(n);
    scalar_table().coefficients(
        {n, in.h.view(), in.t.view(), in.rho.data(), c1.xx.data(), c1.xy.data(), c1.yy.data()});
    v->coefficients(
        {n, in.h.view(), in.t.view(), in.rho.data(), c2.xx.data(), c2.xy.data(), c2.yy.data()});
    CHECK(same_bits(c1.xx, c2.xx));
    CHECK(same_bits(c1.xy, c2.xy));
    CHECK(same_bits(c1.yy, c2.yy));

    std::vector<double> o1(n), o2(n);
    scalar_table().contract({n, c1.view(), in.h.view(), o1.data()});
    v->contract({n, c1.view(), in.h.view(), o2.data()});
    CHECK(same_bits(o1, o2));
  }
}

TEST_CASE("active table is one of the two") {
  const KernelTable& a = active();
  CHECK((&a == &scalar_table() || &a == avx2_table()));
}

TEST_CASE("three-dimensional path reduces to the planar kernel") {
  const int N = 16;
  Grid g2(2, N), g3(3, N);
  Rng rng(43);
  const PotentialField u2 = random_potential(g2, rng, 0.5);
  ThetaSpec ts{random_spd(rng, 2, 0.3, 1.5), random_potential(g2, rng, 0.2), std::nullopt};
  const FormField th2 = ts.realize();
  const double t3 = 0.7, beta = 0.4, c2 = 2.1;

  PotentialField u3(g3);
  FormField th3(g3);
  for (std::size_t i = 0; i < g3.size(); ++i) {
    const std::size_t p = i / N;  // drop the fastest (third) axis
    u3[i] = u2[p];
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m.topLeftCorner(2, 2) = th2.at(p);
    m(2, 2) = t3;
    th3.set(i, m);
  }
  const JOperator op2 = JOperator::twisted(th2, c2, beta);
  const JOperator op3 = JOperator::twisted(th3, c2 + t3, beta);
  OperatorEvaluation e2(g2), e3(g3);
  op2.evaluate(u2.values(), e2);
  op3.evaluate(u3.values(), e3);
  double err = 0.0;
  for (std::size_t i = 0; i < g3.size(); ++i) {
    err = std::max(err, std::abs(e3.value[i] - e2.value[i / N]));
    CHECK(std::abs(e3.det[i] - e2.det[i / N]) < 1e-12);
  }
  CHECK(err < 1e-12);
  CHECK(std::abs(e3.min_eigenvalue - e2.min_eigenvalue) < 1e-12);
}

TEST_CASE("linearization matches central differences") {
  Rng rng(44);
  for (int n : {2, 3}) {
    Grid g(n, n == 2 ? 32 : 10);
    const PotentialField u = random_potential(g, rng, 0.4);
    const PotentialField d = random_potential(g, rng, 0.3);
    ThetaSpec ts{random_spd(rng, n, 0.3, 1.5), PotentialField(g), std::nullopt};
    const JOperator op = JOperator::twisted(ts.realize(), 3.0, 0.6);
    OperatorEvaluation e0(g), ep(g), em(g);
    op.evaluate(u.values(), e0);
    const double s = 1e-5;
    op.evaluate((u + s * d).values(), ep);
    op.evaluate((u - s * d).values(), em);
    FormField coeff(g), scratch(g);
    op.coefficients(e0.hessian, coeff);
    std::vector<double> lin(g.size());
    op.apply_linearization(coeff, d.values(), scratch, lin);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double fd = (ep.value[i] - em.value[i]) / (2 * s);
      err = std::max(err, std::abs(fd - lin[i]));
      scale = std::max(scale, std::abs(lin[i]));
    }
    CHECK(err < 1e-7 * std::max(1.0, scale));
  }
}

TEST_CASE("linearization coefficients are positive definite") {
  Rng rng(45);
  Grid g(2, 16);
  const PotentialField u = random_potential(g, rng, 0.7);
  ThetaSpec ts{random_spd(rng, 2, 0.05, 1.0), PotentialField(g), std::nullopt};
  const JOperator op = JOperator::twisted(ts.realize(), 2.0, 0.0);
  OperatorEvaluation e(g);
  op.evaluate(u.values(), e);
  FormField coeff(g);
  op.coefficients(e.hessian, coeff);
  CHECK(coeff.min_eigenvalue().value > 0.0);
}
