#pragma once

#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "casimir_wn/algebra.hpp"
#include "casimir_wn/model.hpp"
#include "casimir_wn/ode.hpp"

namespace casimir_wn {

using Alpha = Eigen::Matrix<cd, 11, 1>;

/// Structure matrix of the product-form evolution operator: column j holds
/// the generator-basis expansion of Q1...Q_{j-1} X_j Q_{j-1}^{-1}...Q1^{-1}
/// evaluated in closed form. Only alpha_1..alpha_7 enter; the matrix is unit
/// lower-triangular-like with exponential blocks in columns 8..10.
inline Eigen::Matrix<cd, 11, 11> assemble_M(const Alpha& a) {
  for (int i = 0; i < 11; ++i)
    if (!std::isfinite(a[i].real()) || !std::isfinite(a[i].imag()))
      throw std::invalid_argument("assemble_M: non-finite alpha component");
  const cd a1 = a[0], a2 = a[1], a3 = a[2], a4 = a[3], a5 = a[4];
  const cd E6 = std::exp(-2.0 * a[5]);
  const cd E7 = std::exp(-2.0 * a[6]);
  const cd E67 = std::exp(-(a[5] + a[6]));
  Eigen::Matrix<cd, 11, 11> M;
  M.setZero();
  M(0, 0) = 1.0;
  M(0, 3) = -a3;
  M(0, 4) = a3 * a4 * a4 - 2.0 * a1 * a4;
  M(0, 5) = a3 * a5 * a4 * a4 + a3 * a4 - 2.0 * a1 * a5 * a4 - 2.0 * a1;
  M(0, 6) = -a3 * a5 * a4 * a4 - a3 * a4 + 2.0 * a1 * a5 * a4;
  M(0, 7) = E6 * (4.0 * a1 * a1 - 4.0 * a3 * a4 * a1 + a3 * a3 * a4 * a4);
  M(0, 8) = E7 * (a3 * a3 + a4 * a4 * a5 * a5 * a3 * a3 +
                  2.0 * a4 * a5 * a3 * a3 - 4.0 * a1 * a4 * a5 * a5 * a3 -
                  4.0 * a1 * a5 * a3 + 4.0 * a1 * a1 * a5 * a5);
  M(0, 9) = E67 * (2.0 * a3 * a1 - 4.0 * a5 * a1 * a1 - a3 * a3 * a4 -
                   a3 * a3 * a4 * a4 * a5 + 4.0 * a3 * a4 * a5 * a1);
  M(1, 1) = 1.0;
  M(1, 4) = 2.0 * a2 * a4 - a3;
  M(1, 5) = 2.0 * a2 * a4 * a5 - a3 * a5;
  M(1, 6) = -2.0 * a4 * a5 * a2 - 2.0 * a2 + a3 * a5;
  M(1, 7) = E6 * (a3 * a3 - 4.0 * a2 * a4 * a3 + 4.0 * a2 * a2 * a4 * a4);
  M(1, 8) = E7 * (4.0 * a2 * a2 + 4.0 * a4 * a4 * a5 * a5 * a2 * a2 +
                  8.0 * a4 * a5 * a2 * a2 - 4.0 * a3 * a4 * a5 * a5 * a2 -
                  4.0 * a3 * a5 * a2 + a3 * a3 * a5 * a5);
  M(1, 9) = E67 * (-4.0 * a4 * a2 * a2 - 4.0 * a4 * a4 * a5 * a2 * a2 +
                   2.0 * a3 * a2 + 4.0 * a3 * a4 * a5 * a2 - a3 * a3 * a5);
  M(2, 2) = 1.0;
  M(2, 3) = -2.0 * a2;
  M(2, 4) = 2.0 * a2 * a4 * a4 - 2.0 * a1;
  M(2, 5) = 2.0 * a2 * a5 * a4 * a4 + 2.0 * a2 * a4 - a3 - 2.0 * a1 * a5;
  M(2, 6) = -2.0 * a2 * a5 * a4 * a4 - 2.0 * a2 * a4 - a3 + 2.0 * a1 * a5;
  M(2, 7) = E6 * (-2.0 * a4 * a3 * a3 + 4.0 * a2 * a4 * a4 * a3 +
                  4.0 * a1 * a3 - 8.0 * a1 * a2 * a4);
  M(2, 8) = E7 * (-2.0 * a4 * a5 * a5 * a3 * a3 - 2.0 * a5 * a3 * a3 +
                  4.0 * a2 * a4 * a4 * a5 * a5 * a3 + 4.0 * a1 * a5 * a5 * a3 +
                  4.0 * a2 * a3 + 8.0 * a2 * a4 * a5 * a3 -
                  8.0 * a1 * a2 * a4 * a5 * a5 - 8.0 * a1 * a2 * a5);
  M(2, 9) = E67 * (a3 * a3 + 2.0 * a4 * a5 * a3 * a3 - 4.0 * a2 * a4 * a3 -
                   4.0 * a2 * a4 * a4 * a5 * a3 - 4.0 * a1 * a5 * a3 +
                   4.0 * a1 * a2 + 8.0 * a1 * a2 * a4 * a5);
  M(3, 3) = 1.0;
  M(3, 4) = -a4 * a4;
  M(3, 5) = -(a5 * a4 * a4 + a4);
  M(3, 6) = a5 * a4 * a4 + a4;
  M(3, 7) = E6 * (4.0 * a1 * a4 - 2.0 * a3 * a4 * a4);
  M(3, 8) = E7 * (-2.0 * a3 * a4 * a4 * a5 * a5 + 4.0 * a1 * a4 * a5 * a5 +
                  4.0 * a1 * a5 - 4.0 * a3 * a4 * a5 - 2.0 * a3);
  M(3, 9) = E67 * (2.0 * a3 * a5 * a4 * a4 + 2.0 * a3 * a4 -
                   4.0 * a1 * a5 * a4 - 2.0 * a1);
  M(4, 4) = 1.0;
  M(4, 5) = a5;
  M(4, 6) = -a5;
  M(4, 7) = E6 * (4.0 * a2 * a4 - 2.0 * a3);
  M(4, 8) = E7 * (-2.0 * a3 * a5 * a5 + 4.0 * a2 * a4 * a5 * a5 + 4.0 * a2 * a5);
  M(4, 9) = E67 * (-2.0 * a2 - 4.0 * a4 * a5 * a2 + 2.0 * a3 * a5);
  M(5, 4) = a4;
  M(5, 5) = a4 * a5 + 1.0;
  M(5, 6) = -a4 * a5;
  M(5, 7) = E6 * (2.0 * a3 * a4 - 4.0 * a1);
  M(5, 8) = E7 * (-4.0 * a1 * a5 * a5 + 2.0 * a3 * a4 * a5 * a5 + 2.0 * a3 * a5);
  M(5, 9) = E67 * (-a3 - 2.0 * a4 * a5 * a3 + 4.0 * a1 * a5);
  M(6, 4) = -a4;
  M(6, 5) = -a4 * a5;
  M(6, 6) = a4 * a5 + 1.0;
  M(6, 7) = E6 * (2.0 * a3 * a4 - 4.0 * a2 * a4 * a4);
  M(6, 8) = E7 * (-4.0 * a2 * a4 * a4 * a5 * a5 + 2.0 * a3 * a4 * a5 * a5 +
                  2.0 * a3 * a5 - 8.0 * a2 * a4 * a5 - 4.0 * a2);
  M(6, 9) = E67 * (4.0 * a2 * a5 * a4 * a4 + 4.0 * a2 * a4 -
                   2.0 * a3 * a5 * a4 - a3);
  M(7, 7) = E6;
  M(7, 8) = E7 * a5 * a5;
  M(7, 9) = -E67 * a5;
  M(8, 7) = E6 * a4 * a4;
  M(8, 8) = E7 * (a4 * a4 * a5 * a5 + 2.0 * a4 * a5 + 1.0);
  M(8, 9) = -E67 * (a5 * a4 * a4 + a4);
  M(9, 7) = -2.0 * E6 * a4;
  M(9, 8) = E7 * (-2.0 * a4 * a5 * a5 - 2.0 * a5);
  M(9, 9) = E67 * (2.0 * a4 * a5 + 1.0);
  M(10, 7) = E6 * (-2.0 * a2 * a4 * a4 + 2.0 * a3 * a4 - 2.0 * a1);
  M(10, 8) = E7 * (-2.0 * a2 * a4 * a4 * a5 * a5 - 2.0 * a1 * a5 * a5 +
                   2.0 * a3 * a4 * a5 * a5 + 2.0 * a3 * a5 -
                   4.0 * a2 * a4 * a5 - 2.0 * a2);
  M(10, 9) = E67 * (2.0 * a2 * a5 * a4 * a4 + 2.0 * a2 * a4 -
                    2.0 * a3 * a5 * a4 - a3 + 2.0 * a1 * a5);
  M(10, 10) = 1.0;
  return M;
}

namespace detail {

inline std::vector<cd> to_vector(const Alpha& a) {
  return std::vector<cd>(a.data(), a.data() + 11);
}

}  // namespace detail

/// Right-hand side of M(alpha) dalpha/dt = -i f(t). Solved by partial-pivot
/// LU with a reciprocal-condition gate and iterative refinement so the
/// solve's residual stays at roundoff level relative to the data.
inline Alpha alpha_rhs(const CavityModel& model, double t, const Alpha& alpha,
                       double* condition = nullptr) {
  const Eigen::Matrix<cd, 11, 11> M = assemble_M(alpha);
  const Alpha f = model.f_vector(t);
  const Alpha b = cd(0.0, -1.0) * f;

  Eigen::PartialPivLU<Eigen::Matrix<cd, 11, 11>> lu(M);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    std::ostringstream os;
    os << "structure matrix lost invertibility at t = " << t
       << " (rcond = " << rcond << ")";
    throw SingularStructureMatrix(t, detail::to_vector(alpha),
                                  rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity(),
                                  os.str());
  }
  if (condition) *condition = 1.0 / rcond;

  Alpha x = lu.solve(b);
  const double bound = 1e-12 * b.cwiseAbs().maxCoeff();
  for (int pass = 0; pass < 3; ++pass) {
    const Alpha r = b - M * x;
    if (r.cwiseAbs().maxCoeff() <= bound) return x;
    x += lu.solve(r);
  }
  const double res = (b - M * x).cwiseAbs().maxCoeff();
  if (res > bound) {
    std::ostringstream os;
    os << "structure system residual " << res << " exceeds " << bound
       << " at t = " << t;
    throw SingularStructureMatrix(t, detail::to_vector(alpha), 1.0 / rcond,
                                  os.str());
  }
  return x;
}

struct IntegrationDiagnostics {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long stage_retries = 0;
  long rhs_calls = 0;
  double min_step = std::numeric_limits<double>::infinity();
  double max_condition = 0.0;
};

struct AlphaTrajectory {
  std::vector<double> times;
  std::vector<Alpha> states;
  IntegrationDiagnostics diag;
};

/// Uniform output grid; the endpoint is landed exactly.
inline std::vector<double> uniform_grid(double t0, double t1, int samples) {
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (samples == 1) {
    if (t1 != t0) throw ConfigError("samples must be >= 2 when t_end > t_start");
    return {t0};
  }
  std::vector<double> g(samples);
  for (int i = 0; i < samples; ++i)
    g[i] = t0 + double(i) * (t1 - t0) / double(samples - 1);
  g.back() = t1;
  return g;
}

/// Evolve the factorization parameters from alpha = 0 across the grid.
inline AlphaTrajectory integrate(const CavityModel& model,
                                 const std::vector<double>& grid, double rtol,
                                 double atol) {
  if (grid.empty()) throw ConfigError("output grid is empty");
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw ConfigError("output grid must be nondecreasing");

  AlphaTrajectory traj;
  traj.times = grid;

  double max_cond = 0.0;
  auto rhs = [&](double t, const Alpha& a, Alpha& dadt) {
    double c = 0.0;
    dadt = alpha_rhs(model, t, a, &c);
    max_cond = std::max(max_cond, c);
  };

  ode::Options opt;
  opt.rtol = rtol;
  opt.atol = atol;
  const Alpha a0 = Alpha::Zero();
  const ode::Stats st = ode::integrate_grid(rhs, grid, a0, traj.states, opt);

  traj.diag.steps_accepted = st.steps_accepted;
  traj.diag.steps_rejected = st.steps_rejected;
  traj.diag.stage_retries = st.stage_retries;
  traj.diag.rhs_calls = st.rhs_calls;
  traj.diag.min_step = st.min_step;
  traj.diag.max_condition = max_cond;
  return traj;
}

/// Uniform draw from the complex disk of the given radius, one per
/// component; used by the self-check paths that compare assemble_M against
/// the Fock-space construction.
inline Alpha random_alpha(std::mt19937_64& rng, double radius) {
  auto uniform = [&rng]() {
    return double(rng() >> 11) * 0x1.0p-53;  // [0,1) with 53 random bits
  };
  Alpha a;
  for (int i = 0; i < 11; ++i) {
    const double r = radius * std::sqrt(uniform());
    const double th = 2.0 * std::numbers::pi * uniform();
    a[i] = cd(r * std::cos(th), r * std::sin(th));
  }
  return a;
}

}  // namespace casimir_wn
