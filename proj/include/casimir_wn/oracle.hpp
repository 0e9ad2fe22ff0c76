#pragma once

#include <limits>

#include "casimir_wn/model.hpp"
#include "casimir_wn/observables.hpp"

namespace casimir_wn {
namespace oracle {

/// Two-mode Fock state truncated to occupations 0..cutoff-1 per mode,
/// amplitudes in lexicographic (n1, n2) order.
struct FockStateVector {
  int cutoff = 0;
  Eigen::VectorXcd amplitudes;
};

struct OracleDiagnostics {
  double norm_drift = 0.0;   // max | ||psi|| - 1 | seen
  double leakage = 0.0;      // max outer-two-shell population seen
  long step_count = 0;
  bool leakage_flagged = false;  // leakage crossed the comparison threshold
};

/// Population threshold above which truncation contamination invalidates
/// comparisons against the exact pipeline.
inline constexpr double kLeakageThreshold = 1e-6;

namespace detail {

inline SparseOp ladder(int mode, int cutoff) {
  const int C = cutoff;
  std::vector<Eigen::Triplet<cd>> trip;
  trip.reserve(size_t(C) * C);
  for (int n1 = 0; n1 < C; ++n1)
    for (int n2 = 0; n2 < C; ++n2) {
      if (mode == 1 && n1 > 0)
        trip.emplace_back((n1 - 1) * C + n2, n1 * C + n2, cd(std::sqrt(double(n1)), 0.0));
      if (mode == 2 && n2 > 0)
        trip.emplace_back(n1 * C + (n2 - 1), n1 * C + n2, cd(std::sqrt(double(n2)), 0.0));
    }
  SparseOp a(C * C, C * C);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

/// Fraction of the state in the two outermost occupation shells of either
/// mode: the contamination front of quadratic operators under truncation.
inline double shell_leakage(const Eigen::VectorXcd& v, int cutoff) {
  const int C = cutoff;
  double leak = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const int n1 = i / C;
    const int n2 = i % C;
    if (n1 >= C - 2 || n2 >= C - 2) leak += std::norm(v[i]);
  }
  return leak;
}

}  // namespace detail

/// Effective Hamiltonian of the driven cavity assembled term by term from
/// the Fock matrices: mode energies, single-mode squeezing, and the
/// intermode coupling, all weighted by the instantaneous trajectory.
inline SparseOp build_hamiltonian(const CavityParams& p, double t, int cutoff) {
  if (cutoff < 4) throw std::invalid_argument("oracle cutoff must be >= 4");
  const CavityModel model(p);
  const double w1 = model.mode_frequency(1, t);
  const double w2 = model.mode_frequency(2, t);
  const double eta = model.modulation_rate(t);
  const double m12 = model.mu12();
  const double m21 = model.mu21();
  const cd i4(0.0, 0.25 * eta);
  const cd i2(0.0, 0.5 * eta);

  SparseOp H = cd(w1, 0.0) * fock_matrix(6, cutoff) +
               cd(w2, 0.0) * fock_matrix(7, cutoff);
  if (eta != 0.0) {
    H += i4 * (fock_matrix(1, cutoff) + fock_matrix(2, cutoff) -
               fock_matrix(8, cutoff) - fock_matrix(9, cutoff));
    // sum over ordered mode pairs (j,k): mu_jk (ak+ aj+ + ak+ aj - ak aj+ - ak aj)
    H += i2 * (cd(m12 + m21, 0.0) * (fock_matrix(3, cutoff) - fock_matrix(10, cutoff)) +
               cd(m12 - m21, 0.0) * (fock_matrix(5, cutoff) - fock_matrix(4, cutoff)));
  }
  return H;
}

struct EvolveResult {
  std::vector<FockStateVector> states;  // one per reached grid point
  std::vector<double> norms;
  std::vector<double> leakages;
  OracleDiagnostics diag;
};

/// Fixed-step RK4 Schroedinger evolution from |0,0> across the grid. The
/// step is tied to a global bound on ||H||; stop_leakage lets callers end
/// the run once truncation contamination passes their threshold.
inline EvolveResult evolve(const CavityParams& p,
                           const std::vector<double>& grid, int cutoff,
                           double dt_max,
                           double stop_leakage = std::numeric_limits<double>::infinity()) {
  if (cutoff < 4) throw std::invalid_argument("oracle cutoff must be >= 4");
  if (grid.empty()) throw std::invalid_argument("oracle grid is empty");
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1])
      throw std::invalid_argument("oracle grid must be nondecreasing");
  if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");

  const CavityModel model(p);
  const int C = cutoff;
  const int dim = C * C;

  // time-independent pieces; only scalar weights change along the run
  Eigen::VectorXd d1(dim), d2(dim);
  for (int i = 0; i < dim; ++i) {
    d1[i] = double(i / C);
    d2[i] = double(i % C);
  }
  const double m12 = model.mu12();
  const double m21 = model.mu21();
  SparseOp Cop = cd(0.0, 0.25) * (fock_matrix(1, C) + fock_matrix(2, C) -
                                  fock_matrix(8, C) - fock_matrix(9, C));
  Cop += cd(0.0, 0.5) *
         (cd(m12 + m21, 0.0) * (fock_matrix(3, C) - fock_matrix(10, C)) +
          cd(m12 - m21, 0.0) * (fock_matrix(5, C) - fock_matrix(4, C)));

  // global step from worst-case operator norms over the whole run
  const double wmax = std::exp(p.q0 / p.L) * std::numbers::pi / p.L;
  double cnorm = 0.0;
  {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(dim);
    for (int outer = 0; outer < Cop.outerSize(); ++outer)
      for (SparseOp::InnerIterator it(Cop, outer); it; ++it)
        rowsum[it.row()] += std::abs(it.value());
    cnorm = rowsum.maxCoeff();
  }
  const double eta_max = p.q0 * p.omega_d / p.L;
  const double h_norm = wmax * double(C - 1) + 2.0 * wmax * double(C - 1) +
                        eta_max * cnorm;
  const double dt = std::min(dt_max, 0.05 / std::max(h_norm, 1e-300));

  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim);
  y[0] = cd(1.0, 0.0);

  Eigen::VectorXcd k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  auto deriv = [&](double t, const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
    const double w1 = model.mode_frequency(1, t);
    const double w2 = model.mode_frequency(2, t);
    const double eta = model.modulation_rate(t);
    out = eta * (Cop * v);
    out.array() += (w1 * d1.array() + w2 * d2.array()) * v.array();
    out *= cd(0.0, -1.0);
  };

  EvolveResult res;
  res.states.reserve(grid.size());

  auto snapshot = [&](double t) -> bool {  // returns false to stop the run
    const double norm = y.norm();
    const double drift = std::abs(norm - 1.0);
    const double leak = detail::shell_leakage(y, C);
    res.states.push_back({C, y});
    res.norms.push_back(norm);
    res.leakages.push_back(leak);
    res.diag.norm_drift = std::max(res.diag.norm_drift, drift);
    res.diag.leakage = std::max(res.diag.leakage, leak);
    if (leak >= kLeakageThreshold) res.diag.leakage_flagged = true;
    if (drift > 1e-4)
      throw OracleDivergence(t, drift,
                             "reference evolution norm drifted beyond budget");
    return leak < stop_leakage;
  };

  if (!snapshot(grid.front())) return res;

  for (size_t gi = 1; gi < grid.size(); ++gi) {
    const double t0 = grid[gi - 1];
    const double t1 = grid[gi];
    const double span = t1 - t0;
    if (span > 0.0) {
      const long nsub = std::max(1L, long(std::ceil(span / dt)));
      const double h = span / double(nsub);
      for (long s = 0; s < nsub; ++s) {
        const double ts = t0 + double(s) * h;
        deriv(ts, y, k1);
        tmp = y + (0.5 * h) * k1;
        deriv(ts + 0.5 * h, tmp, k2);
        tmp = y + (0.5 * h) * k2;
        deriv(ts + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        deriv(ts + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ++res.diag.step_count;
      }
    }
    if (!snapshot(t1)) break;
  }
  return res;
}

/// Observables as direct state expectations: photon moments, quadrature
/// first and second moments, centered pair correlators, and the invariant.
/// Shares no formula with the transfer-matrix route.
inline ObservableRecord measure(const FockStateVector& psi, double t = 0.0) {
  const int C = psi.cutoff;
  const Eigen::VectorXcd& v = psi.amplitudes;
  const SparseOp a1 = detail::ladder(1, C);
  const SparseOp a2 = detail::ladder(2, C);
  const Eigen::VectorXcd a1v = a1 * v;
  const Eigen::VectorXcd a2v = a2 * v;
  const Eigen::VectorXcd a1a1v = a1 * a1v;
  const Eigen::VectorXcd a2a2v = a2 * a2v;

  const double n1 = a1v.squaredNorm();
  const double n2 = a2v.squaredNorm();
  const cd a1e = v.dot(a1v);
  const cd a2e = v.dot(a2v);
  const cd a1sq = v.dot(a1a1v);
  const cd a2sq = v.dot(a2a2v);

  const double mq1 = std::sqrt(2.0) * a1e.real();
  const double mp1 = std::sqrt(2.0) * a1e.imag();
  const double mq2 = std::sqrt(2.0) * a2e.real();
  const double mp2 = std::sqrt(2.0) * a2e.imag();

  const double q1v = (2.0 * a1sq.real() + 2.0 * n1 + 1.0) / 2.0 - mq1 * mq1;
  const double p1v = (-2.0 * a1sq.real() + 2.0 * n1 + 1.0) / 2.0 - mp1 * mp1;
  const double q2v = (2.0 * a2sq.real() + 2.0 * n2 + 1.0) / 2.0 - mq2 * mq2;
  const double p2v = (-2.0 * a2sq.real() + 2.0 * n2 + 1.0) / 2.0 - mp2 * mp2;

  // <n^2> = ||n psi||^2 since the number operators are diagonal
  Eigen::VectorXcd n1v(v.size()), n2v(v.size());
  for (int i = 0; i < v.size(); ++i) {
    n1v[i] = double(i / C) * v[i];
    n2v[i] = double(i % C) * v[i];
  }
  const double n1sq = n1v.squaredNorm();
  const double n2sq = n2v.squaredNorm();

  const cd sN1 = cd(n1, 0.0) - cd(std::norm(a1e), 0.0);
  const cd sa1 = a1sq - a1e * a1e;
  const cd sN2 = cd(n2, 0.0) - cd(std::norm(a2e), 0.0);
  const cd sa2 = a2sq - a2e * a2e;
  const cd b12 = a1v.dot(a2v) - std::conj(a1e) * a2e;  // <a1+ a2> centered
  const cd b21 = std::conj(b12);
  const cd b11 = v.dot(a1 * a2v) - a1e * a2e;
  const cd D = (sN1 + 0.5) * (sN1 + 0.5) - std::norm(sa1) +
               (sN2 + 0.5) * (sN2 + 0.5) - std::norm(sa2) +
               2.0 * (b12 * b21 - std::norm(b11));

  ObservableRecord r;
  r.t = t;
  r.n1 = n1;
  r.n2 = n2;
  r.dq1 = std::sqrt(q1v);
  r.dp1 = std::sqrt(p1v);
  r.dq2 = std::sqrt(q2v);
  r.dp2 = std::sqrt(p2v);
  r.uncertainty_product1 = r.dq1 * r.dp1;
  r.uncertainty_product2 = r.dq2 * r.dp2;
  if (n1 >= 1e-10) r.mandel_q1 = (n1sq - n1 * n1) / n1;
  if (n2 >= 1e-10) r.mandel_q2 = (n2sq - n2 * n2) / n2;
  r.invariant = D.real();
  return r;
}

}  // namespace oracle
}  // namespace casimir_wn
