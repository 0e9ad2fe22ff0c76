#pragma once

#include <array>
#include <optional>

#include "casimir_wn/bogoliubov.hpp"
#include "casimir_wn/log.hpp"

namespace casimir_wn {

/// One CSV row of simulation output.
struct ObservableRecord {
  double t = 0.0;
  double n1 = 0.0, n2 = 0.0;
  double dq1 = 0.0, dp1 = 0.0, dq2 = 0.0, dp2 = 0.0;
  double uncertainty_product1 = 0.0, uncertainty_product2 = 0.0;
  std::optional<double> mandel_q1, mandel_q2;
  double invariant = 0.0;
  double unitarity_residual = 0.0, ccr_residual = 0.0;
};

namespace detail {

/// Quantities built from the transfer matrix must come out real. The budget
/// covers both cancellation roundoff (grows with the bilinear magnitudes,
/// hence the scale term) and integration phase noise, which on long
/// off-resonant runs reaches a few 1e-10 absolute even though the entries
/// stay O(1). Actual corruption (a wrong conjugation or formula) leaves
/// residues at the scale of the bilinears themselves, decades above this.
inline double require_real(cd z, double scale, const char* what) {
  if (std::abs(z.imag()) > 1e-8 * (1.0 + scale)) {
    std::ostringstream os;
    os << what << " has imaginary residue " << z.imag() << " (scale " << scale
       << ")";
    throw InternalConsistencyError(os.str());
  }
  return z.real();
}

}  // namespace detail

/// Mean photon number of each mode for initial vacuum.
inline std::pair<double, double> photon_numbers(const TransferMatrix& t) {
  const double n1 = std::norm(t(0, 1)) + std::norm(t(0, 3));
  const double n2 = std::norm(t(2, 1)) + std::norm(t(2, 3));
  return {n1, n2};
}

/// Vacuum quadrature standard deviations (dQ1, dP1, dQ2, dP2).
inline std::array<double, 4> quadrature_variances(const TransferMatrix& t) {
  const cd u1 = (t(0, 0) + t(1, 0)) * (t(0, 1) + t(1, 1));
  const cd u2 = (t(0, 2) + t(1, 2)) * (t(0, 3) + t(1, 3));
  const cd v1 = (t(0, 0) - t(1, 0)) * (t(1, 1) - t(0, 1));
  const cd v2 = (t(0, 2) - t(1, 2)) * (t(1, 3) - t(0, 3));
  const cd w1 = (t(2, 0) + t(3, 0)) * (t(2, 1) + t(3, 1));
  const cd w2 = (t(2, 2) + t(3, 2)) * (t(2, 3) + t(3, 3));
  const cd z1 = (t(2, 0) - t(3, 0)) * (t(3, 1) - t(2, 1));
  const cd z2 = (t(2, 2) - t(3, 2)) * (t(3, 3) - t(2, 3));
  const cd var[4] = {(u1 + u2) / 2.0, (v1 + v2) / 2.0, (w1 + w2) / 2.0,
                     (z1 + z2) / 2.0};
  const double scale[4] = {(std::abs(u1) + std::abs(u2)) / 2.0,
                           (std::abs(v1) + std::abs(v2)) / 2.0,
                           (std::abs(w1) + std::abs(w2)) / 2.0,
                           (std::abs(z1) + std::abs(z2)) / 2.0};
  static const char* const names[4] = {"(dQ1)^2", "(dP1)^2", "(dQ2)^2",
                                       "(dP2)^2"};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    double re = detail::require_real(var[i], scale[i], names[i]);
    if (re < -1e-8 * (1.0 + scale[i])) {
      std::ostringstream os;
      os << names[i] << " is negative: " << re;
      throw InternalConsistencyError(os.str());
    }
    out[i] = std::sqrt(std::max(re, 0.0));
  }
  return out;
}

/// Vacuum expectation of the quadrature means: identically zero for any
/// transfer matrix, since every Heisenberg quadrature term carries a single
/// ladder operator.
inline std::array<double, 4> quadrature_means(const TransferMatrix&) {
  return {0.0, 0.0, 0.0, 0.0};
}

/// Mandel parameters; null below the mean-occupation threshold where the
/// defining ratio degenerates to 0/0.
inline std::pair<std::optional<double>, std::optional<double>> mandel_q(
    const TransferMatrix& t) {
  const auto [n1, n2] = photon_numbers(t);
  const double n1sq =
      std::pow(std::norm(t(0, 1)) + std::norm(t(0, 3)), 2) +
      std::norm(t(0, 0) * t(1, 2) + t(0, 2) * t(1, 0)) +
      2.0 * (std::norm(t(0, 0)) * std::norm(t(0, 1)) +
             std::norm(t(0, 3)) * std::norm(t(0, 2)));
  const double n2sq =
      std::pow(std::norm(t(3, 0)) + std::norm(t(3, 2)), 2) +
      std::norm(t(2, 0) * t(3, 2) + t(2, 2) * t(3, 0)) +
      2.0 * (std::norm(t(3, 0)) * std::norm(t(3, 1)) +
             std::norm(t(3, 2)) * std::norm(t(2, 2)));
  std::optional<double> q1, q2;
  if (n1 >= 1e-10) q1 = (n1sq - n1 * n1) / n1;
  if (n2 >= 1e-10) q2 = (n2sq - n2 * n2) / n2;
  return {q1, q2};
}

/// Second-moment invariant of the two-mode Gaussian state; equals 1/2 for
/// any unitary evolution of the vacuum.
inline double universal_invariant(const TransferMatrix& t) {
  const cd sN1 = t(0, 1) * t(1, 0) + t(0, 3) * t(1, 2);
  const cd sa1 = t(0, 0) * t(0, 1) + t(0, 2) * t(0, 3);
  const cd sN2 = t(2, 1) * t(3, 0) + t(2, 3) * t(3, 2);
  const cd sa2 = t(2, 0) * t(2, 1) + t(2, 2) * t(2, 3);
  const cd bar12 = (t(1, 1) * t(2, 0) + t(1, 0) * t(2, 1) +
                    t(1, 3) * t(2, 2) + t(1, 2) * t(2, 3)) /
                   2.0;
  const cd bar21 = (t(0, 1) * t(3, 0) + t(0, 0) * t(3, 1) +
                    t(0, 3) * t(3, 2) + t(0, 2) * t(3, 3)) /
                   2.0;
  const cd bar11 = (t(0, 1) * t(2, 0) + t(0, 0) * t(2, 1) +
                    t(0, 3) * t(2, 2) + t(0, 2) * t(2, 3)) /
                   2.0;
  const cd p1 = (sN1 + 0.5) * (sN1 + 0.5);
  const cd p2 = (sN2 + 0.5) * (sN2 + 0.5);
  const cd val = p1 - std::norm(sa1) + p2 - std::norm(sa2) +
                 2.0 * (bar12 * bar21 - std::norm(bar11));
  const double scale = std::abs(p1) + std::norm(sa1) + std::abs(p2) +
                       std::norm(sa2) +
                       2.0 * (std::abs(bar12 * bar21) + std::norm(bar11));
  return detail::require_real(val, scale, "universal invariant");
}

/// Full output row for one time sample.
inline ObservableRecord make_record(double t, const TransferMatrix& T) {
  ObservableRecord r;
  r.t = t;
  std::tie(r.n1, r.n2) = photon_numbers(T);
  const auto widths = quadrature_variances(T);
  r.dq1 = widths[0];
  r.dp1 = widths[1];
  r.dq2 = widths[2];
  r.dp2 = widths[3];
  r.uncertainty_product1 = r.dq1 * r.dp1;
  r.uncertainty_product2 = r.dq2 * r.dp2;
  std::tie(r.mandel_q1, r.mandel_q2) = mandel_q(T);
  r.invariant = universal_invariant(T);
  r.unitarity_residual = unitarity_residual(T);
  r.ccr_residual = ccr_residual(T);
  const auto means = quadrature_means(T);
  log::debug("t=", t, " quadrature means ", means[0], " ", means[1], " ",
             means[2], " ", means[3]);
  return r;
}

}  // namespace casimir_wn
