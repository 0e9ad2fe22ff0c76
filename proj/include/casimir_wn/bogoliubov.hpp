#pragma once

#include "casimir_wn/weinorman.hpp"

namespace casimir_wn {

using TransferMatrix = Eigen::Matrix<cd, 4, 4>;

/// Heisenberg-picture mixing of the mode operators: row order
/// (a1, a1+, a2, a2+) at time t expanded over the same operators at t = 0.
inline TransferMatrix transfer_matrix(const Alpha& a) {
  for (int i = 0; i < 11; ++i)
    if (!std::isfinite(a[i].real()) || !std::isfinite(a[i].imag()))
      throw std::invalid_argument("transfer_matrix: non-finite alpha component");
  const cd a1 = a[0], a2 = a[1], a3 = a[2], a4 = a[3], a5 = a[4];
  const cd a8 = a[7], a9 = a[8], a10 = a[9];
  const cd em6 = std::exp(-a[5]);
  const cd ep6 = std::exp(a[5]);
  const cd em7 = std::exp(-a[6]);
  const cd ep7 = std::exp(a[6]);
  const cd g1 = 2.0 * a1 - a3 * a4;              // recurring mode-1 block
  const cd g3 = a3 - 2.0 * a1 * a5 + a3 * a4 * a5;
  const cd g2 = a3 - 2.0 * a2 * a4;
  const cd g4 = 2.0 * a2 - a3 * a5 + 2.0 * a2 * a4 * a5;
  const cd w = 1.0 + a4 * a5;

  TransferMatrix t;
  t(0, 0) = ep6 * w - 2.0 * em6 * g1 * a8 - em7 * g3 * a10;
  t(0, 1) = em6 * g1;
  t(0, 2) = ep7 * a4 - 2.0 * em7 * g3 * a9 - em6 * g1 * a10;
  t(0, 3) = em7 * g3;
  t(1, 0) = -2.0 * a8 * em6 + a5 * a10 * em7;
  t(1, 1) = em6;
  t(1, 2) = 2.0 * em7 * a5 * a9 - em6 * a10;
  t(1, 3) = -em7 * a5;
  t(2, 0) = ep6 * a5 - 2.0 * em6 * g2 * a8 - em7 * g4 * a10;
  t(2, 1) = em6 * g2;
  t(2, 2) = ep7 - 2.0 * em7 * g4 * a9 - em6 * g2 * a10;
  t(2, 3) = em7 * g4;
  t(3, 0) = 2.0 * em6 * a4 * a8 - em7 * w * a10;
  t(3, 1) = -em6 * a4;
  t(3, 2) = -2.0 * em7 * w * a9 + em6 * a4 * a10;
  t(3, 3) = em7 * w;
  return t;
}

/// Largest deviation from the conjugation pattern tying the two rows of each
/// mode pair: the (a+) rows must be entrywise conjugates of the (a) rows
/// with creation/annihilation columns swapped.
inline double unitarity_residual(const TransferMatrix& t) {
  constexpr int pairs[8][4] = {{0, 0, 1, 1}, {0, 1, 1, 0}, {0, 2, 1, 3},
                               {0, 3, 1, 2}, {2, 0, 3, 1}, {2, 1, 3, 0},
                               {2, 2, 3, 3}, {2, 3, 3, 2}};
  double worst = 0.0;
  for (const auto& p : pairs)
    worst = std::max(worst,
                     std::abs(t(p[0], p[1]) - std::conj(t(p[2], p[3]))));
  return worst;
}

/// Largest deviation of the symplectic bilinears from their canonical
/// values (1, 1, 0, 0): evolved commutators [a1,a1+], [a2,a2+], [a1,a2],
/// [a1,a2+] expressed through the transfer matrix.
inline double ccr_residual(const TransferMatrix& t) {
  const cd b1 = t(0, 0) * t(1, 1) - t(0, 1) * t(1, 0) + t(0, 2) * t(1, 3) -
                t(0, 3) * t(1, 2);
  const cd b2 = t(2, 0) * t(3, 1) - t(2, 1) * t(3, 0) + t(2, 2) * t(3, 3) -
                t(2, 3) * t(3, 2);
  const cd x1 = t(0, 0) * t(2, 1) - t(0, 1) * t(2, 0) + t(0, 2) * t(2, 3) -
                t(0, 3) * t(2, 2);
  const cd x2 = t(0, 0) * t(3, 1) - t(0, 1) * t(3, 0) + t(0, 2) * t(3, 3) -
                t(0, 3) * t(3, 2);
  return std::max(std::max(std::abs(b1 - 1.0), std::abs(b2 - 1.0)),
                  std::max(std::abs(x1), std::abs(x2)));
}

}  // namespace casimir_wn
