#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <vector>

#include "casimir_wn/errors.hpp"

namespace casimir_wn {

using cd = std::complex<double>;

/// Generators are labeled 1..11 throughout:
///   1: a1+^2   2: a2+^2   3: a1+ a2+   4: a1+ a2   5: a1 a2+
///   6: n1      7: n2      8: a1^2      9: a2^2    10: a1 a2   11: id
inline constexpr int kGenerators = 11;

/// Hermitian-adjoint partner of each generator (pair[j-1] is the label whose
/// Fock matrix is the conjugate transpose of generator j's).
inline constexpr std::array<int, 11> kAdjointPair = {8, 9, 10, 5, 4, 6,
                                                     7, 1, 2, 3,  11};

/// Generators whose Fock matrices are diagonal.
inline constexpr bool is_diagonal_generator(int g) {
  return g == 6 || g == 7 || g == 11;
}

namespace detail {

/// c[a][b][k] with 0-based indices: [X_{a+1}, X_{b+1}] = sum_k c[a][b][k] X_{k+1}.
/// All constants are small integers; the table is filled for a<b and closed
/// under antisymmetry.
inline const std::array<std::array<std::array<int, 11>, 11>, 11>&
structure_table() {
  static const auto table = [] {
    std::array<std::array<std::array<int, 11>, 11>, 11> c{};
    auto put = [&c](int a, int b, std::initializer_list<std::pair<int, int>> terms) {
      for (auto [k, v] : terms) {
        c[a - 1][b - 1][k - 1] = v;
        c[b - 1][a - 1][k - 1] = -v;
      }
    };
    put(1, 5, {{3, -2}});
    put(1, 6, {{1, -2}});
    put(1, 8, {{6, -4}, {11, -2}});
    put(1, 10, {{4, -2}});
    put(2, 4, {{3, -2}});
    put(2, 7, {{2, -2}});
    put(2, 9, {{7, -4}, {11, -2}});
    put(2, 10, {{5, -2}});
    put(3, 4, {{1, -1}});
    put(3, 5, {{2, -1}});
    put(3, 6, {{3, -1}});
    put(3, 7, {{3, -1}});
    put(3, 8, {{5, -2}});
    put(3, 9, {{4, -2}});
    put(3, 10, {{6, -1}, {7, -1}, {11, -1}});
    put(4, 5, {{6, 1}, {7, -1}});
    put(4, 6, {{4, -1}});
    put(4, 7, {{4, 1}});
    put(4, 8, {{10, -2}});
    put(4, 10, {{9, -1}});
    put(5, 6, {{5, 1}});
    put(5, 7, {{5, -1}});
    put(5, 9, {{10, -2}});
    put(5, 10, {{8, -1}});
    put(6, 8, {{8, -2}});
    put(6, 10, {{10, -1}});
    put(7, 9, {{9, -2}});
    put(7, 10, {{10, -1}});
    return c;
  }();
  return table;
}

}  // namespace detail

/// Coefficient of X_k in [X_a, X_b]; all labels 1..11.
inline int structure_constant(int a, int b, int k) {
  assert(a >= 1 && a <= 11 && b >= 1 && b <= 11 && k >= 1 && k <= 11);
  return detail::structure_table()[a - 1][b - 1][k - 1];
}

/// Expansion coefficients of [X_a, X_b] in the generator basis.
inline std::array<int, 11> commutator(int a, int b) {
  assert(a >= 1 && a <= 11 && b >= 1 && b <= 11);
  return detail::structure_table()[a - 1][b - 1];
}

struct ClosureReport {
  bool antisymmetric = false;
  bool jacobi_holds = false;
  int pairs_checked = 0;
  int triples_checked = 0;
  int max_jacobi_defect = 0;  // exact integer arithmetic
  bool ok() const { return antisymmetric && jacobi_holds; }
};

/// Exact integer check that the tabulated brackets close: antisymmetry of the
/// tensor and the Jacobi identity for every generator triple.
inline ClosureReport verify_closure() {
  ClosureReport rep;
  rep.antisymmetric = true;
  for (int a = 1; a <= 11; ++a)
    for (int b = 1; b <= 11; ++b) {
      ++rep.pairs_checked;
      for (int k = 1; k <= 11; ++k)
        if (structure_constant(a, b, k) != -structure_constant(b, a, k))
          rep.antisymmetric = false;
    }
  rep.jacobi_holds = true;
  for (int a = 1; a <= 11; ++a)
    for (int b = 1; b <= 11; ++b)
      for (int c = 1; c <= 11; ++c) {
        ++rep.triples_checked;
        for (int k = 1; k <= 11; ++k) {
          int s = 0;
          for (int m = 1; m <= 11; ++m) {
            s += structure_constant(b, c, m) * structure_constant(a, m, k);
            s += structure_constant(c, a, m) * structure_constant(b, m, k);
            s += structure_constant(a, b, m) * structure_constant(c, m, k);
          }
          if (std::abs(s) > rep.max_jacobi_defect) rep.max_jacobi_defect = std::abs(s);
          if (s != 0) rep.jacobi_holds = false;
        }
      }
  return rep;
}

using SparseOp = Eigen::SparseMatrix<cd>;

/// Matrix of generator g on the two-mode Fock space truncated to
/// occupations 0..cutoff-1 per mode; basis index is n1*cutoff + n2.
inline SparseOp fock_matrix(int g, int cutoff) {
  assert(g >= 1 && g <= 11);
  if (cutoff < 2) throw std::invalid_argument("fock_matrix cutoff must be >= 2");
  const int C = cutoff;
  const int dim = C * C;
  auto idx = [C](int n1, int n2) { return n1 * C + n2; };
  std::vector<Eigen::Triplet<cd>> trip;
  trip.reserve(static_cast<size_t>(dim));
  for (int n1 = 0; n1 < C; ++n1)
    for (int n2 = 0; n2 < C; ++n2) {
      const int col = idx(n1, n2);
      auto add = [&](int m1, int m2, double v) {
        if (m1 >= 0 && m1 < C && m2 >= 0 && m2 < C && v != 0.0)
          trip.emplace_back(idx(m1, m2), col, cd(v, 0.0));
      };
      switch (g) {
        case 1: add(n1 + 2, n2, std::sqrt(double(n1 + 1) * (n1 + 2))); break;
        case 2: add(n1, n2 + 2, std::sqrt(double(n2 + 1) * (n2 + 2))); break;
        case 3: add(n1 + 1, n2 + 1, std::sqrt(double(n1 + 1) * (n2 + 1))); break;
        case 4: add(n1 + 1, n2 - 1, std::sqrt(double(n1 + 1) * n2)); break;
        case 5: add(n1 - 1, n2 + 1, std::sqrt(double(n1) * (n2 + 1))); break;
        case 6: add(n1, n2, double(n1)); break;
        case 7: add(n1, n2, double(n2)); break;
        case 8: add(n1 - 2, n2, std::sqrt(double(n1) * (n1 - 1))); break;
        case 9: add(n1, n2 - 2, std::sqrt(double(n2) * (n2 - 1))); break;
        case 10: add(n1 - 1, n2 - 1, std::sqrt(double(n1) * n2)); break;
        case 11: add(n1, n2, 1.0); break;
      }
    }
  SparseOp X(dim, dim);
  X.setFromTriplets(trip.begin(), trip.end());
  return X;
}

/// Largest deviation between [F_a,F_b] and its tabulated expansion on the
/// truncated Fock space, measured only on matrix entries whose row and
/// column states both keep each mode below cutoff-margin (entries touching
/// the truncation boundary are artifacts of the cutoff, not of the table).
inline double verify_closure_numeric(int cutoff, int margin) {
  if (margin < 2 || cutoff < margin + 4)
    throw std::invalid_argument("closure check needs cutoff >= margin + 4, margin >= 2");
  const int C = cutoff;
  auto interior = [C, margin](int state) {
    const int n1 = state / C;
    const int n2 = state % C;
    return n1 < C - margin && n2 < C - margin;
  };
  std::vector<SparseOp> F;
  F.reserve(11);
  for (int g = 1; g <= 11; ++g) F.push_back(fock_matrix(g, C));
  double worst = 0.0;
  for (int a = 1; a <= 11; ++a)
    for (int b = a + 1; b <= 11; ++b) {
      SparseOp R = (F[a - 1] * F[b - 1] - F[b - 1] * F[a - 1]).pruned();
      for (int k = 1; k <= 11; ++k) {
        const int c = structure_constant(a, b, k);
        if (c != 0) R -= cd(double(c), 0.0) * F[k - 1];
      }
      for (int outer = 0; outer < R.outerSize(); ++outer)
        for (SparseOp::InnerIterator it(R, outer); it; ++it)
          if (interior(it.row()) && interior(it.col()))
            worst = std::max(worst, std::abs(it.value()));
    }
  return worst;
}

namespace detail {

/// v <- exp(c X_g) v on the truncated space. Diagonal generators act
/// elementwise; the others change total occupation monotonically in at
/// least one mode, so their power series terminates.
inline void apply_exponential(int g, cd c, const SparseOp& X, int cutoff,
                              Eigen::VectorXcd& v) {
  if (c == cd(0.0, 0.0)) return;
  if (g == 11) {
    v *= std::exp(c);
    return;
  }
  if (g == 6 || g == 7) {
    const int C = cutoff;
    for (int i = 0; i < v.size(); ++i) {
      const int n = (g == 6) ? i / C : i % C;
      v[i] *= std::exp(c * double(n));
    }
    return;
  }
  Eigen::VectorXcd term = v;
  const int kmax = 2 * cutoff + 4;
  for (int k = 1; k <= kmax; ++k) {
    term = (c / double(k)) * (X * term).eval();
    v += term;
    if (term.norm() <= 1e-30 * std::max(1.0, v.norm())) break;
  }
}

}  // namespace detail

/// Structure matrix of the product ansatz computed without any closed-form
/// input: column j holds the expansion of Ad(Q1...Q_{j-1}) X_j, read off from
/// bilinears of exponentially evolved probe states on a truncated Fock space.
/// Independent of assemble_M by construction; agreement degrades near the
/// cutoff if |Re alpha| is large, so keep draws modest (|alpha_j| <~ 0.5).
inline Eigen::Matrix<cd, 11, 11> adjoint_chain_matrix(
    const Eigen::Matrix<cd, 11, 1>& alpha, int cutoff) {
  const int C = cutoff;
  const int dim = C * C;
  auto idx = [C](int n1, int n2) { return n1 * C + n2; };

  std::vector<SparseOp> X;
  X.reserve(11);
  for (int g = 1; g <= 11; ++g) X.push_back(fock_matrix(g, C));

  // kets |00>,|10>,|01>,|20>,|02>,|11> and the same states as bra probes
  const std::array<std::pair<int, int>, 6> occ = {
      {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}}};
  std::array<Eigen::VectorXcd, 6> ket, bra;
  for (int p = 0; p < 6; ++p) {
    ket[p] = Eigen::VectorXcd::Zero(dim);
    ket[p][idx(occ[p].first, occ[p].second)] = cd(1.0, 0.0);
    bra[p] = ket[p];
  }

  const double s2 = std::sqrt(2.0);
  Eigen::Matrix<cd, 11, 11> M;
  for (int j = 1; j <= 11; ++j) {
    // bilinear <x| W X_j W^{-1} |y> with W = Q1...Q_{j-1}; the probes carry
    // W^{-1} (kets) and W^dagger (bras) accumulated incrementally below
    auto elem = [&](int bp, int kp) -> cd {
      return bra[bp].dot(X[j - 1] * ket[kp]);  // Eigen dot conjugates the left factor
    };
    const cd m11 = elem(0, 0);
    M(0, j - 1) = elem(3, 0) / s2;
    M(1, j - 1) = elem(4, 0) / s2;
    M(2, j - 1) = elem(5, 0);
    M(3, j - 1) = elem(1, 2);
    M(4, j - 1) = elem(2, 1);
    M(5, j - 1) = elem(1, 1) - m11;
    M(6, j - 1) = elem(2, 2) - m11;
    M(7, j - 1) = elem(0, 3) / s2;
    M(8, j - 1) = elem(0, 4) / s2;
    M(9, j - 1) = elem(0, 5);
    M(10, j - 1) = m11;

    if (j < 11) {
      const cd aj = alpha[j - 1];
      const int adj = kAdjointPair[j - 1];
      for (int p = 0; p < 6; ++p) {
        detail::apply_exponential(j, -aj, X[j - 1], C, ket[p]);
        detail::apply_exponential(adj, std::conj(aj), X[adj - 1], C, bra[p]);
      }
    }
  }
  return M;
}

}  // namespace casimir_wn
