#include <catch2/catch_amalgamated.hpp>

#include "casimir_wn/algebra.hpp"
#include "casimir_wn/weinorman.hpp"

using namespace casimir_wn;

TEST_CASE("commutator table spot values") {
  // [X3, X10] = -(n1 + n2 + 1)
  auto c = commutator(3, 10);
  std::array<int, 11> want{};
  want[5] = -1;
  want[6] = -1;
  want[10] = -1;
  CHECK(c == want);

  // [X1, X8] = -4 n1 - 2
  c = commutator(1, 8);
  want = {};
  want[5] = -4;
  want[10] = -2;
  CHECK(c == want);

  // creation operators of distinct modes commute
  c = commutator(1, 2);
  CHECK(c == std::array<int, 11>{});

  // [X4, X5] = n1 - n2 and its antisymmetric partner
  c = commutator(4, 5);
  want = {};
  want[5] = 1;
  want[6] = -1;
  CHECK(c == want);
  for (int k = 1; k <= 11; ++k)
    CHECK(structure_constant(5, 4, k) == -structure_constant(4, 5, k));
}

TEST_CASE("closure report") {
  const ClosureReport rep = verify_closure();
  CHECK(rep.antisymmetric);
  CHECK(rep.jacobi_holds);
  CHECK(rep.max_jacobi_defect == 0);
  CHECK(rep.pairs_checked == 121);
  CHECK(rep.ok());
}

TEST_CASE("fock matrices") {
  SECTION("number operator is diagonal") {
    const SparseOp X6 = fock_matrix(6, 3);
    for (int n1 = 0; n1 < 3; ++n1)
      for (int n2 = 0; n2 < 3; ++n2)
        CHECK(X6.coeff(n1 * 3 + n2, n1 * 3 + n2) == cd(double(n1), 0.0));
    CHECK(X6.nonZeros() == 6);  // n1 = 0 entries are not stored
  }
  SECTION("double-creation elements") {
    const SparseOp X1 = fock_matrix(1, 4);
    CHECK(std::abs(X1.coeff(2 * 4 + 0, 0) - cd(std::sqrt(2.0), 0.0)) < 1e-15);
    CHECK(std::abs(X1.coeff(3 * 4 + 1, 1 * 4 + 1) - cd(std::sqrt(6.0), 0.0)) <
          1e-15);
  }
  SECTION("identity generator") {
    const SparseOp X11 = fock_matrix(11, 2);
    CHECK(Eigen::MatrixXcd(X11).isApprox(Eigen::MatrixXcd::Identity(4, 4)));
  }
  SECTION("adjoint pairing of representations") {
    for (int g = 1; g <= 11; ++g) {
      const Eigen::MatrixXcd A = Eigen::MatrixXcd(fock_matrix(g, 6));
      const Eigen::MatrixXcd B =
          Eigen::MatrixXcd(fock_matrix(kAdjointPair[g - 1], 6));
      CHECK((A - B.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SECTION("undersized cutoff rejected") {
    CHECK_THROWS_AS(fock_matrix(1, 1), std::invalid_argument);
  }
}

TEST_CASE("numeric closure on truncated space") {
  CHECK(verify_closure_numeric(8, 4) <= 1e-10);
  CHECK_THROWS_AS(verify_closure_numeric(5, 4), std::invalid_argument);

  SECTION("[X4,X5] acts as n1 - n2 on the interior") {
    const int C = 8;
    const SparseOp F4 = fock_matrix(4, C);
    const SparseOp F5 = fock_matrix(5, C);
    const Eigen::MatrixXcd comm =
        Eigen::MatrixXcd(F4 * F5) - Eigen::MatrixXcd(F5 * F4);
    for (int n1 = 0; n1 < C - 4; ++n1)
      for (int n2 = 0; n2 < C - 4; ++n2)
        CHECK(std::abs(comm(n1 * C + n2, n1 * C + n2) -
                       cd(double(n1 - n2), 0.0)) < 1e-12);
  }
  SECTION("identity commutes exactly") {
    const int C = 6;
    const SparseOp I = fock_matrix(11, C);
    for (int g = 1; g <= 11; ++g) {
      const SparseOp F = fock_matrix(g, C);
      const Eigen::MatrixXcd comm =
          Eigen::MatrixXcd(I * F) - Eigen::MatrixXcd(F * I);
      CHECK(comm.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("adjoint chain matrix at alpha = 0 is the identity") {
  const Eigen::Matrix<cd, 11, 11> M =
      adjoint_chain_matrix(Alpha::Zero(), 10);
  CHECK((M - Eigen::Matrix<cd, 11, 11>::Identity()).cwiseAbs().maxCoeff() <
        1e-13);
}
