#pragma once

#include <cmath>
#include <numbers>

#include "casimir_wn/algebra.hpp"
#include "casimir_wn/errors.hpp"
#include "casimir_wn/log.hpp"

namespace casimir_wn {

/// Sinusoidal length modulation q(t) = L exp[(q0/L) sin(omega_d t + phi)].
struct CavityParams {
  double L = 1.0;
  double q0 = 1.0 / 12.0;
  double phi = 0.0;
  double omega_d = 2.0 * std::numbers::pi;
};

inline void validate(const CavityParams& p) {
  if (!(std::isfinite(p.L) && std::isfinite(p.q0) && std::isfinite(p.phi) &&
        std::isfinite(p.omega_d)))
    throw ConfigError("cavity parameters must be finite");
  if (!(p.L > 0.0)) throw ConfigError("cavity length L must be positive");
  if (p.q0 < 0.0) throw ConfigError("modulation amplitude q0 must be >= 0");
  if (p.omega_d < 0.0) throw ConfigError("drive frequency omega_d must be >= 0");
  if (p.q0 / p.L >= 0.2)
    log::warn("q0/L = ", p.q0 / p.L,
              " is outside the weak-modulation regime the two-mode "
              "truncation is built for");
}

/// Intermode coupling of the moving-boundary Hamiltonian, j != k.
inline double coupling_mu(int j, int k) {
  if (j == k || j < 1 || k < 1)
    throw std::invalid_argument("coupling_mu needs two distinct positive mode labels");
  const double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
  return sign * (double(k) * double(j)) / (double(j) * j - double(k) * k) *
         std::sqrt(double(k) / double(j));
}

class CavityModel {
 public:
  explicit CavityModel(const CavityParams& p) : p_(p) {
    validate(p_);
    mu12_ = coupling_mu(1, 2);
    mu21_ = coupling_mu(2, 1);
  }

  const CavityParams& params() const { return p_; }
  double mu12() const { return mu12_; }
  double mu21() const { return mu21_; }

  /// Instantaneous cavity length.
  double trajectory(double t) const {
    return p_.L * std::exp((p_.q0 / p_.L) * std::sin(p_.omega_d * t + p_.phi));
  }

  /// Logarithmic derivative qdot/q of the trajectory.
  double modulation_rate(double t) const {
    return (p_.q0 * p_.omega_d / p_.L) * std::cos(p_.omega_d * t + p_.phi);
  }

  /// Instantaneous frequency k*pi/q(t) of cavity mode k.
  double mode_frequency(int k, double t) const {
    if (k != 1 && k != 2)
      throw std::invalid_argument("mode index must be 1 or 2");
    return double(k) * std::numbers::pi / trajectory(t);
  }

  /// Coefficients of the Hamiltonian in the generator basis,
  /// H(t) = sum_n f_n(t) X_n.
  Eigen::Matrix<cd, 11, 1> f_vector(double t) const {
    const double e = modulation_rate(t);
    const double q = trajectory(t);
    Eigen::Matrix<cd, 11, 1> f;
    f.setZero();
    f[0] = cd(0.0, e / 4.0);
    f[1] = f[0];
    f[2] = cd(0.0, 0.5 * (mu12_ + mu21_) * e);
    f[3] = cd(0.0, -0.5 * (mu12_ - mu21_) * e);
    f[4] = -f[3];
    f[5] = cd(std::numbers::pi / q, 0.0);
    f[6] = cd(2.0 * std::numbers::pi / q, 0.0);
    f[7] = -f[0];
    f[8] = -f[1];
    f[9] = -f[2];
    f[10] = cd(0.0, 0.0);
    return f;
  }

 private:
  CavityParams p_;
  double mu12_, mu21_;
};

inline double trajectory(const CavityParams& p, double t) {
  return CavityModel(p).trajectory(t);
}
inline double modulation_rate(const CavityParams& p, double t) {
  return CavityModel(p).modulation_rate(t);
}
inline double mode_frequency(const CavityParams& p, int k, double t) {
  return CavityModel(p).mode_frequency(k, t);
}
inline Eigen::Matrix<cd, 11, 1> f_vector(const CavityParams& p, double t) {
  return CavityModel(p).f_vector(t);
}

}  // namespace casimir_wn
