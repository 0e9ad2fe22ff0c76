#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "casimir_wn/errors.hpp"

namespace casimir_wn {
namespace ode {

// Dormand-Prince 8(5,3) coefficients (Hairer, Norsett, Wanner).
namespace dp853 {
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;
}  // namespace dp853

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_min = 1e-12;
  long max_steps = 50'000'000;
  int max_stage_retries = 40;
};

struct Stats {
  long rhs_calls = 0;
  long steps_accepted = 0;
  long steps_rejected = 0;
  long stage_retries = 0;
  double min_step = std::numeric_limits<double>::infinity();
};

namespace detail {

template <class Vec>
bool finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto a = std::abs(v[i]);
    if (!std::isfinite(a)) return false;
  }
  return true;
}

}  // namespace detail

/// Starting step for an order-8 scheme, from the size of the initial slope
/// and a one-step curvature probe.
template <class Vec, class Rhs>
double initial_step(Rhs&& rhs, double t0, const Vec& y0, const Vec& f0,
                    double span, const Options& opt, Stats& stats) {
  const Eigen::Index n = y0.size();
  double d0sq = 0.0, d1sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = opt.atol + opt.rtol * std::abs(y0[i]);
    const double ay = std::abs(y0[i]) / sc;
    const double af = std::abs(f0[i]) / sc;
    d0sq += ay * ay;
    d1sq += af * af;
  }
  const double d0 = std::sqrt(d0sq / double(n));
  const double d1 = std::sqrt(d1sq / double(n));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  Vec y1 = y0 + h0 * f0;
  Vec f1(n);
  rhs(t0 + h0, y1, f1);
  ++stats.rhs_calls;
  double d2sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = opt.atol + opt.rtol * std::abs(y0[i]);
    const double df = std::abs(f1[i] - f0[i]) / sc;
    d2sq += df * df;
  }
  const double d2 = std::sqrt(d2sq / double(n)) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dm, 1.0 / 8.0);
  return std::min({100.0 * h0, h1, span});
}

/// Integrate rhs over a nondecreasing grid (grid[0] is the start time and
/// carries y0); out[i] receives the solution at grid[i]. The adaptive step
/// is clamped to land on each grid point exactly; a clamped, accepted step
/// leaves the controller's stored step untouched so output density does not
/// distort step-size memory. on_accept(t, h) runs after every accepted step.
template <class Vec, class Rhs, class Obs>
Stats integrate_grid(Rhs&& rhs, const std::vector<double>& grid, const Vec& y0,
                     std::vector<Vec>& out, const Options& opt, Obs&& on_accept) {
  using namespace dp853;
  if (grid.empty()) return {};
  Stats stats;
  const Eigen::Index n = y0.size();
  const double t_end = grid.back();
  const double span = t_end - grid.front();

  out.clear();
  out.reserve(grid.size());

  double t = grid.front();
  Vec y = y0;
  out.push_back(y);

  if (span == 0.0) {
    for (size_t i = 1; i < grid.size(); ++i) out.push_back(y);
    return stats;
  }

  auto fail = [&](const std::string& why) -> IntegrationFailure {
    std::vector<std::complex<double>> snap(n);
    for (Eigen::Index i = 0; i < n; ++i) snap[i] = std::complex<double>(y[i]);
    return IntegrationFailure(t, std::move(snap), why);
  };

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n),
      k11(n), k12(n), ksum(n), ytmp(n), ynew(n);

  rhs(t, y, k1);
  ++stats.rhs_calls;
  double h = initial_step(rhs, t, y, k1, span, opt, stats);

  constexpr double safe = 0.9;
  constexpr double beta = 0.04;
  constexpr double expo = 1.0 / 8.0 - beta * 0.2;
  constexpr double scale_min = 1.0 / 3.0;
  constexpr double scale_max = 6.0;
  double errold = 1e-4;
  bool last_rejected = false;
  int stage_retries_run = 0;

  long attempts = 0;
  for (size_t gi = 1; gi < grid.size(); ++gi) {
    const double target = grid[gi];
    while (t < target) {
      if (++attempts > opt.max_steps) throw fail("step budget exhausted");

      const bool clamped = (t + h >= target);
      const double hs = clamped ? (target - t) : h;
      if (hs < opt.h_min && !clamped)
        throw fail("step size underflow");

      bool stage_ok = true;
      try {
        ytmp = y + hs * (a21 * k1);
        rhs(t + c2 * hs, ytmp, k2);
        ytmp = y + hs * (a31 * k1 + a32 * k2);
        rhs(t + c3 * hs, ytmp, k3);
        ytmp = y + hs * (a41 * k1 + a43 * k3);
        rhs(t + c4 * hs, ytmp, k4);
        ytmp = y + hs * (a51 * k1 + a53 * k3 + a54 * k4);
        rhs(t + c5 * hs, ytmp, k5);
        ytmp = y + hs * (a61 * k1 + a64 * k4 + a65 * k5);
        rhs(t + c6 * hs, ytmp, k6);
        ytmp = y + hs * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + c7 * hs, ytmp, k7);
        ytmp = y + hs * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
        rhs(t + c8 * hs, ytmp, k8);
        ytmp = y + hs * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 +
                         a98 * k8);
        rhs(t + c9 * hs, ytmp, k9);
        ytmp = y + hs * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 +
                         a107 * k7 + a108 * k8 + a109 * k9);
        rhs(t + c10 * hs, ytmp, k10);
        ytmp = y + hs * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 +
                         a117 * k7 + a118 * k8 + a119 * k9 + a1110 * k10);
        rhs(t + c11 * hs, ytmp, k11);
        ytmp = y + hs * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 +
                         a127 * k7 + a128 * k8 + a129 * k9 + a1210 * k10 +
                         a1211 * k11);
        rhs(t + hs, ytmp, k12);
        stats.rhs_calls += 11;
        ksum = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 +
               b11 * k11 + b12 * k12;
        ynew = y + hs * ksum;
        if (!detail::finite(ynew)) stage_ok = false;
      } catch (const SingularStructureMatrix&) {
        stage_ok = false;
      } catch (const std::invalid_argument&) {
        stage_ok = false;  // trial state left the rhs domain (overflow)
      }

      if (!stage_ok) {
        ++stats.stage_retries;
        if (++stage_retries_run > opt.max_stage_retries)
          throw fail("repeated stage failures");
        h = hs * 0.5;
        if (h < opt.h_min) throw fail("step size underflow after stage failure");
        last_rejected = true;
        continue;
      }
      stage_retries_run = 0;

      double err3sq = 0.0, err5sq = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double sc =
            opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double e3 =
            std::abs(ksum[i] - e31 * k1[i] - e32 * k9[i] - e33 * k12[i]) / sc;
        const double e5 =
            std::abs(e51 * k1[i] + e56 * k6[i] + e57 * k7[i] + e58 * k8[i] +
                     e59 * k9[i] + e510 * k10[i] + e511 * k11[i] +
                     e512 * k12[i]) /
            sc;
        err3sq += e3 * e3;
        err5sq += e5 * e5;
      }
      double deno = err5sq + 0.01 * err3sq;
      if (deno <= 0.0) deno = 1.0;
      const double err = hs * err5sq * std::sqrt(1.0 / (double(n) * deno));
      if (!std::isfinite(err)) {
        ++stats.stage_retries;
        if (++stage_retries_run > opt.max_stage_retries)
          throw fail("repeated non-finite error estimates");
        h = hs * 0.5;
        if (h < opt.h_min) throw fail("step size underflow after stage failure");
        last_rejected = true;
        continue;
      }

      if (err <= 1.0) {
        double scale = (err == 0.0)
                           ? scale_max
                           : safe * std::pow(err, -expo) * std::pow(errold, beta);
        scale = std::clamp(scale, scale_min, scale_max);
        if (last_rejected) scale = std::min(scale, 1.0);
        errold = std::max(err, 1e-4);
        last_rejected = false;

        t = clamped ? target : t + hs;
        y = ynew;
        rhs(t, y, k1);
        ++stats.rhs_calls;
        ++stats.steps_accepted;
        stats.min_step = std::min(stats.min_step, hs);
        on_accept(t, hs);
        if (!clamped) h = hs * scale;
        // clamped accepted step: keep the stored h so forced short steps
        // cannot ratchet the controller
      } else {
        ++stats.steps_rejected;
        last_rejected = true;
        const double scale =
            std::max(scale_min, safe * std::pow(err, -expo));
        h = hs * scale;
        if (h < opt.h_min) throw fail("step size underflow");
      }
    }
    out.push_back(y);
  }
  return stats;
}

template <class Vec, class Rhs>
Stats integrate_grid(Rhs&& rhs, const std::vector<double>& grid, const Vec& y0,
                     std::vector<Vec>& out, const Options& opt) {
  return integrate_grid(rhs, grid, y0, out, opt, [](double, double) {});
}

}  // namespace ode
}  // namespace casimir_wn
