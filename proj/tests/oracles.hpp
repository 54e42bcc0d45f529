#pragma once

// Independent physics oracles shared by the unit and acceptance tests.

#include <array>
#include <cmath>
#include <complex>

#include "fopaeq/fopa_channel.hpp"

namespace fopaeq::testing {

// Pump, signal, idler envelopes along the fibre (undepleted regime not
// assumed), RK4 in z. Returns A_s(L) / A_s(0).
inline std::complex<double> coupled_mode_gain(const FopaParams& f, double dw_rad_per_ps, int steps) {
  const double dw2 = dw_rad_per_ps * dw_rad_per_ps;
  const double dbeta = f.beta2 * dw2 + f.beta4 / 12.0 * dw2 * dw2;
  const double g = f.gamma;
  using C = std::complex<double>;
  using State = std::array<C, 3>;
  const std::complex<double> i(0.0, 1.0);
  auto rhs = [&](double z, const State& a) {
    const C ap = a[0], as = a[1], ai = a[2];
    const double pp = std::norm(ap), ps = std::norm(as), pi = std::norm(ai);
    const C ph = std::exp(i * dbeta * z);
    State d;
    d[0] = i * g * ((pp + 2.0 * (ps + pi)) * ap + 2.0 * as * ai * std::conj(ap) * ph);
    d[1] = i * g * ((ps + 2.0 * (pi + pp)) * as + std::conj(ai) * ap * ap * std::conj(ph));
    d[2] = i * g * ((pi + 2.0 * (ps + pp)) * ai + std::conj(as) * ap * ap * std::conj(ph));
    return d;
  };
  State a{C(std::sqrt(f.pump_power), 0.0), C(1e-5, 0.0), C(0.0, 0.0)};
  const double h = f.fibre_len / steps;
  auto axpy = [](const State& x, double s, const State& k) {
    State y;
    for (int j = 0; j < 3; ++j) y[j] = x[j] + s * k[j];
    return y;
  };
  for (int n = 0; n < steps; ++n) {
    const double z = n * h;
    const State k1 = rhs(z, a);
    const State k2 = rhs(z + h / 2, axpy(a, h / 2, k1));
    const State k3 = rhs(z + h / 2, axpy(a, h / 2, k2));
    const State k4 = rhs(z + h, axpy(a, h, k3));
    for (int j = 0; j < 3; ++j) a[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  // Remove the common phase exp(i (gamma P - dbeta / 2) L) of the closed form.
  const C derot = std::exp(-i * (g * f.pump_power - dbeta / 2.0) * f.fibre_len);
  return a[1] / C(1e-5, 0.0) * derot;
}

}  // namespace fopaeq::testing
