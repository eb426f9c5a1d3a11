// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_COEFFICIENTS_HPP
#define PORO_COEFFICIENTS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace poro {

/// Coefficients of the coupled flow/mechanics model plus run controls.
/// a_m [1/Pa] and a_f [1/(Pa m)] are the storage coefficients of the matrix
/// and fracture continua, b_m [m^2/(Pa s)] and b_f [m^3/(Pa s)] their
/// mobilities, beta the matrix-fracture transfer coefficient.
struct MaterialParams {
  double E = 1.0e10;        // Young's modulus [Pa]
  double nu = 0.3;          // Poisson ratio
  double alpha = 0.1;       // Biot coefficient
  double a_m = 1.0e-6;
  double a_f = 1.0e-7;
  double b_m = 1.0e-11;
  double b_f = 1.0e-6;
  double beta = 1.0e-10;
  double p0 = 1.0e7;        // initial pressure [Pa]
  double q = 0.01;          // injection rate per source cell
  double t_max = 3000.0;    // simulated time, consistent units
  int n_steps = 50;

  double tau() const { return t_max / n_steps; }
};

/// Reference porous-medium state for the porosity/permeability closures.
struct PoroState {
  double phi0 = 0.2;   // reference porosity
  double k0 = 1.0e-15; // reference permeability [m^2]
  double Ks = 1.0e10;  // solid grain stiffness [Pa]
  double cf = 1.0e-9;  // fluid compressibility [1/Pa]
  double n_exp = 3.0;  // power-law exponent
};

/// Lame parameters (mu, lambda) from Young's modulus and Poisson ratio.
inline std::pair<double, double> lame(double E, double nu) {
  if (E <= 0.0) throw std::invalid_argument("lame: E must be positive");
  if (nu < 0.0 || nu >= 0.5)
    throw std::invalid_argument("lame: nu must lie in [0, 0.5)");
  const double mu = E / (2.0 * (1.0 + nu));
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return {mu, lambda};
}

/// Inverse Biot modulus 1/M = phi*c_f + (alpha - phi0)/Ks.
inline double biot_inverse_modulus(const PoroState& ps, double phi,
                                   double alpha) {
  return phi * ps.cf + (alpha - ps.phi0) / ps.Ks;
}

/// Porosity updated by volumetric strain and pressure deviation, clamped
/// away from the endpoints where the permeability power law degenerates.
inline double porosity_update(const PoroState& ps, double alpha, double eps_v,
                              double p_m, double p0) {
  const double phi =
      ps.phi0 + alpha * eps_v + (alpha - ps.phi0) / ps.Ks * (p_m - p0);
  return std::clamp(phi, 1.0e-6, 1.0 - 1.0e-6);
}

/// Power-law permeability k0*(phi/phi0)^n.
inline double permeability_update(const PoroState& ps, double phi) {
  return ps.k0 * std::pow(phi / ps.phi0, ps.n_exp);
}

/// Pressure-proportional fracture aperture b = 2(1-nu^2)/E * p_f.
inline double aperture(double p_f, double E, double nu) {
  return 2.0 * (1.0 - nu * nu) / E * p_f;
}

}  // namespace poro

#endif
