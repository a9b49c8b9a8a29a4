#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pcsim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

/// Normalized units: c = 1 and lattice constant a = 1. Physical lengths enter
/// only through an optional anchor wavelength for the cavity, with the lattice
/// constant fixed at a = 0.27 * lambda_cav.
struct UnitSystem {
  double lambda_cav_nm = 921.0;
  double a_over_lambda_cav = 0.27;

  double a_nm() const { return a_over_lambda_cav * lambda_cav_nm; }

  double to_nm(double length_norm) const { return length_norm * a_nm(); }
  double from_nm(double length_nm) const { return length_nm / a_nm(); }

  /// Normalized frequency f = a/lambda (c = 1) to wavelength in nm.
  double frequency_to_nm(double f_norm) const { return a_nm() / f_norm; }
  double nm_to_frequency(double lambda_nm) const { return a_nm() / lambda_nm; }

  /// One normalized time unit (a/c) in seconds.
  double time_unit_s() const { return a_nm() * 1e-9 / kSpeedOfLight; }

  void validate() const {
    if (!(lambda_cav_nm > 0.0) || !std::isfinite(lambda_cav_nm))
      throw std::invalid_argument("UnitSystem: lambda_cav_nm must be positive");
    if (!(a_over_lambda_cav > 0.0)) throw std::invalid_argument("UnitSystem: a/lambda must be positive");
  }
};

}  // namespace pcsim
