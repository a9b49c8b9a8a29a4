#pragma once
// Closed-form references used by the tests. Nothing here calls into the
// solver, so the numbers are independent of the code under test.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "pcsim/core/units.hpp"
#include "pcsim/fdtd/waveform.hpp"

namespace oracle {

using pcsim::kPi;

/// Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// |I(w)|^2 of moment * exp(-t^2/2s^2) sin(w0 t), untruncated.
inline double gaussian_sine_spectrum(double w, const pcsim::fdtd::Waveform& wf, double moment) {
  const double s = wf.width(), w0 = 2.0 * kPi * wf.frequency;
  const double a = std::exp(-0.5 * s * s * (w - w0) * (w - w0));
  const double b = std::exp(-0.5 * s * s * (w + w0) * (w + w0));
  const double amp = moment * s * std::sqrt(2.0 * kPi) * 0.5 * (a - b);
  return amp * amp;
}

/// Energy radiated by an in-plane point dipole current in 2D vacuum:
/// (1 / 8 pi) int_0^inf w |I(w)|^2 dw.
inline double vacuum_energy_2d(const pcsim::fdtd::Waveform& wf, double moment = 1.0) {
  const double w0 = 2.0 * kPi * wf.frequency, span = 12.0 / wf.width();
  const double hi = w0 + span;
  return simpson([&](double w) { return w * gaussian_sine_spectrum(w, wf, moment); }, 0.0, hi) / (8.0 * kPi);
}

/// Energy radiated by a point dipole current in 3D vacuum (Larmor):
/// int (dI/dt)^2 dt / (6 pi).
inline double vacuum_energy_3d(const pcsim::fdtd::Waveform& wf, double moment = 1.0) {
  const double s = wf.width(), w0 = 2.0 * kPi * wf.frequency;
  auto didt = [&](double t) {
    const double g = std::exp(-0.5 * t * t / (s * s));
    return moment * g * (w0 * std::cos(w0 * t) - t / (s * s) * std::sin(w0 * t));
  };
  return simpson([&](double t) { const double d = didt(t); return d * d; }, -8.0 * s, 8.0 * s, 200000) / (6.0 * kPi);
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::path(PCSIM_TEST_SCRATCH) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Runs the CLI and returns its exit status.
inline int run_cli(const std::string& args, const std::filesystem::path& log = {}) {
  std::string cmd = std::string(PCSIM_CLI_PATH) + " " + args;
  cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

/// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(std::abs(err[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
