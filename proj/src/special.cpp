#include "eqdisc/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace eqdisc {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

}  // namespace

double gamma_fn(double z) noexcept {
  if (std::isnan(z)) return z;
  if (z <= 0.0 && z == std::floor(z)) return std::numeric_limits<double>::quiet_NaN();
  if (z < 0.5) {
    // Reflection: Γ(z)Γ(1-z) = π / sin(πz)
    return std::numbers::pi / (std::sin(std::numbers::pi * z) * gamma_fn(1.0 - z));
  }
  const double x = z - 1.0;
  double a = kLanczos[0];
  const double t = x + kLanczosG + 0.5;
  for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (x + static_cast<double>(i));
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clip01(double z) noexcept { return std::clamp(z, 0.0, 1.0); }

}  // namespace eqdisc
