#pragma once

namespace eqdisc {

// Gamma function via the Lanczos approximation (g = 7, nine coefficients),
// with the reflection formula below 0.5. NaN at the poles 0, -1, -2, ...
double gamma_fn(double z) noexcept;

// 1 / (1 + exp(-z)), evaluated without intermediate overflow.
double sigmoid(double z) noexcept;

// z limited to [0, 1].
double clip01(double z) noexcept;

}  // namespace eqdisc
