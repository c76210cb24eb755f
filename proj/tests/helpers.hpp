#pragma once

// Small plants shared across the test suites.

#include "grsreach/core.hpp"

namespace grsreach::testing {

/// f = 0, G = I: the input is the velocity.
inline ControlAffineField identity_actuation(int dim, double lipschitz = 0.5) {
  ControlAffineField field;
  field.state_dim = field.input_dim = dim;
  field.f = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  field.G = [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
  field.lipschitz_f = field.lipschitz_G = lipschitz;
  return field;
}

/// Scalar dx/dt = x with an inert input channel (G = 0).
inline ControlAffineField scalar_exponential() {
  ControlAffineField field;
  field.state_dim = 1;
  field.input_dim = 1;
  field.f = [](const Vec& x) { return x; };
  field.G = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
  field.lipschitz_f = 1.0;
  field.lipschitz_G = 0.0;
  return field;
}

/// Constant drift, no actuation authority.
inline ControlAffineField pure_drift(const Vec& a) {
  ControlAffineField field;
  field.state_dim = static_cast<int>(a.size());
  field.input_dim = 1;
  field.f = [a](const Vec&) { return a; };
  field.G = [d = a.size()](const Vec&) { return Mat(Mat::Zero(d, 1)); };
  field.lipschitz_f = 0.0;
  field.lipschitz_G = 0.0;
  return field;
}

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

}  // namespace grsreach::testing
