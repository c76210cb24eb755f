#pragma once

// Underapproximating proxy system for guaranteed reachability.
//
// From the local data (f(x0), G(x0)) and the Lipschitz bounds, the scalar-gain
// surrogate
//
//     dx/dt = a + (b - c|x - x0|) u,    u in the unit ball of Im(G(x0)),
//
// with a = f(x0), b = ||G(x0)^+||^-1, c = L_f + L_G, has a reachable set that
// underapproximates the reachable set of every control-affine system
// consistent with that data.  This header derives the surrogate, integrates
// it, samples its reachable-set boundary, and computes the learning radius
// r(k, dt) used by the synthesis loop.
//
// The surrogate is valid on the ball B = { |x - x0| <= b/c }, where the
// controlled gain b - c|x| stays nonnegative.

#include "grsreach/core.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace grsreach {

struct DegenerateActuationError : Error {
  using Error::Error;
};

/// Target direction has a component outside Im(G(x0)).
struct UnreachableDirectionError : Error {
  using Error::Error;
};

/// Surrogate state is outside the validity ball B.
struct ProxyDomainError : Error {
  using Error::Error;
};

namespace detail {

struct SvdData {
  Mat u;              // left singular vectors, thin
  Vec singular;       // singular values, descending
  Eigen::Index rank;  // numerical rank
};

inline SvdData svd_with_rank(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdData out{svd.matrixU(), svd.singularValues(), 0};
  const double tol = std::max(a.rows(), a.cols()) *
                     std::numeric_limits<double>::epsilon() *
                     (out.singular.size() > 0 ? out.singular(0) : 0.0);
  for (Eigen::Index i = 0; i < out.singular.size(); ++i)
    if (out.singular(i) > tol) out.rank = i + 1;
  return out;
}

/// Moore-Penrose pseudoinverse via SVD.
inline Mat pseudo_inverse(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double tol = std::max(a.rows(), a.cols()) *
                     std::numeric_limits<double>::epsilon() *
                     (s.size() > 0 ? s(0) : 0.0);
  Vec inv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Spectral norm of the pseudoinverse, 1 / (smallest nonzero singular value).
inline double pseudo_inverse_norm(const Mat& a) {
  const SvdData s = svd_with_rank(a);
  if (s.rank == 0) throw DegenerateActuationError("pseudo_inverse_norm: zero matrix");
  return 1.0 / s.singular(s.rank - 1);
}

}  // namespace detail

/// Parameters of the surrogate ODE, anchored at x0.
struct ProxyParams {
  Vec drift;        // a = f(x0)
  double gain;      // b = ||G(x0)^+||^-1
  double decay;     // c = L_f + L_G
  Mat image_basis;  // orthonormal columns spanning Im(G(x0)), d x p
  Vec origin;       // x0

  int state_dim() const { return static_cast<int>(drift.size()); }
  int image_dim() const { return static_cast<int>(image_basis.cols()); }
  /// Radius of the validity ball B around x0.
  double domain_radius() const { return gain / decay; }
};

/// Derive the surrogate from perfectly known local data at x0 = 0.
inline ProxyParams derive_proxy(const Vec& f_x0, const Mat& G_x0, double lipschitz_f,
                                double lipschitz_G) {
  if (G_x0.rows() != f_x0.size())
    throw DimensionError("derive_proxy: f(x0) and G(x0) row counts differ");
  if (!(lipschitz_f >= 0.0) || !(lipschitz_G >= 0.0) ||
      !(lipschitz_f + lipschitz_G > 0.0))
    throw ParameterError("derive_proxy: need L_f, L_G >= 0 with L_f + L_G > 0");
  const detail::SvdData svd = detail::svd_with_rank(G_x0);
  if (svd.rank == 0)
    throw DegenerateActuationError("derive_proxy: G(x0) = 0, no controlled directions");
  ProxyParams p;
  p.drift = f_x0;
  p.gain = svd.singular(svd.rank - 1);  // 1/||G^+||
  p.decay = lipschitz_f + lipschitz_G;
  p.image_basis = svd.u.leftCols(svd.rank);
  p.origin = Vec::Zero(f_x0.size());
  return p;
}

/// Right-hand side a + (b - c|x - x0|) u.  Requires x inside B.
inline Vec proxy_velocity(const ProxyParams& p, const Vec& x, const Vec& u_hat) {
  if (x.size() != p.drift.size() || u_hat.size() != p.drift.size())
    throw DimensionError("proxy_velocity: dimension mismatch");
  const double coef = p.gain - p.decay * (x - p.origin).norm();
  if (coef < -1e-12 * p.gain)
    throw ProxyDomainError("proxy_velocity: state outside the validity ball B");
  return p.drift + coef * u_hat;
}

/// Closed-form radius of the drift-free surrogate from the origin:
/// rho' = b - c rho, rho(0) = 0, so rho(t) = (b/c)(1 - exp(-c t)).
inline double radial_closed_form(double gain, double decay, double t) {
  if (!(decay > 0.0)) throw ParameterError("radial_closed_form: decay must be positive");
  if (t < 0.0) throw ParameterError("radial_closed_form: negative time");
  if (decay * t < 1e-12) return gain * t;  // linear growth limit
  return (gain / decay) * (1.0 - std::exp(-decay * t));
}

/// A surrogate flow under one constant unit direction.  `clamped` records
/// whether the state ever left B (the controlled gain is cut off at zero
/// there, so the flow continues under pure drift).
struct ProxyFlow {
  Trajectory trajectory;
  bool clamped = false;
};

inline double default_proxy_substep(double horizon) {
  return horizon > 0.0 ? horizon / 2000.0 : 1.0;
}

/// Integrate the surrogate under a constant direction for the given horizon.
inline ProxyFlow integrate_proxy(const ProxyParams& p, const Vec& direction, double horizon,
                                 double substep = 0.0) {
  if (direction.size() != p.drift.size())
    throw DimensionError("integrate_proxy: direction dimension mismatch");
  if (horizon < 0.0) throw ParameterError("integrate_proxy: negative horizon");
  if (substep <= 0.0) substep = default_proxy_substep(horizon);

  ProxyFlow flow;
  flow.trajectory.substep = substep;
  const double exit_radius = p.domain_radius() * (1.0 + 1e-12);
  auto velocity = [&](const Vec& x) {
    const double coef = std::max(p.gain - p.decay * (x - p.origin).norm(), 0.0);
    return Vec(p.drift + coef * direction);
  };
  detail::integrate_fixed_rk4(velocity, p.origin, 0.0, horizon, substep,
                              [&](double t, const Vec& x) {
                                flow.trajectory.append_sample(t, x);
                                if ((x - p.origin).norm() > exit_radius) flow.clamped = true;
                              });
  return flow;
}

/// Deterministic, evenly spread unit directions inside span(basis).
/// For a 2-dimensional image this is the uniform angular grid with phase 0;
/// a 1-dimensional image only admits the two signed directions; higher
/// dimensions use a Halton-sequence spread mapped through the inverse normal
/// CDF (low-discrepancy, reproducible).
inline std::vector<Vec> spread_directions(const Mat& basis, int count) {
  const auto p = static_cast<int>(basis.cols());
  std::vector<Vec> dirs;
  if (p == 1) {
    dirs.push_back(basis.col(0));
    dirs.push_back(-basis.col(0));
    return dirs;
  }
  if (p == 2) {
    dirs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / count;
      dirs.push_back(std::cos(angle) * basis.col(0) + std::sin(angle) * basis.col(1));
    }
    return dirs;
  }
  // Halton radical inverse in the given prime base.
  auto halton = [](std::uint64_t index, std::uint64_t base) {
    double result = 0.0, f = 1.0 / static_cast<double>(base);
    while (index > 0) {
      result += f * static_cast<double>(index % base);
      index /= base;
      f /= static_cast<double>(base);
    }
    return result;
  };
  // Acklam's rational approximation of the inverse normal CDF; accuracy is
  // ample for direction spreading.
  auto inv_normal = [](double u) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    if (u < plow) {
      const double q = std::sqrt(-2.0 * std::log(u));
      return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (u > phigh) {
      const double q = std::sqrt(-2.0 * std::log(1.0 - u));
      return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = u - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  };
  static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  dirs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vec coeff(p);
    for (int j = 0; j < p; ++j) {
      const double u = halton(static_cast<std::uint64_t>(i) + 1,
                              primes[static_cast<std::size_t>(j) % 12]);
      coeff(j) = inv_normal(std::min(std::max(u, 1e-12), 1.0 - 1e-12));
    }
    if (coeff.norm() < 1e-12) coeff(0) = 1.0;
    coeff.normalize();
    dirs.push_back(basis * coeff);
  }
  return dirs;
}

/// Sampled boundary of the guaranteed reachable set at a fixed horizon: one
/// endpoint per spread direction.  Clamped directions (flow left B) are kept
/// and flagged rather than dropped.
struct GrsBoundary {
  double horizon = 0.0;
  int image_dim = 0;  // 2 means directions follow the uniform angular grid
  std::vector<Vec> directions;
  std::vector<Vec> endpoints;
  std::vector<std::uint8_t> clamped;

  std::size_t size() const { return endpoints.size(); }
};

inline GrsBoundary grs_boundary(const ProxyParams& p, double horizon, int n_dirs,
                                double substep = 0.0) {
  if (n_dirs < 8) throw ParameterError("grs_boundary: need at least 8 directions");
  if (horizon < 0.0) throw ParameterError("grs_boundary: negative horizon");
  GrsBoundary boundary;
  boundary.horizon = horizon;
  boundary.image_dim = p.image_dim();
  boundary.directions = spread_directions(p.image_basis, n_dirs);
  boundary.endpoints.reserve(boundary.directions.size());
  boundary.clamped.reserve(boundary.directions.size());
  for (const Vec& dir : boundary.directions) {
    const ProxyFlow flow = integrate_proxy(p, dir, horizon, substep);
    boundary.endpoints.push_back(flow.trajectory.back_state());
    boundary.clamped.push_back(flow.clamped ? 1 : 0);
  }
  return boundary;
}

/// The unique constant control reaching a boundary point y at time T:
/// (y - aT - x0) normalized, which must lie in Im(G(x0)).
inline Vec unique_boundary_control(const ProxyParams& p, const Vec& target, double horizon) {
  if (target.size() != p.drift.size())
    throw DimensionError("unique_boundary_control: target dimension mismatch");
  const Vec w = target - horizon * p.drift - p.origin;
  const double scale = std::max(1.0, target.norm() + horizon * p.drift.norm());
  if (w.norm() <= 1e-12 * scale)
    throw UnreachableDirectionError(
        "unique_boundary_control: target equals the pure-drift endpoint");
  const Vec projected = p.image_basis * (p.image_basis.transpose() * w);
  if ((w - projected).norm() > 1e-9 * std::max(1.0, w.norm()))
    throw UnreachableDirectionError(
        "unique_boundary_control: direction leaves the image of G(x0)");
  return projected / projected.norm();
}

enum class RadiusVariant { raw, drift_subtracted };

/// Learning radius r(k, dt): the largest displacement the surrogate can make
/// over k cycles of length tau = (m+1) dt under a constant unit direction.
/// The drift-subtracted variant measures |x(k tau) - a k tau - x0| instead of
/// |x(k tau) - x0|.  With zero drift both reduce to the closed form.
inline double learning_radius(const ProxyParams& p, double k, double dt, int input_dim,
                              RadiusVariant variant, int n_dirs = 360) {
  if (!(k >= 1.0)) throw ParameterError("learning_radius: k must be >= 1");
  if (!(dt > 0.0)) throw ParameterError("learning_radius: dt must be positive");
  if (input_dim < 1) throw ParameterError("learning_radius: input dimension must be >= 1");
  const double horizon = k * (input_dim + 1) * dt;
  if (p.drift.norm() == 0.0) return radial_closed_form(p.gain, p.decay, horizon);
  double best = 0.0;
  for (const Vec& dir : spread_directions(p.image_basis, n_dirs)) {
    const ProxyFlow flow = integrate_proxy(p, dir, horizon);
    const Vec& end = flow.trajectory.back_state();
    const double value = variant == RadiusVariant::raw
                             ? (end - p.origin).norm()
                             : (end - horizon * p.drift - p.origin).norm();
    best = std::max(best, value);
  }
  return best;
}

}  // namespace grsreach
