/**
 * @file kinematics.hpp
 * @brief Closed-form planar IK for the two-link shoulder/elbow chain plus
 *        the base azimuth, and the forward map used to check it.
 *
 * Conventions (lengths in mm, angles in rad):
 *   - theta2 is the shoulder bend measured from the horizontal of the arm
 *     plane, theta3 the interior elbow angle (pi = fully extended).
 *   - phi is the absolute forearm angle, phi = theta2 + theta3 - pi.
 *   - theta4 is the wrist bend returned by the closed form; in the acute
 *     regime it equals pi - phi, i.e. the gripper keeps a fixed
 *     absolute orientation.
 */
#pragma once

#include <cmath>
#include <numbers>

#include "voicearm/error.hpp"

namespace voicearm::kinematics {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct ArmGeometry {
  double l1 = 100.0;
  double l2 = 100.0;

  /// Throws InvalidConfig unless both links are finite and positive.
  void validate() const {
    if (!(std::isfinite(l1) && std::isfinite(l2) && l1 > 0.0 && l2 > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "link lengths must be finite and > 0");
    }
  }

  bool operator==(const ArmGeometry&) const = default;
};

struct PlanarTarget {
  double a = 0.0;       // in-plane horizontal (mm)
  double b = 0.0;       // in-plane vertical (mm)
  double theta1 = 0.0;  // base azimuth (rad)

  bool operator==(const PlanarTarget&) const = default;
};

struct JointSolution {
  double theta2 = 0.0;
  double theta3 = 0.0;
  double theta4 = 0.0;

  bool operator==(const JointSolution&) const = default;
};

/// Intermediate quantities of the closed form, kept for diagnostics.
struct IkDerivation {
  double gamma = 0.0;
  double alpha = 0.0;
  double phi = 0.0;
  double r = 0.0;
  /// r^2 >= l1^2 + l2^2. Outside this regime the principal arcsin can pick
  /// the wrong triangle branch; the result is still returned but flagged.
  bool acute = true;

  bool operator==(const IkDerivation&) const = default;
};

struct IkResult {
  JointSolution joints;
  IkDerivation derivation;
};

/// Five servo joints plus the gripper jaw.
struct JointState {
  double theta1 = 0.0;   // base rotation
  double theta2 = 0.0;   // shoulder bend
  double theta3 = 0.0;   // elbow bend
  double theta4 = 0.0;   // wrist bend
  double theta5 = 0.0;   // wrist rotate
  double gripper = 0.0;  // jaw angle

  bool operator==(const JointState&) const = default;
};

struct IkOptions {
  /// Reach slack relative to l1 + l2.
  double epsilon = 1e-9;
};

namespace detail {
inline double clamp_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }
}  // namespace detail

inline IkResult solve_ik(const ArmGeometry& geom, const PlanarTarget& target,
                         const IkOptions& opts = {}) {
  const double a = target.a;
  const double b = target.b;
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::DegenerateTarget, "target coordinates must be finite");
  }
  if (a == 0.0 && b == 0.0) {
    throw Error(ErrorCode::DegenerateTarget, "target at the shoulder origin");
  }

  const double l1 = geom.l1;
  const double l2 = geom.l2;
  const double r = std::hypot(a, b);
  const double slack = opts.epsilon * (l1 + l2);
  if (r > l1 + l2 + slack || r < std::fabs(l1 - l2) - slack) {
    throw Error(ErrorCode::Unreachable,
                "reach " + std::to_string(r) + " mm outside [" +
                    std::to_string(std::fabs(l1 - l2)) + ", " + std::to_string(l1 + l2) + "]");
  }

  const double r2 = a * a + b * b;
  const double gamma = std::acos(detail::clamp_unit((r2 - (l1 * l1 + l2 * l2)) / (2.0 * l1 * l2)));
  const double alpha = std::atan2(b, a);
  const double sin_gamma = std::sin(gamma);

  JointSolution joints;
  joints.theta2 = alpha + std::asin(detail::clamp_unit(l2 * sin_gamma / r));
  joints.theta3 = kPi - gamma;
  joints.theta4 = kPi + std::asin(detail::clamp_unit(l1 * sin_gamma / r)) - alpha;

  IkDerivation deriv;
  deriv.gamma = gamma;
  deriv.alpha = alpha;
  deriv.phi = joints.theta2 - gamma;
  deriv.r = r;
  deriv.acute = r2 >= l1 * l1 + l2 * l2;
  return {joints, deriv};
}

struct PlanarPoint {
  double a = 0.0;
  double b = 0.0;
};

inline PlanarPoint forward_planar(const ArmGeometry& geom, double theta2, double theta3) {
  const double phi = theta2 + theta3 - kPi;
  return {geom.l1 * std::cos(theta2) + geom.l2 * std::cos(phi),
          geom.l1 * std::sin(theta2) + geom.l2 * std::sin(phi)};
}

/// Operator (x, y, z) to the arm-plane convention. Points behind the base
/// (y < 0) are reached by swinging the base to theta1 + pi and reaching
/// back over the shoulder, which gives a negative in-plane a.
inline PlanarTarget target_from_xyz(double x, double y, double z) {
  if (x == 0.0 && y == 0.0) {
    throw Error(ErrorCode::DegenerateTarget, "target on the base axis");
  }
  double theta1 = std::atan2(y, x);
  double a = std::hypot(x, y);
  if (theta1 < 0.0) {
    theta1 += kPi;
    a = -a;
  }
  return {a, z, theta1};
}

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Wrist-centre position for a joint state; inverse of target_from_xyz
/// composed with solve_ik.
inline Point3 forward_xyz(const ArmGeometry& geom, const JointState& q) {
  const PlanarPoint p = forward_planar(geom, q.theta2, q.theta3);
  return {p.a * std::cos(q.theta1), p.a * std::sin(q.theta1), p.b};
}

}  // namespace voicearm::kinematics
