#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace inertiaid {

inline constexpr int kStateDim = 8;
inline constexpr int kOutputDim = 3;    // measured pose: x, y, psi
inline constexpr int kThrusterCount = 4;
inline constexpr int kParamCount = 2;   // mass, izz

// Layout of the augmented state vector. The two trailing entries are the
// constant parameter states (their time derivatives are identically zero).
enum StateIndex : int {
  kX = 0,     // inertial x position [m]
  kY = 1,     // inertial y position [m]
  kPsi = 2,   // heading [rad], kept unwrapped during propagation
  kU = 3,     // body x velocity [m/s]
  kV = 4,     // body y velocity [m/s]
  kR = 5,     // angular rate [rad/s]
  kMass = 6,  // [kg]
  kIzz = 7    // planar moment of inertia [kg m^2]
};

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateDim, 1>;
template <typename Scalar>
using StateMatrix = Eigen::Matrix<Scalar, kStateDim, kStateDim>;
template <typename Scalar>
using ThrustVector = Eigen::Matrix<Scalar, kThrusterCount, 1>;

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec8 = StateVector<double>;
using Mat3 = Eigen::Matrix3d;
using Mat8 = StateMatrix<double>;

// Body-frame net force and moment produced by the four nozzles.
template <typename Scalar>
struct GeneralizedForce {
  Scalar fx{0};  // [N]
  Scalar fy{0};  // [N]
  Scalar mz{0};  // [N m]

  Eigen::Matrix<Scalar, 3, 1> to_vector() const {
    return Eigen::Matrix<Scalar, 3, 1>(fx, fy, mz);
  }
};

using GeneralizedForced = GeneralizedForce<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGramForceToNewton = 9.80665e-3;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

inline Vec8 make_state(double x, double y, double psi, double u, double v,
                       double r, double mass, double izz) {
  Vec8 s;
  s << x, y, psi, u, v, r, mass, izz;
  return s;
}

}  // namespace inertiaid
