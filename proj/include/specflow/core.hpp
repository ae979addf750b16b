// Shared basics: error types, small geometry helpers, numeric constants.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace specflow {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

// Base for every error raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SPECFLOW_DEFINE_ERROR(Name)                                      \
  struct Name : Error {                                                  \
    explicit Name(const std::string& what = #Name) : Error(what) {}      \
  }

// domain
SPECFLOW_DEFINE_ERROR(NonPositiveRadius);
SPECFLOW_DEFINE_ERROR(RadiiOutOfOrder);
SPECFLOW_DEFINE_ERROR(TooCoarse);
SPECFLOW_DEFINE_ERROR(ParseError);
SPECFLOW_DEFINE_ERROR(NonConformingMesh);
SPECFLOW_DEFINE_ERROR(UnlabeledBoundary);
SPECFLOW_DEFINE_ERROR(InconsistentOrientation);
SPECFLOW_DEFINE_ERROR(UnknownComponent);
// operator
SPECFLOW_DEFINE_ERROR(CenterInsideDomain);
SPECFLOW_DEFINE_ERROR(NonConvergentWinding);
// boundary
SPECFLOW_DEFINE_ERROR(SignChangeOnComponent);
SPECFLOW_DEFINE_ERROR(NotElliptic);
SPECFLOW_DEFINE_ERROR(NotHermitian);
SPECFLOW_DEFINE_ERROR(NotInvertible);
// radial
SPECFLOW_DEFINE_ERROR(NotOracleConfiguration);
SPECFLOW_DEFINE_ERROR(NotRotationallySymmetric);
SPECFLOW_DEFINE_ERROR(ScanResolutionExhausted);
SPECFLOW_DEFINE_ERROR(ModeWindowTooSmall);
// fem2d
SPECFLOW_DEFINE_ERROR(SingularNPrime);
SPECFLOW_DEFINE_ERROR(MeshInvariantViolation);
SPECFLOW_DEFINE_ERROR(EigensolveFailure);
// specflow
SPECFLOW_DEFINE_ERROR(RefinementBudgetExhausted);
SPECFLOW_DEFINE_ERROR(EpsilonUndefined);
SPECFLOW_DEFINE_ERROR(NotIsospectral);
SPECFLOW_DEFINE_ERROR(AmbiguousShift);
SPECFLOW_DEFINE_ERROR(LengthMismatch);
SPECFLOW_DEFINE_ERROR(DegreesNotSumZero);
SPECFLOW_DEFINE_ERROR(PropertyViolation);
// cli
SPECFLOW_DEFINE_ERROR(MissingInput);
SPECFLOW_DEFINE_ERROR(ConfigError);

#undef SPECFLOW_DEFINE_ERROR

// Distance of an angle from 0 modulo `period` (result in [0, period/2]).
inline double angle_dist_mod(double a, double period) {
  double r = std::fmod(a, period);
  if (r < 0) r += period;
  return std::min(r, period - r);
}

// Reduce an angle into (0, period); values within eps of the lattice are the
// caller's business (used by the AB classifier after the ellipticity gate).
inline double reduce_into(double a, double period) {
  double r = std::fmod(a, period);
  if (r < 0) r += period;
  return r;
}

}  // namespace specflow
