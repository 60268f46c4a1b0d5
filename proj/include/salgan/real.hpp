#pragma once

// Floating-point precision of the numeric core.
//
// The core is compiled twice: the default 32-bit build and a 64-bit build
// (SALGAN_DOUBLE) used by gradient checks. Each build lives in its own inline
// namespace so both can be linked into one binary.

#ifdef SALGAN_DOUBLE
#define SALGAN_PRECISION f64
#else
#define SALGAN_PRECISION f32
#endif

#define SALGAN_NAMESPACE_BEGIN \
  namespace salgan {           \
  inline namespace SALGAN_PRECISION {
#define SALGAN_NAMESPACE_END \
  }                          \
  }

SALGAN_NAMESPACE_BEGIN

#ifdef SALGAN_DOUBLE
using Real = double;
#else
using Real = float;
#endif

/// Probabilities are floored to this value before any logarithm.
inline constexpr Real kProbFloor = Real(1e-8);

SALGAN_NAMESPACE_END
