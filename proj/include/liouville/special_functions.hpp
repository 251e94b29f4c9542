#pragma once

namespace liouville {

/// Complete elliptic integral of the first kind,
///   K(k) = int_0^1 ds / sqrt((1 - s^2)(1 - k^2 s^2)),
/// evaluated by the arithmetic-geometric mean. Defined for 0 <= k < 1;
/// moduli closer to 1 than 1e-10 raise AccuracyError.
double elliptic_K(double k);

/// Complete elliptic integral of the second kind,
///   E(k) = int_0^1 sqrt(1 - k^2 s^2) / sqrt(1 - s^2) ds,  0 <= k <= 1.
double elliptic_E(double k);

/// Z(k) = E(k) / (1 - k^2) - K(k) = k dK/dk, for 0 < k < 1.
///
/// Evaluated from the AGM sequence directly so that the leading k^2 term does
/// not cancel for small k.
double zeta_Z(double k);

}  // namespace liouville
