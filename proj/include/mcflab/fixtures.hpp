#pragma once

#include <cstdint>

#include "mcflab/gridfield.hpp"

// Closed-form graph maps used as fixtures by the tests and the CLI configs.
namespace mcflab::fixtures {

/// f(x) = A x with A of shape k x n.
Generator linear_map(const Mat& A);
Generator constant_map(const Vec& c);

/**
 * Upper hemisphere of radius rho, f(x) = sqrt(rho^2 - |x|^2) (k = 1). |x| is
 * clamped at clamp * rho so the map stays finite on a cube reaching past the
 * equator; values beyond the clamp radius are padding, not sphere data.
 */
Generator sphere_cap(double rho, double clamp = 0.97);

/// f(x) = c |x|^2 (k = 1).
Generator quadratic_bowl(double c);

/// f(x) = |x| + c (k = 1).
Generator abs_plus_const(double c);

/// f(x) = amplitude exp(1 - 1/(1 - |x - center|^2 / width^2)) inside the
/// support, 0 outside; smooth with compact support, peak = amplitude (k = 1).
Generator compact_bump(const Vec& center, double width, double amplitude);

/// f(x) = amplitude exp(-|x|^2 / width^2) (k = 1).
Generator gaussian_bump(double width, double amplitude);

/// f(x) = c x_1 x_2 (n >= 2, k = 1).
Generator saddle(double c);

/// Degree-one homogeneous map |x| phi(x/|x|), phi(u) = u_1^2 - u_2^2 + u_1/2 (k = 1).
Generator homogeneous_cone();

/// Seeded sum of `modes` sinusoids per component, amplitude-bounded.
Generator random_smooth(int n, int k, std::uint64_t seed, int modes = 3, double amplitude = 0.2);

/// Sum of two maps with the same k.
Generator sum(Generator a, Generator b);
/// x -> f(s x) / s.
Generator blowdown(Generator f, double s);

} // namespace mcflab::fixtures
