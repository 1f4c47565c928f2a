#pragma once

#include "starsec/channel.hpp"
#include "starsec/secrecy.hpp"

namespace starsec {

enum class BaselineKind { Mrt, Zf, Mmse };

/// Even energy split (beta_r = 0.5 per element) with phases drawn uniformly
/// in [0, 2pi).
StarCoefficients random_star_coeffs(std::size_t l, Rng& rng);

/// Matched filter toward Bob's effective channel (direct plus the reflected
/// path under the given surface configuration), at full power.
Beamformer mrt(const ChannelRealization& ch, const StarCoefficients& c, double p_max);

/// Projects Bob's direct channel onto the null space of the stacked Eve
/// direct channels. Requires N > K and full-rank Eve channels; degenerate
/// when Bob's channel lies in the Eve span.
Beamformer zf(const ChannelRealization& ch, double p_max);

/// Regularized leakage suppression: direction (I + sum_k h_k h_k^H /
/// sigma_k^2)^{-1} h_b at full power.
Beamformer mmse(const ChannelRealization& ch, double p_max);

}  // namespace starsec
