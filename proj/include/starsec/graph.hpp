#pragma once

#include "starsec/secrecy.hpp"
#include "starsec/tensor.hpp"

namespace starsec {

struct GraphOptions {
    bool symmetrize_adjacency = false;  // ablation hook; default mirrors the display
};

/// Graph fed to the network: row 0 is the surface (mean) node, row 1 is Bob,
/// rows 2..K+1 are the eavesdroppers. Feature width is 2N + 2NL.
struct GraphInput {
    Tensor x;       // (K+2) x (2N + 2NL)
    Tensor a;       // (K+2) x (K+2)
    Tensor a_norm;  // D^{-1/2} (A + I) D^{-1/2}
    std::size_t n = 0, l = 0, k = 0;
};

/// Node features [Re(h), Im(h), Re(d), Im(d)] per receiver; row 0 is the
/// arithmetic mean of Bob's and all Eves' rows.
Tensor build_features(const EffectiveChannels& ch);
Tensor build_features(const ChannelRealization& ch);

/// (K+2)-node adjacency: the surface and Bob point at each other, every Eve
/// points at both, nothing points at an Eve.
Tensor build_adjacency(std::size_t k);

/// Symmetric normalization with self-loops; D is the diagonal of (A + I) row
/// sums. Domain error if any row sum is non-positive.
Tensor normalize_adjacency(const Tensor& a);

GraphInput build_graph(const EffectiveChannels& ch, const GraphOptions& opts = {});
GraphInput build_graph(const ChannelRealization& ch, const GraphOptions& opts = {});

/// ReLU(A_norm * X * F), taped when autodiff is active.
Tensor gcn_layer(const Tensor& x, const Tensor& a_norm, const Tensor& f);

}  // namespace starsec
