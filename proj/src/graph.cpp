#include "starsec/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace starsec {

namespace {

// One receiver row: real/imaginary split of the direct vector and the
// vectorized cascaded matrix.
void fill_feature_row(Tensor& x, std::size_t row, const ComplexMatrix& h,
                      const ComplexMatrix& d_mat) {
    const std::size_t n = h.rows();
    const std::size_t ln = d_mat.size();
    for (std::size_t i = 0; i < n; ++i) {
        x.at(row, i) = h.re.values()[i];
        x.at(row, n + i) = h.im.values()[i];
    }
    for (std::size_t i = 0; i < ln; ++i) {
        x.at(row, 2 * n + i) = d_mat.re.values()[i];
        x.at(row, 2 * n + ln + i) = d_mat.im.values()[i];
    }
}

}  // namespace

Tensor build_features(const EffectiveChannels& ch) {
    const std::size_t n = ch.n();
    const std::size_t ln = ch.l() * n;
    const std::size_t width = 2 * n + 2 * ln;
    const std::size_t rows = ch.k() + 2;
    Tensor x(rows, width);
    fill_feature_row(x, 1, ch.h_b, ch.d_b);
    for (std::size_t k = 0; k < ch.k(); ++k) fill_feature_row(x, 2 + k, ch.h_k[k], ch.d_k[k]);
    // Mean node: averaging channels commutes with the real/imag split, so the
    // row is the mean of the receiver rows.
    const double inv = 1.0 / static_cast<double>(rows - 1);
    for (std::size_t j = 0; j < width; ++j) {
        double acc = 0.0;
        for (std::size_t i = 1; i < rows; ++i) acc += x.at(i, j);
        x.at(0, j) = acc * inv;
    }
    return x;
}

Tensor build_features(const ChannelRealization& ch) {
    return build_features(effective_channels(ch));
}

Tensor build_adjacency(std::size_t k) {
    if (k < 1) throw std::invalid_argument("build_adjacency: need at least one eavesdropper");
    const std::size_t m = k + 2;
    Tensor a(m, m);
    a.at(0, 1) = 1.0;
    a.at(1, 0) = 1.0;
    for (std::size_t i = 2; i < m; ++i) {
        a.at(i, 0) = 1.0;
        a.at(i, 1) = 1.0;
    }
    return a;
}

Tensor normalize_adjacency(const Tensor& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("normalize_adjacency: matrix not square");
    const std::size_t m = a.rows();
    std::vector<double> inv_sqrt_deg(m);
    for (std::size_t i = 0; i < m; ++i) {
        double deg = 1.0;  // self-loop
        for (std::size_t j = 0; j < m; ++j) deg += a.at(i, j);
        if (deg <= 0.0) throw std::domain_error("normalize_adjacency: zero-degree node");
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    Tensor out(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double self = (i == j) ? 1.0 : 0.0;
            out.at(i, j) = inv_sqrt_deg[i] * (a.at(i, j) + self) * inv_sqrt_deg[j];
        }
    return out;
}

GraphInput build_graph(const EffectiveChannels& ch, const GraphOptions& opts) {
    GraphInput g;
    g.n = ch.n();
    g.l = ch.l();
    g.k = ch.k();
    g.x = build_features(ch);
    g.a = build_adjacency(g.k);
    if (opts.symmetrize_adjacency) {
        for (std::size_t i = 0; i < g.a.rows(); ++i)
            for (std::size_t j = i + 1; j < g.a.cols(); ++j) {
                const double v = std::max(g.a.at(i, j), g.a.at(j, i));
                g.a.at(i, j) = v;
                g.a.at(j, i) = v;
            }
    }
    g.a_norm = normalize_adjacency(g.a);
    return g;
}

GraphInput build_graph(const ChannelRealization& ch, const GraphOptions& opts) {
    return build_graph(effective_channels(ch), opts);
}

Tensor gcn_layer(const Tensor& x, const Tensor& a_norm, const Tensor& f) {
    return relu(matmul(matmul(a_norm, x), f));
}

}  // namespace starsec
