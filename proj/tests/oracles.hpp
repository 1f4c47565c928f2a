// Independent reference implementations used as test oracles. These stay on
// std::complex scalar arithmetic and the literal textbook formulas so they
// share no code path with the library implementations they check.
#pragma once

#include <complex>
#include <vector>

#include "starsec/channel.hpp"
#include "starsec/secrecy.hpp"

namespace oracle {

using cd = std::complex<double>;

// Triple-loop matrix product.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
    return c;
}

// Scalar-by-scalar complex matrix-vector product.
inline std::vector<cd> cmatvec(const std::vector<cd>& m, const std::vector<cd>& v,
                               std::size_t rows, std::size_t cols) {
    std::vector<cd> out(rows, cd{});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[i] += m[i * cols + j] * v[j];
    return out;
}

inline std::vector<cd> omega_r_entries(const starsec::StarCoefficients& c) {
    const std::size_t l = c.elements();
    std::vector<cd> d(l);
    for (std::size_t i = 0; i < l; ++i)
        d[i] = std::polar(std::sqrt(c.beta_r.values()[i]), c.theta_r.values()[i]);
    return d;
}

inline std::vector<cd> omega_t_an_entries(const starsec::StarCoefficients& c) {
    const std::size_t l = c.elements();
    std::vector<cd> d(l);
    for (std::size_t i = 0; i < l; ++i)
        d[i] = std::polar(std::sqrt(1.0 - c.beta_r.values()[i]), c.theta_t_an.values()[i]);
    return d;
}

inline std::vector<cd> omega_t_info_entries(const starsec::StarCoefficients& c) {
    const std::size_t l = c.elements();
    std::vector<cd> d(l);
    for (std::size_t i = 0; i < l; ++i)
        d[i] = std::polar(std::sqrt(1.0 - c.beta_r.values()[i]), c.theta_t_info->values()[i]);
    return d;
}

// (h^H + f^H Omega G) w expanded literally: builds the 1 x N row vector
// first, then contracts with w.
inline cd received_gain(const std::vector<cd>& h, const std::vector<cd>& f,
                        const std::vector<cd>& omega_diag, const std::vector<cd>& g,
                        const std::vector<cd>& w, std::size_t n, std::size_t l) {
    std::vector<cd> rowvec(n, cd{});
    for (std::size_t j = 0; j < n; ++j) {
        rowvec[j] = std::conj(h[j]);
        for (std::size_t i = 0; i < l; ++i)
            rowvec[j] += std::conj(f[i]) * omega_diag[i] * g[i * n + j];
    }
    cd acc{};
    for (std::size_t j = 0; j < n; ++j) acc += rowvec[j] * w[j];
    return acc;
}

inline double sinr_bob(const starsec::ChannelRealization& ch, const starsec::StarCoefficients& c,
                       const std::vector<cd>& w) {
    const cd gain = received_gain(ch.h_b.to_std(), ch.f_b.to_std(), omega_r_entries(c),
                                  ch.g.to_std(), w, ch.n(), ch.l());
    return std::norm(gain) / ch.sigma2_b;
}

inline double sinr_eve(const starsec::ChannelRealization& ch, const starsec::StarCoefficients& c,
                       const std::vector<cd>& w, std::size_t k, starsec::Strategy strategy) {
    const std::size_t n = ch.n(), l = ch.l();
    const auto h = ch.h_k[k].to_std();
    const auto f = ch.f_k[k].to_std();
    const auto g = ch.g.to_std();
    cd direct{};
    for (std::size_t j = 0; j < n; ++j) direct += std::conj(h[j]) * w[j];
    switch (strategy) {
        case starsec::Strategy::An: {
            const cd an = received_gain(std::vector<cd>(n, cd{}), f, omega_t_an_entries(c), g, w,
                                        n, l);
            return std::norm(direct) / (std::norm(an) + ch.sigma2_k[k]);
        }
        case starsec::Strategy::Conv: {
            const cd total = received_gain(h, f, omega_t_info_entries(c), g, w, n, l);
            return std::norm(total) / ch.sigma2_k[k];
        }
        case starsec::Strategy::IrsOnly:
            return std::norm(direct) / ch.sigma2_k[k];
    }
    return 0.0;
}

inline double secrecy_rate(double gamma_b, const std::vector<double>& gamma_eves) {
    double worst = 0.0;
    for (double g : gamma_eves) worst = std::max(worst, std::log2(1.0 + g));
    return std::max(0.0, std::log2(1.0 + gamma_b) - worst);
}

}  // namespace oracle
