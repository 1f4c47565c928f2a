#include "starsec/baselines.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace starsec {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cd = std::complex<double>;

// Gaussian elimination with partial pivoting for the small dense systems the
// baselines need (K x K and N x N with K <= N <= a few dozen).
std::vector<cd> solve(std::vector<cd> a, std::vector<cd> b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(a[r * n + col]);
            if (mag > best) {
                best = mag;
                pivot = r;
            }
        }
        if (best < 1e-14)
            throw std::runtime_error("baselines: singular or rank-deficient system");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        const cd inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const cd factor = a[r * n + col] * inv;
            if (factor == cd{}) continue;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= factor * a[col * n + j];
            b[r] -= factor * b[col];
        }
    }
    std::vector<cd> x(n);
    for (std::size_t i = n; i-- > 0;) {
        cd acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a[i * n + j] * x[j];
        x[i] = acc / a[i * n + i];
    }
    return x;
}

double norm(const std::vector<cd>& v) {
    double acc = 0.0;
    for (const cd& x : v) acc += std::norm(x);
    return std::sqrt(acc);
}

Beamformer to_beamformer(const std::vector<cd>& direction, double p_max, const char* who) {
    const double nrm = norm(direction);
    if (nrm < 1e-12) throw std::runtime_error(std::string(who) + ": degenerate channel");
    std::vector<cd> w(direction.size());
    const double scale = std::sqrt(p_max) / nrm;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = direction[i] * scale;
    Beamformer out;
    out.p_max = p_max;
    out.w = ComplexMatrix::from_std(w, w.size(), 1);
    return out;
}

}  // namespace

StarCoefficients random_star_coeffs(std::size_t l, Rng& rng) {
    if (l < 1) throw std::domain_error("random_star_coeffs: need at least one element");
    std::vector<double> theta_r(l), theta_t(l);
    for (std::size_t i = 0; i < l; ++i) theta_r[i] = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < l; ++i) theta_t[i] = rng.uniform(0.0, 2.0 * kPi);
    StarCoefficients c;
    c.beta_r = Tensor::constant(l, 1, 0.5);
    c.theta_r = Tensor::from_vector(std::move(theta_r), l, 1);
    c.theta_t_an = Tensor::from_vector(std::move(theta_t), l, 1);
    return c;
}

Beamformer mrt(const ChannelRealization& ch, const StarCoefficients& c, double p_max) {
    const std::size_t n = ch.n();
    const std::size_t l = ch.l();
    // g = h_b + (f_b^H Omega_r G)^H = h_b + G^H Omega_r^H f_b
    const auto omega = omega_r_diag(c).to_std();
    const auto f_b = ch.f_b.to_std();
    const auto g_mat = ch.g.to_std();
    std::vector<cd> g = ch.h_b.to_std();
    for (std::size_t i = 0; i < l; ++i) {
        const cd coef = std::conj(omega[i]) * f_b[i];
        for (std::size_t j = 0; j < n; ++j) g[j] += std::conj(g_mat[i * n + j]) * coef;
    }
    return to_beamformer(g, p_max, "mrt");
}

Beamformer zf(const ChannelRealization& ch, double p_max) {
    const std::size_t n = ch.n();
    const std::size_t k = ch.k();
    if (n <= k) throw std::runtime_error("zf: infeasible, needs more antennas than Eves");

    // Stack Eve direct channels as columns of H_e (n x k).
    std::vector<cd> he(n * k);
    for (std::size_t j = 0; j < k; ++j) {
        const auto h = ch.h_k[j].to_std();
        for (std::size_t i = 0; i < n; ++i) he[i * k + j] = h[i];
    }

    // gram = H_e^H H_e (k x k), rhs = H_e^H h_b
    const auto h_b = ch.h_b.to_std();
    std::vector<cd> gram(k * k), rhs(k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            cd acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += std::conj(he[i * k + a]) * he[i * k + b];
            gram[a * k + b] = acc;
        }
        cd acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += std::conj(he[i * k + a]) * h_b[i];
        rhs[a] = acc;
    }

    std::vector<cd> coeffs;
    try {
        coeffs = solve(std::move(gram), std::move(rhs), k);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("zf: rank-deficient eavesdropper channel matrix");
    }

    // Pg = h_b - H_e (H_e^H H_e)^{-1} H_e^H h_b
    std::vector<cd> projected = h_b;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) projected[i] -= he[i * k + j] * coeffs[j];
    if (norm(projected) < 1e-12)
        throw std::runtime_error("zf: Bob's channel lies in the eavesdropper span");
    return to_beamformer(projected, p_max, "zf");
}

Beamformer mmse(const ChannelRealization& ch, double p_max) {
    const std::size_t n = ch.n();
    for (double s : ch.sigma2_k)
        if (s <= 0.0) throw std::domain_error("mmse: noise variances must be positive");

    // A = I + sum_k h_k h_k^H / sigma_k^2
    std::vector<cd> a(n * n, cd{});
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
    for (std::size_t k = 0; k < ch.k(); ++k) {
        const auto h = ch.h_k[k].to_std();
        const double inv_sigma = 1.0 / ch.sigma2_k[k];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a[i * n + j] += h[i] * std::conj(h[j]) * inv_sigma;
    }
    std::vector<cd> u = solve(std::move(a), ch.h_b.to_std(), n);
    return to_beamformer(u, p_max, "mmse");
}

}  // namespace starsec
