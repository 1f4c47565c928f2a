#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "starsec/baselines.hpp"

using namespace starsec;

namespace {

constexpr double kPi = 3.14159265358979323846;

double power_of(const Beamformer& w) {
    double acc = 0.0;
    for (const auto& e : w.w.to_std()) acc += std::norm(e);
    return acc;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("random surface configuration") {
    Rng rng(3);
    const StarCoefficients c = random_star_coeffs(16, rng);
    for (double b : c.beta_r.values()) CHECK(b == 0.5);
    for (double t : c.theta_r.values()) {
        CHECK(t >= 0.0);
        CHECK(t < 2.0 * kPi);
    }
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i < 10000; ++i) {
        const StarCoefficients draw = random_star_coeffs(4, rng);
        for (double t : draw.theta_r.values()) {
            acc += t;
            ++count;
        }
    }
    CHECK(acc / count == doctest::Approx(kPi).epsilon(0.05 / kPi));
}

TEST_CASE("mrt: matched filter without the surface") {
    ChannelRealization ch;
    ch.h_b = ComplexMatrix::from_std({{1.0, 0.0}, {0.0, 0.0}}, 2, 1);
    ch.f_b = ComplexMatrix::zeros(1, 1);
    ch.g = ComplexMatrix::zeros(1, 2);
    ch.h_k = {ComplexMatrix::from_std({{0.0, 0.0}, {1.0, 0.0}}, 2, 1)};
    ch.f_k = {ComplexMatrix::zeros(1, 1)};
    ch.sigma2_b = 1.0;
    ch.sigma2_k = {1.0};

    StarCoefficients c;
    c.beta_r = Tensor::zeros(1, 1);  // no reflection at all
    c.theta_r = Tensor::zeros(1, 1);
    c.theta_t_an = Tensor::zeros(1, 1);

    const double p = 4.0;
    const Beamformer w = mrt(ch, c, p);
    const auto wv = w.w.to_std();
    CHECK(std::abs(wv[0] - std::complex<double>(2.0, 0.0)) < 1e-12);
    CHECK(std::abs(wv[1]) < 1e-12);
}

TEST_CASE("mrt maximizes Bob's SINR over random competitors") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(5);
    const ChannelRealization ch = sample_channels(cfg, rng);
    const StarCoefficients c = random_star_coeffs(ch.l(), rng);
    const Beamformer best = mrt(ch, c, cfg.p_max);
    const double gamma_best = sinr_bob(ch, c, best).item();
    for (int i = 0; i < 100; ++i) {
        std::vector<std::complex<double>> v(ch.n());
        double nrm = 0.0;
        for (auto& x : v) {
            x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            nrm += std::norm(x);
        }
        const double scale = std::sqrt(cfg.p_max / nrm);
        for (auto& x : v) x *= scale;
        Beamformer rival;
        rival.p_max = cfg.p_max;
        rival.w = ComplexMatrix::from_std(v, ch.n(), 1);
        CHECK(gamma_best >= sinr_bob(ch, c, rival).item() - 1e-12);
    }
}

TEST_CASE("mrt matches the scalar oracle with the surface path") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(7);
    const ChannelRealization ch = sample_channels(cfg, rng);
    const StarCoefficients c = random_star_coeffs(ch.l(), rng);
    const Beamformer w = mrt(ch, c, cfg.p_max);

    // Oracle: g = h_b + G^H Omega_r^H f_b computed scalarwise.
    const auto omega = oracle::omega_r_entries(c);
    const auto fb = ch.f_b.to_std();
    const auto gm = ch.g.to_std();
    auto g = ch.h_b.to_std();
    for (std::size_t i = 0; i < ch.l(); ++i)
        for (std::size_t j = 0; j < ch.n(); ++j)
            g[j] += std::conj(gm[i * ch.n() + j]) * std::conj(omega[i]) * fb[i];
    double nrm = 0.0;
    for (const auto& x : g) nrm += std::norm(x);
    const double scale = std::sqrt(cfg.p_max / nrm);
    const auto wv = w.w.to_std();
    for (std::size_t j = 0; j < ch.n(); ++j)
        CHECK(std::abs(wv[j] - g[j] * scale) < 1e-12 * std::max(1.0, std::abs(g[j] * scale)));
}

TEST_CASE("zf: orthogonal case and nulling property") {
    ChannelRealization ch;
    ch.h_b = ComplexMatrix::from_std({{1.0, 0.0}, {0.0, 0.0}}, 2, 1);
    ch.h_k = {ComplexMatrix::from_std({{0.0, 0.0}, {1.0, 0.0}}, 2, 1)};
    ch.f_b = ComplexMatrix::zeros(1, 1);
    ch.f_k = {ComplexMatrix::zeros(1, 1)};
    ch.g = ComplexMatrix::zeros(1, 2);
    ch.sigma2_b = 1.0;
    ch.sigma2_k = {1.0};
    const Beamformer w = zf(ch, 4.0);
    const auto wv = w.w.to_std();
    CHECK(std::abs(wv[0] - std::complex<double>(2.0, 0.0)) < 1e-12);
    CHECK(std::abs(wv[1]) < 1e-12);

    // Parallel Bob/Eve channels leave nothing after projection.
    ChannelRealization bad = ch;
    bad.h_k[0] = bad.h_b;
    CHECK_THROWS_AS(zf(bad, 4.0), std::runtime_error);

    // Random N=4, K=2: residual leakage below 1e-10 * sqrt(P).
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const ChannelRealization r = sample_channels(cfg, rng);
        const Beamformer wr = zf(r, cfg.p_max);
        const auto wrv = wr.w.to_std();
        for (std::size_t k = 0; k < r.k(); ++k) {
            std::complex<double> leak{};
            const auto h = r.h_k[k].to_std();
            for (std::size_t j = 0; j < r.n(); ++j) leak += std::conj(h[j]) * wrv[j];
            double hnorm = 0.0, wnorm = 0.0;
            for (const auto& x : h) hnorm += std::norm(x);
            for (const auto& x : wrv) wnorm += std::norm(x);
            CHECK(std::abs(leak) / std::sqrt(hnorm * wnorm) < 1e-10);
        }
    }
}

TEST_CASE("zf feasibility guards") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    cfg.N = 2;
    cfg.K = 2;
    Rng rng(13);
    const ChannelRealization ch = sample_channels(cfg, rng);
    CHECK_THROWS_AS(zf(ch, 1.0), std::runtime_error);  // N <= K
}

TEST_CASE("mmse: reductions and oracle") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(17);
    ChannelRealization ch = sample_channels(cfg, rng);

    // Zero eavesdropper channels reduce MMSE to the MRT direction.
    ChannelRealization quiet = ch;
    for (auto& h : quiet.h_k) h = ComplexMatrix::zeros(ch.n(), 1);
    const Beamformer w_mmse = mmse(quiet, cfg.p_max);
    StarCoefficients no_surface;
    no_surface.beta_r = Tensor::zeros(ch.l(), 1);
    no_surface.theta_r = Tensor::zeros(ch.l(), 1);
    no_surface.theta_t_an = Tensor::zeros(ch.l(), 1);
    const Beamformer w_mrt = mrt(quiet, no_surface, cfg.p_max);
    // Directions agree up to a global phase; compare |<a, b>| with norms.
    std::complex<double> ip{};
    for (std::size_t j = 0; j < ch.n(); ++j)
        ip += std::conj(w_mmse.w.to_std()[j]) * w_mrt.w.to_std()[j];
    CHECK(std::abs(ip) == doctest::Approx(cfg.p_max).epsilon(1e-9));

    // Huge noise variance also collapses to MRT.
    ChannelRealization noisy = ch;
    for (auto& s : noisy.sigma2_k) s = 1e12;
    const Beamformer w_noisy = mmse(noisy, cfg.p_max);
    const Beamformer w_mrt2 = mrt(noisy, no_surface, cfg.p_max);
    ip = {};
    for (std::size_t j = 0; j < ch.n(); ++j)
        ip += std::conj(w_noisy.w.to_std()[j]) * w_mrt2.w.to_std()[j];
    CHECK(std::abs(ip) == doctest::Approx(cfg.p_max).epsilon(1e-6));

    // Random case against a dense solve residual: A u = h_b.
    const Beamformer w = mmse(ch, cfg.p_max);
    const auto wv = w.w.to_std();
    // Rebuild A and verify A w is parallel to h_b (residual orthogonality).
    const std::size_t n = ch.n();
    std::vector<std::complex<double>> a(n * n, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
    for (std::size_t k = 0; k < ch.k(); ++k) {
        const auto h = ch.h_k[k].to_std();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a[i * n + j] += h[i] * std::conj(h[j]) / ch.sigma2_k[k];
    }
    const auto aw = oracle::cmatvec(a, wv, n, n);
    const auto hb = ch.h_b.to_std();
    // aw should equal scale * h_b for one real positive scale.
    std::complex<double> num{};
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += std::conj(hb[i]) * aw[i];
        den += std::norm(hb[i]);
    }
    const std::complex<double> scale = num / den;
    for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(aw[i] - scale * hb[i]) < 1e-10 * std::abs(scale));
}

TEST_CASE("every baseline meets the power budget with equality") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const ChannelRealization ch = sample_channels(cfg, rng);
        const StarCoefficients c = random_star_coeffs(ch.l(), rng);
        for (const Beamformer& w :
             {mrt(ch, c, cfg.p_max), zf(ch, cfg.p_max), mmse(ch, cfg.p_max)}) {
            CHECK(std::abs(power_of(w) - cfg.p_max) <= 1e-9 * cfg.p_max);
        }
    }
}

}  // TEST_SUITE
