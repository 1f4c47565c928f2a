#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "starsec/baselines.hpp"
#include "starsec/secrecy.hpp"

using namespace starsec;

namespace {

constexpr double kPi = 3.14159265358979323846;

StarCoefficients random_coeffs(std::size_t l, Rng& rng) {
    std::vector<double> beta(l), tr(l), tt(l), ti(l);
    for (std::size_t i = 0; i < l; ++i) {
        beta[i] = rng.uniform(0.05, 0.95);
        tr[i] = rng.uniform(0.0, 2.0 * kPi);
        tt[i] = rng.uniform(0.0, 2.0 * kPi);
        ti[i] = rng.uniform(0.0, 2.0 * kPi);
    }
    StarCoefficients c;
    c.beta_r = Tensor::from_vector(std::move(beta), l, 1);
    c.theta_r = Tensor::from_vector(std::move(tr), l, 1);
    c.theta_t_an = Tensor::from_vector(std::move(tt), l, 1);
    c.theta_t_info = Tensor::from_vector(std::move(ti), l, 1);
    return c;
}

Beamformer random_beamformer(std::size_t n, double p_max, Rng& rng) {
    std::vector<std::complex<double>> w(n);
    double nrm = 0.0;
    for (auto& x : w) {
        x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        nrm += std::norm(x);
    }
    const double scale = std::sqrt(p_max / nrm);
    for (auto& x : w) x *= scale;
    Beamformer b;
    b.p_max = p_max;
    b.w = ComplexMatrix::from_std(w, n, 1);
    return b;
}

}  // namespace

TEST_SUITE("secrecy") {

TEST_CASE("omega matrices: identity, zero, exact entry") {
    const std::size_t l = 3;
    StarCoefficients ones;
    ones.beta_r = Tensor::constant(l, 1, 1.0);
    ones.theta_r = Tensor::zeros(l, 1);
    ones.theta_t_an = Tensor::zeros(l, 1);
    const ComplexMatrix omr = omega_r(ones);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) {
            CHECK(omr.re.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
            CHECK(omr.im.at(i, j) == doctest::Approx(0.0));
        }
    // beta_r = 1 leaves nothing for transmission.
    const ComplexMatrix omt = omega_t_an(ones);
    for (std::size_t i = 0; i < l * l; ++i) CHECK(omt.re.values()[i] == doctest::Approx(0.0));

    StarCoefficients zero = ones;
    zero.beta_r = Tensor::zeros(l, 1);
    const ComplexMatrix omr0 = omega_r(zero);
    for (std::size_t i = 0; i < l * l; ++i) CHECK(omr0.re.values()[i] == doctest::Approx(0.0));

    StarCoefficients quarter = ones;
    quarter.beta_r = Tensor::constant(l, 1, 0.25);
    quarter.theta_r = Tensor::constant(l, 1, kPi);
    const ComplexMatrix omq = omega_r(quarter);
    CHECK(omq.re.at(1, 1) == doctest::Approx(-0.5));
    CHECK(omq.im.at(1, 1) == doctest::Approx(0.0).epsilon(1e-12));

    // Half split gives (1/sqrt(2)) I on the AN side.
    StarCoefficients half = ones;
    half.beta_r = Tensor::constant(l, 1, 0.5);
    const ComplexMatrix omh = omega_t_an(half);
    CHECK(omh.re.at(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("energy conservation identity") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const StarCoefficients c = random_coeffs(8, rng);
        const auto r = omega_r_diag(c).to_std();
        const auto t = omega_t_an_diag(c).to_std();
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(std::abs(std::norm(r[i]) + std::norm(t[i]) - 1.0) < 1e-12);
    }
}

TEST_CASE("beta range violations are domain errors") {
    StarCoefficients c;
    c.beta_r = Tensor::constant(2, 1, 1.2);
    c.theta_r = Tensor::zeros(2, 1);
    c.theta_t_an = Tensor::zeros(2, 1);
    CHECK_THROWS_AS(omega_r(c), std::domain_error);
}

TEST_CASE("symbol-level phase modulation") {
    Rng rng(5);
    std::vector<std::complex<double>> symbols(100000);
    for (auto& s : symbols) s = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));

    const auto z = apply_symbol_phase(symbols, rng);
    std::complex<double> mean{};
    double power_in = 0.0, power_out = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        mean += z[i];
        power_in += std::norm(symbols[i]);
        power_out += std::norm(z[i]);
        CHECK(std::abs(std::abs(z[i]) - std::abs(symbols[i])) < 1e-12);
    }
    mean /= static_cast<double>(z.size());
    CHECK(std::abs(mean) < 0.02);
    CHECK(power_out == doctest::Approx(power_in).epsilon(1e-12));
}

TEST_CASE("sinr_bob trivial cases") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(7);
    const ChannelRealization ch = sample_channels(cfg, rng);
    const StarCoefficients c = random_coeffs(ch.l(), rng);

    Beamformer zero;
    zero.p_max = cfg.p_max;
    zero.w = ComplexMatrix::zeros(ch.n(), 1);
    CHECK(sinr_bob(ch, c, zero).item() == doctest::Approx(0.0));

    // N=1, L=1, h_b=1, f_b=0, w=1, sigma^2=1 reduces to 1.
    ChannelRealization tiny;
    tiny.h_b = ComplexMatrix::from_std({{1.0, 0.0}}, 1, 1);
    tiny.f_b = ComplexMatrix::from_std({{0.0, 0.0}}, 1, 1);
    tiny.g = ComplexMatrix::from_std({{1.0, 0.0}}, 1, 1);
    tiny.h_k = {ComplexMatrix::from_std({{0.5, 0.0}}, 1, 1)};
    tiny.f_k = {ComplexMatrix::from_std({{0.0, 0.0}}, 1, 1)};
    tiny.sigma2_b = 1.0;
    tiny.sigma2_k = {1.0};
    StarCoefficients c1 = random_coeffs(1, rng);
    Beamformer one;
    one.p_max = 1.0;
    one.w = ComplexMatrix::from_std({{1.0, 0.0}}, 1, 1);
    CHECK(sinr_bob(tiny, c1, one).item() == doctest::Approx(1.0));
}

TEST_CASE("sinr formulas match the scalar-expansion oracle") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    cfg.N = 4;
    cfg.L = 8;
    cfg.K = 2;
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const ChannelRealization ch = sample_channels(cfg, rng);
        const StarCoefficients c = random_coeffs(ch.l(), rng);
        const Beamformer w = random_beamformer(ch.n(), cfg.p_max, rng);
        const auto wv = w.w.to_std();

        const double gb = sinr_bob(ch, c, w).item();
        const double gb_ref = oracle::sinr_bob(ch, c, wv);
        CHECK(std::abs(gb - gb_ref) <= 1e-10 * std::max(1.0, std::abs(gb_ref)));

        for (std::size_t k = 0; k < ch.k(); ++k) {
            for (Strategy s : {Strategy::An, Strategy::Conv, Strategy::IrsOnly}) {
                const double ge = sinr_eve(ch, c, w, k, s).item();
                const double ge_ref = oracle::sinr_eve(ch, c, wv, k, s);
                CHECK(std::abs(ge - ge_ref) <= 1e-10 * std::max(1.0, std::abs(ge_ref)));
            }
        }
    }
}

TEST_CASE("sinr_eve edge cases") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(13);
    ChannelRealization ch = sample_channels(cfg, rng);
    const StarCoefficients c = random_coeffs(ch.l(), rng);
    const Beamformer w = random_beamformer(ch.n(), cfg.p_max, rng);

    // No surface path to Eve: AN denominator collapses to the noise floor.
    ch.f_k[0] = ComplexMatrix::zeros(ch.l(), 1);
    const double an = sinr_eve(ch, c, w, 0, Strategy::An).item();
    const double direct = sinr_eve(ch, c, w, 0, Strategy::IrsOnly).item();
    CHECK(an == doctest::Approx(direct).epsilon(1e-12));

    // Full reflection makes the AN strategy identical to reflection-only.
    StarCoefficients full = c;
    full.beta_r = Tensor::constant(ch.l(), 1, 1.0);
    const double an_full = sinr_eve(ch, full, w, 1, Strategy::An).item();
    const double irs = sinr_eve(ch, full, w, 1, Strategy::IrsOnly).item();
    CHECK(std::abs(an_full - irs) < 1e-12 * std::max(1.0, irs));

    CHECK_THROWS_AS(sinr_eve(ch, c, w, 5, Strategy::An), std::logic_error);
}

TEST_CASE("AN interference strictly reduces Eve SINR") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(17);
    const ChannelRealization ch = sample_channels(cfg, rng);
    const Beamformer w = random_beamformer(ch.n(), cfg.p_max, rng);
    StarCoefficients c = random_coeffs(ch.l(), rng);

    double previous = std::numeric_limits<double>::infinity();
    for (double beta : {0.9, 0.5, 0.1}) {  // smaller beta_r -> stronger AN
        c.beta_r = Tensor::constant(ch.l(), 1, beta);
        const double ge = sinr_eve(ch, c, w, 0, Strategy::An).item();
        CHECK(ge < previous);
        previous = ge;
    }
}

TEST_CASE("secrecy rate definition") {
    CHECK(secrecy_rate(1.0, {1.0}) == doctest::Approx(0.0));
    CHECK(secrecy_rate(3.0, {1.0, 0.0}) == doctest::Approx(1.0));
    CHECK(secrecy_rate(0.0, {3.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(secrecy_rate(1.0, {}), std::logic_error);

    // Tensor form agrees with the scalar form and respects the clamp flag.
    Tensor gb = Tensor::scalar(3.0);
    std::vector<Tensor> ge = {Tensor::scalar(1.0), Tensor::scalar(0.0)};
    CHECK(secrecy_rate(gb, ge).item() == doctest::Approx(1.0));
    Tensor low = Tensor::scalar(0.0);
    std::vector<Tensor> high = {Tensor::scalar(3.0)};
    CHECK(secrecy_rate(low, high, true).item() == doctest::Approx(0.0));
    CHECK(secrecy_rate(low, high, false).item() == doctest::Approx(-2.0));
}

TEST_CASE("rate invariances: permutation and global beamformer phase") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    cfg.K = 3;
    Rng rng(19);
    const ChannelRealization ch = sample_channels(cfg, rng);
    const StarCoefficients c = random_coeffs(ch.l(), rng);
    const Beamformer w = random_beamformer(ch.n(), cfg.p_max, rng);

    const double gb = sinr_bob(ch, c, w).item();
    std::vector<double> ge;
    for (std::size_t k = 0; k < ch.k(); ++k)
        ge.push_back(sinr_eve(ch, c, w, k, Strategy::An).item());
    const double rs = secrecy_rate(gb, ge);
    CHECK(rs >= 0.0);
    std::vector<double> permuted = {ge[2], ge[0], ge[1]};
    CHECK(secrecy_rate(gb, permuted) == doctest::Approx(rs));

    // Multiply w by a unit-modulus scalar.
    auto wv = w.w.to_std();
    const std::complex<double> rot = std::polar(1.0, 1.234);
    for (auto& x : wv) x *= rot;
    Beamformer w2;
    w2.p_max = w.p_max;
    w2.w = ComplexMatrix::from_std(wv, ch.n(), 1);
    CHECK(std::abs(sinr_bob(ch, c, w2).item() - gb) < 1e-12 * std::max(1.0, gb));
    for (std::size_t k = 0; k < ch.k(); ++k) {
        const double before = ge[k];
        const double after = sinr_eve(ch, c, w2, k, Strategy::An).item();
        CHECK(std::abs(after - before) < 1e-12 * std::max(1.0, before));
    }
}

TEST_CASE("expected secrecy rate") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(23);
    const ChannelRealization ch = sample_channels(cfg, rng);
    const StarCoefficients c = random_coeffs(ch.l(), rng);
    const Beamformer w = random_beamformer(ch.n(), cfg.p_max, rng);
    const EffectiveChannels eff = effective_channels(ch);

    // Zero variance: equals the deterministic rate with zero standard error.
    CsiErrorSigmas zero;
    zero.sigma2_h.assign(ch.k(), 0.0);
    zero.sigma2_d.assign(ch.k(), 0.0);
    const double exact = secrecy_rate_value(eff, c, w.w, Strategy::An);
    const RateEstimate det = expected_secrecy_rate(eff, zero, c, w.w, Strategy::An, 16, rng);
    CHECK(det.mean == doctest::Approx(exact).epsilon(1e-12));
    CHECK(det.std_error == doctest::Approx(0.0));

    const RateEstimate single = expected_secrecy_rate(eff, zero, c, w.w, Strategy::An, 1, rng);
    CHECK(single.samples == 1);

    // Monte Carlo self-consistency across disjoint seeds.
    CsiErrorSigmas sig;
    sig.sigma2_h.assign(ch.k(), 0.01 * ch.gains.h_k[0]);
    sig.sigma2_d.assign(ch.k(), 0.01 * ch.gains.f_k[0] * ch.gains.g);
    Rng r1(1001), r2(2002);
    const RateEstimate e1 = expected_secrecy_rate(eff, sig, c, w.w, Strategy::An, 2000, r1);
    const RateEstimate e2 = expected_secrecy_rate(eff, sig, c, w.w, Strategy::An, 2000, r2);
    const double tol = 3.0 * std::sqrt(e1.std_error * e1.std_error + e2.std_error * e2.std_error);
    CHECK(std::abs(e1.mean - e2.mean) <= std::max(tol, 1e-9));
}

TEST_CASE("constraint checker margins") {
    ScenarioConfig cfg = ScenarioConfig::desk_profile();
    Rng rng(29);
    const std::size_t n = 4;

    // ||w||^2 = p_max exactly: C1 passes with margin 0.
    Beamformer exact = random_beamformer(n, 2.0, rng);
    const ConstraintReport rep = check_constraints(exact, random_coeffs(8, rng));
    CHECK(rep.entries[0].pass);
    CHECK(rep.entries[0].margin == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.all_pass);

    // beta_r above 1 fails C3 with margin -0.2.
    StarCoefficients bad = random_coeffs(8, rng);
    bad.beta_r.values()[3] = 1.2;
    const ConstraintReport rep2 = check_constraints(exact, bad);
    CHECK_FALSE(rep2.entries[2].pass);
    CHECK(rep2.entries[2].margin == doctest::Approx(-0.2));
    CHECK_FALSE(rep2.all_pass);

    // Power overshoot fails C1.
    Beamformer hot = exact;
    hot.p_max = 1.0;
    const ConstraintReport rep3 = check_constraints(hot, random_coeffs(8, rng));
    CHECK_FALSE(rep3.entries[0].pass);
}

}  // TEST_SUITE
