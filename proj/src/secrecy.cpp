#include "starsec/secrecy.hpp"

#include <cmath>
#include <stdexcept>

namespace starsec {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2e = 1.4426950408889634;  // 1 / ln 2

double wrap_2pi(double theta) {
    double t = std::fmod(theta, 2.0 * kPi);
    if (t < 0.0) t += 2.0 * kPi;
    return t;
}

ComplexMatrix diag_entries(const Tensor& beta, const Tensor& theta) {
    Tensor amp = sqrt(beta);
    return {amp * cos(theta), amp * sin(theta)};
}

// log2(1 + gamma) for a 1x1 tensor.
Tensor rate_of(const Tensor& gamma) { return log(gamma + 1.0) * kLog2e; }

}  // namespace

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::An: return "an";
        case Strategy::Conv: return "conv";
        case Strategy::IrsOnly: return "irs";
    }
    throw std::logic_error("strategy_name: unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "an") return Strategy::An;
    if (name == "conv") return Strategy::Conv;
    if (name == "irs") return Strategy::IrsOnly;
    throw std::logic_error("unknown strategy '" + name + "' (expected an, conv or irs)");
}

void StarCoefficients::validate() const {
    const std::size_t l = beta_r.size();
    if (l == 0 || beta_r.cols() != 1)
        throw std::domain_error("StarCoefficients: beta_r must be a non-empty column vector");
    if (theta_r.size() != l || theta_t_an.size() != l)
        throw std::domain_error("StarCoefficients: phase vectors must match beta_r's length");
    if (theta_t_info && theta_t_info->size() != l)
        throw std::domain_error("StarCoefficients: theta_t_info length mismatch");
    for (double b : beta_r.values())
        if (!(b >= 0.0 && b <= 1.0))
            throw std::domain_error("StarCoefficients: beta_r outside [0, 1]");
}

ComplexMatrix omega_r_diag(const StarCoefficients& c) {
    c.validate();
    return diag_entries(c.beta_r, c.theta_r);
}

ComplexMatrix omega_t_an_diag(const StarCoefficients& c) {
    c.validate();
    return diag_entries(1.0 - c.beta_r, c.theta_t_an);
}

ComplexMatrix omega_t_info_diag(const StarCoefficients& c) {
    c.validate();
    if (!c.theta_t_info)
        throw std::logic_error("omega_t_info: conventional transmission phases not set");
    return diag_entries(1.0 - c.beta_r, *c.theta_t_info);
}

ComplexMatrix omega_r(const StarCoefficients& c) { return diag(omega_r_diag(c)); }
ComplexMatrix omega_t_an(const StarCoefficients& c) { return diag(omega_t_an_diag(c)); }
ComplexMatrix omega_t_info(const StarCoefficients& c) { return diag(omega_t_info_diag(c)); }

std::vector<std::complex<double>> apply_symbol_phase(
    const std::vector<std::complex<double>>& symbols, Rng& rng) {
    std::vector<std::complex<double>> z(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        z[i] = std::polar(1.0, theta) * symbols[i];
    }
    return z;
}

EffectiveChannels effective_channels(const ChannelRealization& ch) {
    EffectiveChannels eff;
    eff.h_b = ch.h_b;
    eff.d_b = cascaded_matrix(ch.f_b, ch.g);
    eff.h_k = ch.h_k;
    eff.d_k.reserve(ch.k());
    for (std::size_t i = 0; i < ch.k(); ++i) eff.d_k.push_back(cascaded_matrix(ch.f_k[i], ch.g));
    eff.sigma2_b = ch.sigma2_b;
    eff.sigma2_k = ch.sigma2_k;
    return eff;
}

EffectiveChannels with_eve_csi(const EffectiveChannels& base,
                               const std::vector<ComplexMatrix>& h_k,
                               const std::vector<ComplexMatrix>& d_k_vec) {
    if (h_k.size() != base.k() || d_k_vec.size() != base.k())
        throw std::invalid_argument("with_eve_csi: Eve count mismatch");
    EffectiveChannels eff = base;
    eff.h_k = h_k;
    eff.d_k.clear();
    for (const ComplexMatrix& d : d_k_vec) eff.d_k.push_back(reshape(d, base.l(), base.n()));
    return eff;
}

Tensor sinr_bob(const EffectiveChannels& ch, const StarCoefficients& c, const ComplexMatrix& w) {
    if (ch.sigma2_b <= 0.0) throw std::domain_error("sinr_bob: noise variance must be positive");
    if (w.rows() != ch.n() || w.cols() != 1)
        throw std::invalid_argument("sinr_bob: beamformer shape mismatch");
    // (h_b^H + f_b^H Omega_r G) w  ==  h_b^H w + omega_r^T (D_b w)
    ComplexMatrix direct = cdot_h(ch.h_b, w);
    ComplexMatrix reflected = cdot_t(omega_r_diag(c), complex_matvec(ch.d_b, w));
    return abs2(direct + reflected) * (1.0 / ch.sigma2_b);
}

Tensor sinr_eve(const EffectiveChannels& ch, const StarCoefficients& c, const ComplexMatrix& w,
                std::size_t k, Strategy strategy) {
    if (k >= ch.k()) throw std::logic_error("sinr_eve: Eve index out of range");
    if (ch.sigma2_k[k] <= 0.0)
        throw std::domain_error("sinr_eve: noise variance must be positive");
    ComplexMatrix direct = cdot_h(ch.h_k[k], w);
    switch (strategy) {
        case Strategy::An: {
            ComplexMatrix an = cdot_t(omega_t_an_diag(c), complex_matvec(ch.d_k[k], w));
            return div(abs2(direct), abs2(an) + ch.sigma2_k[k]);
        }
        case Strategy::Conv: {
            ComplexMatrix txed = cdot_t(omega_t_info_diag(c), complex_matvec(ch.d_k[k], w));
            return abs2(direct + txed) * (1.0 / ch.sigma2_k[k]);
        }
        case Strategy::IrsOnly:
            return abs2(direct) * (1.0 / ch.sigma2_k[k]);
    }
    throw std::logic_error("sinr_eve: unknown strategy");
}

Tensor sinr_bob(const ChannelRealization& ch, const StarCoefficients& c, const Beamformer& w) {
    return sinr_bob(effective_channels(ch), c, w.w);
}

Tensor sinr_eve(const ChannelRealization& ch, const StarCoefficients& c, const Beamformer& w,
                std::size_t k, Strategy strategy) {
    return sinr_eve(effective_channels(ch), c, w.w, k, strategy);
}

double secrecy_rate(double gamma_b, const std::vector<double>& gamma_eves) {
    if (gamma_eves.empty()) throw std::logic_error("secrecy_rate: empty eavesdropper list");
    double worst = 0.0;
    for (double g : gamma_eves) worst = std::max(worst, std::log2(1.0 + g));
    const double diff = std::log2(1.0 + gamma_b) - worst;
    return diff > 0.0 ? diff : 0.0;
}

Tensor secrecy_rate(const Tensor& gamma_b, const std::vector<Tensor>& gamma_eves, bool clamped) {
    if (gamma_eves.empty()) throw std::logic_error("secrecy_rate: empty eavesdropper list");
    Tensor worst = rate_of(gamma_eves.front());
    for (std::size_t i = 1; i < gamma_eves.size(); ++i)
        worst = maximum(worst, rate_of(gamma_eves[i]));
    Tensor diff = rate_of(gamma_b) - worst;
    return clamped ? relu(diff) : diff;
}

double secrecy_rate_value(const EffectiveChannels& ch, const StarCoefficients& c,
                          const ComplexMatrix& w, Strategy strategy) {
    const double gb = sinr_bob(ch, c, w).item();
    std::vector<double> ge(ch.k());
    for (std::size_t k = 0; k < ch.k(); ++k) ge[k] = sinr_eve(ch, c, w, k, strategy).item();
    return secrecy_rate(gb, ge);
}

RateEstimate expected_secrecy_rate(const EffectiveChannels& estimated,
                                   const CsiErrorSigmas& sigmas, const StarCoefficients& c,
                                   const ComplexMatrix& w, Strategy strategy,
                                   std::size_t draws, Rng& rng) {
    if (draws < 1) throw std::logic_error("expected_secrecy_rate: draws must be at least 1");
    if (sigmas.sigma2_h.size() != estimated.k() || sigmas.sigma2_d.size() != estimated.k())
        throw std::invalid_argument("expected_secrecy_rate: sigma list size mismatch");

    const std::size_t n = estimated.n();
    const std::size_t ln = estimated.l() * n;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t m = 0; m < draws; ++m) {
        EffectiveChannels drawn = estimated;
        for (std::size_t k = 0; k < estimated.k(); ++k) {
            const double sd_h = std::sqrt(sigmas.sigma2_h[k]);
            const double sd_d = std::sqrt(sigmas.sigma2_d[k]);
            std::vector<std::complex<double>> eh(n), ed(ln);
            for (auto& e : eh) e = sd_h * rng.cnormal();
            for (auto& e : ed) e = sd_d * rng.cnormal();
            drawn.h_k[k] = estimated.h_k[k] + ComplexMatrix::from_std(eh, n, 1);
            drawn.d_k[k] =
                estimated.d_k[k] + ComplexMatrix::from_std(ed, estimated.l(), n);
        }
        const double r = secrecy_rate_value(drawn, c, w, strategy);
        sum += r;
        sum_sq += r * r;
    }
    RateEstimate est;
    est.samples = draws;
    est.mean = sum / static_cast<double>(draws);
    if (draws > 1) {
        const double var =
            std::max(0.0, (sum_sq - sum * sum / static_cast<double>(draws)) /
                              static_cast<double>(draws - 1));
        est.std_error = std::sqrt(var / static_cast<double>(draws));
    }
    return est;
}

ConstraintReport check_constraints(const Beamformer& w, const StarCoefficients& c) {
    ConstraintReport report;
    report.entries.reserve(6);

    double power = 0.0;
    for (std::size_t i = 0; i < w.w.size(); ++i) {
        power += w.w.re.values()[i] * w.w.re.values()[i];
        power += w.w.im.values()[i] * w.w.im.values()[i];
    }
    const double c1_tol = 1e-9 * std::max(1.0, w.p_max);
    const double c1_margin = w.p_max - power;
    report.entries.push_back(
        {"C1:power", std::isfinite(power) && c1_margin >= -c1_tol, c1_margin});

    // beta_t is stored implicitly as 1 - beta_r, so C2 holds structurally;
    // the margin reports the residual, which is zero by construction.
    double c3 = std::numeric_limits<double>::infinity();
    double c4 = std::numeric_limits<double>::infinity();
    bool finite = true;
    for (double b : c.beta_r.values()) {
        finite = finite && std::isfinite(b);
        c3 = std::min(c3, std::min(b, 1.0 - b));
        c4 = std::min(c4, std::min(1.0 - b, b));
    }
    report.entries.push_back({"C2:energy_sum", finite, 0.0});
    report.entries.push_back({"C3:beta_r_range", finite && c3 >= 0.0, c3});
    report.entries.push_back({"C4:beta_t_range", finite && c4 >= 0.0, c4});

    auto phase_entry = [](const char* name, const Tensor& theta) {
        double margin = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (double t : theta.values()) {
            if (!std::isfinite(t)) {
                ok = false;
                continue;
            }
            const double wt = wrap_2pi(t);
            margin = std::min(margin, std::min(wt, 2.0 * kPi - wt));
        }
        return ConstraintEntry{name, ok, margin};
    };
    report.entries.push_back(phase_entry("C5:theta_r_range", c.theta_r));
    report.entries.push_back(phase_entry("C6:theta_t_range", c.theta_t_an));

    report.all_pass = true;
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& e : report.entries) {
        report.all_pass = report.all_pass && e.pass;
        report.worst_margin = std::min(report.worst_margin, e.margin);
    }
    return report;
}

}  // namespace starsec
