#include "starsec/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace starsec {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fixed stream ids so that a link's draw sequence does not depend on the
// dimensions of the other links (keeps channels pairable across K/L sweeps).
enum StreamId : std::uint64_t {
    kStreamHb = 1,
    kStreamFb = 2,
    kStreamG = 3,
    kStreamEveBase = 16,  // Eve k uses kStreamEveBase + 2k (direct) / +2k+1 (surface)
};

// Unit-modulus ULA steering vector at half-wavelength spacing; a single
// antenna end degenerates to one random unit-modulus phase.
std::vector<std::complex<double>> steering(std::size_t size, Rng& rng) {
    std::vector<std::complex<double>> a(size);
    if (size == 1) {
        const double psi = rng.uniform(0.0, 2.0 * kPi);
        a[0] = std::polar(1.0, psi);
        return a;
    }
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double s = std::sin(phi);
    for (std::size_t m = 0; m < size; ++m) a[m] = std::polar(1.0, kPi * static_cast<double>(m) * s);
    return a;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (N < 1 || L < 1 || K < 1)
        throw std::domain_error("ScenarioConfig: N, L and K must all be at least 1");
    if (p_max <= 0.0 || sigma2_b <= 0.0 || sigma2_k <= 0.0)
        throw std::domain_error("ScenarioConfig: powers and noise variances must be positive");
    if (kappa < 0.0) throw std::domain_error("ScenarioConfig: kappa must be non-negative");
    if (d_ab <= 0.0 || d_sb <= 0.0 || d_as <= 0.0 || d0 <= 0.0)
        throw std::domain_error("ScenarioConfig: distances must be positive");
    if (d_ae_min <= 0.0 || d_se_min <= 0.0 || d_ae_min > d_ae_max || d_se_min > d_se_max)
        throw std::domain_error("ScenarioConfig: bad Eve distance range");
}

ScenarioConfig ScenarioConfig::desk_profile() {
    ScenarioConfig cfg;
    cfg.N = 4;
    cfg.L = 16;
    cfg.K = 2;
    return cfg;
}

ScenarioConfig ScenarioConfig::paper_profile() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    if (j.contains("N")) cfg.N = j.at("N").get<int>();
    if (j.contains("L")) cfg.L = j.at("L").get<int>();
    if (j.contains("K")) cfg.K = j.at("K").get<int>();
    if (j.contains("P_max")) cfg.p_max = dbm_to_watt(j.at("P_max").get<double>());
    if (j.contains("sigma2_b")) cfg.sigma2_b = dbm_to_watt(j.at("sigma2_b").get<double>());
    if (j.contains("sigma2_k")) cfg.sigma2_k = dbm_to_watt(j.at("sigma2_k").get<double>());
    if (j.contains("kappa")) cfg.kappa = j.at("kappa").get<double>();
    if (j.contains("d_ab")) cfg.d_ab = j.at("d_ab").get<double>();
    if (j.contains("d_sb")) cfg.d_sb = j.at("d_sb").get<double>();
    if (j.contains("d_as")) cfg.d_as = j.at("d_as").get<double>();
    if (j.contains("d_ae_range")) {
        cfg.d_ae_min = j.at("d_ae_range").at(0).get<double>();
        cfg.d_ae_max = j.at("d_ae_range").at(1).get<double>();
    }
    if (j.contains("d_se_range")) {
        cfg.d_se_min = j.at("d_se_range").at(0).get<double>();
        cfg.d_se_max = j.at("d_se_range").at(1).get<double>();
    }
    if (j.contains("pl0_db")) cfg.pl0_db = j.at("pl0_db").get<double>();
    if (j.contains("d0")) cfg.d0 = j.at("d0").get<double>();
    if (j.contains("wall_loss_db")) cfg.wall_loss_db = j.at("wall_loss_db").get<double>();
    if (j.contains("rng_seed")) cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

nlohmann::json ScenarioConfig::to_json() const {
    nlohmann::json j;
    j["N"] = N;
    j["L"] = L;
    j["K"] = K;
    j["P_max"] = watt_to_dbm(p_max);
    j["sigma2_b"] = watt_to_dbm(sigma2_b);
    j["sigma2_k"] = watt_to_dbm(sigma2_k);
    j["kappa"] = kappa;
    j["d_ab"] = d_ab;
    j["d_sb"] = d_sb;
    j["d_as"] = d_as;
    j["d_ae_range"] = {d_ae_min, d_ae_max};
    j["d_se_range"] = {d_se_min, d_se_max};
    j["pl0_db"] = pl0_db;
    j["d0"] = d0;
    j["wall_loss_db"] = wall_loss_db;
    j["rng_seed"] = rng_seed;
    return j;
}

void CsiErrorConfig::validate() const {
    if (sigma2_h < 0.0 || sigma2_d < 0.0)
        throw std::domain_error("CsiErrorConfig: variances must be non-negative");
}

CsiErrorConfig CsiErrorConfig::from_json(const nlohmann::json& j) {
    CsiErrorConfig err;
    if (j.contains("sigma2_h")) err.sigma2_h = j.at("sigma2_h").get<double>();
    if (j.contains("sigma2_d")) err.sigma2_d = j.at("sigma2_d").get<double>();
    if (j.contains("relative_to_link_gain"))
        err.relative_to_link_gain = j.at("relative_to_link_gain").get<bool>();
    err.validate();
    return err;
}

nlohmann::json CsiErrorConfig::to_json() const {
    nlohmann::json j;
    j["sigma2_h"] = sigma2_h;
    j["sigma2_d"] = sigma2_d;
    j["relative_to_link_gain"] = relative_to_link_gain;
    return j;
}

CsiErrorSigmas resolve_csi_sigmas(const CsiErrorConfig& err, const ChannelRealization& ch) {
    err.validate();
    CsiErrorSigmas out;
    const std::size_t k = ch.k();
    out.sigma2_h.resize(k);
    out.sigma2_d.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (err.relative_to_link_gain) {
            out.sigma2_h[i] = err.sigma2_h * ch.gains.h_k[i];
            out.sigma2_d[i] = err.sigma2_d * ch.gains.f_k[i] * ch.gains.g;
        } else {
            out.sigma2_h[i] = err.sigma2_h;
            out.sigma2_d[i] = err.sigma2_d;
        }
    }
    return out;
}

double path_loss_gain(double d, const ScenarioConfig& cfg) {
    if (d <= 0.0) throw std::domain_error("path_loss_gain: distance must be positive");
    const double pl_db = cfg.pl0_db - 25.0 * std::log10(d / cfg.d0);
    return db_to_linear(pl_db);
}

ScenarioSample sample_scenario(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    ScenarioSample s;
    s.d_ab = cfg.d_ab;
    s.d_sb = cfg.d_sb;
    s.d_as = cfg.d_as;
    s.d_ae.resize(cfg.K);
    s.d_se.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        s.d_ae[k] = rng.uniform(cfg.d_ae_min, cfg.d_ae_max);
        s.d_se[k] = rng.uniform(cfg.d_se_min, cfg.d_se_max);
    }
    return s;
}

ComplexMatrix sample_rician(std::size_t rows, std::size_t cols, double kappa, double gain,
                            Rng& rng) {
    if (kappa < 0.0) throw std::domain_error("sample_rician: kappa must be non-negative");
    if (gain < 0.0) throw std::domain_error("sample_rician: gain must be non-negative");
    const double los_w = std::sqrt(kappa / (1.0 + kappa));
    const double nlos_w = std::sqrt(1.0 / (1.0 + kappa));
    const double amp = std::sqrt(gain);

    const auto a_rx = steering(rows, rng);
    const auto a_tx = steering(cols, rng);

    std::vector<std::complex<double>> h(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const std::complex<double> los = a_rx[i] * std::conj(a_tx[j]);
            const std::complex<double> nlos = rng.cnormal();
            h[i * cols + j] = amp * (los_w * los + nlos_w * nlos);
        }
    }
    return ComplexMatrix::from_std(h, rows, cols);
}

ChannelRealization sample_channels(const ScenarioConfig& cfg, const ScenarioSample& scenario,
                                   Rng& rng) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.N);
    const auto l = static_cast<std::size_t>(cfg.L);
    const auto k = static_cast<std::size_t>(cfg.K);
    const std::uint64_t base = rng.next_u64();
    Rng root(base);

    ChannelRealization ch;
    ch.scenario = scenario;
    ch.sigma2_b = cfg.sigma2_b;
    ch.sigma2_k.assign(k, cfg.sigma2_k);

    const double wall = db_to_linear(-cfg.wall_loss_db);
    ch.gains.h_b = path_loss_gain(scenario.d_ab, cfg);
    ch.gains.f_b = path_loss_gain(scenario.d_sb, cfg);
    ch.gains.g = path_loss_gain(scenario.d_as, cfg);

    Rng r_hb = root.derive(kStreamHb);
    Rng r_fb = root.derive(kStreamFb);
    Rng r_g = root.derive(kStreamG);
    ch.h_b = sample_rician(n, 1, cfg.kappa, ch.gains.h_b, r_hb);
    ch.f_b = sample_rician(l, 1, cfg.kappa, ch.gains.f_b, r_fb);
    ch.g = sample_rician(l, n, cfg.kappa, ch.gains.g, r_g);

    ch.h_k.reserve(k);
    ch.f_k.reserve(k);
    ch.gains.h_k.resize(k);
    ch.gains.f_k.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        ch.gains.h_k[i] = path_loss_gain(scenario.d_ae[i], cfg) * wall;
        ch.gains.f_k[i] = path_loss_gain(scenario.d_se[i], cfg);
        Rng r_h = root.derive(kStreamEveBase + 2 * i);
        Rng r_f = root.derive(kStreamEveBase + 2 * i + 1);
        ch.h_k.push_back(sample_rician(n, 1, cfg.kappa, ch.gains.h_k[i], r_h));
        ch.f_k.push_back(sample_rician(l, 1, cfg.kappa, ch.gains.f_k[i], r_f));
    }
    return ch;
}

ChannelRealization sample_channels(const ScenarioConfig& cfg, Rng& rng) {
    const ScenarioSample scenario = sample_scenario(cfg, rng);
    return sample_channels(cfg, scenario, rng);
}

ComplexMatrix cascaded_matrix(const ComplexMatrix& f, const ComplexMatrix& g) {
    if (f.cols() != 1 || f.rows() != g.rows())
        throw std::invalid_argument("cascaded: f must be L x 1 matching G's rows");
    const std::size_t l = g.rows(), n = g.cols();
    std::vector<std::complex<double>> d(l * n);
    const auto fv = f.to_std();
    const auto gv = g.to_std();
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::conj(fv[i]) * gv[i * n + j];
    return ComplexMatrix::from_std(d, l, n);
}

ComplexMatrix cascaded(const ComplexMatrix& f, const ComplexMatrix& g) {
    return reshape(cascaded_matrix(f, g), g.rows() * g.cols(), 1);
}

PerturbedCsi perturb_csi(const ChannelRealization& ch, const CsiErrorConfig& err, Rng& rng) {
    const CsiErrorSigmas sig = resolve_csi_sigmas(err, ch);
    PerturbedCsi out;
    const std::size_t k = ch.k();
    const std::size_t n = ch.n();
    const std::size_t ln = ch.l() * n;
    for (std::size_t i = 0; i < k; ++i) {
        const double sd_h = std::sqrt(sig.sigma2_h[i]);
        const double sd_d = std::sqrt(sig.sigma2_d[i]);
        std::vector<std::complex<double>> eh(n), ed(ln);
        for (auto& e : eh) e = sd_h * rng.cnormal();
        for (auto& e : ed) e = sd_d * rng.cnormal();
        ComplexMatrix h_err = ComplexMatrix::from_std(eh, n, 1);
        ComplexMatrix d_err = ComplexMatrix::from_std(ed, ln, 1);
        out.h_est.push_back(ch.h_k[i] - h_err);
        out.d_est.push_back(cascaded(ch.f_k[i], ch.g) - d_err);
        out.h_err.push_back(std::move(h_err));
        out.d_err.push_back(std::move(d_err));
    }
    return out;
}

}  // namespace starsec
