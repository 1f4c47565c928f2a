#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "starsec/complex_matrix.hpp"
#include "starsec/rng.hpp"

namespace starsec {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Geometry and radio parameters of one deployment. Powers are stored in
/// watts; the JSON form carries them in dBm (converted once at load).
struct ScenarioConfig {
    int N = 8;   // transmit antennas
    int L = 80;  // surface elements
    int K = 2;   // eavesdroppers
    double p_max = dbm_to_watt(18.0);
    double sigma2_b = dbm_to_watt(-90.0);
    double sigma2_k = dbm_to_watt(-90.0);
    double kappa = 0.3;
    double d_ab = 8.0;
    double d_sb = 8.0;
    double d_as = 8.0;
    double d_ae_min = 4.0, d_ae_max = 8.0;
    double d_se_min = 4.0, d_se_max = 8.0;
    double pl0_db = -30.0;  // reference path loss at d0
    double d0 = 1.0;
    double wall_loss_db = 0.0;  // extra attenuation on direct Alice-Eve links
    std::uint64_t rng_seed = 1;

    void validate() const;

    static ScenarioConfig desk_profile();
    static ScenarioConfig paper_profile();
    static ScenarioConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// One draw of the random geometry: fixed link distances plus per-Eve
/// placements.
struct ScenarioSample {
    double d_ab = 0.0, d_sb = 0.0, d_as = 0.0;
    std::vector<double> d_ae;
    std::vector<double> d_se;
};

/// Linear power gains applied to each link when the channels were drawn.
struct LinkGains {
    double h_b = 0.0, f_b = 0.0, g = 0.0;
    std::vector<double> h_k;
    std::vector<double> f_k;
};

/// All channels of one coherence interval.
struct ChannelRealization {
    ComplexMatrix h_b;                // N x 1, Alice -> Bob
    std::vector<ComplexMatrix> h_k;   // N x 1 each, Alice -> Eve k
    ComplexMatrix f_b;                // L x 1, surface -> Bob
    std::vector<ComplexMatrix> f_k;   // L x 1 each, surface -> Eve k
    ComplexMatrix g;                  // L x N, Alice -> surface
    double sigma2_b = 0.0;
    std::vector<double> sigma2_k;
    ScenarioSample scenario;
    LinkGains gains;

    std::size_t n() const { return h_b.rows(); }
    std::size_t l() const { return f_b.rows(); }
    std::size_t k() const { return h_k.size(); }
};

/// Gaussian CSI error model for the eavesdropper channels. With
/// relative_to_link_gain set, the variances are scaled by each link's
/// distance-derived gain (so the value acts as a normalized MSE); otherwise
/// they are absolute per-entry variances.
struct CsiErrorConfig {
    double sigma2_h = 0.0;  // direct-channel error variance
    double sigma2_d = 0.0;  // cascaded-channel error variance
    bool relative_to_link_gain = false;

    void validate() const;
    static CsiErrorConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Per-Eve error variances after resolving the relative/absolute convention.
struct CsiErrorSigmas {
    std::vector<double> sigma2_h;  // per Eve, direct channel
    std::vector<double> sigma2_d;  // per Eve, cascaded channel
};

CsiErrorSigmas resolve_csi_sigmas(const CsiErrorConfig& err, const ChannelRealization& ch);

/// Estimated Eve CSI plus the exact errors that were subtracted; Bob's
/// channels are never perturbed. h = h_est + h_err holds entrywise.
struct PerturbedCsi {
    std::vector<ComplexMatrix> h_est;  // N x 1 each
    std::vector<ComplexMatrix> d_est;  // LN x 1 each (vectorized cascaded)
    std::vector<ComplexMatrix> h_err;
    std::vector<ComplexMatrix> d_err;
};

/// PL0 - 25 log10(d / d0) in dB, returned as a linear power gain.
double path_loss_gain(double d, const ScenarioConfig& cfg);

ScenarioSample sample_scenario(const ScenarioConfig& cfg, Rng& rng);

/// Rician-faded matrix: sqrt(gain) * (sqrt(kappa/(1+kappa)) * H_los +
/// sqrt(1/(1+kappa)) * H_nlos), LoS built from uniform-linear-array steering
/// vectors at angles drawn uniformly per realization.
ComplexMatrix sample_rician(std::size_t rows, std::size_t cols, double kappa, double gain,
                            Rng& rng);

ChannelRealization sample_channels(const ScenarioConfig& cfg, const ScenarioSample& scenario,
                                   Rng& rng);
ChannelRealization sample_channels(const ScenarioConfig& cfg, Rng& rng);

/// vec(diag(f^H) G): row-major vectorization, entry (l*N + n) equals
/// conj(f[l]) * G[l, n].
ComplexMatrix cascaded(const ComplexMatrix& f, const ComplexMatrix& g);

/// Same contraction kept in L x N matrix form.
ComplexMatrix cascaded_matrix(const ComplexMatrix& f, const ComplexMatrix& g);

PerturbedCsi perturb_csi(const ChannelRealization& ch, const CsiErrorConfig& err, Rng& rng);

}  // namespace starsec
