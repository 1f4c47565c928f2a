#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "starsec/channel.hpp"
#include "starsec/complex_matrix.hpp"
#include "starsec/rng.hpp"
#include "starsec/tensor.hpp"

namespace starsec {

/// Transmission strategy at the surface: AN transmits the randomized split as
/// artificial noise, Conv transmits the information signal directly, IrsOnly
/// reflects everything (beta_r forced to 1).
enum class Strategy { An, Conv, IrsOnly };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

/// Per-element reflection energy, reflection phase and AN transmission phase
/// (all length-L column tensors). theta_t_info carries the information-signal
/// transmission phases used by the conventional strategy. Phases are stored
/// unwrapped; constraint reporting wraps them to [0, 2pi).
struct StarCoefficients {
    Tensor beta_r;
    Tensor theta_r;
    Tensor theta_t_an;
    std::optional<Tensor> theta_t_info;

    std::size_t elements() const { return beta_r.size(); }
    void validate() const;  // domain error on shape or range violations
};

struct Beamformer {
    ComplexMatrix w;  // N x 1
    double p_max = 0.0;
};

/// Diagonal reflection matrix, entries sqrt(beta_r) e^{j theta_r}.
ComplexMatrix omega_r(const StarCoefficients& c);
/// Diagonal AN transmission matrix, entries sqrt(1 - beta_r) e^{j theta_t_an}.
ComplexMatrix omega_t_an(const StarCoefficients& c);
/// Diagonal information transmission matrix (conventional strategy); usage
/// error when theta_t_info is absent.
ComplexMatrix omega_t_info(const StarCoefficients& c);

// Diagonal entries as L x 1 vectors (the form the SINR evaluation consumes).
ComplexMatrix omega_r_diag(const StarCoefficients& c);
ComplexMatrix omega_t_an_diag(const StarCoefficients& c);
ComplexMatrix omega_t_info_diag(const StarCoefficients& c);

/// Applies one common random phase per symbol, turning the unit-power stream
/// into artificial noise with unchanged magnitudes.
std::vector<std::complex<double>> apply_symbol_phase(
    const std::vector<std::complex<double>>& symbols, Rng& rng);

/// Direct plus cascaded-matrix form of the channels entering the SINRs:
/// d_b/d_k are the L x N matrices with rows conj(f[l]) * G[l,:]. This is the
/// natural place to substitute estimated CSI for the eavesdroppers.
struct EffectiveChannels {
    ComplexMatrix h_b;                // N x 1
    ComplexMatrix d_b;                // L x N
    std::vector<ComplexMatrix> h_k;   // N x 1 each
    std::vector<ComplexMatrix> d_k;   // L x N each
    double sigma2_b = 0.0;
    std::vector<double> sigma2_k;

    std::size_t n() const { return h_b.rows(); }
    std::size_t l() const { return d_b.rows(); }
    std::size_t k() const { return h_k.size(); }
};

EffectiveChannels effective_channels(const ChannelRealization& ch);

/// Copy of `base` with Eve direct/cascaded channels replaced (cascaded given
/// in vectorized LN x 1 form).
EffectiveChannels with_eve_csi(const EffectiveChannels& base,
                               const std::vector<ComplexMatrix>& h_k,
                               const std::vector<ComplexMatrix>& d_k_vec);

/// |(h_b^H + f_b^H Omega_r G) w|^2 / sigma_b^2 as a 1x1 tensor (taped when a
/// tape is active).
Tensor sinr_bob(const EffectiveChannels& ch, const StarCoefficients& c, const ComplexMatrix& w);

/// Strategy-dependent Eve SINR; k is zero-based.
Tensor sinr_eve(const EffectiveChannels& ch, const StarCoefficients& c, const ComplexMatrix& w,
                std::size_t k, Strategy strategy);

// ChannelRealization convenience forms.
Tensor sinr_bob(const ChannelRealization& ch, const StarCoefficients& c, const Beamformer& w);
Tensor sinr_eve(const ChannelRealization& ch, const StarCoefficients& c, const Beamformer& w,
                std::size_t k, Strategy strategy);

/// [log2(1 + gamma_b) - max_k log2(1 + gamma_k)]^+ in bits/s/Hz.
double secrecy_rate(double gamma_b, const std::vector<double>& gamma_eves);

/// Tensor form used inside training losses; ties in the max and the clamp at
/// zero take the first-argument subgradient.
Tensor secrecy_rate(const Tensor& gamma_b, const std::vector<Tensor>& gamma_eves,
                    bool clamped = true);

/// Secrecy rate evaluated on plain values (no tape).
double secrecy_rate_value(const EffectiveChannels& ch, const StarCoefficients& c,
                          const ComplexMatrix& w, Strategy strategy);

struct RateEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Monte Carlo estimate of the expected secrecy rate over CSI error draws:
/// `estimated` carries the estimated Eve CSI and each draw adds fresh
/// Gaussian errors with the given per-Eve variances before evaluating.
RateEstimate expected_secrecy_rate(const EffectiveChannels& estimated,
                                   const CsiErrorSigmas& sigmas, const StarCoefficients& c,
                                   const ComplexMatrix& w, Strategy strategy,
                                   std::size_t draws, Rng& rng);

struct ConstraintEntry {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // slack in native units; negative when violated
};

struct ConstraintReport {
    std::vector<ConstraintEntry> entries;
    bool all_pass = false;
    double worst_margin = 0.0;
};

/// Evaluates C1 (power budget), C2-C4 (energy split), C5-C6 (phase ranges
/// after wrapping). Reports, never throws.
ConstraintReport check_constraints(const Beamformer& w, const StarCoefficients& c);

}  // namespace starsec
