#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "starsec/channel.hpp"
#include "starsec/graph.hpp"
#include "starsec/secrecy.hpp"

namespace starsec {

/// How the phase heads map network outputs to angles. Faithful follows the
/// forward pass as published: sigmoid gives cos(theta) in (0,1) and
/// sin(theta) = +sqrt(1 - cos^2), confining phases to (0, pi/2). FullPhase
/// remaps the sigmoid output to cos(theta) = 2u - 1. Paired emits raw
/// (cos, sin) pairs normalized to unit modulus, covering the full circle.
enum class PhaseHead { Faithful, FullPhase, Paired };

/// Beamformer head: Fc applies a trained linear layer to Bob's row;
/// LayerNorm normalizes Bob's row directly and takes the leading 2N entries.
/// Both are rescaled to meet the power budget with equality.
enum class WHead { Fc, LayerNorm };

std::string phase_head_name(PhaseHead h);
PhaseHead phase_head_from_name(const std::string& name);
std::string w_head_name(WHead h);
WHead w_head_from_name(const std::string& name);

struct ModelConfig {
    std::size_t n = 0;       // antennas
    std::size_t l = 0;       // surface elements
    std::size_t hidden = 256;
    Strategy strategy = Strategy::An;
    PhaseHead phase_head = PhaseHead::Faithful;
    WHead w_head = WHead::Fc;

    std::size_t input_width() const { return 2 * n + 2 * n * l; }
    std::size_t fcv_width() const;
    std::size_t fcw_width() const { return 2 * n; }
    void validate() const;
};

/// Learnable parameters: two GCN weight matrices and two FC heads.
struct ModelParams {
    ModelConfig cfg;
    Tensor f1;     // input_width x hidden
    Tensor f2;     // hidden x hidden
    Tensor fcv_w;  // hidden x fcv_width
    Tensor fcv_b;  // 1 x fcv_width
    Tensor fcw_w;  // hidden x 2N
    Tensor fcw_b;  // 1 x 2N

    std::vector<Tensor> all() const { return {f1, f2, fcv_w, fcv_b, fcw_w, fcw_b}; }
    std::size_t parameter_count() const;
};

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
ModelParams init_params(Rng& rng, const ModelConfig& cfg);

struct ForwardResult {
    Beamformer w;
    StarCoefficients coeffs;
};

/// Full forward pass: two GCN layers, the coefficient head on the surface row
/// and the beamformer head on Bob's row. Outputs satisfy C1-C6 by
/// construction. Taped when a tape is active.
ForwardResult forward(const ModelParams& params, const GraphInput& graph, double p_max);

/// Shared output post-processing: v_activated is the coefficient head after
/// its activations, w_raw the raw beamformer head output. Used by both the
/// float and the quantized inference paths.
ForwardResult assemble_outputs(const ModelConfig& cfg, const Tensor& v_activated,
                               const Tensor& w_raw, double p_max);

/// Coefficient-head activation: sigmoid on the energy slice and, for the
/// non-paired heads, on the phase slices; paired phase slices stay linear.
Tensor apply_head_activations(const ModelConfig& cfg, const Tensor& v_pre);

enum class LossVariant { Clamped, Unclamped };

std::string loss_variant_name(LossVariant v);
LossVariant loss_variant_from_name(const std::string& name);

/// One training sample: the graph the network sees plus the channel draws the
/// achieved rate is averaged over (several draws under imperfect CSI).
struct LossSample {
    GraphInput graph;
    std::vector<EffectiveChannels> rate_channels;
};

LossSample make_loss_sample(const ChannelRealization& ch, const GraphOptions& opts = {});

/// Imperfect-CSI sample: the graph is built from estimated Eve CSI and the
/// rate is averaged over `draws` re-perturbations of the estimate.
LossSample make_loss_sample(const ChannelRealization& ch, const CsiErrorConfig& err,
                            std::size_t draws, Rng& rng, const GraphOptions& opts = {});

/// Negative mean secrecy rate over the batch. The clamped variant applies
/// [.]^+ per rate draw; the unclamped variant omits the clamp as a training
/// aid. clamped_rates, when given, receives the per-sample clamped metric
/// regardless of the variant.
Tensor loss(const ModelParams& params, const std::vector<LossSample>& batch, double p_max,
            LossVariant variant, std::vector<double>* clamped_rates = nullptr);

Tensor loss(const ModelParams& params, const std::vector<ChannelRealization>& batch,
            double p_max, LossVariant variant, std::vector<double>* clamped_rates = nullptr);

struct TrainConfig {
    std::size_t iterations = 500;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t samples_per_iteration = 0;  // 0 means one batch per iteration
    std::size_t hidden = 256;
    LossVariant loss_variant = LossVariant::Clamped;
    std::optional<CsiErrorConfig> csi_error;
    std::size_t csi_draws = 4;
    PhaseHead phase_head = PhaseHead::Faithful;
    WHead w_head = WHead::Fc;
    bool symmetrize_adjacency = false;
    std::uint64_t rng_seed = 1;

    void validate() const;
    static TrainConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct TrainHistoryEntry {
    double loss = 0.0;
    double mean_rate = 0.0;  // clamped metric
    double rate_std_error = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainHistoryEntry> history;
};

/// Plain SGD on freshly sampled batches; deterministic given the seed.
/// Aborts with a diagnostic if the loss turns non-finite.
TrainResult train(const ScenarioConfig& scenario, const TrainConfig& cfg, Strategy strategy);

// Versioned binary checkpoints; round-trip bit-exactly.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace starsec
