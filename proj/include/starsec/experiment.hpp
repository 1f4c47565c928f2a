#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "starsec/baselines.hpp"
#include "starsec/channel.hpp"
#include "starsec/model.hpp"
#include "starsec/quantized_model.hpp"

namespace starsec {

enum class ExperimentKind {
    Convergence,
    PowerSweep,
    EveSweep,
    ElementSweep,
    CsiSweep,
    Quantization,
    BaselineCompare,
};

std::string experiment_kind_name(ExperimentKind k);
ExperimentKind experiment_kind_from_name(const std::string& name);

enum class Scheme { AnGnn, ConvGnn, IrsGnn, AnMrt, AnZf, AnMmse };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);
bool scheme_is_gnn(Scheme s);
Strategy scheme_strategy(Scheme s);  // GNN schemes only

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::PowerSweep;
    std::string profile = "desk";
    ScenarioConfig scenario = ScenarioConfig::desk_profile();
    TrainConfig train;
    std::vector<double> axis;       // dBm, K, L, error MSE or word bits by kind
    std::vector<Scheme> schemes;    // empty selects the kind's default set
    std::size_t eval_channels = 1000;
    std::size_t eval_csi_draws = 64;
    std::uint64_t seed = 1;
    std::string out_dir = "results";

    void validate() const;
    std::vector<Scheme> resolved_schemes() const;
    static ExperimentSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ResultRecord {
    std::string experiment;
    double axis = 0.0;
    std::string scheme;
    double mean_rate = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::string channel_hash;
    double wall_seconds = 0.0;  // timing log only; the CSV stays reproducible
};

struct EvalSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::vector<double> per_channel;
};

EvalSummary summarize(const std::vector<double>& per_channel);

/// Paired standard error of the per-channel differences a[i] - b[i].
double paired_std_error(const std::vector<double>& a, const std::vector<double>& b);

/// Evaluates one scheme over a shared channel set. GNN schemes need `model`;
/// baseline schemes need one surface configuration per channel.
EvalSummary evaluate_scheme(Scheme scheme, const std::vector<ChannelRealization>& channels,
                            const ModelParams* model, double p_max,
                            const std::vector<StarCoefficients>* baseline_coeffs);

/// Expected-secrecy-rate evaluation of a GNN model under imperfect Eve CSI:
/// the network sees estimated channels, the rate is averaged over error
/// draws.
EvalSummary evaluate_gnn_expected(const ModelParams& model,
                                  const std::vector<ChannelRealization>& channels,
                                  const CsiErrorConfig& err, double p_max, std::size_t draws,
                                  Rng& rng);

/// FNV-1a over the raw channel entries; identifies the shared set per cell.
std::string channel_set_hash(const std::vector<ChannelRealization>& channels);

/// Deterministic held-out channel set for one experiment cell.
std::vector<ChannelRealization> make_eval_channels(const ScenarioConfig& scenario,
                                                   std::size_t count, Rng& rng);

/// Trains through the on-disk cache (out_dir/cache, keyed by the full config
/// hash) so reruns and dependent experiments reuse checkpoints bit-exactly.
TrainResult train_cached(const ScenarioConfig& scenario, const TrainConfig& train,
                         Strategy strategy, const std::string& cache_dir);

/// Runs every cell, writes results.csv, manifest.json and timings.csv under
/// spec.out_dir, and returns the records. Within a cell all schemes see
/// identical channels; re-running the manifest reproduces results.csv
/// byte-for-byte.
std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec);

std::string results_csv_path(const ExperimentSpec& spec);
std::string manifest_path(const ExperimentSpec& spec);

/// Thread count for evaluation loops; reads STARSEC_THREADS once (default 1).
std::size_t eval_thread_count();

}  // namespace starsec
