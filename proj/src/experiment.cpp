#include "starsec/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace starsec {

namespace {

namespace fs = std::filesystem;

// Substream ids for one experiment; shared across axis values so that sweep
// points stay pairable per channel index.
constexpr std::uint64_t kStreamEval = 0x100;
constexpr std::uint64_t kStreamCoeffs = 0x200;
constexpr std::uint64_t kStreamCsi = 0x300;
constexpr std::uint64_t kStreamTrainBase = 0x500;

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_matrix(const ComplexMatrix& m, std::uint64_t h) {
    h = fnv1a(m.re.values().data(), m.re.size() * sizeof(double), h);
    h = fnv1a(m.im.values().data(), m.im.size() * sizeof(double), h);
    return h;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min(eval_thread_count(), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([t, threads, n, &fn] {
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

ScenarioConfig scenario_for(const ExperimentSpec& spec, double axis) {
    ScenarioConfig s = spec.scenario;
    switch (spec.kind) {
        case ExperimentKind::PowerSweep:
            s.p_max = dbm_to_watt(axis);
            break;
        case ExperimentKind::EveSweep:
            s.K = static_cast<int>(axis);
            break;
        case ExperimentKind::ElementSweep:
            s.L = static_cast<int>(axis);
            break;
        default:
            break;
    }
    s.validate();
    return s;
}

TrainConfig train_for(const ExperimentSpec& spec, double axis, std::uint64_t seed) {
    TrainConfig t = spec.train;
    t.rng_seed = seed;
    if (spec.kind == ExperimentKind::CsiSweep) {
        if (axis > 0.0)
            t.csi_error = CsiErrorConfig{axis, axis, true};
        else
            t.csi_error.reset();
    }
    return t;
}

std::string cache_key(const ScenarioConfig& scenario, const TrainConfig& train,
                      Strategy strategy) {
    nlohmann::json j;
    j["scenario"] = scenario.to_json();
    j["train"] = train.to_json();
    j["strategy"] = strategy_name(strategy);
    const std::string dump = j.dump();
    const std::uint64_t h = fnv1a(dump.data(), dump.size(), 0xcbf29ce484222325ULL);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_history(const std::string& path, const std::vector<TrainHistoryEntry>& history) {
    std::ofstream os(path, std::ios::binary);
    const std::uint64_t n = history.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(history.data()),
             static_cast<std::streamsize>(n * sizeof(TrainHistoryEntry)));
}

std::vector<TrainHistoryEntry> load_history(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_history: cannot open " + path);
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<TrainHistoryEntry> history(n);
    is.read(reinterpret_cast<char*>(history.data()),
            static_cast<std::streamsize>(n * sizeof(TrainHistoryEntry)));
    if (!is) throw std::runtime_error("load_history: truncated " + path);
    return history;
}

struct CellOutput {
    std::vector<ResultRecord> rows;
};

}  // namespace

std::string experiment_kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Convergence: return "convergence";
        case ExperimentKind::PowerSweep: return "power_sweep";
        case ExperimentKind::EveSweep: return "eve_sweep";
        case ExperimentKind::ElementSweep: return "element_sweep";
        case ExperimentKind::CsiSweep: return "csi_sweep";
        case ExperimentKind::Quantization: return "quantization";
        case ExperimentKind::BaselineCompare: return "baseline_compare";
    }
    throw std::logic_error("experiment_kind_name: unknown kind");
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
    for (ExperimentKind k :
         {ExperimentKind::Convergence, ExperimentKind::PowerSweep, ExperimentKind::EveSweep,
          ExperimentKind::ElementSweep, ExperimentKind::CsiSweep, ExperimentKind::Quantization,
          ExperimentKind::BaselineCompare})
        if (experiment_kind_name(k) == name) return k;
    throw std::logic_error("unknown experiment kind '" + name + "'");
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::AnGnn: return "AN-GNN";
        case Scheme::ConvGnn: return "CONV-GNN";
        case Scheme::IrsGnn: return "IRS-GNN";
        case Scheme::AnMrt: return "AN-MRT";
        case Scheme::AnZf: return "AN-ZF";
        case Scheme::AnMmse: return "AN-MMSE";
    }
    throw std::logic_error("scheme_name: unknown scheme");
}

Scheme scheme_from_name(const std::string& name) {
    for (Scheme s : {Scheme::AnGnn, Scheme::ConvGnn, Scheme::IrsGnn, Scheme::AnMrt,
                     Scheme::AnZf, Scheme::AnMmse})
        if (scheme_name(s) == name) return s;
    throw std::logic_error("unknown scheme '" + name + "'");
}

bool scheme_is_gnn(Scheme s) {
    return s == Scheme::AnGnn || s == Scheme::ConvGnn || s == Scheme::IrsGnn;
}

Strategy scheme_strategy(Scheme s) {
    switch (s) {
        case Scheme::AnGnn: return Strategy::An;
        case Scheme::ConvGnn: return Strategy::Conv;
        case Scheme::IrsGnn: return Strategy::IrsOnly;
        default: return Strategy::An;  // baselines pair with the AN strategy
    }
}

void ExperimentSpec::validate() const {
    scenario.validate();
    train.validate();
    if (eval_channels < 1) throw std::logic_error("ExperimentSpec: eval_channels must be >= 1");
    if (axis.empty() && kind != ExperimentKind::Convergence &&
        kind != ExperimentKind::BaselineCompare)
        throw std::logic_error("ExperimentSpec: sweep needs at least one axis value");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (axis[i] <= axis[i - 1])
            throw std::logic_error("ExperimentSpec: axis values must be strictly increasing");
    if (kind == ExperimentKind::EveSweep)
        for (double a : axis)
            if (a < 1.0 || a != std::floor(a))
                throw std::logic_error("ExperimentSpec: eve_sweep axis must be positive integers");
    if (kind == ExperimentKind::ElementSweep)
        for (double a : axis)
            if (a < 1.0 || a != std::floor(a))
                throw std::logic_error(
                    "ExperimentSpec: element_sweep axis must be positive integers");
    if (kind == ExperimentKind::CsiSweep)
        for (double a : axis)
            if (a < 0.0) throw std::logic_error("ExperimentSpec: csi_sweep axis must be >= 0");
    if (kind == ExperimentKind::Quantization)
        for (double a : axis)
            if (a < 10.0 || a > 32.0 || a != std::floor(a))
                throw std::logic_error(
                    "ExperimentSpec: quantization axis lists word lengths in [10, 32]");
    if (resolved_schemes().empty()) throw std::logic_error("ExperimentSpec: no schemes");
}

std::vector<Scheme> ExperimentSpec::resolved_schemes() const {
    if (!schemes.empty()) return schemes;
    switch (kind) {
        case ExperimentKind::Convergence:
        case ExperimentKind::EveSweep:
        case ExperimentKind::ElementSweep:
            return {Scheme::AnGnn, Scheme::ConvGnn, Scheme::IrsGnn};
        case ExperimentKind::CsiSweep:
        case ExperimentKind::Quantization:
            return {Scheme::AnGnn};
        case ExperimentKind::PowerSweep:
        case ExperimentKind::BaselineCompare:
            return {Scheme::AnGnn, Scheme::ConvGnn, Scheme::IrsGnn,
                    Scheme::AnMrt, Scheme::AnZf,   Scheme::AnMmse};
    }
    return {};
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    if (j.contains("experiment"))
        spec.kind = experiment_kind_from_name(j.at("experiment").get<std::string>());
    if (j.contains("profile")) {
        spec.profile = j.at("profile").get<std::string>();
        if (spec.profile == "desk")
            spec.scenario = ScenarioConfig::desk_profile();
        else if (spec.profile == "paper")
            spec.scenario = ScenarioConfig::paper_profile();
        else
            throw std::logic_error("unknown profile '" + spec.profile + "'");
    }
    if (j.contains("scenario")) {
        nlohmann::json merged = spec.scenario.to_json();
        merged.update(j.at("scenario"));
        spec.scenario = ScenarioConfig::from_json(merged);
    }
    if (j.contains("train")) spec.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("axis")) spec.axis = j.at("axis").get<std::vector<double>>();
    if (j.contains("schemes")) {
        spec.schemes.clear();
        for (const auto& s : j.at("schemes"))
            spec.schemes.push_back(scheme_from_name(s.get<std::string>()));
    }
    if (j.contains("eval_channels")) spec.eval_channels = j.at("eval_channels").get<std::size_t>();
    if (j.contains("eval_csi_draws"))
        spec.eval_csi_draws = j.at("eval_csi_draws").get<std::size_t>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) spec.out_dir = j.at("out_dir").get<std::string>();
    spec.validate();
    return spec;
}

nlohmann::json ExperimentSpec::to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment_kind_name(kind);
    j["profile"] = profile;
    j["scenario"] = scenario.to_json();
    j["train"] = train.to_json();
    j["axis"] = axis;
    std::vector<std::string> names;
    for (Scheme s : resolved_schemes()) names.push_back(scheme_name(s));
    j["schemes"] = names;
    j["eval_channels"] = eval_channels;
    j["eval_csi_draws"] = eval_csi_draws;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    return j;
}

EvalSummary summarize(const std::vector<double>& per_channel) {
    EvalSummary s;
    s.samples = per_channel.size();
    s.per_channel = per_channel;
    if (per_channel.empty()) return s;
    double sum = 0.0;
    for (double v : per_channel) sum += v;
    s.mean = sum / static_cast<double>(per_channel.size());
    if (per_channel.size() > 1) {
        double sq = 0.0;
        for (double v : per_channel) sq += (v - s.mean) * (v - s.mean);
        s.std_error = std::sqrt(sq / static_cast<double>(per_channel.size() - 1) /
                                static_cast<double>(per_channel.size()));
    }
    return s;
}

double paired_std_error(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("paired_std_error: need two equal-length samples");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return summarize(diff).std_error;
}

EvalSummary evaluate_scheme(Scheme scheme, const std::vector<ChannelRealization>& channels,
                            const ModelParams* model, double p_max,
                            const std::vector<StarCoefficients>* baseline_coeffs) {
    if (channels.empty()) throw std::logic_error("evaluate_scheme: empty channel set");
    if (scheme_is_gnn(scheme) && model == nullptr)
        throw std::logic_error("evaluate_scheme: GNN scheme without a model");
    if (!scheme_is_gnn(scheme) &&
        (baseline_coeffs == nullptr || baseline_coeffs->size() != channels.size()))
        throw std::logic_error("evaluate_scheme: baseline scheme needs per-channel coefficients");

    std::vector<double> rates(channels.size());
    parallel_for(channels.size(), [&](std::size_t i) {
        const ChannelRealization& ch = channels[i];
        const EffectiveChannels eff = effective_channels(ch);
        if (scheme_is_gnn(scheme)) {
            const GraphInput graph = build_graph(eff);
            const ForwardResult out = forward(*model, graph, p_max);
            rates[i] = secrecy_rate_value(eff, out.coeffs, out.w.w, model->cfg.strategy);
        } else {
            const StarCoefficients& c = (*baseline_coeffs)[i];
            Beamformer w;
            switch (scheme) {
                case Scheme::AnMrt: w = mrt(ch, c, p_max); break;
                case Scheme::AnZf: w = zf(ch, p_max); break;
                default: w = mmse(ch, p_max); break;
            }
            rates[i] = secrecy_rate_value(eff, c, w.w, Strategy::An);
        }
    });
    return summarize(rates);
}

EvalSummary evaluate_gnn_expected(const ModelParams& model,
                                  const std::vector<ChannelRealization>& channels,
                                  const CsiErrorConfig& err, double p_max, std::size_t draws,
                                  Rng& rng) {
    if (channels.empty()) throw std::logic_error("evaluate_gnn_expected: empty channel set");
    // Per-channel substreams drawn up front so the parallel loop stays
    // deterministic.
    std::vector<Rng> streams;
    streams.reserve(channels.size());
    for (std::size_t i = 0; i < channels.size(); ++i) streams.push_back(rng.derive(i));

    std::vector<double> rates(channels.size());
    parallel_for(channels.size(), [&](std::size_t i) {
        Rng local = streams[i];
        const ChannelRealization& ch = channels[i];
        const CsiErrorSigmas sigmas = resolve_csi_sigmas(err, ch);
        const PerturbedCsi csi = perturb_csi(ch, err, local);
        const EffectiveChannels base = effective_channels(ch);
        const EffectiveChannels estimated = with_eve_csi(base, csi.h_est, csi.d_est);
        const GraphInput graph = build_graph(estimated);
        const ForwardResult out = forward(model, graph, p_max);
        rates[i] = expected_secrecy_rate(estimated, sigmas, out.coeffs, out.w.w,
                                         model.cfg.strategy, draws, local)
                       .mean;
    });
    return summarize(rates);
}

std::string channel_set_hash(const std::vector<ChannelRealization>& channels) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const ChannelRealization& ch : channels) {
        h = hash_matrix(ch.h_b, h);
        h = hash_matrix(ch.f_b, h);
        h = hash_matrix(ch.g, h);
        for (const auto& m : ch.h_k) h = hash_matrix(m, h);
        for (const auto& m : ch.f_k) h = hash_matrix(m, h);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<ChannelRealization> make_eval_channels(const ScenarioConfig& scenario,
                                                   std::size_t count, Rng& rng) {
    std::vector<ChannelRealization> channels;
    channels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) channels.push_back(sample_channels(scenario, rng));
    return channels;
}

TrainResult train_cached(const ScenarioConfig& scenario, const TrainConfig& train_cfg,
                         Strategy strategy, const std::string& cache_dir) {
    const std::string key = cache_key(scenario, train_cfg, strategy);
    const fs::path ckpt = fs::path(cache_dir) / (key + ".ckpt");
    const fs::path hist = fs::path(cache_dir) / (key + ".history");
    if (fs::exists(ckpt) && fs::exists(hist)) {
        TrainResult cached;
        cached.params = load_checkpoint(ckpt.string());
        cached.history = load_history(hist.string());
        return cached;
    }
    TrainResult result = train(scenario, train_cfg, strategy);
    fs::create_directories(cache_dir);
    save_checkpoint(ckpt.string(), result.params);
    save_history(hist.string(), result.history);
    return result;
}

std::string results_csv_path(const ExperimentSpec& spec) {
    return (fs::path(spec.out_dir) / "results.csv").string();
}

std::string manifest_path(const ExperimentSpec& spec) {
    return (fs::path(spec.out_dir) / "manifest.json").string();
}

std::size_t eval_thread_count() {
    static const std::size_t count = [] {
        const char* env = std::getenv("STARSEC_THREADS");
        if (env == nullptr) return std::size_t{1};
        const long v = std::strtol(env, nullptr, 10);
        if (v < 1) return std::size_t{1};
        return static_cast<std::size_t>(v);
    }();
    return count;
}

std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    fs::create_directories(spec.out_dir);
    const std::string cache_dir = (fs::path(spec.out_dir) / "cache").string();
    const Rng master(spec.seed);
    const std::vector<Scheme> schemes = spec.resolved_schemes();

    std::vector<double> axis_values = spec.axis;
    if (spec.kind == ExperimentKind::Convergence || spec.kind == ExperimentKind::BaselineCompare)
        axis_values = {watt_to_dbm(spec.scenario.p_max)};

    std::vector<ResultRecord> records;
    for (std::size_t ai = 0; ai < axis_values.size(); ++ai) {
        const double axis = axis_values[ai];
        const ScenarioConfig scenario = scenario_for(spec, axis);

        const auto t_start = std::chrono::steady_clock::now();
        Rng eval_rng = master.derive(kStreamEval);
        const std::vector<ChannelRealization> channels =
            make_eval_channels(scenario, spec.eval_channels, eval_rng);
        const std::string hash = channel_set_hash(channels);

        // Shared random surface configurations for the baseline schemes.
        std::vector<StarCoefficients> coeffs;
        Rng coeffs_rng = master.derive(kStreamCoeffs);
        coeffs.reserve(channels.size());
        for (std::size_t i = 0; i < channels.size(); ++i)
            coeffs.push_back(random_star_coeffs(static_cast<std::size_t>(scenario.L), coeffs_rng));

        for (std::size_t si = 0; si < schemes.size(); ++si) {
            const Scheme scheme = schemes[si];
            const auto t_cell = std::chrono::steady_clock::now();

            auto emit = [&](double axis_value, const std::string& label, const EvalSummary& s,
                            const std::string& cell_hash) {
                ResultRecord r;
                r.experiment = experiment_kind_name(spec.kind);
                r.axis = axis_value;
                r.scheme = label;
                r.mean_rate = s.mean;
                r.std_error = s.std_error;
                r.samples = s.samples;
                r.seed = spec.seed;
                r.channel_hash = cell_hash;
                r.wall_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t_cell)
                        .count();
                records.push_back(std::move(r));
            };

            try {
                if (scheme_is_gnn(scheme)) {
                    const Strategy strategy = scheme_strategy(scheme);
                    const std::uint64_t train_seed =
                        master.derive(kStreamTrainBase + ai * 8 + si).seed();
                    const TrainConfig tc = train_for(spec, axis, train_seed);
                    const TrainResult trained =
                        train_cached(scenario, tc, strategy, cache_dir);

                    if (spec.kind == ExperimentKind::Convergence) {
                        for (std::size_t it = 0; it < trained.history.size(); ++it) {
                            EvalSummary s;
                            s.mean = trained.history[it].mean_rate;
                            s.std_error = trained.history[it].rate_std_error;
                            s.samples = tc.samples_per_iteration > 0 ? tc.samples_per_iteration
                                                                     : tc.batch_size;
                            emit(static_cast<double>(it + 1), scheme_name(scheme), s,
                                 "train-" + std::to_string(train_seed));
                        }
                    } else if (spec.kind == ExperimentKind::CsiSweep) {
                        EvalSummary s;
                        if (axis > 0.0) {
                            Rng csi_rng = master.derive(kStreamCsi);
                            s = evaluate_gnn_expected(trained.params, channels,
                                                      CsiErrorConfig{axis, axis, true},
                                                      scenario.p_max, spec.eval_csi_draws,
                                                      csi_rng);
                        } else {
                            s = evaluate_scheme(scheme, channels, &trained.params,
                                                scenario.p_max, nullptr);
                        }
                        emit(axis, scheme_name(scheme), s, hash);
                    } else if (spec.kind == ExperimentKind::Quantization) {
                        const int word = static_cast<int>(axis);
                        const FixedPointFormat fmt{word, word - 8};
                        std::vector<GraphInput> calib;
                        const std::size_t n_calib = std::min<std::size_t>(64, channels.size());
                        for (std::size_t i = 0; i < n_calib; ++i)
                            calib.push_back(build_graph(channels[i]));
                        const QuantizedModel qm =
                            quantize_model(trained.params, fmt, calib);
                        const FidelityReport rep =
                            compare_fidelity(trained.params, qm, channels, scenario.p_max);
                        EvalSummary sf;
                        sf.mean = rep.mean_rate_float;
                        sf.samples = rep.samples;
                        emit(axis, scheme_name(scheme) + "-float", sf, hash);
                        EvalSummary sq;
                        sq.mean = rep.mean_rate_quantized;
                        sq.samples = rep.samples;
                        emit(axis, scheme_name(scheme) + "-quant", sq, hash);
                    } else {
                        const EvalSummary s = evaluate_scheme(scheme, channels, &trained.params,
                                                              scenario.p_max, nullptr);
                        emit(axis, scheme_name(scheme), s, hash);
                    }
                } else {
                    const EvalSummary s =
                        evaluate_scheme(scheme, channels, nullptr, scenario.p_max, &coeffs);
                    emit(axis, scheme_name(scheme), s, hash);
                }
            } catch (const std::runtime_error& e) {
                // Training divergence or a degenerate cell: record and move on.
                EvalSummary s;
                emit(axis, scheme_name(scheme), s, std::string("failed:") + e.what());
            }
        }
        (void)t_start;
    }

    // results.csv carries only reproducible fields; timings go separately.
    {
        std::ofstream os(results_csv_path(spec), std::ios::binary);
        os << "experiment,axis,scheme,mean_secrecy_rate,std_error,samples,seed,channel_hash\n";
        for (const ResultRecord& r : records) {
            os << r.experiment << ',' << format_g9(r.axis) << ',' << r.scheme << ','
               << format_g9(r.mean_rate) << ',' << format_g9(r.std_error) << ',' << r.samples
               << ',' << r.seed << ',' << r.channel_hash << '\n';
        }
    }
    {
        std::ofstream os((fs::path(spec.out_dir) / "timings.csv").string(), std::ios::binary);
        os << "experiment,axis,scheme,wall_seconds\n";
        for (const ResultRecord& r : records)
            os << r.experiment << ',' << format_g9(r.axis) << ',' << r.scheme << ','
               << format_g9(r.wall_seconds) << '\n';
    }
    {
        std::ofstream os(manifest_path(spec), std::ios::binary);
        os << spec.to_json().dump(2) << '\n';
    }
    return records;
}

}  // namespace starsec
