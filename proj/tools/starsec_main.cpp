// Command-line front end: train models, evaluate schemes, run the experiment
// harness, quantize checkpoints and inspect files. Exit codes: 0 success,
// 2 usage error, 1 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "starsec/experiment.hpp"

namespace fs = std::filesystem;
using namespace starsec;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    nlohmann::json j;
    is >> j;
    return j;
}

ScenarioConfig scenario_from_profile(const std::string& profile) {
    if (profile == "desk") return ScenarioConfig::desk_profile();
    if (profile == "paper") return ScenarioConfig::paper_profile();
    throw std::logic_error("unknown profile '" + profile + "' (expected desk or paper)");
}

struct CommonFlags {
    std::string config;
    std::string profile = "desk";
    std::string out = "results";
    std::string strategy = "an";
    std::string loss = "clamped";
    std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_strategy = true) {
    cmd->add_option("--config", flags.config, "JSON config file");
    cmd->add_option("--profile", flags.profile, "Scenario profile: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--seed", flags.seed, "Master RNG seed");
    if (with_strategy) {
        cmd->add_option("--strategy", flags.strategy, "Strategy: an, conv or irs")
            ->check(CLI::IsMember({"an", "conv", "irs"}));
        cmd->add_option("--loss", flags.loss, "Loss variant: clamped or unclamped")
            ->check(CLI::IsMember({"clamped", "unclamped"}));
    }
}

std::pair<ScenarioConfig, TrainConfig> resolve_configs(const CommonFlags& flags) {
    ScenarioConfig scenario = scenario_from_profile(flags.profile);
    TrainConfig train_cfg;
    if (!flags.config.empty()) {
        const nlohmann::json j = load_json(flags.config);
        if (j.contains("scenario")) {
            nlohmann::json merged = scenario.to_json();
            merged.update(j.at("scenario"));
            scenario = ScenarioConfig::from_json(merged);
        }
        if (j.contains("train")) train_cfg = TrainConfig::from_json(j.at("train"));
    }
    train_cfg.rng_seed = flags.seed;
    train_cfg.loss_variant = loss_variant_from_name(flags.loss);
    return {scenario, train_cfg};
}

int cmd_train(const CommonFlags& flags) {
    auto [scenario, train_cfg] = resolve_configs(flags);
    const Strategy strategy = strategy_from_name(flags.strategy);
    std::cerr << "training " << strategy_name(strategy) << " model: N=" << scenario.N
              << " L=" << scenario.L << " K=" << scenario.K
              << " iterations=" << train_cfg.iterations << "\n";
    const TrainResult result = train(scenario, train_cfg, strategy);
    fs::create_directories(flags.out);
    const std::string ckpt = (fs::path(flags.out) / "model.ckpt").string();
    save_checkpoint(ckpt, result.params);
    {
        std::ofstream os((fs::path(flags.out) / "history.csv").string(), std::ios::binary);
        os << "iteration,loss,mean_secrecy_rate,rate_std_error\n";
        char buf[160];
        for (std::size_t i = 0; i < result.history.size(); ++i) {
            const auto& h = result.history[i];
            std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", i + 1, h.loss, h.mean_rate,
                          h.rate_std_error);
            os << buf;
        }
    }
    std::cout << "checkpoint written to " << ckpt << "\n";
    std::cout << "final mean secrecy rate: " << result.history.back().mean_rate
              << " bits/s/Hz\n";
    return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint, std::size_t channels) {
    auto [scenario, train_cfg] = resolve_configs(flags);
    (void)train_cfg;
    const ModelParams params = load_checkpoint(checkpoint);
    if (params.cfg.n != static_cast<std::size_t>(scenario.N) ||
        params.cfg.l != static_cast<std::size_t>(scenario.L))
        throw std::logic_error("eval: checkpoint dimensions do not match the scenario");
    Rng rng(flags.seed);
    Rng eval_rng = rng.derive(0x100);
    const auto set = make_eval_channels(scenario, channels, eval_rng);
    Scheme scheme = Scheme::AnGnn;
    if (params.cfg.strategy == Strategy::Conv) scheme = Scheme::ConvGnn;
    if (params.cfg.strategy == Strategy::IrsOnly) scheme = Scheme::IrsGnn;
    const EvalSummary s = evaluate_scheme(scheme, set, &params, scenario.p_max, nullptr);
    std::cout << scheme_name(scheme) << ": mean secrecy rate " << s.mean << " +- "
              << s.std_error << " bits/s/Hz over " << s.samples
              << " channels (hash " << channel_set_hash(set) << ")\n";
    return 0;
}

int cmd_experiment(const CommonFlags& flags, const std::string& kind,
                   const std::vector<double>& axis) {
    ExperimentSpec spec;
    if (!flags.config.empty()) {
        spec = ExperimentSpec::from_json(load_json(flags.config));
    } else {
        spec.kind = experiment_kind_from_name(kind);
        spec.profile = flags.profile;
        spec.scenario = scenario_from_profile(flags.profile);
        spec.axis = axis;
        spec.seed = flags.seed;
        spec.train.loss_variant = loss_variant_from_name(flags.loss);
    }
    // Command-line overrides apply on top of a config file.
    if (!flags.out.empty()) spec.out_dir = flags.out;
    spec.validate();
    const auto records = run_experiment(spec);
    std::cout << "wrote " << records.size() << " rows to " << results_csv_path(spec) << "\n";
    return 0;
}

int cmd_quantize(const CommonFlags& flags, const std::string& checkpoint, int word, int frac,
                 std::size_t calib_count, std::size_t eval_count) {
    auto [scenario, train_cfg] = resolve_configs(flags);
    (void)train_cfg;
    const ModelParams params = load_checkpoint(checkpoint);
    const FixedPointFormat fmt{word, frac};
    fmt.validate();
    Rng rng(flags.seed);
    Rng eval_rng = rng.derive(0x100);
    const auto channels = make_eval_channels(scenario, eval_count, eval_rng);
    std::vector<GraphInput> calib;
    for (std::size_t i = 0; i < std::min(calib_count, channels.size()); ++i)
        calib.push_back(build_graph(channels[i]));
    const QuantizedModel qm = quantize_model(params, fmt, calib);
    fs::create_directories(flags.out);
    const std::string path = (fs::path(flags.out) / "model.qm").string();
    save_quantized_model(path, qm);
    const FidelityReport rep = compare_fidelity(params, qm, channels, scenario.p_max);
    nlohmann::json j;
    j["format"] = {{"word_bits", word}, {"frac_bits", frac}};
    j["mean_rate_float"] = rep.mean_rate_float;
    j["mean_rate_quantized"] = rep.mean_rate_quantized;
    j["relative_gap"] = rep.relative_gap;
    j["max_sample_gap"] = rep.max_sample_gap;
    j["samples"] = rep.samples;
    j["saturated_weights"] = qm.total_saturations();
    j["model_file"] = path;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_inspect(const std::string& checkpoint) {
    const ModelParams params = load_checkpoint(checkpoint);
    nlohmann::json j;
    j["N"] = params.cfg.n;
    j["L"] = params.cfg.l;
    j["hidden"] = params.cfg.hidden;
    j["strategy"] = strategy_name(params.cfg.strategy);
    j["phase_head"] = phase_head_name(params.cfg.phase_head);
    j["w_head"] = w_head_name(params.cfg.w_head);
    j["parameters"] = params.parameter_count();
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"STAR-IRS secure indoor link simulator and GNN beamforming toolkit"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, exp_flags, quant_flags;
    std::string eval_ckpt, quant_ckpt, inspect_ckpt;
    std::size_t eval_channels = 1000;
    std::string exp_kind = "power_sweep";
    std::vector<double> exp_axis;
    int q_word = 16, q_frac = 8;
    std::size_t q_calib = 64, q_eval = 1000;

    CLI::App* c_train = app.add_subcommand("train", "Train a GNN beamforming model");
    add_common(c_train, train_flags);

    CLI::App* c_eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
    add_common(c_eval, eval_flags, false);
    c_eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    c_eval->add_option("--channels", eval_channels, "Held-out channel count");

    CLI::App* c_exp = app.add_subcommand("experiment", "Run an experiment sweep");
    add_common(c_exp, exp_flags);
    c_exp->add_option("--kind", exp_kind, "Experiment kind when no config file is given")
        ->check(CLI::IsMember({"convergence", "power_sweep", "eve_sweep", "element_sweep",
                               "csi_sweep", "quantization", "baseline_compare"}));
    c_exp->add_option("--axis", exp_axis, "Sweep axis values")->delimiter(',');

    CLI::App* c_quant = app.add_subcommand("quantize", "Quantize a checkpoint and report fidelity");
    add_common(c_quant, quant_flags, false);
    c_quant->add_option("--checkpoint", quant_ckpt, "Checkpoint file")->required();
    c_quant->add_option("--word", q_word, "Word length in bits");
    c_quant->add_option("--frac", q_frac, "Fractional bits");
    c_quant->add_option("--calib", q_calib, "Calibration graph count");
    c_quant->add_option("--channels", q_eval, "Fidelity evaluation channel count");

    CLI::App* c_inspect = app.add_subcommand("inspect-checkpoint", "Print checkpoint metadata");
    c_inspect->add_option("--checkpoint", inspect_ckpt, "Checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_train->parsed()) return cmd_train(train_flags);
        if (c_eval->parsed()) return cmd_eval(eval_flags, eval_ckpt, eval_channels);
        if (c_exp->parsed()) return cmd_experiment(exp_flags, exp_kind, exp_axis);
        if (c_quant->parsed())
            return cmd_quantize(quant_flags, quant_ckpt, q_word, q_frac, q_calib, q_eval);
        if (c_inspect->parsed()) return cmd_inspect(inspect_ckpt);
    } catch (const std::logic_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
