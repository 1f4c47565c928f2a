#include "starsec/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace starsec {

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'S', 'G', 'N', 'C', 'K', 'P', '1'};

// Keeps acos arguments off the exact +-1 boundary where the derivative blows
// up; sigmoid saturation can otherwise round to 1.0 in double precision.
constexpr double kCosBound = 1.0 - 1e-12;

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> v(fan_in * fan_out);
    for (auto& x : v) x = rng.uniform(-limit, limit);
    return Tensor::from_vector(std::move(v), fan_in, fan_out).set_requires_grad(true);
}

Tensor decode_phase_cos(const Tensor& cos_row) {
    return transpose(acos(clamp(cos_row, -kCosBound, kCosBound)));
}

}  // namespace

std::string phase_head_name(PhaseHead h) {
    switch (h) {
        case PhaseHead::Faithful: return "faithful";
        case PhaseHead::FullPhase: return "full";
        case PhaseHead::Paired: return "paired";
    }
    throw std::logic_error("phase_head_name: unknown head");
}

PhaseHead phase_head_from_name(const std::string& name) {
    if (name == "faithful") return PhaseHead::Faithful;
    if (name == "full") return PhaseHead::FullPhase;
    if (name == "paired") return PhaseHead::Paired;
    throw std::logic_error("unknown phase head '" + name + "'");
}

std::string w_head_name(WHead h) {
    return h == WHead::Fc ? "fc" : "layernorm";
}

WHead w_head_from_name(const std::string& name) {
    if (name == "fc") return WHead::Fc;
    if (name == "layernorm") return WHead::LayerNorm;
    throw std::logic_error("unknown beamformer head '" + name + "'");
}

std::size_t ModelConfig::fcv_width() const {
    const bool paired = phase_head == PhaseHead::Paired;
    if (strategy == Strategy::IrsOnly) return paired ? 2 * l : l;
    return paired ? 5 * l : 3 * l;
}

void ModelConfig::validate() const {
    if (n < 1 || l < 1) throw std::logic_error("ModelConfig: n and l must be at least 1");
    if (hidden < 1) throw std::logic_error("ModelConfig: hidden width must be positive");
    if (w_head == WHead::LayerNorm && hidden < 2 * n)
        throw std::logic_error("ModelConfig: layer-norm beamformer head needs hidden >= 2N");
}

std::size_t ModelParams::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor& t : all()) total += t.size();
    return total;
}

ModelParams init_params(Rng& rng, const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.cfg = cfg;
    p.f1 = glorot(rng, cfg.input_width(), cfg.hidden);
    p.f2 = glorot(rng, cfg.hidden, cfg.hidden);
    p.fcv_w = glorot(rng, cfg.hidden, cfg.fcv_width());
    p.fcv_b = Tensor::zeros(1, cfg.fcv_width()).set_requires_grad(true);
    p.fcw_w = glorot(rng, cfg.hidden, cfg.fcw_width());
    p.fcw_b = Tensor::zeros(1, cfg.fcw_width()).set_requires_grad(true);
    return p;
}

Tensor apply_head_activations(const ModelConfig& cfg, const Tensor& v_pre) {
    if (cfg.phase_head != PhaseHead::Paired) return sigmoid(v_pre);
    const std::size_t l = cfg.l;
    if (cfg.strategy == Strategy::IrsOnly) return v_pre;  // (cos, sin) pairs only
    // [beta | cos/sin pairs]: sigmoid on the energy slice only.
    return concat_cols({sigmoid(col_slice(v_pre, 0, l)), col_slice(v_pre, l, 5 * l)});
}

ForwardResult assemble_outputs(const ModelConfig& cfg, const Tensor& v_activated,
                               const Tensor& w_raw, double p_max) {
    const std::size_t l = cfg.l;
    const std::size_t n = cfg.n;
    if (v_activated.cols() != cfg.fcv_width() || v_activated.rows() != 1)
        throw std::logic_error("assemble_outputs: coefficient head width mismatch");
    if (w_raw.cols() != 2 * n || w_raw.rows() != 1)
        throw std::logic_error("assemble_outputs: beamformer head width mismatch");
    if (p_max <= 0.0) throw std::domain_error("assemble_outputs: power budget must be positive");

    StarCoefficients coeffs;
    const bool irs_only = cfg.strategy == Strategy::IrsOnly;
    std::size_t offset = 0;
    if (irs_only) {
        coeffs.beta_r = Tensor::constant(l, 1, 1.0);
    } else {
        coeffs.beta_r = transpose(col_slice(v_activated, 0, l));
        offset = l;
    }

    auto decode_phase = [&](std::size_t slot) -> Tensor {
        if (cfg.phase_head == PhaseHead::Paired) {
            Tensor a = col_slice(v_activated, offset + 2 * slot * l, offset + (2 * slot + 1) * l);
            Tensor b =
                col_slice(v_activated, offset + (2 * slot + 1) * l, offset + (2 * slot + 2) * l);
            return transpose(atan2(b, a));
        }
        Tensor u = col_slice(v_activated, offset + slot * l, offset + (slot + 1) * l);
        if (cfg.phase_head == PhaseHead::FullPhase) return decode_phase_cos(2.0 * u - 1.0);
        return decode_phase_cos(u);
    };

    coeffs.theta_r = decode_phase(0);
    if (irs_only) {
        coeffs.theta_t_an = Tensor::zeros(l, 1);
    } else {
        Tensor theta_t = decode_phase(1);
        coeffs.theta_t_an = theta_t;
        if (cfg.strategy == Strategy::Conv) coeffs.theta_t_info = theta_t;
    }

    Tensor w_norm = norm2(w_raw);
    if (w_norm.item() < 1e-30)
        throw std::runtime_error("assemble_outputs: beamformer head produced a zero vector");
    Tensor w_scaled = scale_by(w_raw, std::sqrt(p_max) * reciprocal(w_norm));
    Beamformer w;
    w.p_max = p_max;
    w.w = ComplexMatrix(transpose(col_slice(w_scaled, 0, n)),
                        transpose(col_slice(w_scaled, n, 2 * n)));
    return {w, coeffs};
}

ForwardResult forward(const ModelParams& params, const GraphInput& graph, double p_max) {
    const ModelConfig& cfg = params.cfg;
    if (graph.n != cfg.n || graph.l != cfg.l)
        throw std::logic_error("forward: graph dimensions do not match the model");
    if (graph.x.cols() != cfg.input_width())
        throw std::logic_error("forward: feature width mismatch");

    Tensor h1 = gcn_layer(graph.x, graph.a_norm, params.f1);
    Tensor h2 = gcn_layer(h1, graph.a_norm, params.f2);

    Tensor v_pre = matmul(row(h2, 0), params.fcv_w) + params.fcv_b;
    Tensor v_act = apply_head_activations(cfg, v_pre);

    Tensor w_raw;
    if (cfg.w_head == WHead::Fc) {
        w_raw = matmul(row(h2, 1), params.fcw_w) + params.fcw_b;
    } else {
        w_raw = col_slice(layer_norm(row(h2, 1)), 0, 2 * cfg.n);
    }
    return assemble_outputs(cfg, v_act, w_raw, p_max);
}

std::string loss_variant_name(LossVariant v) {
    return v == LossVariant::Clamped ? "clamped" : "unclamped";
}

LossVariant loss_variant_from_name(const std::string& name) {
    if (name == "clamped") return LossVariant::Clamped;
    if (name == "unclamped") return LossVariant::Unclamped;
    throw std::logic_error("unknown loss variant '" + name + "'");
}

LossSample make_loss_sample(const ChannelRealization& ch, const GraphOptions& opts) {
    LossSample s;
    EffectiveChannels eff = effective_channels(ch);
    s.graph = build_graph(eff, opts);
    s.rate_channels.push_back(std::move(eff));
    return s;
}

LossSample make_loss_sample(const ChannelRealization& ch, const CsiErrorConfig& err,
                            std::size_t draws, Rng& rng, const GraphOptions& opts) {
    if (draws < 1) throw std::logic_error("make_loss_sample: need at least one rate draw");
    const CsiErrorSigmas sigmas = resolve_csi_sigmas(err, ch);
    const PerturbedCsi csi = perturb_csi(ch, err, rng);
    EffectiveChannels base = effective_channels(ch);
    EffectiveChannels estimated = with_eve_csi(base, csi.h_est, csi.d_est);

    LossSample s;
    s.graph = build_graph(estimated, opts);
    const std::size_t n = estimated.n();
    const std::size_t ln = estimated.l() * n;
    s.rate_channels.reserve(draws);
    for (std::size_t m = 0; m < draws; ++m) {
        EffectiveChannels drawn = estimated;
        for (std::size_t k = 0; k < estimated.k(); ++k) {
            const double sd_h = std::sqrt(sigmas.sigma2_h[k]);
            const double sd_d = std::sqrt(sigmas.sigma2_d[k]);
            std::vector<std::complex<double>> eh(n), ed(ln);
            for (auto& e : eh) e = sd_h * rng.cnormal();
            for (auto& e : ed) e = sd_d * rng.cnormal();
            drawn.h_k[k] = estimated.h_k[k] + ComplexMatrix::from_std(eh, n, 1);
            drawn.d_k[k] = estimated.d_k[k] +
                           ComplexMatrix::from_std(ed, estimated.l(), n);
        }
        s.rate_channels.push_back(std::move(drawn));
    }
    return s;
}

Tensor loss(const ModelParams& params, const std::vector<LossSample>& batch, double p_max,
            LossVariant variant, std::vector<double>* clamped_rates) {
    if (batch.empty()) throw std::logic_error("loss: empty batch");
    if (clamped_rates != nullptr) clamped_rates->clear();

    Tensor total = Tensor::scalar(0.0);
    for (const LossSample& sample : batch) {
        ForwardResult out = forward(params, sample.graph, p_max);
        Tensor sample_rate = Tensor::scalar(0.0);
        double clamped_sum = 0.0;
        for (const EffectiveChannels& ch : sample.rate_channels) {
            Tensor gb = sinr_bob(ch, out.coeffs, out.w.w);
            std::vector<Tensor> ge;
            ge.reserve(ch.k());
            for (std::size_t k = 0; k < ch.k(); ++k)
                ge.push_back(sinr_eve(ch, out.coeffs, out.w.w, k, params.cfg.strategy));
            Tensor r = secrecy_rate(gb, ge, variant == LossVariant::Clamped);
            clamped_sum += std::max(0.0, r.item());
            sample_rate = sample_rate + r;
        }
        const double inv_draws = 1.0 / static_cast<double>(sample.rate_channels.size());
        total = total + sample_rate * inv_draws;
        if (clamped_rates != nullptr) clamped_rates->push_back(clamped_sum * inv_draws);
    }
    return total * (-1.0 / static_cast<double>(batch.size()));
}

Tensor loss(const ModelParams& params, const std::vector<ChannelRealization>& batch,
            double p_max, LossVariant variant, std::vector<double>* clamped_rates) {
    std::vector<LossSample> samples;
    samples.reserve(batch.size());
    for (const ChannelRealization& ch : batch) samples.push_back(make_loss_sample(ch));
    return loss(params, samples, p_max, variant, clamped_rates);
}

void TrainConfig::validate() const {
    if (iterations < 1 || batch_size < 1 || hidden < 1 || csi_draws < 1)
        throw std::logic_error("TrainConfig: counts must be positive");
    if (learning_rate < 0.0) throw std::logic_error("TrainConfig: negative learning rate");
    if (csi_error) csi_error->validate();
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<std::size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("samples_per_iteration"))
        cfg.samples_per_iteration = j.at("samples_per_iteration").get<std::size_t>();
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::size_t>();
    if (j.contains("loss_variant"))
        cfg.loss_variant = loss_variant_from_name(j.at("loss_variant").get<std::string>());
    if (j.contains("csi_error") && !j.at("csi_error").is_null())
        cfg.csi_error = CsiErrorConfig::from_json(j.at("csi_error"));
    if (j.contains("csi_draws")) cfg.csi_draws = j.at("csi_draws").get<std::size_t>();
    if (j.contains("phase_head"))
        cfg.phase_head = phase_head_from_name(j.at("phase_head").get<std::string>());
    if (j.contains("w_head")) cfg.w_head = w_head_from_name(j.at("w_head").get<std::string>());
    if (j.contains("symmetrize_adjacency"))
        cfg.symmetrize_adjacency = j.at("symmetrize_adjacency").get<bool>();
    if (j.contains("rng_seed")) cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j;
    j["iterations"] = iterations;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["samples_per_iteration"] = samples_per_iteration;
    j["hidden"] = hidden;
    j["loss_variant"] = loss_variant_name(loss_variant);
    j["csi_error"] = csi_error ? csi_error->to_json() : nlohmann::json();
    j["csi_draws"] = csi_draws;
    j["phase_head"] = phase_head_name(phase_head);
    j["w_head"] = w_head_name(w_head);
    j["symmetrize_adjacency"] = symmetrize_adjacency;
    j["rng_seed"] = rng_seed;
    return j;
}

TrainResult train(const ScenarioConfig& scenario, const TrainConfig& cfg, Strategy strategy) {
    scenario.validate();
    cfg.validate();

    ModelConfig mc;
    mc.n = static_cast<std::size_t>(scenario.N);
    mc.l = static_cast<std::size_t>(scenario.L);
    mc.hidden = cfg.hidden;
    mc.strategy = strategy;
    mc.phase_head = cfg.phase_head;
    mc.w_head = cfg.w_head;

    Rng root(cfg.rng_seed);
    Rng chan_rng = root.derive(1);
    Rng err_rng = root.derive(2);
    Rng init_rng = root.derive(3);

    TrainResult result;
    result.params = init_params(init_rng, mc);
    result.history.reserve(cfg.iterations);

    const GraphOptions graph_opts{cfg.symmetrize_adjacency};
    const std::size_t per_iter =
        cfg.samples_per_iteration > 0 ? cfg.samples_per_iteration : cfg.batch_size;
    std::vector<Tensor> param_list = result.params.all();

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        std::vector<LossSample> samples;
        samples.reserve(per_iter);
        for (std::size_t s = 0; s < per_iter; ++s) {
            ChannelRealization ch = sample_channels(scenario, chan_rng);
            if (cfg.csi_error)
                samples.push_back(
                    make_loss_sample(ch, *cfg.csi_error, cfg.csi_draws, err_rng, graph_opts));
            else
                samples.push_back(make_loss_sample(ch, graph_opts));
        }

        double loss_acc = 0.0;
        double rate_acc = 0.0, rate_sq_acc = 0.0;
        std::size_t rate_count = 0;
        for (std::size_t start = 0; start < samples.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(samples.size(), start + cfg.batch_size);
            std::vector<LossSample> chunk(samples.begin() + start, samples.begin() + stop);

            Tape tape;
            std::vector<double> rates;
            double chunk_loss = 0.0;
            {
                TapeScope scope(tape);
                Tensor l = loss(result.params, chunk, scenario.p_max, cfg.loss_variant, &rates);
                chunk_loss = l.item();
                if (!std::isfinite(chunk_loss))
                    throw std::runtime_error(
                        "train: non-finite loss at iteration " + std::to_string(it));
                for (Tensor& p : param_list) p.zero_grad();
                tape.backward(l);
            }
            for (Tensor& p : param_list) {
                const auto& g = p.grad();
                auto& v = p.values();
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= cfg.learning_rate * g[i];
            }
            loss_acc += chunk_loss * static_cast<double>(chunk.size());
            for (double r : rates) {
                rate_acc += r;
                rate_sq_acc += r * r;
                ++rate_count;
            }
        }

        TrainHistoryEntry entry;
        entry.loss = loss_acc / static_cast<double>(samples.size());
        entry.mean_rate = rate_acc / static_cast<double>(rate_count);
        if (rate_count > 1) {
            const double var = std::max(
                0.0, (rate_sq_acc - rate_acc * rate_acc / static_cast<double>(rate_count)) /
                         static_cast<double>(rate_count - 1));
            entry.rate_std_error = std::sqrt(var / static_cast<double>(rate_count));
        }
        result.history.push_back(entry);
    }
    return result;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
    write_u64(os, t.rows());
    write_u64(os, t.cols());
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is) {
    const std::uint64_t rows = read_u64(is);
    const std::uint64_t cols = read_u64(is);
    std::vector<double> v(rows * cols);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    return Tensor::from_vector(std::move(v), rows, cols).set_requires_grad(true);
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.n));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.l));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.hidden));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.strategy));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.phase_head));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.w_head));
    for (const Tensor& t : params.all()) write_tensor(os, t);
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    ModelParams p;
    p.cfg.n = read_u32(is);
    p.cfg.l = read_u32(is);
    p.cfg.hidden = read_u32(is);
    p.cfg.strategy = static_cast<Strategy>(read_u32(is));
    p.cfg.phase_head = static_cast<PhaseHead>(read_u32(is));
    p.cfg.w_head = static_cast<WHead>(read_u32(is));
    p.f1 = read_tensor(is);
    p.f2 = read_tensor(is);
    p.fcv_w = read_tensor(is);
    p.fcv_b = read_tensor(is);
    p.fcw_w = read_tensor(is);
    p.fcw_b = read_tensor(is);
    if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
    p.cfg.validate();
    return p;
}

}  // namespace starsec
