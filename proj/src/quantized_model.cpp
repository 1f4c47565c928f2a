#include "starsec/quantized_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace starsec {

namespace {

constexpr char kModelMagic[8] = {'S', 'S', 'Q', 'M', '0', '0', '0', '1'};
constexpr double kCalibrationHeadroom = 1.25;

using Acc = __int128;

double sigmoid_ref(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Arithmetic right shift with round-to-nearest-even; exact left shift for
// negative amounts.
std::int64_t shift_round(Acc v, int shift) {
    if (shift <= 0) return static_cast<std::int64_t>(v << (-shift));
    const Acc floor = v >> shift;
    const Acc rem = v - (floor << shift);
    const Acc half = Acc{1} << (shift - 1);
    if (rem > half) return static_cast<std::int64_t>(floor + 1);
    if (rem < half) return static_cast<std::int64_t>(floor);
    return static_cast<std::int64_t>((floor % 2 == 0) ? floor : floor + 1);
}

std::int64_t saturate(std::int64_t q, const FixedPointFormat& fmt) {
    return std::clamp(q, fmt.min_int(), fmt.max_int());
}

// Requantize an accumulator carrying `from_frac` fractional bits.
std::int64_t requant(Acc acc, int from_frac, const FixedPointFormat& to) {
    return saturate(shift_round(acc, from_frac - to.frac_bits), to);
}

std::vector<std::int64_t> quantize_batch(const std::vector<double>& v,
                                         const FixedPointFormat& fmt) {
    std::vector<std::int64_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = quantize_value(v[i], fmt).q;
    return out;
}

// q(a) [m x k] * q(b) [k x n] -> requantized activations.
std::vector<std::int64_t> int_matmul(const std::vector<std::int64_t>& a, int a_frac,
                                     const std::vector<std::int32_t>& b, int b_frac,
                                     std::size_t m, std::size_t k, std::size_t n,
                                     const FixedPointFormat& out_fmt) {
    std::vector<std::int64_t> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Acc acc = 0;
            for (std::size_t p = 0; p < k; ++p)
                acc += static_cast<Acc>(a[i * k + p]) * static_cast<Acc>(b[p * n + j]);
            out[i * n + j] = requant(acc, a_frac + b_frac, out_fmt);
        }
    }
    return out;
}

void relu_int(std::vector<std::int64_t>& v) {
    for (auto& x : v)
        if (x < 0) x = 0;
}

// Adds a bias (stored at its own frac) into accumulators at acc_frac.
void add_bias(std::vector<Acc>& acc, int acc_frac, const QuantizedArray& bias) {
    const int shift = acc_frac - bias.fmt.frac_bits;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        Acc b = bias.q[i];
        if (shift >= 0)
            b <<= shift;
        else
            b = shift_round(b, -shift);  // narrowing shift, rare
        acc[i] += b;
    }
}

// Head row product with bias: q(row) [1 x k] * q(w) [k x n] + bias.
std::vector<std::int64_t> int_head(const std::vector<std::int64_t>& row, int row_frac,
                                   const QuantizedArray& w, const QuantizedArray& bias,
                                   const FixedPointFormat& out_fmt) {
    const std::size_t k = w.rows, n = w.cols;
    std::vector<Acc> acc(n, 0);
    for (std::size_t p = 0; p < k; ++p) {
        const Acc rp = row[p];
        if (rp == 0) continue;
        for (std::size_t j = 0; j < n; ++j)
            acc[j] += rp * static_cast<Acc>(w.q[p * n + j]);
    }
    const int acc_frac = row_frac + w.fmt.frac_bits;
    add_bias(acc, acc_frac, bias);
    std::vector<std::int64_t> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = requant(acc[j], acc_frac, out_fmt);
    return out;
}

std::vector<double> dequantize_all(const std::vector<std::int64_t>& q,
                                   const FixedPointFormat& fmt) {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = dequantize(q[i], fmt);
    return out;
}

QuantizedArray fit_and_quantize(const std::string& name, const Tensor& t, int word_bits) {
    double max_abs = 0.0;
    for (double v : t.values()) max_abs = std::max(max_abs, std::abs(v));
    const FixedPointFormat fmt{word_bits, fit_frac_bits(max_abs, word_bits)};
    return quantize_array(name, t.values(), t.rows(), t.cols(), fmt);
}

double max_abs_of(const Tensor& t) {
    double m = 0.0;
    for (double v : t.values()) m = std::max(m, std::abs(v));
    return m;
}

struct StageMaxima {
    double input = 0.0, g1_agg = 0.0, g1_out = 0.0, g2_agg = 0.0, g2_out = 0.0;
    double fcv = 0.0, fcw = 0.0;
};

// Float reference pass recording the pre-activation range of every stage.
void accumulate_maxima(const ModelParams& params, const GraphInput& g, StageMaxima& m) {
    m.input = std::max(m.input, max_abs_of(g.x));
    Tensor agg1 = matmul(g.a_norm, g.x);
    m.g1_agg = std::max(m.g1_agg, max_abs_of(agg1));
    Tensor lin1 = matmul(agg1, params.f1);
    m.g1_out = std::max(m.g1_out, max_abs_of(lin1));
    Tensor h1 = relu(lin1);
    Tensor agg2 = matmul(g.a_norm, h1);
    m.g2_agg = std::max(m.g2_agg, max_abs_of(agg2));
    Tensor lin2 = matmul(agg2, params.f2);
    m.g2_out = std::max(m.g2_out, max_abs_of(lin2));
    Tensor h2 = relu(lin2);
    Tensor v_pre = matmul(row(h2, 0), params.fcv_w) + params.fcv_b;
    m.fcv = std::max(m.fcv, max_abs_of(v_pre));
    Tensor w_pre = matmul(row(h2, 1), params.fcw_w) + params.fcw_b;
    m.fcw = std::max(m.fcw, max_abs_of(w_pre));
}

FixedPointFormat fitted(double max_abs, int word) {
    return {word, fit_frac_bits(max_abs * kCalibrationHeadroom, word)};
}

}  // namespace

SigmoidLut SigmoidLut::build(const FixedPointFormat& in_fmt, const FixedPointFormat& out_fmt) {
    in_fmt.validate();
    out_fmt.validate();
    SigmoidLut lut;
    lut.in_fmt = in_fmt;
    lut.out_fmt = out_fmt;
    lut.index_shift = std::max(0, in_fmt.word_bits - 10);  // 1024 segments
    const std::int64_t span = (in_fmt.max_int() + 1) - in_fmt.min_int();
    const std::size_t count = static_cast<std::size_t>(span >> lut.index_shift) + 1;
    lut.nodes.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::int64_t q_in =
            in_fmt.min_int() + (static_cast<std::int64_t>(i) << lut.index_shift);
        const double x = dequantize(q_in, in_fmt);
        lut.nodes[i] = quantize_value(sigmoid_ref(x), out_fmt).q;
    }
    return lut;
}

std::int64_t SigmoidLut::lookup(std::int64_t q) const {
    q = std::clamp(q, in_fmt.min_int(), in_fmt.max_int());
    const std::int64_t u = q - in_fmt.min_int();
    const std::size_t idx = static_cast<std::size_t>(u >> index_shift);
    if (index_shift == 0) return nodes[idx];
    const std::int64_t rem = u & ((std::int64_t{1} << index_shift) - 1);
    if (rem == 0 || idx + 1 >= nodes.size()) return nodes[idx];
    const Acc diff = static_cast<Acc>(nodes[idx + 1] - nodes[idx]) * rem;
    return nodes[idx] + shift_round(diff, index_shift);
}

std::size_t QuantizedModel::total_saturations() const {
    std::size_t total = 0;
    for (const QuantizedArray* a : arrays()) total += a->saturation_count;
    return total;
}

QuantizedModel quantize_model(const ModelParams& params, const FixedPointFormat& fmt) {
    fmt.validate();
    QuantizedModel qm;
    qm.cfg = params.cfg;
    qm.nominal = fmt;
    qm.f1 = fit_and_quantize("f1", params.f1, fmt.word_bits);
    qm.f2 = fit_and_quantize("f2", params.f2, fmt.word_bits);
    qm.fcv_w = fit_and_quantize("fcv_w", params.fcv_w, fmt.word_bits);
    qm.fcv_b = fit_and_quantize("fcv_b", params.fcv_b, fmt.word_bits);
    qm.fcw_w = fit_and_quantize("fcw_w", params.fcw_w, fmt.word_bits);
    qm.fcw_b = fit_and_quantize("fcw_b", params.fcw_b, fmt.word_bits);
    qm.act.input = fmt;
    qm.act.gcn1_agg = fmt;
    qm.act.gcn1_out = fmt;
    qm.act.gcn2_agg = fmt;
    qm.act.gcn2_out = fmt;
    qm.act.fcv_out = fmt;
    qm.act.fcw_out = fmt;
    qm.act.sigmoid_out = {fmt.word_bits, fmt.word_bits - 1};
    qm.act.adjacency = {fmt.word_bits, fmt.word_bits - 2};
    qm.lut = SigmoidLut::build(qm.act.fcv_out, qm.act.sigmoid_out);
    return qm;
}

QuantizedModel quantize_model(const ModelParams& params, const FixedPointFormat& fmt,
                              const std::vector<GraphInput>& calibration) {
    QuantizedModel qm = quantize_model(params, fmt);
    if (calibration.empty())
        throw std::invalid_argument("quantize_model: empty calibration set");
    StageMaxima m;
    for (const GraphInput& g : calibration) accumulate_maxima(params, g, m);
    const int w = fmt.word_bits;
    qm.act.input = fitted(m.input, w);
    qm.act.gcn1_agg = fitted(m.g1_agg, w);
    qm.act.gcn1_out = fitted(m.g1_out, w);
    qm.act.gcn2_agg = fitted(m.g2_agg, w);
    qm.act.gcn2_out = fitted(m.g2_out, w);
    qm.act.fcv_out = fitted(m.fcv, w);
    qm.act.fcw_out = fitted(m.fcw, w);
    qm.lut = SigmoidLut::build(qm.act.fcv_out, qm.act.sigmoid_out);
    return qm;
}

ForwardResult quantized_forward(const QuantizedModel& qm, const GraphInput& graph,
                                double p_max) {
    const ModelConfig& cfg = qm.cfg;
    if (graph.n != cfg.n || graph.l != cfg.l)
        throw std::logic_error("quantized_forward: graph dimensions do not match the model");
    if (graph.x.cols() != cfg.input_width())
        throw std::logic_error("quantized_forward: feature width mismatch");

    const std::size_t rows = graph.x.rows();
    const std::size_t width = graph.x.cols();
    const std::size_t hidden = cfg.hidden;

    // Inputs and the normalized adjacency are quantized on entry.
    std::vector<std::int64_t> x_q = quantize_batch(graph.x.values(), qm.act.input);
    std::vector<std::int64_t> a_q = quantize_batch(graph.a_norm.values(), qm.act.adjacency);

    auto agg1 = int_matmul(a_q, qm.act.adjacency.frac_bits,
                           std::vector<std::int32_t>(x_q.begin(), x_q.end()),
                           qm.act.input.frac_bits, rows, rows, width, qm.act.gcn1_agg);

    auto h1 = int_matmul(agg1, qm.act.gcn1_agg.frac_bits, qm.f1.q, qm.f1.fmt.frac_bits, rows,
                         width, hidden, qm.act.gcn1_out);
    relu_int(h1);

    auto agg2 = int_matmul(a_q, qm.act.adjacency.frac_bits,
                           std::vector<std::int32_t>(h1.begin(), h1.end()),
                           qm.act.gcn1_out.frac_bits, rows, rows, hidden, qm.act.gcn2_agg);
    auto h2 = int_matmul(agg2, qm.act.gcn2_agg.frac_bits, qm.f2.q, qm.f2.fmt.frac_bits, rows,
                         hidden, hidden, qm.act.gcn2_out);
    relu_int(h2);

    std::vector<std::int64_t> row0(h2.begin(), h2.begin() + hidden);
    std::vector<std::int64_t> row1(h2.begin() + hidden, h2.begin() + 2 * hidden);

    auto v_q = int_head(row0, qm.act.gcn2_out.frac_bits, qm.fcv_w, qm.fcv_b, qm.act.fcv_out);

    // Selective sigmoid mirroring apply_head_activations.
    const std::size_t l = cfg.l;
    const bool paired = cfg.phase_head == PhaseHead::Paired;
    const std::size_t sigmoid_upto =
        paired ? (cfg.strategy == Strategy::IrsOnly ? 0 : l) : v_q.size();
    std::vector<double> v_act(v_q.size());
    for (std::size_t i = 0; i < v_q.size(); ++i) {
        if (i < sigmoid_upto)
            v_act[i] = dequantize(qm.lut.lookup(v_q[i]), qm.act.sigmoid_out);
        else
            v_act[i] = dequantize(v_q[i], qm.act.fcv_out);
    }

    std::vector<double> w_raw;
    if (cfg.w_head == WHead::Fc) {
        auto w_q = int_head(row1, qm.act.gcn2_out.frac_bits, qm.fcw_w, qm.fcw_b, qm.act.fcw_out);
        w_raw = dequantize_all(w_q, qm.act.fcw_out);
    } else {
        // Normalization stages run at full precision.
        Tensor r1 = Tensor::from_vector(dequantize_all(row1, qm.act.gcn2_out), 1, hidden);
        Tensor ln = layer_norm(r1);
        w_raw.assign(ln.values().begin(), ln.values().begin() + 2 * cfg.n);
    }

    return assemble_outputs(cfg, Tensor::from_vector(std::move(v_act), 1, v_q.size()),
                            Tensor::from_vector(std::move(w_raw), 1, 2 * cfg.n), p_max);
}

FidelityReport compare_fidelity(const ModelParams& params, const QuantizedModel& qm,
                                const std::vector<ChannelRealization>& channels,
                                double p_max) {
    if (params.cfg.n != qm.cfg.n || params.cfg.l != qm.cfg.l ||
        params.cfg.hidden != qm.cfg.hidden)
        throw std::logic_error("compare_fidelity: model dimension mismatch");
    if (channels.empty()) throw std::logic_error("compare_fidelity: empty channel set");

    FidelityReport report;
    report.samples = channels.size();
    double sum_f = 0.0, sum_q = 0.0;
    for (const ChannelRealization& ch : channels) {
        const EffectiveChannels eff = effective_channels(ch);
        const GraphInput graph = build_graph(eff);
        const ForwardResult out_f = forward(params, graph, p_max);
        const ForwardResult out_q = quantized_forward(qm, graph, p_max);
        const double rf = secrecy_rate_value(eff, out_f.coeffs, out_f.w.w, params.cfg.strategy);
        const double rq = secrecy_rate_value(eff, out_q.coeffs, out_q.w.w, qm.cfg.strategy);
        sum_f += rf;
        sum_q += rq;
        report.max_sample_gap = std::max(report.max_sample_gap, std::abs(rf - rq));
    }
    report.mean_rate_float = sum_f / static_cast<double>(channels.size());
    report.mean_rate_quantized = sum_q / static_cast<double>(channels.size());
    report.relative_gap = std::abs(report.mean_rate_quantized - report.mean_rate_float) /
                          std::max(std::abs(report.mean_rate_float), 1e-12);
    return report;
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

void write_fmt(std::ostream& os, const FixedPointFormat& fmt) {
    write_u32(os, static_cast<std::uint32_t>(fmt.word_bits));
    write_u32(os, static_cast<std::uint32_t>(fmt.frac_bits));
}

FixedPointFormat read_fmt(std::istream& is) {
    FixedPointFormat fmt;
    fmt.word_bits = static_cast<int>(read_u32(is));
    fmt.frac_bits = static_cast<int>(read_u32(is));
    fmt.validate();
    return fmt;
}

void write_array(std::ostream& os, const QuantizedArray& arr) {
    write_u64(os, arr.name.size());
    os.write(arr.name.data(), static_cast<std::streamsize>(arr.name.size()));
    write_u64(os, arr.rows);
    write_u64(os, arr.cols);
    write_fmt(os, arr.fmt);
    write_u64(os, arr.saturation_count);
    os.write(reinterpret_cast<const char*>(arr.q.data()),
             static_cast<std::streamsize>(arr.q.size() * sizeof(std::int32_t)));
}

QuantizedArray read_array(std::istream& is) {
    QuantizedArray arr;
    const std::uint64_t name_len = read_u64(is);
    arr.name.resize(name_len);
    is.read(arr.name.data(), static_cast<std::streamsize>(name_len));
    arr.rows = read_u64(is);
    arr.cols = read_u64(is);
    arr.fmt = read_fmt(is);
    arr.saturation_count = read_u64(is);
    arr.q.resize(arr.rows * arr.cols);
    is.read(reinterpret_cast<char*>(arr.q.data()),
            static_cast<std::streamsize>(arr.q.size() * sizeof(std::int32_t)));
    return arr;
}

}  // namespace

void save_quantized_model(const std::string& path, const QuantizedModel& qm) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_quantized_model: cannot open " + path);
    os.write(kModelMagic, sizeof(kModelMagic));
    write_u32(os, static_cast<std::uint32_t>(qm.cfg.n));
    write_u32(os, static_cast<std::uint32_t>(qm.cfg.l));
    write_u32(os, static_cast<std::uint32_t>(qm.cfg.hidden));
    write_u32(os, static_cast<std::uint32_t>(qm.cfg.strategy));
    write_u32(os, static_cast<std::uint32_t>(qm.cfg.phase_head));
    write_u32(os, static_cast<std::uint32_t>(qm.cfg.w_head));
    write_fmt(os, qm.nominal);
    for (const FixedPointFormat* f :
         {&qm.act.input, &qm.act.gcn1_agg, &qm.act.gcn1_out, &qm.act.gcn2_agg, &qm.act.gcn2_out,
          &qm.act.fcv_out, &qm.act.fcw_out, &qm.act.sigmoid_out, &qm.act.adjacency})
        write_fmt(os, *f);
    for (const QuantizedArray* a : qm.arrays()) write_array(os, *a);
    if (!os) throw std::runtime_error("save_quantized_model: write failed for " + path);
}

QuantizedModel load_quantized_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_quantized_model: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_quantized_model: bad magic in " + path);
    QuantizedModel qm;
    qm.cfg.n = read_u32(is);
    qm.cfg.l = read_u32(is);
    qm.cfg.hidden = read_u32(is);
    qm.cfg.strategy = static_cast<Strategy>(read_u32(is));
    qm.cfg.phase_head = static_cast<PhaseHead>(read_u32(is));
    qm.cfg.w_head = static_cast<WHead>(read_u32(is));
    qm.nominal = read_fmt(is);
    for (FixedPointFormat* f :
         {&qm.act.input, &qm.act.gcn1_agg, &qm.act.gcn1_out, &qm.act.gcn2_agg, &qm.act.gcn2_out,
          &qm.act.fcv_out, &qm.act.fcw_out, &qm.act.sigmoid_out, &qm.act.adjacency})
        *f = read_fmt(is);
    qm.f1 = read_array(is);
    qm.f2 = read_array(is);
    qm.fcv_w = read_array(is);
    qm.fcv_b = read_array(is);
    qm.fcw_w = read_array(is);
    qm.fcw_b = read_array(is);
    if (!is) throw std::runtime_error("load_quantized_model: truncated file " + path);
    qm.lut = SigmoidLut::build(qm.act.fcv_out, qm.act.sigmoid_out);
    return qm;
}

}  // namespace starsec
