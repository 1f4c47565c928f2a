#pragma once

#include <string>
#include <vector>

#include "starsec/fixed_point.hpp"
#include "starsec/model.hpp"

namespace starsec {

/// Fixed-point formats of every stage of the inference pipeline. When a
/// calibration set is supplied, each stage's frac_bits are fitted to the
/// observed float range (per-stage power-of-two scaling with a shared word
/// length); otherwise every stage uses the nominal format as given.
struct ActivationFormats {
    FixedPointFormat input;
    FixedPointFormat gcn1_agg;
    FixedPointFormat gcn1_out;
    FixedPointFormat gcn2_agg;
    FixedPointFormat gcn2_out;
    FixedPointFormat fcv_out;
    FixedPointFormat fcw_out;
    FixedPointFormat sigmoid_out;
    FixedPointFormat adjacency;
};

/// 1024-segment lookup table with linear interpolation, indexed by the top
/// bits of the input word; all lookups are integer arithmetic.
struct SigmoidLut {
    FixedPointFormat in_fmt;
    FixedPointFormat out_fmt;
    int index_shift = 0;
    std::vector<std::int64_t> nodes;  // node values in out_fmt, one per segment edge

    static SigmoidLut build(const FixedPointFormat& in_fmt, const FixedPointFormat& out_fmt);
    std::int64_t lookup(std::int64_t q) const;
};

/// Integer copies of the model arrays (per-tensor formats, shared word
/// length) plus the activation pipeline formats.
struct QuantizedModel {
    ModelConfig cfg;
    FixedPointFormat nominal;
    QuantizedArray f1, f2, fcv_w, fcv_b, fcw_w, fcw_b;
    ActivationFormats act;
    SigmoidLut lut;

    std::vector<const QuantizedArray*> arrays() const {
        return {&f1, &f2, &fcv_w, &fcv_b, &fcw_w, &fcw_b};
    }
    std::size_t total_saturations() const;
};

/// Quantizes every weight/bias array at the nominal word length with
/// per-array range-fitted frac_bits. Activation stages use the nominal format
/// unchanged.
QuantizedModel quantize_model(const ModelParams& params, const FixedPointFormat& fmt);

/// Additionally calibrates the activation stage formats from float forward
/// passes over the given graphs.
QuantizedModel quantize_model(const ModelParams& params, const FixedPointFormat& fmt,
                              const std::vector<GraphInput>& calibration);

/// Integer-arithmetic inference: quantized inputs, integer multiply-
/// accumulate with double-width accumulators, re-quantization after each
/// matrix stage and table-based sigmoid. The constraint-enforcing output
/// post-processing (sqrt, norm scaling, acos) runs in double precision, so
/// outputs satisfy C1-C6 exactly like the float path.
ForwardResult quantized_forward(const QuantizedModel& qm, const GraphInput& graph, double p_max);

struct FidelityReport {
    double mean_rate_float = 0.0;
    double mean_rate_quantized = 0.0;
    double relative_gap = 0.0;
    double max_sample_gap = 0.0;
    std::size_t samples = 0;
};

/// Paired float-vs-quantized secrecy-rate evaluation on an identical channel
/// set.
FidelityReport compare_fidelity(const ModelParams& params, const QuantizedModel& qm,
                                const std::vector<ChannelRealization>& channels, double p_max);

// Packed little-endian integer file format; round-trips bit-exactly.
void save_quantized_model(const std::string& path, const QuantizedModel& qm);
QuantizedModel load_quantized_model(const std::string& path);

}  // namespace starsec
