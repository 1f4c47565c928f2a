#include "starsec/fixed_point.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace starsec {

void FixedPointFormat::validate() const {
    if (frac_bits < 1 || frac_bits >= word_bits || word_bits > 32)
        throw std::domain_error("FixedPointFormat: need 1 <= frac_bits < word_bits <= 32");
}

double FixedPointFormat::resolution() const { return std::ldexp(1.0, -frac_bits); }

std::int64_t round_nearest_even(double v) {
    const double fl = std::floor(v);
    const double frac = v - fl;
    const auto base = static_cast<std::int64_t>(fl);
    if (frac > 0.5) return base + 1;
    if (frac < 0.5) return base;
    return (base % 2 == 0) ? base : base + 1;
}

QuantizedValue quantize_value(double x, const FixedPointFormat& fmt) {
    fmt.validate();
    if (!std::isfinite(x)) throw std::domain_error("quantize_value: non-finite input");
    QuantizedValue out;
    const std::int64_t raw = round_nearest_even(std::ldexp(x, fmt.frac_bits));
    if (raw > fmt.max_int()) {
        out.q = fmt.max_int();
        out.saturated = true;
    } else if (raw < fmt.min_int()) {
        out.q = fmt.min_int();
        out.saturated = true;
    } else {
        out.q = raw;
    }
    out.real = dequantize(out.q, fmt);
    return out;
}

double dequantize(std::int64_t q, const FixedPointFormat& fmt) {
    return std::ldexp(static_cast<double>(q), -fmt.frac_bits);
}

int fit_frac_bits(double max_abs, int word_bits) {
    for (int f = word_bits - 1; f > 1; --f) {
        const FixedPointFormat fmt{word_bits, f};
        if (round_nearest_even(std::ldexp(max_abs, f)) <= fmt.max_int() &&
            round_nearest_even(std::ldexp(-max_abs, f)) >= fmt.min_int())
            return f;
    }
    return 1;
}

double QuantizedArray::real(std::size_t i) const { return dequantize(q[i], fmt); }

std::vector<double> QuantizedArray::dequantized() const {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = real(i);
    return out;
}

QuantizedArray quantize_array(const std::string& name, const std::vector<double>& values,
                              std::size_t rows, std::size_t cols, const FixedPointFormat& fmt) {
    if (values.size() != rows * cols)
        throw std::invalid_argument("quantize_array: size mismatch for " + name);
    QuantizedArray arr;
    arr.name = name;
    arr.rows = rows;
    arr.cols = cols;
    arr.fmt = fmt;
    arr.q.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const QuantizedValue v = quantize_value(values[i], fmt);
        arr.q[i] = static_cast<std::int32_t>(v.q);
        if (v.saturated) ++arr.saturation_count;
    }
    return arr;
}

}  // namespace starsec
