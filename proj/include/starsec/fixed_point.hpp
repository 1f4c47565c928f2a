#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace starsec {

/// Signed two's-complement fixed-point format with round-to-nearest-even and
/// saturation on overflow.
struct FixedPointFormat {
    int word_bits = 16;
    int frac_bits = 8;

    void validate() const;  // 1 <= frac_bits < word_bits <= 32

    std::int64_t max_int() const { return (std::int64_t{1} << (word_bits - 1)) - 1; }
    std::int64_t min_int() const { return -(std::int64_t{1} << (word_bits - 1)); }
    double resolution() const;
    double max_value() const { return static_cast<double>(max_int()) * resolution(); }
    double min_value() const { return static_cast<double>(min_int()) * resolution(); }

    bool operator==(const FixedPointFormat&) const = default;
};

/// Round-half-to-even on a real value.
std::int64_t round_nearest_even(double v);

struct QuantizedValue {
    std::int64_t q = 0;     // stored integer
    double real = 0.0;      // dequantized value
    bool saturated = false;
};

/// Round-to-nearest-even of x * 2^frac, saturated to the representable range.
QuantizedValue quantize_value(double x, const FixedPointFormat& fmt);

double dequantize(std::int64_t q, const FixedPointFormat& fmt);

/// Largest frac_bits (capped at word_bits - 1) such that max_abs still fits
/// the word; at least 1. This realizes per-tensor format selection: each
/// array shares one format chosen from its own range.
int fit_frac_bits(double max_abs, int word_bits);

struct QuantizedArray {
    std::string name;
    std::size_t rows = 0, cols = 0;
    FixedPointFormat fmt;
    std::vector<std::int32_t> q;
    std::size_t saturation_count = 0;

    double real(std::size_t i) const;
    std::vector<double> dequantized() const;
};

/// Quantizes every entry with the array's format, counting saturations.
QuantizedArray quantize_array(const std::string& name, const std::vector<double>& values,
                              std::size_t rows, std::size_t cols, const FixedPointFormat& fmt);

}  // namespace starsec
