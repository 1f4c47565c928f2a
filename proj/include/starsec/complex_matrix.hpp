#pragma once

#include <complex>
#include <vector>

#include "starsec/tensor.hpp"

namespace starsec {

/// Complex matrix stored as paired real/imaginary tensors so that all
/// arithmetic differentiates through the real-valued tape.
struct ComplexMatrix {
    Tensor re;
    Tensor im;

    ComplexMatrix() = default;
    ComplexMatrix(Tensor real, Tensor imag);

    static ComplexMatrix zeros(std::size_t rows, std::size_t cols);
    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix from_std(const std::vector<std::complex<double>>& data,
                                  std::size_t rows, std::size_t cols);

    std::size_t rows() const { return re.rows(); }
    std::size_t cols() const { return re.cols(); }
    std::size_t size() const { return re.size(); }

    std::complex<double> at(std::size_t i, std::size_t j) const {
        return {re.at(i, j), im.at(i, j)};
    }

    std::vector<std::complex<double>> to_std() const;
};

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);

/// Elementwise complex product.
ComplexMatrix cmul(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix cmatmul(const ComplexMatrix& a, const ComplexMatrix& b);

/// Matrix-vector product; v must be a column vector.
ComplexMatrix complex_matvec(const ComplexMatrix& m, const ComplexMatrix& v);

ComplexMatrix conj(const ComplexMatrix& a);
ComplexMatrix hermitian(const ComplexMatrix& a);

/// a^H b for column vectors (1x1 result).
ComplexMatrix cdot_h(const ComplexMatrix& a, const ComplexMatrix& b);

/// a^T b for column vectors, no conjugation (1x1 result).
ComplexMatrix cdot_t(const ComplexMatrix& a, const ComplexMatrix& b);

/// |a|^2 elementwise as a real tensor.
Tensor abs2(const ComplexMatrix& a);

/// n-by-n diagonal matrix from an n-by-1 complex vector.
ComplexMatrix diag(const ComplexMatrix& v);

/// Same data reinterpreted with a new shape (row-major).
ComplexMatrix reshape(const ComplexMatrix& a, std::size_t rows, std::size_t cols);

}  // namespace starsec
