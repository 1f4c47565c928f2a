#include "starsec/complex_matrix.hpp"

#include <stdexcept>

namespace starsec {

ComplexMatrix::ComplexMatrix(Tensor real, Tensor imag) : re(std::move(real)), im(std::move(imag)) {
    if (!re.same_shape(im))
        throw std::invalid_argument("ComplexMatrix: real/imaginary shape mismatch");
}

ComplexMatrix ComplexMatrix::zeros(std::size_t rows, std::size_t cols) {
    return {Tensor::zeros(rows, cols), Tensor::zeros(rows, cols)};
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    Tensor re(n, n);
    for (std::size_t i = 0; i < n; ++i) re.at(i, i) = 1.0;
    return {re, Tensor::zeros(n, n)};
}

ComplexMatrix ComplexMatrix::from_std(const std::vector<std::complex<double>>& data,
                                      std::size_t rows, std::size_t cols) {
    if (data.size() != rows * cols)
        throw std::invalid_argument("ComplexMatrix::from_std: size mismatch");
    std::vector<double> re(data.size()), im(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        re[i] = data[i].real();
        im[i] = data[i].imag();
    }
    return {Tensor::from_vector(std::move(re), rows, cols),
            Tensor::from_vector(std::move(im), rows, cols)};
}

std::vector<std::complex<double>> ComplexMatrix::to_std() const {
    std::vector<std::complex<double>> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = {re.values()[i], im.values()[i]};
    return out;
}

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
    return {a.re + b.re, a.im + b.im};
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
    return {a.re - b.re, a.im - b.im};
}

ComplexMatrix cmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

ComplexMatrix cmatmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    return {matmul(a.re, b.re) - matmul(a.im, b.im), matmul(a.re, b.im) + matmul(a.im, b.re)};
}

ComplexMatrix complex_matvec(const ComplexMatrix& m, const ComplexMatrix& v) {
    if (v.cols() != 1) throw std::invalid_argument("complex_matvec: v must be a column vector");
    return cmatmul(m, v);
}

ComplexMatrix conj(const ComplexMatrix& a) { return {a.re, -a.im}; }

ComplexMatrix hermitian(const ComplexMatrix& a) { return {transpose(a.re), -transpose(a.im)}; }

ComplexMatrix cdot_h(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows())
        throw std::invalid_argument("cdot_h: expects equal-length column vectors");
    return cmatmul(hermitian(a), b);
}

ComplexMatrix cdot_t(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows())
        throw std::invalid_argument("cdot_t: expects equal-length column vectors");
    return {matmul(transpose(a.re), b.re) - matmul(transpose(a.im), b.im),
            matmul(transpose(a.re), b.im) + matmul(transpose(a.im), b.re)};
}

Tensor abs2(const ComplexMatrix& a) { return square(a.re) + square(a.im); }

ComplexMatrix diag(const ComplexMatrix& v) {
    if (v.cols() != 1) throw std::invalid_argument("diag: expects a column vector");
    const std::size_t n = v.rows();
    // Scatter through a constant 0/1 placement matrix to keep the op taped.
    Tensor re(n, n), im(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        re.at(i, i) = v.re.values()[i];
        im.at(i, i) = v.im.values()[i];
    }
    if (active_tape() != nullptr && (v.re.requires_grad() || v.im.requires_grad())) {
        // Build via taped ops instead: diag(v) = I_cols * v broadcast. Use
        // per-row slices to stay within the primitive set.
        std::vector<Tensor> re_rows, im_rows;
        re_rows.reserve(n);
        im_rows.reserve(n);
        Tensor vre_row = transpose(v.re);
        Tensor vim_row = transpose(v.im);
        for (std::size_t i = 0; i < n; ++i) {
            Tensor mask(1, n);
            mask.at(0, i) = 1.0;
            re_rows.push_back(vre_row * mask);
            im_rows.push_back(vim_row * mask);
        }
        return {vstack(re_rows), vstack(im_rows)};
    }
    return {re, im};
}

ComplexMatrix reshape(const ComplexMatrix& a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a.size()) throw std::invalid_argument("reshape: size mismatch");
    if (a.re.requires_grad() || a.im.requires_grad())
        throw std::logic_error("reshape: only supported for constant matrices");
    return {Tensor::from_vector(a.re.values(), rows, cols),
            Tensor::from_vector(a.im.values(), rows, cols)};
}

}  // namespace starsec
