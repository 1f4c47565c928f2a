#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace starsec {

class Tape;

namespace detail {

struct TensorImpl {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, same length as value
    bool requires_grad = false;
    const Tape* tape = nullptr;  // tape that produced this tensor, if any

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

/// Dense row-major matrix of doubles with reverse-mode automatic
/// differentiation. Vectors are n-by-1 (or 1-by-n) matrices and scalars are
/// 1-by-1. Copies share storage; use clone() for a deep copy.
class Tensor {
public:
    Tensor() : impl_(std::make_shared<detail::TensorImpl>()) {}

    Tensor(std::size_t rows, std::size_t cols) : Tensor() {
        impl_->rows = rows;
        impl_->cols = cols;
        impl_->value.assign(rows * cols, 0.0);
    }

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

    static Tensor constant(std::size_t rows, std::size_t cols, double v) {
        Tensor t(rows, cols);
        for (auto& x : t.impl_->value) x = v;
        return t;
    }

    static Tensor scalar(double v) { return constant(1, 1, v); }

    static Tensor from_vector(std::vector<double> data, std::size_t rows, std::size_t cols);

    std::size_t rows() const { return impl_->rows; }
    std::size_t cols() const { return impl_->cols; }
    std::size_t size() const { return impl_->value.size(); }
    std::vector<std::size_t> shape() const { return {impl_->rows, impl_->cols}; }
    bool is_scalar() const { return impl_->rows == 1 && impl_->cols == 1; }
    bool same_shape(const Tensor& o) const {
        return rows() == o.rows() && cols() == o.cols();
    }

    /// Value of a 1x1 tensor; usage error otherwise.
    double item() const;

    double at(std::size_t i, std::size_t j) const { return impl_->value[i * cols() + j]; }
    double& at(std::size_t i, std::size_t j) { return impl_->value[i * cols() + j]; }

    std::vector<double>& values() { return impl_->value; }
    const std::vector<double>& values() const { return impl_->value; }

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool b) {
        impl_->requires_grad = b;
        return *this;
    }

    bool has_grad() const { return impl_->grad.size() == impl_->value.size(); }
    const std::vector<double>& grad() const;
    void zero_grad() { impl_->grad.assign(impl_->value.size(), 0.0); }

    /// Values only; drops grad, tape link and the requires_grad flag.
    Tensor detach() const {
        Tensor t(rows(), cols());
        t.impl_->value = impl_->value;
        return t;
    }

    const Tape* producer() const { return impl_->tape; }

    const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

/// Append-only record of backward steps. Creation order is a topological
/// order of the op DAG, so backward() replays the steps exactly once in
/// reverse. One tape per thread may be active at a time (see TapeScope);
/// distinct tapes may be used concurrently from different threads.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
    /// recorded tensor's grad buffer. Usage error if loss is not a scalar
    /// produced by ops recorded on this tape, or if already run.
    void backward(const Tensor& loss);

    std::size_t size() const { return steps_.size(); }

    /// Smallest distance to a non-differentiable point (ReLU/max/clamp kink)
    /// seen while recording; +inf if none.
    double min_kink_margin() const { return kink_margin_; }

    // Internal: used by op implementations.
    void record(std::function<void()> step) { steps_.push_back(std::move(step)); }
    void note_kink(double margin) {
        if (margin < kink_margin_) kink_margin_ = margin;
    }

private:
    std::vector<std::function<void()>> steps_;
    double kink_margin_ = std::numeric_limits<double>::infinity();
    bool ran_ = false;
};

/// RAII activation of a tape on the current thread. Ops record backward
/// steps only while some tape is active and an input requires gradients.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

Tape* active_tape();

// Elementwise arithmetic (shapes must match exactly).
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);

// Scalar arithmetic.
Tensor operator+(const Tensor& a, double s);
Tensor operator+(double s, const Tensor& a);
Tensor operator-(const Tensor& a, double s);
Tensor operator-(double s, const Tensor& a);
Tensor operator*(const Tensor& a, double s);
Tensor operator*(double s, const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor sqrt(const Tensor& a);    // domain error for negative entries
Tensor square(const Tensor& a);
Tensor log(const Tensor& a);     // domain error for non-positive entries
Tensor cos(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor acos(const Tensor& a);    // domain error outside [-1, 1]
Tensor atan2(const Tensor& y, const Tensor& x);
Tensor reciprocal(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor sum(const Tensor& a);   // 1x1
Tensor mean(const Tensor& a);  // 1x1
Tensor norm2(const Tensor& a); // 1x1, Euclidean norm over all entries

/// (x - mean) / sqrt(var + eps) over all entries of a vector.
Tensor layer_norm(const Tensor& a, double eps = 1e-5);

/// Row i as a 1-by-cols tensor.
Tensor row(const Tensor& a, std::size_t i);

/// Entries [lo, hi) of a single-row tensor.
Tensor col_slice(const Tensor& a, std::size_t lo, std::size_t hi);

/// Horizontal concatenation of tensors with equal row counts.
Tensor concat_cols(const std::vector<Tensor>& parts);

/// Vertical stack of tensors with equal column counts.
Tensor vstack(const std::vector<Tensor>& parts);

/// Elementwise max; ties propagate the gradient to the first argument.
Tensor maximum(const Tensor& a, const Tensor& b);

/// Broadcast multiply by a 1x1 tensor.
Tensor scale_by(const Tensor& a, const Tensor& s);

struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    bool kink_nearby = false;  // recorded op kink within 10x the step
};

/// Compares reverse-mode gradients of f() against central finite differences
/// for every entry of every parameter. f must be deterministic given the
/// parameter values; numeric error if it produces a non-finite value.
GradientCheck finite_diff_check(const std::function<Tensor()>& f,
                                const std::vector<Tensor>& params, double step);

}  // namespace starsec
