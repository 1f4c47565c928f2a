#include "starsec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace starsec {

namespace {

thread_local Tape* g_active_tape = nullptr;

using Impl = std::shared_ptr<detail::TensorImpl>;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
}

Tensor make_like(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

// Marks `out` as gradient-carrying when a tape is active and any input
// requires gradients; returns the tape to record on (nullptr otherwise).
Tape* grad_setup(Tensor& out, std::initializer_list<const Tensor*> inputs) {
    Tape* tape = g_active_tape;
    if (tape == nullptr) return nullptr;
    bool any = false;
    for (const Tensor* t : inputs) any = any || (*t).requires_grad();
    if (!any) return nullptr;
    out.impl()->requires_grad = true;
    out.impl()->tape = tape;
    return tape;
}

// Raw row-major matrix product helpers; `acc` variants accumulate into c.
void matmul_raw(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

// c[m x k] += a[m x n] * b^T where b is [k x n]
void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

// c[k x n] += a^T * g where a is [m x k], g is [m x n]
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * grow[j];
        }
    }
}

// Elementwise unary op with analytic backward given (input value, output value).
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i]);
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, bwd] {
            ai->ensure_grad();
            for (std::size_t i = 0; i < ai->value.size(); ++i)
                ai->grad[i] += oi->grad[i] * bwd(ai->value[i], oi->value[i]);
        });
    }
    return out;
}

}  // namespace

Tensor Tensor::from_vector(std::vector<double> data, std::size_t rows, std::size_t cols) {
    if (data.size() != rows * cols)
        throw std::invalid_argument("Tensor::from_vector: " + std::to_string(data.size()) +
                                    " values for a " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + " tensor");
    Tensor t;
    t.impl_->rows = rows;
    t.impl_->cols = cols;
    t.impl_->value = std::move(data);
    return t;
}

double Tensor::item() const {
    if (!is_scalar()) throw std::logic_error("Tensor::item: tensor is not 1x1");
    return impl_->value[0];
}

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) throw std::logic_error("Tensor::grad: no gradient buffer");
    return impl_->grad;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.is_scalar()) throw std::logic_error("Tape::backward: loss must be 1x1");
    if (loss.producer() != this)
        throw std::logic_error("Tape::backward: loss was not produced on this tape");
    if (ran_) throw std::logic_error("Tape::backward: tape already consumed");
    ran_ = true;
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] = 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

Tensor operator+(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
    if (Tape* tape = grad_setup(out, {&a, &b})) {
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape->record([ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i];
                bi->grad[i] += oi->grad[i];
            }
        });
    }
    return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] - bv[i];
    if (Tape* tape = grad_setup(out, {&a, &b})) {
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape->record([ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i];
                bi->grad[i] -= oi->grad[i];
            }
        });
    }
    return out;
}

Tensor operator*(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];
    if (Tape* tape = grad_setup(out, {&a, &b})) {
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape->record([ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i] * bi->value[i];
                bi->grad[i] += oi->grad[i] * ai->value[i];
            }
        });
    }
    return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "div");
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] / bv[i];
    if (Tape* tape = grad_setup(out, {&a, &b})) {
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape->record([ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                const double inv_b = 1.0 / bi->value[i];
                ai->grad[i] += oi->grad[i] * inv_b;
                bi->grad[i] -= oi->grad[i] * oi->value[i] * inv_b;
            }
        });
    }
    return out;
}

Tensor operator-(const Tensor& a) {
    return unary_op(
        a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor operator+(const Tensor& a, double s) {
    return unary_op(
        a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}
Tensor operator+(double s, const Tensor& a) { return a + s; }

Tensor operator-(const Tensor& a, double s) { return a + (-s); }

Tensor operator-(double s, const Tensor& a) {
    return unary_op(
        a, [s](double x) { return s - x; }, [](double, double) { return -1.0; });
}

Tensor operator*(const Tensor& a, double s) {
    return unary_op(
        a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}
Tensor operator*(double s, const Tensor& a) { return a * s; }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) +
                                    " and " + std::to_string(b.rows()) + " differ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = make_like(m, n);
    matmul_raw(a.values().data(), b.values().data(), out.values().data(), m, k, n);
    if (Tape* tape = grad_setup(out, {&a, &b})) {
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape->record([ai, bi, oi, m, k, n] {
            ai->ensure_grad();
            bi->ensure_grad();
            // dA += dC * B^T, dB += A^T * dC
            matmul_nt_acc(oi->grad.data(), bi->value.data(), ai->grad.data(), m, n, k);
            matmul_tn_acc(ai->value.data(), oi->grad.data(), bi->grad.data(), m, k, n);
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out = make_like(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, m, n] {
            ai->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += oi->grad[j * m + i];
        });
    }
    return out;
}

Tensor relu(const Tensor& a) {
    if (Tape* tape = g_active_tape) {
        double margin = std::numeric_limits<double>::infinity();
        for (double x : a.values()) margin = std::min(margin, std::abs(x));
        if (!a.values().empty()) tape->note_kink(margin);
    }
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor sqrt(const Tensor& a) {
    for (double x : a.values())
        if (x < 0.0) throw std::domain_error("sqrt: negative entry");
    return unary_op(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / (y > 0.0 ? y : std::numeric_limits<double>::min()); });
}

Tensor square(const Tensor& a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor log(const Tensor& a) {
    for (double x : a.values())
        if (x <= 0.0) throw std::domain_error("log: non-positive entry");
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor cos(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Tensor sin(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Tensor acos(const Tensor& a) {
    for (double x : a.values())
        if (x < -1.0 || x > 1.0) throw std::domain_error("acos: entry outside [-1, 1]");
    return unary_op(
        a, [](double x) { return std::acos(x); },
        [](double x, double) { return -1.0 / std::sqrt(std::max(1.0 - x * x, 1e-300)); });
}

Tensor atan2(const Tensor& y, const Tensor& x) {
    check_same_shape(y, x, "atan2");
    Tensor out = make_like(y.rows(), y.cols());
    const auto& yv = y.values();
    const auto& xv = x.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < yv.size(); ++i) ov[i] = std::atan2(yv[i], xv[i]);
    if (Tape* tape = grad_setup(out, {&y, &x})) {
        Impl yi = y.impl(), xi = x.impl(), oi = out.impl();
        tape->record([yi, xi, oi] {
            yi->ensure_grad();
            xi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                const double yy = yi->value[i], xx = xi->value[i];
                const double r2 = std::max(yy * yy + xx * xx, 1e-300);
                yi->grad[i] += oi->grad[i] * xx / r2;
                xi->grad[i] -= oi->grad[i] * yy / r2;
            }
        });
    }
    return out;
}

Tensor reciprocal(const Tensor& a) {
    return unary_op(
        a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    if (Tape* tape = g_active_tape) {
        double margin = std::numeric_limits<double>::infinity();
        for (double x : a.values())
            margin = std::min(margin, std::min(std::abs(x - lo), std::abs(x - hi)));
        if (!a.values().empty()) tape->note_kink(margin);
    }
    return unary_op(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double x : a.values()) acc += x;
    Tensor out = Tensor::scalar(acc);
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi] {
            ai->ensure_grad();
            for (double& g : ai->grad) g += oi->grad[0];
        });
    }
    return out;
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
    double acc = 0.0;
    for (double x : a.values()) acc += x;
    const double inv_n = 1.0 / static_cast<double>(a.size());
    Tensor out = Tensor::scalar(acc * inv_n);
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, inv_n] {
            ai->ensure_grad();
            for (double& g : ai->grad) g += oi->grad[0] * inv_n;
        });
    }
    return out;
}

Tensor norm2(const Tensor& a) {
    double acc = 0.0;
    for (double x : a.values()) acc += x * x;
    const double n = std::sqrt(acc);
    Tensor out = Tensor::scalar(n);
    if (Tape* tape = grad_setup(out, {&a})) {
        if (n < 1e-12) tape->note_kink(n);
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, n] {
            ai->ensure_grad();
            const double inv = 1.0 / std::max(n, 1e-300);
            for (std::size_t i = 0; i < ai->value.size(); ++i)
                ai->grad[i] += oi->grad[0] * ai->value[i] * inv;
        });
    }
    return out;
}

Tensor layer_norm(const Tensor& a, double eps) {
    const std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("layer_norm: empty tensor");
    const auto& av = a.values();
    double mu = 0.0;
    for (double x : av) mu += x;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double x : av) var += (x - mu) * (x - mu);
    var /= static_cast<double>(n);
    const double s = std::sqrt(var + eps);
    Tensor out = make_like(a.rows(), a.cols());
    auto& ov = out.values();
    for (std::size_t i = 0; i < n; ++i) ov[i] = (av[i] - mu) / s;
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, s, n] {
            ai->ensure_grad();
            double g_mean = 0.0, gy_mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                g_mean += oi->grad[i];
                gy_mean += oi->grad[i] * oi->value[i];
            }
            g_mean /= static_cast<double>(n);
            gy_mean /= static_cast<double>(n);
            const double inv_s = 1.0 / s;
            for (std::size_t i = 0; i < n; ++i)
                ai->grad[i] += inv_s * (oi->grad[i] - g_mean - oi->value[i] * gy_mean);
        });
    }
    return out;
}

Tensor row(const Tensor& a, std::size_t i) {
    if (i >= a.rows()) throw std::invalid_argument("row: index out of range");
    const std::size_t n = a.cols();
    Tensor out = make_like(1, n);
    for (std::size_t j = 0; j < n; ++j) out.values()[j] = a.at(i, j);
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, i, n] {
            ai->ensure_grad();
            for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += oi->grad[j];
        });
    }
    return out;
}

Tensor col_slice(const Tensor& a, std::size_t lo, std::size_t hi) {
    if (a.rows() != 1) throw std::invalid_argument("col_slice: expects a single-row tensor");
    if (lo > hi || hi > a.cols()) throw std::invalid_argument("col_slice: bad range");
    const std::size_t n = hi - lo;
    Tensor out = make_like(1, n);
    for (std::size_t j = 0; j < n; ++j) out.values()[j] = a.values()[lo + j];
    if (Tape* tape = grad_setup(out, {&a})) {
        Impl ai = a.impl(), oi = out.impl();
        tape->record([ai, oi, lo, n] {
            ai->ensure_grad();
            for (std::size_t j = 0; j < n; ++j) ai->grad[lo + j] += oi->grad[j];
        });
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
        cols += p.cols();
    }
    Tensor out = make_like(rows, cols);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) out.at(i, offset + j) = p.at(i, j);
        offset += p.cols();
    }
    bool any_grad = false;
    for (const Tensor& p : parts) any_grad = any_grad || p.requires_grad();
    Tape* tape = g_active_tape;
    if (tape != nullptr && any_grad) {
        out.impl()->requires_grad = true;
        out.impl()->tape = tape;
        std::vector<Impl> impls;
        impls.reserve(parts.size());
        for (const Tensor& p : parts) impls.push_back(p.impl());
        Impl oi = out.impl();
        tape->record([impls, oi, rows, cols] {
            std::size_t offset = 0;
            for (const Impl& pi : impls) {
                pi->ensure_grad();
                const std::size_t pc = pi->cols;
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < pc; ++j)
                        pi->grad[i * pc + j] += oi->grad[i * cols + offset + j];
                offset += pc;
            }
        });
    }
    return out;
}

Tensor vstack(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("vstack: no parts");
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const Tensor& p : parts) {
        if (p.cols() != cols) throw std::invalid_argument("vstack: column count mismatch");
        rows += p.rows();
    }
    Tensor out = make_like(rows, cols);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        std::copy(p.values().begin(), p.values().end(), out.values().begin() + offset);
        offset += p.size();
    }
    bool any_grad = false;
    for (const Tensor& p : parts) any_grad = any_grad || p.requires_grad();
    Tape* tape = g_active_tape;
    if (tape != nullptr && any_grad) {
        out.impl()->requires_grad = true;
        out.impl()->tape = tape;
        std::vector<Impl> impls;
        impls.reserve(parts.size());
        for (const Tensor& p : parts) impls.push_back(p.impl());
        Impl oi = out.impl();
        tape->record([impls, oi] {
            std::size_t offset = 0;
            for (const Impl& pi : impls) {
                pi->ensure_grad();
                for (std::size_t i = 0; i < pi->value.size(); ++i)
                    pi->grad[i] += oi->grad[offset + i];
                offset += pi->value.size();
            }
        });
    }
    return out;
}

Tensor maximum(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "maximum");
    if (Tape* tape = g_active_tape) {
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i)
            margin = std::min(margin, std::abs(a.values()[i] - b.values()[i]));
        if (a.size() > 0) tape->note_kink(margin);
    }
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] >= bv[i] ? av[i] : bv[i];
    if (Tape* tape = grad_setup(out, {&a, &b})) {
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape->record([ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                if (ai->value[i] >= bi->value[i])
                    ai->grad[i] += oi->grad[i];
                else
                    bi->grad[i] += oi->grad[i];
            }
        });
    }
    return out;
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (!s.is_scalar()) throw std::invalid_argument("scale_by: scale must be 1x1");
    const double sv = s.values()[0];
    Tensor out = make_like(a.rows(), a.cols());
    const auto& av = a.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * sv;
    if (Tape* tape = grad_setup(out, {&a, &s})) {
        Impl ai = a.impl(), si = s.impl(), oi = out.impl();
        tape->record([ai, si, oi] {
            ai->ensure_grad();
            si->ensure_grad();
            const double sv = si->value[0];
            double acc = 0.0;
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i] * sv;
                acc += oi->grad[i] * ai->value[i];
            }
            si->grad[0] += acc;
        });
    }
    return out;
}

GradientCheck finite_diff_check(const std::function<Tensor()>& f,
                                const std::vector<Tensor>& params, double step) {
    if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be positive");

    Tape tape;
    Tensor loss;
    {
        TapeScope scope(tape);
        loss = f();
    }
    if (!loss.is_scalar()) throw std::logic_error("finite_diff_check: f must return a scalar");
    if (!std::isfinite(loss.item()))
        throw std::runtime_error("finite_diff_check: non-finite function value");
    for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
    tape.backward(loss);

    std::vector<std::vector<double>> autodiff;
    autodiff.reserve(params.size());
    for (const Tensor& p : params) autodiff.push_back(p.grad());

    GradientCheck result;
    result.kink_nearby = tape.min_kink_margin() < 10.0 * step;

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.values()[i];
            p.values()[i] = saved + step;
            const double f_plus = f().item();
            p.values()[i] = saved - step;
            const double f_minus = f().item();
            p.values()[i] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw std::runtime_error("finite_diff_check: non-finite function value");
            const double fd = (f_plus - f_minus) / (2.0 * step);
            const double rel =
                std::abs(autodiff[pi][i] - fd) / std::max(std::abs(fd), 1e-8);
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = pi;
                result.worst_index = i;
            }
        }
    }
    return result;
}

}  // namespace starsec
