#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "starsec/rng.hpp"
#include "starsec/tensor.hpp"

using namespace starsec;

namespace {

Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                     double hi = 1.0) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_vector(std::move(v), rows, cols);
}

ComplexMatrix random_cmatrix(Rng& rng, std::size_t rows, std::size_t cols) {
    return {random_tensor(rng, rows, cols), random_tensor(rng, rows, cols)};
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul identity and hand cases") {
    Tensor id3 = Tensor::zeros(3, 3);
    for (int i = 0; i < 3; ++i) id3.at(i, i) = 1.0;
    Rng rng(7);
    Tensor m = random_tensor(rng, 3, 3);
    Tensor out = matmul(id3, m);
    for (std::size_t i = 0; i < 9; ++i) CHECK(out.values()[i] == doctest::Approx(m.values()[i]));

    Tensor a = Tensor::from_vector({1, 2, 3, 4}, 2, 2);
    Tensor b = Tensor::from_vector({1, 1}, 2, 1);
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == doctest::Approx(3.0));
    CHECK(c.at(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul matches triple-loop oracle") {
    Rng rng(11);
    Tensor a = random_tensor(rng, 5, 4);
    Tensor b = random_tensor(rng, 4, 3);
    Tensor c = matmul(a, b);
    const auto ref = oracle::matmul(a.values(), b.values(), 5, 4, 3);
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(c.values()[i] - ref[i]) < 1e-12);
}

TEST_CASE("matmul shape mismatch throws") {
    Tensor a(2, 3), b(2, 3);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("complex matvec identity, rotation, oracle") {
    Rng rng(13);
    ComplexMatrix v = random_cmatrix(rng, 4, 1);
    ComplexMatrix out = complex_matvec(ComplexMatrix::identity(4), v);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(out.re.values()[i] == doctest::Approx(v.re.values()[i]));
        CHECK(out.im.values()[i] == doctest::Approx(v.im.values()[i]));
    }

    // M = jI rotates [1, 0] to [j, 0].
    ComplexMatrix ji(Tensor::zeros(2, 2), Tensor::zeros(2, 2));
    ji.im.at(0, 0) = 1.0;
    ji.im.at(1, 1) = 1.0;
    ComplexMatrix e1 = ComplexMatrix::from_std({{1.0, 0.0}, {0.0, 0.0}}, 2, 1);
    ComplexMatrix rot = complex_matvec(ji, e1);
    CHECK(rot.re.values()[0] == doctest::Approx(0.0));
    CHECK(rot.im.values()[0] == doctest::Approx(1.0));
    CHECK(rot.re.values()[1] == doctest::Approx(0.0));
    CHECK(rot.im.values()[1] == doctest::Approx(0.0));

    ComplexMatrix m = random_cmatrix(rng, 4, 4);
    ComplexMatrix w = random_cmatrix(rng, 4, 1);
    ComplexMatrix got = complex_matvec(m, w);
    const auto ref = oracle::cmatvec(m.to_std(), w.to_std(), 4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(got.re.values()[i] - ref[i].real()) < 1e-12);
        CHECK(std::abs(got.im.values()[i] - ref[i].imag()) < 1e-12);
    }
}

TEST_CASE("backward on linear and quadratic scalars") {
    Tensor x = Tensor::from_vector({1.0, 2.0, 3.0}, 3, 1).set_requires_grad(true);
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor l = sum(x);
        x.zero_grad();
        tape.backward(l);
        for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));
    }
    Tensor y = Tensor::scalar(3.0).set_requires_grad(true);
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor l = sum(square(y));
        y.zero_grad();
        tape.backward(l);
        CHECK(y.grad()[0] == doctest::Approx(6.0));
    }
}

TEST_CASE("backward usage errors") {
    Tensor x = Tensor::scalar(1.0).set_requires_grad(true);
    Tape tape;
    CHECK_THROWS_AS(tape.backward(x), std::logic_error);  // leaf was never taped
    Tensor vec = Tensor::zeros(2, 1);
    CHECK_THROWS_AS(tape.backward(vec), std::logic_error);
}

TEST_CASE("backward is deterministic") {
    Rng rng(3);
    Tensor a = random_tensor(rng, 4, 4);
    a.set_requires_grad(true);
    Tensor b = random_tensor(rng, 4, 4);
    std::vector<double> first;
    for (int run = 0; run < 2; ++run) {
        Tape tape;
        TapeScope scope(tape);
        Tensor l = sum(sigmoid(matmul(a, b)) * matmul(b, a));
        a.zero_grad();
        tape.backward(l);
        if (run == 0)
            first = a.grad();
        else
            for (std::size_t i = 0; i < first.size(); ++i) CHECK(a.grad()[i] == first[i]);
    }
}

TEST_CASE("finite differences: every primitive") {
    // One check per primitive on 100 seeded inputs away from kinks; each
    // output is contracted with a fixed weight so gradients stay non-trivial.
    using Fn = std::function<Tensor(const Tensor&, const Tensor&)>;
    const std::vector<std::pair<const char*, Fn>> primitives = {
        {"add", [](const Tensor& a, const Tensor& b) { return a + b; }},
        {"sub", [](const Tensor& a, const Tensor& b) { return a - b; }},
        {"mul", [](const Tensor& a, const Tensor& b) { return a * b; }},
        {"div", [](const Tensor& a, const Tensor& b) { return div(a, b + 2.0); }},
        {"scalar_ops", [](const Tensor& a, const Tensor&) { return 2.0 * a - (a + 0.7) + (1.5 - a) * 0.5; }},
        {"neg", [](const Tensor& a, const Tensor&) { return -a; }},
        {"matmul", [](const Tensor& a, const Tensor& b) { return matmul(a, transpose(b)); }},
        {"transpose", [](const Tensor& a, const Tensor&) { return transpose(a); }},
        {"relu", [](const Tensor& a, const Tensor&) { return relu(a); }},
        {"sigmoid", [](const Tensor& a, const Tensor&) { return sigmoid(3.0 * a); }},
        {"sqrt", [](const Tensor& a, const Tensor&) { return sqrt(a + 1.5); }},
        {"square", [](const Tensor& a, const Tensor&) { return square(a); }},
        {"log", [](const Tensor& a, const Tensor&) { return log(a + 2.0); }},
        {"cos", [](const Tensor& a, const Tensor&) { return cos(a); }},
        {"sin", [](const Tensor& a, const Tensor&) { return sin(a); }},
        {"acos", [](const Tensor& a, const Tensor&) { return acos(a * 0.7); }},
        {"atan2", [](const Tensor& a, const Tensor& b) { return atan2(a, b + 2.0); }},
        {"reciprocal", [](const Tensor& a, const Tensor&) { return reciprocal(a + 2.0); }},
        {"clamp", [](const Tensor& a, const Tensor&) { return clamp(a, -5.0, 5.0); }},
        {"norm2", [](const Tensor& a, const Tensor&) { return norm2(a + 3.0); }},
        {"layer_norm", [](const Tensor& a, const Tensor&) { return layer_norm(row(a, 0)); }},
        {"row_slice", [](const Tensor& a, const Tensor&) { return col_slice(row(a, 1), 1, 4); }},
        {"concat", [](const Tensor& a, const Tensor& b) { return concat_cols({row(a, 0), row(b, 1)}); }},
        {"vstack", [](const Tensor& a, const Tensor& b) { return vstack({a, b}); }},
        {"maximum", [](const Tensor& a, const Tensor& b) { return maximum(a, b + 3.0); }},
        {"scale_by", [](const Tensor& a, const Tensor& b) { return scale_by(a, mean(b)); }},
        {"sum_mean", [](const Tensor& a, const Tensor&) { return sum(a) + mean(a); }},
    };
    for (const auto& [name, fn] : primitives) {
        double worst = 0.0;
        int checked = 0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            Rng rng(seed * 1009 + 17);
            Tensor a = random_tensor(rng, 3, 4, -0.9, 0.9).set_requires_grad(true);
            Tensor b = random_tensor(rng, 3, 4, -0.9, 0.9).set_requires_grad(true);
            Tensor wts = random_tensor(rng, 1, 1, 0.5, 1.5);
            auto f = [&]() { return scale_by(mean(fn(a, b)), wts) + sum(a) * 0.1; };
            const GradientCheck check = finite_diff_check(f, {a, b}, 1e-5);
            if (check.kink_nearby) continue;  // away-from-kink inputs only
            worst = std::max(worst, check.max_rel_error);
            ++checked;
        }
        INFO(name);
        CHECK(checked > 50);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("finite_diff_check is tight for quadratics") {
    Tensor x = Tensor::from_vector({0.4, -0.3, 0.9}, 3, 1).set_requires_grad(true);
    auto f = [&]() { return sum(square(x)) + mean(x) * 2.0; };
    const GradientCheck check = finite_diff_check(f, {x}, 1e-5);
    CHECK(check.max_rel_error < 1e-9);
    CHECK_FALSE(check.kink_nearby);
}

TEST_CASE("finite_diff_check flags a kink at zero") {
    Tensor x = Tensor::from_vector({0.0, 0.5}, 2, 1).set_requires_grad(true);
    auto f = [&]() { return sum(relu(x)); };
    const GradientCheck check = finite_diff_check(f, {x}, 1e-5);
    CHECK(check.kink_nearby);
}

TEST_CASE("finite_diff_check rejects non-finite values") {
    Tensor x = Tensor::scalar(1.0).set_requires_grad(true);
    auto f = [&]() { return div(x, x - x); };  // 1/0
    CHECK_THROWS_AS(finite_diff_check(f, {x}, 1e-5), std::runtime_error);
}

TEST_CASE("sigmoid composition gradient accuracy") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed * 31);
        Tensor x = random_tensor(rng, 5, 1, -2.0, 2.0).set_requires_grad(true);
        auto f = [&]() { return sum(sigmoid(sigmoid(x) * 3.0 - 1.0)); };
        const GradientCheck check = finite_diff_check(f, {x}, 1e-5);
        CHECK(check.max_rel_error < 1e-5);
    }
}

TEST_CASE("domain errors") {
    Tensor neg = Tensor::scalar(-1.0);
    CHECK_THROWS_AS(sqrt(neg), std::domain_error);
    CHECK_THROWS_AS(log(Tensor::scalar(0.0)), std::domain_error);
    CHECK_THROWS_AS(acos(Tensor::scalar(1.5)), std::domain_error);
}

TEST_CASE("shape invariant holds for constructors") {
    CHECK_THROWS_AS(Tensor::from_vector({1.0, 2.0}, 2, 2), std::invalid_argument);
    Tensor t = Tensor::from_vector({1, 2, 3, 4, 5, 6}, 2, 3);
    CHECK(t.shape() == std::vector<std::size_t>{2, 3});
    CHECK(t.size() == 6);
}

TEST_CASE("layer_norm output statistics") {
    Rng rng(5);
    Tensor x = random_tensor(rng, 1, 32, -3.0, 5.0);
    Tensor y = layer_norm(x);
    double mu = 0.0;
    for (double v : y.values()) mu += v;
    mu /= 32.0;
    CHECK(std::abs(mu) < 1e-12);
    double var = 0.0;
    for (double v : y.values()) var += (v - mu) * (v - mu);
    var /= 32.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("maximum tie sends gradient to the first argument") {
    Tensor a = Tensor::scalar(0.7).set_requires_grad(true);
    Tensor b = Tensor::scalar(0.7).set_requires_grad(true);
    Tape tape;
    TapeScope scope(tape);
    Tensor l = sum(maximum(a, b));
    a.zero_grad();
    b.zero_grad();
    tape.backward(l);
    CHECK(a.grad()[0] == doctest::Approx(1.0));
    CHECK(b.grad()[0] == doctest::Approx(0.0));
}

}  // TEST_SUITE
