#include <catch2/catch.hpp>

#include "helpers.hpp"
#include "vosmem/numerics.hpp"

using namespace vosmem;
using testutil::max_abs_diff;
using testutil::rand_tensor;

namespace {

// Independent Gaussian-CDF oracle: Simpson quadrature of the standard normal
// density, no erf involved.
double phi_quadrature(double x) {
    const int steps = 4000;  // even
    const double a = 0.0, b = x;
    const double h = (b - a) / steps;
    auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    double s = pdf(a) + pdf(b);
    for (int i = 1; i < steps; ++i) s += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return 0.5 + s * h / 3.0;
}

}  // namespace

TEST_CASE("conv2d basic examples") {
    SECTION("1x1 scaling kernel") {
        const Tensor in = Tensor::from({2, 2, 1}, {1, 2, 3, 4});
        const Tensor k = Tensor::from({1, 1, 1, 1}, {2});
        const Tensor out = conv2d(in, k, Tensor({1}), 1, 0);
        CHECK(out.shape() == std::vector<int>{2, 2, 1});
        CHECK(out.at(0, 0, 0) == 2.0f);
        CHECK(out.at(0, 1, 0) == 4.0f);
        CHECK(out.at(1, 0, 0) == 6.0f);
        CHECK(out.at(1, 1, 0) == 8.0f);
    }
    SECTION("stride arithmetic") {
        const Tensor in(std::vector<int>{64, 64, 1}, 0.5f);
        const Tensor k({2, 2, 1, 4}, 0.1f);
        const Tensor out = conv2d(in, k, Tensor({4}), 2, 0);
        CHECK(out.shape() == std::vector<int>{32, 32, 4});
    }
    SECTION("2x2 all-ones summation") {
        const Tensor in = Tensor::from({2, 2, 1}, {1, 2, 3, 4});
        const Tensor k({2, 2, 1, 1}, 1.0f);
        const Tensor out = conv2d(in, k, Tensor({1}), 2, 0);
        CHECK(out.shape() == std::vector<int>{1, 1, 1});
        CHECK(out.at(0, 0, 0) == 10.0f);
    }
    SECTION("channel mismatch is a contract violation") {
        const Tensor in({4, 4, 3}, 1.0f);
        const Tensor k({2, 2, 2, 4}, 1.0f);
        CHECK_THROWS_AS(conv2d(in, k, Tensor({4}), 1, 0), ContractViolation);
    }
}

TEST_CASE("conv2d output shape formula holds over a randomized sweep") {
    SplitMix64 rng(99);
    for (int iter = 0; iter < 100; ++iter) {
        const int h = 1 + static_cast<int>(rng.next() % 20);
        const int w = 1 + static_cast<int>(rng.next() % 20);
        const int kh = 1 + static_cast<int>(rng.next() % 5);
        const int kw = 1 + static_cast<int>(rng.next() % 5);
        const int stride = 1 + static_cast<int>(rng.next() % 3);
        const int pad = static_cast<int>(rng.next() % 3);
        if (kh > h + 2 * pad || kw > w + 2 * pad) continue;
        const Tensor in = rand_tensor({h, w, 2}, rng.next());
        const Tensor k = rand_tensor({kh, kw, 2, 3}, rng.next());
        const Tensor out = conv2d(in, k, Tensor({3}), stride, pad);
        CHECK(out.extent(0) == (h + 2 * pad - kh) / stride + 1);
        CHECK(out.extent(1) == (w + 2 * pad - kw) / stride + 1);
        CHECK(out.extent(2) == 3);
    }
}

TEST_CASE("gelu") {
    SECTION("fixed points") {
        CHECK(gelu_scalar(0.0f) == 0.0f);
        CHECK(gelu_scalar(10.0f) == Approx(10.0).margin(1e-6));
        CHECK(gelu_scalar(1.0f) == Approx(0.841345).margin(1e-5));
    }
    SECTION("matches the quadrature oracle on 1000 random points") {
        SplitMix64 rng(7);
        for (int i = 0; i < 1000; ++i) {
            const float x = rng.uniform(-6.0f, 6.0f);
            const double expect = static_cast<double>(x) * phi_quadrature(x);
            CHECK(gelu_scalar(x) == Approx(expect).margin(1e-5));
        }
    }
}

TEST_CASE("layer_norm") {
    const Tensor gain1({4}, 1.0f);
    const Tensor bias0({4});
    SECTION("constant channels collapse to the bias") {
        Tensor x({2, 4}, 3.7f);
        Tensor bias = Tensor::from({4}, {1, 2, 3, 4});
        const Tensor out = layer_norm(x, gain1, bias, 1e-5f);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 4; ++c) CHECK(out.at(r, c) == bias.at(c));
    }
    SECTION("two-channel unit variance") {
        const Tensor x = Tensor::from({1, 2}, {1, -1});
        const Tensor out = layer_norm(x, Tensor({2}, 1.0f), Tensor({2}), 0.0f);
        CHECK(out.at(0, 0) == Approx(1.0).margin(1e-7));
        CHECK(out.at(0, 1) == Approx(-1.0).margin(1e-7));
    }
    SECTION("zero gain broadcasts the bias") {
        const Tensor x = rand_tensor({3, 4}, 5);
        const Tensor bias = Tensor::from({4}, {9, 8, 7, 6});
        const Tensor out = layer_norm(x, Tensor({4}), bias, 1e-5f);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) CHECK(out.at(r, c) == bias.at(c));
    }
}

TEST_CASE("softmax") {
    SECTION("symmetry and singleton") {
        const Tensor s = softmax(Tensor::from({2}, {0, 0}));
        CHECK(s.at(0) == 0.5f);
        CHECK(s.at(1) == 0.5f);
        for (float c : {-100.0f, 0.0f, 42.0f})
            CHECK(softmax(Tensor::from({1}, {c})).at(0) == 1.0f);
    }
    SECTION("hand-computed two-element row") {
        const Tensor s = softmax(Tensor::from({2}, {std::log(1.0f), std::log(3.0f)}));
        CHECK(s.at(0) == Approx(0.25).margin(1e-6));
        CHECK(s.at(1) == Approx(0.75).margin(1e-6));
    }
    SECTION("rows sum to one and are shift-invariant") {
        SplitMix64 rng(11);
        for (int iter = 0; iter < 200; ++iter) {
            const int n = 1 + static_cast<int>(rng.next() % 16);
            Tensor row = rand_tensor({n}, rng.next(), -5.0f, 5.0f);
            const Tensor s = softmax(row);
            double sum = 0.0;
            for (int i = 0; i < n; ++i) sum += s.at(i);
            CHECK(sum == Approx(1.0).margin(1e-6));
            const float shift = rng.uniform(-3.0f, 3.0f);
            Tensor shifted = row;
            for (int i = 0; i < n; ++i) shifted.at(i) += shift;
            CHECK(max_abs_diff(s, softmax(shifted)) < 1e-6);
        }
    }
}

TEST_CASE("bilinear_resize") {
    SECTION("identity at same extents is bit-exact") {
        const Tensor x = rand_tensor({5, 7, 3}, 21);
        CHECK(bilinear_resize(x, 5, 7) == x);
    }
    SECTION("constant stays constant") {
        const Tensor x({3, 4, 2}, 0.625f);
        const Tensor out = bilinear_resize(x, 9, 5);
        for (long long i = 0; i < out.numel(); ++i)
            CHECK(out[static_cast<size_t>(i)] == Approx(0.625).margin(1e-6));
    }
    SECTION("2x1 column upsampled to 4x1 under half-pixel centers") {
        // src = (dst + 0.5) * in/out - 0.5 with clamped edges
        const Tensor x = Tensor::from({2, 1, 1}, {0, 1});
        const Tensor out = bilinear_resize(x, 4, 1);
        CHECK(out.at(0, 0, 0) == Approx(0.0).margin(1e-6));
        CHECK(out.at(1, 0, 0) == Approx(0.25).margin(1e-6));
        CHECK(out.at(2, 0, 0) == Approx(0.75).margin(1e-6));
        CHECK(out.at(3, 0, 0) == Approx(1.0).margin(1e-6));
    }
    SECTION("round trip: constants exact, random within half the value range") {
        const Tensor c({4, 6, 1}, 0.3f);
        const Tensor c_rt = bilinear_resize(bilinear_resize(c, 9, 13), 4, 6);
        for (long long i = 0; i < c_rt.numel(); ++i)
            CHECK(c_rt[static_cast<size_t>(i)] == Approx(0.3).margin(1e-6));

        const Tensor r = rand_tensor({8, 8, 2}, 33, 0.0f, 1.0f);
        const Tensor r_rt = bilinear_resize(bilinear_resize(r, 13, 17), 8, 8);
        CHECK(max_abs_diff(r, r_rt) <= 0.5);
    }
}

TEST_CASE("hflip") {
    SECTION("row reversal") {
        const Tensor x = Tensor::from({1, 2, 1}, {3, 9});
        const Tensor f = hflip(x);
        CHECK(f.at(0, 0, 0) == 9.0f);
        CHECK(f.at(0, 1, 0) == 3.0f);
    }
    SECTION("width-1 fixed point") {
        const Tensor x = rand_tensor({5, 1, 3}, 4);
        CHECK(hflip(x) == x);
    }
    SECTION("involution is bit-exact") {
        SplitMix64 rng(17);
        for (int iter = 0; iter < 20; ++iter) {
            const int h = 1 + static_cast<int>(rng.next() % 8);
            const int w = 1 + static_cast<int>(rng.next() % 8);
            const Tensor x = rand_tensor({h, w, 3}, rng.next());
            CHECK(hflip(hflip(x)) == x);
        }
    }
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({0, 2}), ContractViolation);
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ContractViolation);
    const Tensor t({2, 3, 4});
    CHECK(t.numel() == 24);
}
