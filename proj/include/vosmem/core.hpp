#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace vosmem {

// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

// ----------------------------------------------------------------------------
// Tensor: dense rank-<=4 array of 32-bit reals, row-major.
// Images are channels-last (H x W x C); matrices are rows x cols.
// ----------------------------------------------------------------------------
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape, float fill = 0.0f)
        : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<size_t>(numel()), fill);
    }

    static Tensor from(std::vector<int> shape, std::vector<float> data) {
        Tensor t;
        t.shape_ = std::move(shape);
        t.validate_shape();
        require(static_cast<long long>(data.size()) == t.numel(),
                "Tensor: data length does not match product of extents");
        t.data_ = std::move(data);
        return t;
    }

    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }

    long long numel() const {
        long long n = 1;
        for (int e : shape_) n *= e;
        return n;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](size_t i) { return data_[i]; }
    float operator[](size_t i) const { return data_[i]; }

    float& at(int i) { return data_[static_cast<size_t>(i)]; }
    float at(int i) const { return data_[static_cast<size_t>(i)]; }

    float& at(int i, int j) {
        return data_[static_cast<size_t>(i) * shape_[1] + j];
    }
    float at(int i, int j) const {
        return data_[static_cast<size_t>(i) * shape_[1] + j];
    }

    float& at(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float at(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }

    float& at(int i, int j, int k, int l) {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    float at(int i, int j, int k, int l) const {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    bool operator==(const Tensor& o) const {
        return shape_ == o.shape_ && data_ == o.data_;
    }

private:
    void validate_shape() {
        require(!shape_.empty() && shape_.size() <= 4, "Tensor: rank must be 1..4");
        for (int e : shape_) require(e >= 1, "Tensor: all extents must be >= 1");
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

// Reduction helper. All dense kernels in this project accumulate in 64-bit
// and store 32-bit results; this is fixed project-wide so results are
// reproducible everywhere.
inline double dot_acc(const float* a, const float* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

inline double sum_acc(const float* a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i];
    return s;
}

// ----------------------------------------------------------------------------
// Seeded RNG: splitmix64, bit-stable on every platform. std:: distributions
// are avoided because their output is implementation-defined.
// ----------------------------------------------------------------------------
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // in [0, 1)
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>((hi - lo) * unit());
    }
};

// Derives a sub-seed from a base seed and a label, so that independent weight
// groups draw from independent streams.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    SplitMix64 mix(h);
    return mix.next();
}

// Fills a tensor with uniform values in [-bound, bound].
inline Tensor seeded_uniform(std::vector<int> shape, uint64_t seed, float bound) {
    Tensor t(std::move(shape));
    SplitMix64 rng(seed);
    for (long long i = 0; i < t.numel(); ++i)
        t[static_cast<size_t>(i)] = rng.uniform(-bound, bound);
    return t;
}

// Indexed label map: pixel value = object id, 0 = background.
struct IndexMap {
    int h = 0, w = 0;
    std::vector<int32_t> v;

    IndexMap() = default;
    IndexMap(int height, int width) : h(height), w(width), v(static_cast<size_t>(height) * width, 0) {}

    int32_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    int32_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }

    bool operator==(const IndexMap& o) const { return h == o.h && w == o.w && v == o.v; }

    // Distinct nonzero labels, ascending.
    std::vector<int> object_ids() const {
        std::vector<int> ids(v.begin(), v.end());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        if (!ids.empty() && ids.front() == 0) ids.erase(ids.begin());
        return ids;
    }
};

// ----------------------------------------------------------------------------
// parallel_for: static partition of [0, n) over worker threads. Each index is
// touched by exactly one thread and chunks write disjoint outputs, so results
// do not depend on the schedule.
// ----------------------------------------------------------------------------
inline void parallel_for(long long n, const std::function<void(long long, long long)>& body,
                         long long min_grain = 1024) {
    if (n <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    long long max_threads = std::max(1LL, static_cast<long long>(hw == 0 ? 1 : hw));
    long long threads = std::min(max_threads, (n + min_grain - 1) / min_grain);
    if (threads <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    long long chunk = (n + threads - 1) / threads;
    for (long long t = 0; t < threads; ++t) {
        long long lo = t * chunk;
        long long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace vosmem
