#pragma once

#include "vosmem/core.hpp"

namespace vosmem {

struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    BinaryMask() = default;
    BinaryMask(int height, int width) : h(height), w(width), v(static_cast<size_t>(height) * width, 0) {}

    static BinaryMask from_labels(const IndexMap& labels, int id) {
        BinaryMask m(labels.h, labels.w);
        for (size_t i = 0; i < labels.v.size(); ++i) m.v[i] = labels.v[i] == id ? 1 : 0;
        return m;
    }

    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }

    bool empty_mask() const {
        for (uint8_t b : v)
            if (b) return false;
        return true;
    }
};

// Region similarity: intersection over union. Two empty masks count as a
// perfect match (object absent and predicted absent).
inline double jaccard(const BinaryMask& pred, const BinaryMask& gt) {
    require(pred.h == gt.h && pred.w == gt.w, "jaccard: extent mismatch");
    long long inter = 0, uni = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const bool a = pred.v[i] != 0, b = gt.v[i] != 0;
        inter += (a && b) ? 1 : 0;
        uni += (a || b) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// 1-pixel boundary: foreground pixels with a 4-neighbor background pixel or
// on the image edge.
inline BinaryMask boundary_pixels(const BinaryMask& m) {
    BinaryMask b(m.h, m.w);
    for (int y = 0; y < m.h; ++y) {
        for (int x = 0; x < m.w; ++x) {
            if (!m.at(y, x)) continue;
            const bool edge = y == 0 || x == 0 || y == m.h - 1 || x == m.w - 1;
            const bool bg_neighbor = (y > 0 && !m.at(y - 1, x)) || (y < m.h - 1 && !m.at(y + 1, x)) ||
                                     (x > 0 && !m.at(y, x - 1)) || (x < m.w - 1 && !m.at(y, x + 1));
            if (edge || bg_neighbor) b.at(y, x) = 1;
        }
    }
    return b;
}

inline double default_boundary_tol(int h, int w) {
    return std::ceil(0.008 * std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w));
}

namespace detail {

// Fraction of boundary pixels in `from` within Euclidean distance tol of a
// boundary pixel in `to`.
inline double boundary_match_fraction(const BinaryMask& from, const BinaryMask& to, double tol) {
    const int r = static_cast<int>(std::floor(tol));
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (static_cast<double>(dy) * dy + static_cast<double>(dx) * dx <= tol * tol)
                offsets.emplace_back(dy, dx);

    long long total = 0, matched = 0;
    for (int y = 0; y < from.h; ++y) {
        for (int x = 0; x < from.w; ++x) {
            if (!from.at(y, x)) continue;
            ++total;
            for (const auto& [dy, dx] : offsets) {
                const int ny = y + dy, nx = x + dx;
                if (ny >= 0 && ny < to.h && nx >= 0 && nx < to.w && to.at(ny, nx)) {
                    ++matched;
                    break;
                }
            }
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace detail

// Boundary measure: precision/recall of boundary pixels under a distance
// tolerance, combined as F = 2PR/(P+R). Empty vs empty scores 1.
inline double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tol) {
    require(pred.h == gt.h && pred.w == gt.w, "boundary_f: extent mismatch");
    require(tol >= 0.0, "boundary_f: tolerance must be >= 0");
    const BinaryMask pb = boundary_pixels(pred);
    const BinaryMask gb = boundary_pixels(gt);
    const bool pe = pb.empty_mask(), ge = gb.empty_mask();
    if (pe && ge) return 1.0;
    if (pe || ge) return 0.0;
    const double precision = detail::boundary_match_fraction(pb, gb, tol);
    const double recall = detail::boundary_match_fraction(gb, pb, tol);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

inline double boundary_f(const BinaryMask& pred, const BinaryMask& gt) {
    return boundary_f(pred, gt, default_boundary_tol(pred.h, pred.w));
}

struct JFScore {
    double j = 0.0;   // 0..100
    double f = 0.0;   // 0..100
    double jf = 0.0;  // (j + f) / 2
};

// Means of per-object per-frame values on the 0-100 scale.
inline JFScore jf_score(const std::vector<double>& j_values, const std::vector<double>& f_values) {
    require(!j_values.empty() && j_values.size() == f_values.size(),
            "jf_score: non-empty J/F tables of equal size required");
    double js = 0.0, fs = 0.0;
    for (double v : j_values) js += v;
    for (double v : f_values) fs += v;
    JFScore s;
    s.j = 100.0 * js / static_cast<double>(j_values.size());
    s.f = 100.0 * fs / static_cast<double>(f_values.size());
    s.jf = 0.5 * (s.j + s.f);
    return s;
}

// Per-video score: J and F averaged over every (frame >= 1, object) pair.
// The first frame carries the given annotation and is excluded. Objects are
// the ids of the first ground-truth frame. A single-frame video has nothing
// to get wrong and scores 100.
inline JFScore score_video(const std::vector<IndexMap>& pred, const std::vector<IndexMap>& gt) {
    require(!gt.empty(), "score_video: empty ground truth");
    require(pred.size() == gt.size(), "score_video: frame count mismatch");
    const std::vector<int> ids = gt[0].object_ids();
    require(!ids.empty(), "score_video: ground truth has no objects");

    std::vector<double> js, fs;
    for (size_t t = 1; t < gt.size(); ++t) {
        require(pred[t].h == gt[t].h && pred[t].w == gt[t].w, "score_video: extent mismatch");
        const double tol = default_boundary_tol(gt[t].h, gt[t].w);
        for (int id : ids) {
            const BinaryMask pm = BinaryMask::from_labels(pred[t], id);
            const BinaryMask gm = BinaryMask::from_labels(gt[t], id);
            js.push_back(jaccard(pm, gm));
            fs.push_back(boundary_f(pm, gm, tol));
        }
    }
    if (js.empty()) return {100.0, 100.0, 100.0};
    return jf_score(js, fs);
}

}  // namespace vosmem
