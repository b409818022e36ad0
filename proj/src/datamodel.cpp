#include "octave/datamodel.hpp"

#include <cmath>

#include "octave/error.hpp"

namespace octave {

void TrainConfig::validate() const {
    if (depth < 2) throw domain_error("config: depth must be >= 2");
    if (classes < 2) throw domain_error("config: classes must be >= 2");
    if (classes >= kUnannotated) throw domain_error("config: classes must be < 255");
    if (base_width < 1 || disc_base_width < 1) throw domain_error("config: widths must be >= 1");
    if (alpha1 <= 0.0 || alpha2 <= 0.0) throw domain_error("config: alpha1/alpha2 must be > 0");
    if (clamp_c <= 0.0) throw domain_error("config: clamp constant must be > 0");
    if (log_eps <= 0.0) throw domain_error("config: log epsilon must be > 0");
    if (alpha0_mode != "reciprocal" && alpha0_mode != "original")
        throw domain_error("config: alpha0_mode must be reciprocal or original");
    if (pyramid_mode != "nearest" && pyramid_mode != "average")
        throw domain_error("config: pyramid_mode must be nearest or average");
    if (schedule != "cyclic" && schedule != "constant")
        throw domain_error("config: schedule must be cyclic or constant");
    if (learning_rate <= 0.0) throw domain_error("config: learning_rate must be > 0");
    if (weight_decay < 0.0) throw domain_error("config: weight_decay must be >= 0");
    if (cyclic_low <= 0.0 || cyclic_high < cyclic_low)
        throw domain_error("config: cyclic bounds must satisfy 0 < low <= high");
    if (cyclic_period < 2) throw domain_error("config: cyclic_period must be >= 2");
    if (epochs < 0) throw domain_error("config: epochs must be >= 0");
    if (batch_size < 1) throw domain_error("config: batch_size must be >= 1");
    if (!(availability > 0.0 && availability <= 1.0))
        throw domain_error("config: availability must be in (0,1]");
    if (rotation_degrees < 0.0) throw domain_error("config: rotation_degrees must be >= 0");
    if (!(unpaired_fraction > 0.0 && unpaired_fraction < 1.0))
        throw domain_error("config: unpaired_fraction must be in (0,1)");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw domain_error("config: test_fraction must be in (0,1)");
    if (folds < 2) throw domain_error("config: folds must be >= 2");
    if (fold_index < 0 || fold_index >= folds)
        throw domain_error("config: fold_index out of range");
}

SegmentationMap one_hot(const DenseMask& mask, int classes) {
    SegmentationMap out{mask.h, mask.w, classes,
                        std::vector<double>(static_cast<size_t>(mask.h * mask.w * classes), 0.0)};
    for (int64_t i = 0; i < mask.h * mask.w; ++i) {
        uint8_t l = mask.lab[static_cast<size_t>(i)];
        if (l >= classes)
            throw domain_error("one_hot: label " + std::to_string(int(l)) +
                               " out of range for " + std::to_string(classes) + " classes");
        out.p[static_cast<size_t>(i * classes + l)] = 1.0;
    }
    return out;
}

std::vector<uint8_t> annotation_indicator(const ScribbleLabel& ys) {
    std::vector<uint8_t> out(ys.lab.size());
    for (size_t i = 0; i < ys.lab.size(); ++i) out[i] = ys.lab[i] == kUnannotated ? 0 : 1;
    return out;
}

void validate_angiogram(const Angiogram& a, int depth) {
    if (a.h <= 0 || a.w <= 0 || static_cast<int64_t>(a.pix.size()) != a.h * a.w)
        throw domain_error("angiogram " + a.id + ": inconsistent dimensions");
    int64_t factor = int64_t(1) << depth;
    if (a.h % factor != 0 || a.w % factor != 0 || a.h < factor || a.w < factor)
        throw domain_error("angiogram " + a.id + ": " + std::to_string(a.h) + "x" +
                           std::to_string(a.w) + " not divisible by 2^" + std::to_string(depth));
    for (double v : a.pix)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw domain_error("angiogram " + a.id + ": intensity outside [0,1]");
}

void validate_scribble(const ScribbleLabel& ys, int classes) {
    if (ys.h <= 0 || ys.w <= 0 || static_cast<int64_t>(ys.lab.size()) != ys.h * ys.w)
        throw domain_error("scribble: inconsistent dimensions");
    for (uint8_t l : ys.lab)
        if (l != kUnannotated && l >= classes)
            throw domain_error("scribble: label " + std::to_string(int(l)) + " out of range");
}

void validate_dense_mask(const DenseMask& m, int classes) {
    if (m.h <= 0 || m.w <= 0 || static_cast<int64_t>(m.lab.size()) != m.h * m.w)
        throw domain_error("mask: inconsistent dimensions");
    for (uint8_t l : m.lab)
        if (l >= classes)
            throw domain_error("mask: label " + std::to_string(int(l)) + " out of range");
}

void validate_segmentation_map(const SegmentationMap& m, double tol) {
    if (m.h <= 0 || m.w <= 0 || m.c < 2 ||
        static_cast<int64_t>(m.p.size()) != m.h * m.w * m.c)
        throw domain_error("segmentation map: inconsistent dimensions");
    for (int64_t i = 0; i < m.h * m.w; ++i) {
        double s = 0.0;
        for (int64_t ch = 0; ch < m.c; ++ch) {
            double v = m.p[static_cast<size_t>(i * m.c + ch)];
            if (!std::isfinite(v) || v < 0.0 || v > 1.0 + tol)
                throw domain_error("segmentation map: probability outside [0,1]");
            s += v;
        }
        if (std::abs(s - 1.0) > tol)
            throw domain_error("segmentation map: channel sum " + std::to_string(s) +
                               " violates the simplex at pixel " + std::to_string(i));
    }
}

void validate_attention_set(const AttentionMapSet& a, int64_t full_h, int64_t full_w,
                            int depth, double tol) {
    if (static_cast<int>(a.maps.size()) != depth + 1)
        throw domain_error("attention set: expected " + std::to_string(depth + 1) + " maps, got " +
                           std::to_string(a.maps.size()));
    for (int i = 0; i <= depth; ++i) {
        const auto& m = a.maps[static_cast<size_t>(i)];
        int64_t expect_h = full_h >> (depth - i);
        int64_t expect_w = full_w >> (depth - i);
        if (m.h != expect_h || m.w != expect_w)
            throw domain_error("attention set: map " + std::to_string(i) + " is " +
                               std::to_string(m.h) + "x" + std::to_string(m.w) + ", expected " +
                               std::to_string(expect_h) + "x" + std::to_string(expect_w));
        validate_segmentation_map(m, tol);
    }
}

Tensor seg_map_to_chw(const SegmentationMap& m) {
    Tensor t({1, m.c, m.h, m.w});
    for (int64_t ch = 0; ch < m.c; ++ch)
        for (int64_t r = 0; r < m.h; ++r)
            for (int64_t c = 0; c < m.w; ++c) t.at4(0, ch, r, c) = m.at(r, c, ch);
    return t;
}

SegmentationMap chw_to_seg_map(const Tensor& t, int64_t n) {
    const auto& s = t.shape();
    SegmentationMap m{s[2], s[3], s[1],
                      std::vector<double>(static_cast<size_t>(s[1] * s[2] * s[3]), 0.0)};
    for (int64_t ch = 0; ch < m.c; ++ch)
        for (int64_t r = 0; r < m.h; ++r)
            for (int64_t c = 0; c < m.w; ++c) m.at(r, c, ch) = t.at4(n, ch, r, c);
    return m;
}

Tensor angiogram_to_tensor(const Angiogram& a) {
    Tensor t({1, 1, a.h, a.w});
    std::copy(a.pix.begin(), a.pix.end(), t.vec().begin());
    return t;
}

}  // namespace octave
