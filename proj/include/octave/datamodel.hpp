#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "octave/tensor.hpp"

namespace octave {

// Sentinel for pixels without scribble annotation. Kept outside the class
// index range and identical to the on-disk encoding.
inline constexpr uint8_t kUnannotated = 255;

// Single-channel 2D intensity image, the segmentor input. Immutable value
// object after construction.
struct Angiogram {
    int64_t h = 0, w = 0;
    std::vector<double> pix;  // row-major, intensities in [0,1]
    std::string id;
    std::string tag;  // condition tag used for stratification; may be empty

    double at(int64_t r, int64_t c) const { return pix[static_cast<size_t>(r * w + c)]; }
    double& at(int64_t r, int64_t c) { return pix[static_cast<size_t>(r * w + c)]; }
};

// Per-pixel class map with an explicit unannotated state.
struct ScribbleLabel {
    int64_t h = 0, w = 0;
    std::vector<uint8_t> lab;  // class index or kUnannotated

    uint8_t at(int64_t r, int64_t c) const { return lab[static_cast<size_t>(r * w + c)]; }
    uint8_t& at(int64_t r, int64_t c) { return lab[static_cast<size_t>(r * w + c)]; }

    static ScribbleLabel unannotated(int64_t h, int64_t w) {
        return ScribbleLabel{h, w, std::vector<uint8_t>(static_cast<size_t>(h * w), kUnannotated)};
    }
};

// Fully annotated class map.
struct DenseMask {
    int64_t h = 0, w = 0;
    std::vector<uint8_t> lab;

    uint8_t at(int64_t r, int64_t c) const { return lab[static_cast<size_t>(r * w + c)]; }
    uint8_t& at(int64_t r, int64_t c) { return lab[static_cast<size_t>(r * w + c)]; }
};

// Per-pixel class-probability field, stored HWC.
struct SegmentationMap {
    int64_t h = 0, w = 0, c = 0;
    std::vector<double> p;

    double at(int64_t r, int64_t col, int64_t ch) const {
        return p[static_cast<size_t>((r * w + col) * c + ch)];
    }
    double& at(int64_t r, int64_t col, int64_t ch) {
        return p[static_cast<size_t>((r * w + col) * c + ch)];
    }
};

// Multi-resolution discriminative outputs from the decoder gates.
// maps[i] has spatial shape (H/2^(d-i)) x (W/2^(d-i)); maps[d] is full
// resolution.
struct AttentionMapSet {
    std::vector<SegmentationMap> maps;

    int depth() const { return static_cast<int>(maps.size()) - 1; }
};

// Full experiment description. Defaults follow the published training
// protocol; desk-scale runs override epochs/widths via the config file.
struct TrainConfig {
    int depth = 4;       // decoder depth d
    int classes = 2;     // C, background is class 0
    int base_width = 16; // segmentor channels at full resolution
    int disc_base_width = 8;

    double alpha1 = 0.1;  // fixed segmentor adversarial weight
    double alpha2 = 0.1;  // fixed discriminator weight
    double clamp_c = 0.1; // clamp constant for the reciprocal dynamic weight
    double log_eps = 1e-8;

    bool ssds = true;                       // inter-layer divergence objective on/off
    std::string alpha0_mode = "reciprocal"; // "reciprocal" | "original"
    bool invert_class_weights = false;
    std::string pyramid_mode = "nearest"; // "nearest" | "average"
    bool ild_mean_over_levels = false;    // divide aggregate by d+1 instead of d
    bool ild_stop_gradient = false;       // block gradient through the aggregate

    double learning_rate = 0.001;
    double weight_decay = 0.0001;
    std::string schedule = "cyclic"; // "cyclic" | "constant"
    double cyclic_low = 0.00001;
    double cyclic_high = 0.0001;
    int cyclic_period = 100;

    int epochs = 100;
    int batch_size = 4;
    uint64_t seed = 50;
    double availability = 1.0;      // fraction of weak samples keeping scribbles
    double rotation_degrees = 10.0; // augmentation range, +-deg
    double unpaired_fraction = 0.5;
    double test_fraction = 0.3;
    int folds = 5;
    int fold_index = 0;

    void validate() const;  // throws domain-error on bad fields
};

// One-hot expansion of a dense mask. Throws if any label >= classes.
SegmentationMap one_hot(const DenseMask& mask, int classes);

// 1 where annotated, 0 where unannotated; same shape as the input.
std::vector<uint8_t> annotation_indicator(const ScribbleLabel& ys);

// Eager validators; throw domain-error describing the first violation.
void validate_angiogram(const Angiogram& a, int depth);
void validate_scribble(const ScribbleLabel& ys, int classes);
void validate_dense_mask(const DenseMask& m, int classes);
void validate_segmentation_map(const SegmentationMap& m, double tol = 1e-6);
void validate_attention_set(const AttentionMapSet& a, int64_t full_h, int64_t full_w,
                            int depth, double tol = 1e-6);

// Layout conversions between the HWC domain types and NCHW tensors.
Tensor seg_map_to_chw(const SegmentationMap& m);              // {1,C,H,W}
SegmentationMap chw_to_seg_map(const Tensor& t, int64_t n = 0);
Tensor angiogram_to_tensor(const Angiogram& a);               // {1,1,H,W}

}  // namespace octave
