#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "octave/autodiff.hpp"
#include "octave/datamodel.hpp"

namespace octave::net {

struct Conv {
    ad::Var w, b;
    int stride = 1;
    int pad = 1;

    ad::Var operator()(const ad::Var& x) const { return ad::conv2d(x, w, b, stride, pad); }
};

// UNet-like segmentor with an adversarial attention gate at the bottleneck
// and after every decoder stage. Gate i projects features to C logits with a
// 1x1 conv; the softmax map both gates the features (multiplied by the mean
// of the non-background channels) and is emitted for the discriminator.
// The full-resolution map doubles as the prediction.
class Segmentor {
public:
    static Segmentor init(const TrainConfig& cfg, uint64_t seed);

    struct Output {
        ad::Var yhat;               // {N,C,H,W}
        std::vector<ad::Var> attn;  // d+1 maps, attn[i] at H/2^(d-i)
    };
    Output forward(const ad::Var& x) const;

    std::vector<ad::Var> params() const;
    std::vector<std::pair<std::string, ad::Var>> named_params() const;

    int depth() const { return depth_; }
    int classes() const { return classes_; }

private:
    int depth_ = 0, classes_ = 0, base_width_ = 0;
    std::vector<std::pair<Conv, Conv>> enc_;
    std::pair<Conv, Conv> bottleneck_;
    std::vector<std::pair<Conv, Conv>> dec_;
    std::vector<Conv> gates_;
};

// Multi-resolution discriminator: one adapter per attention scale, a trunk
// that halves resolution while summing adapter outputs in, then global
// pooling to a single score per sample.
class Discriminator {
public:
    static Discriminator init(const TrainConfig& cfg, uint64_t seed);

    ad::Var forward(const std::vector<ad::Var>& attn) const;  // {N,1}

    std::vector<ad::Var> params() const;
    std::vector<std::pair<std::string, ad::Var>> named_params() const;

    int depth() const { return depth_; }

private:
    int depth_ = 0, classes_ = 0, base_width_ = 0;
    std::vector<Conv> adapters_;
    std::vector<Conv> trunk_;
    Conv head_;
    ad::Var fc_w_, fc_b_;
};

// One-hot ground truth at every gate resolution (coarsest first).
// mode "nearest" keeps hard labels; "average" pools the one-hot maps.
std::vector<Tensor> ground_truth_pyramid(const std::vector<DenseMask>& masks, int depth,
                                         int classes, const std::string& mode);
AttentionMapSet ground_truth_pyramid(const DenseMask& mask, int depth, int classes,
                                     const std::string& mode = "nearest");

// Versioned checkpoint container: JSON header plus raw little-endian
// doubles. Writes are atomic (temp file + rename).
struct Checkpoint {
    TrainConfig config;
    int epoch = -1;  // last completed epoch, -1 before training
    double best_val_dice = 0.0;
    int best_epoch = -1;
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::map<std::string, std::string> rng_state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace octave::net
