#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "octave/datamodel.hpp"

namespace octave::data {

// One dataset entry: image plus dense mask, with the scribble present once
// scribble generation has run.
struct Sample {
    Angiogram image;
    DenseMask mask;
    std::optional<ScribbleLabel> scribble;
};

struct Dataset {
    std::vector<Sample> samples;

    const Sample& by_id(const std::string& id) const;
    std::vector<std::string> ids() const;
    std::vector<std::string> tags() const;
};

// Train/validation/test partition for one fold.
struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    int fold_index = 0;

    void check_disjoint_cover(const std::vector<std::string>& all_ids) const;
};

// Stratified 70:30-style split followed by k-fold partitioning of the train
// side. Deterministic in seed; throws naming any stratum smaller than the
// fold count.
std::vector<DatasetSplit> stratified_split(const std::vector<std::string>& ids,
                                           const std::vector<std::string>& tags,
                                           double test_fraction, int folds, uint64_t seed);

// Splits the train list into the scribble-supervised set and the unpaired
// set whose masks feed only the discriminator.
struct UnpairedSplit {
    std::vector<std::string> weak;
    std::vector<std::string> unpaired;
};
UnpairedSplit unpaired_subset(const std::vector<std::string>& train, double fraction,
                              uint64_t seed);

// Rotates the image with bilinear interpolation and the label with
// nearest-neighbor, both about the image center. Out-of-bounds regions get
// intensity 0 and the unannotated sentinel.
std::pair<Angiogram, ScribbleLabel> rotate_augment(const Angiogram& image,
                                                   const ScribbleLabel& label, double degrees);
DenseMask rotate_mask(const DenseMask& mask, double degrees);

// Synthetic curvilinear phantom: random smooth vessel curves of width 1-4 px
// over a textured noisy background. Deterministic in seed. The vessel pixel
// fraction is kept inside [0.02, 0.35] (except n_vessels = 0).
std::pair<Angiogram, DenseMask> generate_phantom(int64_t h, int64_t w, int n_vessels,
                                                 uint64_t seed);

// Per-image min-max normalization to [0,1]; constant images map to 0.
std::vector<double> minmax_normalize(const std::vector<double>& pix);

// On-disk dataset: <dir>/manifest.jsonl plus images/, masks/, scribbles/.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir, bool require_scribbles = false);

// Writes scribbles for every mask under <mask_dir> into <out_dir>,
// optionally blanking a 1-p fraction of them. Returns processed ids.
std::vector<std::string> generate_scribbles(const std::filesystem::path& mask_dir,
                                            const std::filesystem::path& out_dir,
                                            double availability, uint64_t seed);

}  // namespace octave::data
