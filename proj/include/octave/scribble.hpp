#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "octave/datamodel.hpp"

namespace octave::scribble {

// Binary grid helper used by the thinning code; values are 0/1.
struct BinaryGrid {
    int64_t h = 0, w = 0;
    std::vector<uint8_t> v;

    uint8_t at(int64_t r, int64_t c) const {
        // out-of-grid neighbors are background
        if (r < 0 || r >= h || c < 0 || c >= w) return 0;
        return v[static_cast<size_t>(r * w + c)];
    }
    uint8_t& ref(int64_t r, int64_t c) { return v[static_cast<size_t>(r * w + c)]; }

    static BinaryGrid zeros(int64_t h, int64_t w) {
        return BinaryGrid{h, w, std::vector<uint8_t>(static_cast<size_t>(h * w), 0)};
    }
};

// Zhang-Suen two-subiteration thinning applied until fixpoint.
// Throws domain-error if the input is not {0,1}-valued.
BinaryGrid skeletonize(const BinaryGrid& mask);

// Number of 8-connected foreground components.
int count_components8(const BinaryGrid& mask);

// Chebyshev dilation by the given radius (square structuring element).
BinaryGrid dilate_chebyshev(const BinaryGrid& mask, int radius);

// Synthesizes a scribble from a binary dense mask: the vessel stroke is the
// skeleton of the foreground, the background stroke is the skeleton of the
// complement clipped to pixels at Chebyshev distance >= 2 from the
// foreground. Everything else is unannotated.
ScribbleLabel make_scribble(const DenseMask& mask);

// Keeps the scribbles of exactly ceil(p*N) samples (stratified by tag where
// tags exist), replacing the rest by all-unannotated labels. Returns the
// per-sample "kept" flags alongside the rewritten dataset.
struct AvailabilityResult {
    std::vector<ScribbleLabel> scribbles;
    std::vector<bool> kept;
};
AvailabilityResult subsample_availability(const std::vector<ScribbleLabel>& scribbles,
                                          const std::vector<std::string>& tags, double p,
                                          uint64_t seed);

}  // namespace octave::scribble
