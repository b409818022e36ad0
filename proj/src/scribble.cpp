#include "octave/scribble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "octave/error.hpp"
#include "octave/random.hpp"

namespace octave::scribble {

namespace {

// Neighbors P2..P9 clockwise starting north, per the original formulation.
constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};

// One subiteration; returns true if any pixel was deleted. Deletions are
// decided against the unmodified input of the pass.
bool thin_pass(BinaryGrid& g, int phase) {
    std::vector<std::pair<int64_t, int64_t>> doomed;
    for (int64_t r = 0; r < g.h; ++r) {
        for (int64_t c = 0; c < g.w; ++c) {
            if (!g.at(r, c)) continue;
            int p[8];
            int b = 0;
            for (int i = 0; i < 8; ++i) {
                p[i] = g.at(r + kDr[i], c + kDc[i]);
                b += p[i];
            }
            if (b < 2 || b > 6) continue;
            int a = 0;
            for (int i = 0; i < 8; ++i)
                if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
            if (a != 1) continue;
            // p[0]=P2(N) p[2]=P4(E) p[4]=P6(S) p[6]=P8(W)
            if (phase == 0) {
                if (p[0] * p[2] * p[4] != 0) continue;
                if (p[2] * p[4] * p[6] != 0) continue;
            } else {
                if (p[0] * p[2] * p[6] != 0) continue;
                if (p[0] * p[4] * p[6] != 0) continue;
            }
            doomed.emplace_back(r, c);
        }
    }
    for (auto [r, c] : doomed) g.ref(r, c) = 0;
    return !doomed.empty();
}

}  // namespace

BinaryGrid skeletonize(const BinaryGrid& mask) {
    if (mask.h <= 0 || mask.w <= 0 ||
        static_cast<int64_t>(mask.v.size()) != mask.h * mask.w)
        throw domain_error("skeletonize: inconsistent dimensions");
    for (uint8_t v : mask.v)
        if (v > 1) throw domain_error("skeletonize: input is not binary");
    BinaryGrid g = mask;
    bool changed = true;
    while (changed) {
        bool a = thin_pass(g, 0);
        bool b = thin_pass(g, 1);
        changed = a || b;
    }
    return g;
}

int count_components8(const BinaryGrid& mask) {
    std::vector<uint8_t> seen(mask.v.size(), 0);
    std::vector<int64_t> stack;
    int components = 0;
    for (int64_t r = 0; r < mask.h; ++r)
        for (int64_t c = 0; c < mask.w; ++c) {
            int64_t idx = r * mask.w + c;
            if (!mask.v[static_cast<size_t>(idx)] || seen[static_cast<size_t>(idx)]) continue;
            ++components;
            seen[static_cast<size_t>(idx)] = 1;
            stack.push_back(idx);
            while (!stack.empty()) {
                int64_t cur = stack.back();
                stack.pop_back();
                int64_t cr = cur / mask.w, cc = cur % mask.w;
                for (int i = 0; i < 8; ++i) {
                    int64_t nr = cr + kDr[i], nc = cc + kDc[i];
                    if (nr < 0 || nr >= mask.h || nc < 0 || nc >= mask.w) continue;
                    int64_t nidx = nr * mask.w + nc;
                    if (mask.v[static_cast<size_t>(nidx)] && !seen[static_cast<size_t>(nidx)]) {
                        seen[static_cast<size_t>(nidx)] = 1;
                        stack.push_back(nidx);
                    }
                }
            }
        }
    return components;
}

BinaryGrid dilate_chebyshev(const BinaryGrid& mask, int radius) {
    BinaryGrid out = BinaryGrid::zeros(mask.h, mask.w);
    for (int64_t r = 0; r < mask.h; ++r)
        for (int64_t c = 0; c < mask.w; ++c) {
            if (!mask.at(r, c)) continue;
            for (int64_t dr = -radius; dr <= radius; ++dr)
                for (int64_t dc = -radius; dc <= radius; ++dc) {
                    int64_t nr = r + dr, nc = c + dc;
                    if (nr >= 0 && nr < mask.h && nc >= 0 && nc < mask.w) out.ref(nr, nc) = 1;
                }
        }
    return out;
}

ScribbleLabel make_scribble(const DenseMask& mask) {
    validate_dense_mask(mask, 2);
    BinaryGrid fg{mask.h, mask.w, mask.lab};
    BinaryGrid bg = BinaryGrid::zeros(mask.h, mask.w);
    for (size_t i = 0; i < mask.lab.size(); ++i) bg.v[i] = mask.lab[i] ? 0 : 1;

    BinaryGrid fg_skel = skeletonize(fg);
    BinaryGrid bg_skel = skeletonize(bg);
    // background strokes stay clear of the vessel boundary
    BinaryGrid excl = dilate_chebyshev(fg, 1);

    ScribbleLabel out = ScribbleLabel::unannotated(mask.h, mask.w);
    for (int64_t i = 0; i < mask.h * mask.w; ++i) {
        if (fg_skel.v[static_cast<size_t>(i)])
            out.lab[static_cast<size_t>(i)] = 1;
        else if (bg_skel.v[static_cast<size_t>(i)] && !excl.v[static_cast<size_t>(i)])
            out.lab[static_cast<size_t>(i)] = 0;
    }
    return out;
}

AvailabilityResult subsample_availability(const std::vector<ScribbleLabel>& scribbles,
                                          const std::vector<std::string>& tags, double p,
                                          uint64_t seed) {
    if (scribbles.empty()) throw domain_error("subsample_availability: empty dataset");
    if (!(p > 0.0 && p <= 1.0))
        throw domain_error("subsample_availability: availability must be in (0,1]");
    if (tags.size() != scribbles.size())
        throw domain_error("subsample_availability: tag count mismatch");

    size_t n = scribbles.size();
    size_t target = static_cast<size_t>(std::ceil(p * static_cast<double>(n)));

    // group indices per tag; map keeps tag order deterministic
    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < n; ++i) strata[tags[i]].push_back(i);

    // per-stratum quotas by largest remainder against the global target
    std::vector<std::pair<std::string, std::vector<size_t>>> groups(strata.begin(), strata.end());
    std::vector<size_t> quota(groups.size());
    std::vector<std::pair<double, size_t>> remainder;
    size_t assigned = 0;
    for (size_t g = 0; g < groups.size(); ++g) {
        double exact = p * static_cast<double>(groups[g].second.size());
        quota[g] = static_cast<size_t>(std::floor(exact));
        assigned += quota[g];
        remainder.emplace_back(exact - std::floor(exact), g);
    }
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t k = 0; assigned < target && k < remainder.size(); ++k) {
        size_t g = remainder[k].second;
        if (quota[g] < groups[g].second.size()) {
            ++quota[g];
            ++assigned;
        }
    }
    if (assigned != target)
        throw domain_error("subsample_availability: could not reach the target count");

    std::vector<bool> kept(n, false);
    auto rng = make_rng(seed, "availability");
    for (size_t g = 0; g < groups.size(); ++g) {
        auto idx = groups[g].second;
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t k = 0; k < quota[g]; ++k) kept[idx[k]] = true;
    }

    AvailabilityResult out;
    out.kept = kept;
    out.scribbles.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (kept[i])
            out.scribbles.push_back(scribbles[i]);
        else
            out.scribbles.push_back(ScribbleLabel::unannotated(scribbles[i].h, scribbles[i].w));
    }
    return out;
}

}  // namespace octave::scribble
