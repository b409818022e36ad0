#include "octave/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "octave/error.hpp"
#include "octave/image_io.hpp"
#include "octave/random.hpp"
#include "octave/scribble.hpp"

namespace octave::data {

namespace fs = std::filesystem;
using nlohmann::json;

const Sample& Dataset::by_id(const std::string& id) const {
    for (const auto& s : samples)
        if (s.image.id == id) return s;
    throw domain_error("dataset: unknown sample id " + id);
}

std::vector<std::string> Dataset::ids() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.image.id);
    return out;
}

std::vector<std::string> Dataset::tags() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.image.tag);
    return out;
}

void DatasetSplit::check_disjoint_cover(const std::vector<std::string>& all_ids) const {
    std::set<std::string> seen;
    for (const auto* list : {&train, &validation, &test})
        for (const auto& id : *list)
            if (!seen.insert(id).second)
                throw domain_error("split: id " + id + " appears in two lists");
    if (seen.size() != all_ids.size())
        throw domain_error("split: lists do not cover the dataset");
}

std::vector<DatasetSplit> stratified_split(const std::vector<std::string>& ids,
                                           const std::vector<std::string>& tags,
                                           double test_fraction, int folds, uint64_t seed) {
    if (ids.empty()) throw domain_error("stratified_split: empty dataset");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw domain_error("stratified_split: test_fraction must be in (0,1)");
    if (folds < 2) throw domain_error("stratified_split: folds must be >= 2");
    if (tags.size() != ids.size()) throw domain_error("stratified_split: tag count mismatch");

    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < ids.size(); ++i) strata[tags[i]].push_back(i);

    // per-stratum test quotas by largest remainder against the global target
    size_t n = ids.size();
    size_t target = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
    std::vector<std::pair<std::string, std::vector<size_t>>> groups(strata.begin(), strata.end());
    std::vector<size_t> quota(groups.size());
    std::vector<std::pair<double, size_t>> remainder;
    size_t assigned = 0;
    for (size_t g = 0; g < groups.size(); ++g) {
        double exact = test_fraction * static_cast<double>(groups[g].second.size());
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

    auto rng = make_rng(seed, "split");
    std::vector<DatasetSplit> out(static_cast<size_t>(folds));
    for (int f = 0; f < folds; ++f) out[static_cast<size_t>(f)].fold_index = f;

    for (size_t g = 0; g < groups.size(); ++g) {
        auto idx = groups[g].second;
        std::shuffle(idx.begin(), idx.end(), rng);
        size_t n_test = quota[g];
        size_t n_train = idx.size() - n_test;
        if (n_train < static_cast<size_t>(folds))
            throw domain_error("stratified_split: stratum '" + groups[g].first + "' has only " +
                               std::to_string(n_train) + " train samples for " +
                               std::to_string(folds) + " folds");
        for (int f = 0; f < folds; ++f) {
            auto& split = out[static_cast<size_t>(f)];
            for (size_t k = 0; k < n_test; ++k) split.test.push_back(ids[idx[k]]);
            for (size_t k = 0; k < n_train; ++k) {
                const std::string& id = ids[idx[n_test + k]];
                if (static_cast<int>(k % static_cast<size_t>(folds)) == f)
                    split.validation.push_back(id);
                else
                    split.train.push_back(id);
            }
        }
    }
    for (auto& s : out) s.check_disjoint_cover(ids);
    return out;
}

UnpairedSplit unpaired_subset(const std::vector<std::string>& train, double fraction,
                              uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw domain_error("unpaired_subset: fraction must be in (0,1)");
    size_t n = train.size();
    size_t n_unpaired = static_cast<size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n_unpaired == 0 || n_unpaired == n)
        throw domain_error("unpaired_subset: fraction yields an empty side for " +
                           std::to_string(n) + " samples");
    std::vector<std::string> shuffled = train;
    auto rng = make_rng(seed, "unpaired");
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    UnpairedSplit out;
    out.unpaired.assign(shuffled.begin(), shuffled.begin() + static_cast<int64_t>(n_unpaired));
    out.weak.assign(shuffled.begin() + static_cast<int64_t>(n_unpaired), shuffled.end());
    return out;
}

namespace {

struct RotationFrame {
    double cos_t, sin_t, cy, cx;
};

RotationFrame make_frame(int64_t h, int64_t w, double degrees) {
    double rad = degrees * M_PI / 180.0;
    return {std::cos(rad), std::sin(rad), (static_cast<double>(h) - 1.0) / 2.0,
            (static_cast<double>(w) - 1.0) / 2.0};
}

// Inverse-maps an output pixel to source coordinates.
inline void source_coords(const RotationFrame& f, int64_t r, int64_t c, double& sr, double& sc) {
    double dy = static_cast<double>(r) - f.cy;
    double dx = static_cast<double>(c) - f.cx;
    sc = f.cos_t * dx + f.sin_t * dy + f.cx;
    sr = -f.sin_t * dx + f.cos_t * dy + f.cy;
}

}  // namespace

std::pair<Angiogram, ScribbleLabel> rotate_augment(const Angiogram& image,
                                                   const ScribbleLabel& label, double degrees) {
    if (image.h != label.h || image.w != label.w)
        throw domain_error("rotate_augment: image/label shape mismatch");
    auto f = make_frame(image.h, image.w, degrees);
    Angiogram out_img = image;
    ScribbleLabel out_lab = label;
    for (int64_t r = 0; r < image.h; ++r)
        for (int64_t c = 0; c < image.w; ++c) {
            double sr, sc;
            source_coords(f, r, c, sr, sc);
            double& px = out_img.at(r, c);
            uint8_t& lb = out_lab.at(r, c);
            if (sr < 0.0 || sr > static_cast<double>(image.h - 1) || sc < 0.0 ||
                sc > static_cast<double>(image.w - 1)) {
                px = 0.0;
                lb = kUnannotated;
                continue;
            }
            int64_t r0 = static_cast<int64_t>(sr), c0 = static_cast<int64_t>(sc);
            int64_t r1 = std::min(r0 + 1, image.h - 1), c1 = std::min(c0 + 1, image.w - 1);
            double fr = sr - static_cast<double>(r0), fc = sc - static_cast<double>(c0);
            px = (1 - fr) * ((1 - fc) * image.at(r0, c0) + fc * image.at(r0, c1)) +
                 fr * ((1 - fc) * image.at(r1, c0) + fc * image.at(r1, c1));
            lb = label.at(std::llround(sr), std::llround(sc));
        }
    return {std::move(out_img), std::move(out_lab)};
}

DenseMask rotate_mask(const DenseMask& mask, double degrees) {
    auto f = make_frame(mask.h, mask.w, degrees);
    DenseMask out = mask;
    for (int64_t r = 0; r < mask.h; ++r)
        for (int64_t c = 0; c < mask.w; ++c) {
            double sr, sc;
            source_coords(f, r, c, sr, sc);
            if (sr < 0.0 || sr > static_cast<double>(mask.h - 1) || sc < 0.0 ||
                sc > static_cast<double>(mask.w - 1))
                out.at(r, c) = 0;
            else
                out.at(r, c) = mask.at(std::llround(sr), std::llround(sc));
        }
    return out;
}

namespace {

void stamp_disc(DenseMask& mask, double y, double x, double radius) {
    int64_t r0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(y - radius)));
    int64_t r1 = std::min<int64_t>(mask.h - 1, static_cast<int64_t>(std::ceil(y + radius)));
    int64_t c0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(x - radius)));
    int64_t c1 = std::min<int64_t>(mask.w - 1, static_cast<int64_t>(std::ceil(x + radius)));
    double rr = radius * radius;
    for (int64_t r = r0; r <= r1; ++r)
        for (int64_t c = c0; c <= c1; ++c) {
            double dy = static_cast<double>(r) - y, dx = static_cast<double>(c) - x;
            if (dy * dy + dx * dx <= rr) mask.at(r, c) = 1;
        }
}

}  // namespace

std::pair<Angiogram, DenseMask> generate_phantom(int64_t h, int64_t w, int n_vessels,
                                                 uint64_t seed) {
    if (h < 32 || w < 32) throw domain_error("generate_phantom: size must be at least 32x32");
    if (n_vessels < 0) throw domain_error("generate_phantom: n_vessels must be >= 0");
    auto rng = make_rng(seed, "phantom");
    std::uniform_real_distribution<double> uy(0.0, static_cast<double>(h - 1));
    std::uniform_real_distribution<double> ux(0.0, static_cast<double>(w - 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> widths(1, 4);

    DenseMask mask{h, w, std::vector<uint8_t>(static_cast<size_t>(h * w), 0)};
    const int max_attempts = 20;
    bool ok = (n_vessels == 0);
    for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
        std::fill(mask.lab.begin(), mask.lab.end(), 0);
        for (int v = 0; v < n_vessels; ++v) {
            // quadratic Bezier with a jittered middle control point
            double y0 = uy(rng), x0 = ux(rng), y2 = uy(rng), x2 = ux(rng);
            double ym = (y0 + y2) / 2.0 + (unit(rng) - 0.5) * static_cast<double>(h) * 0.5;
            double xm = (x0 + x2) / 2.0 + (unit(rng) - 0.5) * static_cast<double>(w) * 0.5;
            double radius = static_cast<double>(widths(rng)) / 2.0;
            int steps = static_cast<int>(2 * (h + w));
            for (int s = 0; s <= steps; ++s) {
                double t = static_cast<double>(s) / static_cast<double>(steps);
                double omt = 1.0 - t;
                double y = omt * omt * y0 + 2.0 * omt * t * ym + t * t * y2;
                double x = omt * omt * x0 + 2.0 * omt * t * xm + t * t * x2;
                stamp_disc(mask, y, x, radius);
            }
        }
        int64_t fg = std::count(mask.lab.begin(), mask.lab.end(), uint8_t(1));
        double fraction = static_cast<double>(fg) / static_cast<double>(h * w);
        ok = fraction >= 0.02 && fraction <= 0.35;
    }
    if (!ok)
        throw domain_error("generate_phantom: vessel fraction outside [0.02,0.35] after " +
                           std::to_string(max_attempts) + " attempts");

    // low-frequency background texture from a few random sinusoids
    double fy1 = 1.0 + 3.0 * unit(rng), fx1 = 1.0 + 3.0 * unit(rng);
    double fy2 = 1.0 + 5.0 * unit(rng), fx2 = 1.0 + 5.0 * unit(rng);
    double ph1 = 2.0 * M_PI * unit(rng), ph2 = 2.0 * M_PI * unit(rng);
    std::vector<double> raw(static_cast<size_t>(h * w));
    for (int64_t r = 0; r < h; ++r)
        for (int64_t c = 0; c < w; ++c) {
            double yn = static_cast<double>(r) / static_cast<double>(h);
            double xn = static_cast<double>(c) / static_cast<double>(w);
            double bg = 0.18 + 0.05 * std::sin(2.0 * M_PI * (fy1 * yn + fx1 * xn) + ph1) +
                        0.04 * std::sin(2.0 * M_PI * (fy2 * yn - fx2 * xn) + ph2);
            double v = bg;
            if (mask.at(r, c)) v = 0.62 + 0.12 * unit(rng);
            // multiplicative speckle
            v *= 1.0 + 0.35 * (unit(rng) - 0.5);
            raw[static_cast<size_t>(r * w + c)] = v;
        }
    // mild 3x3 binomial blur
    std::vector<double> blurred(raw.size());
    auto sample = [&](int64_t r, int64_t c) {
        r = std::clamp<int64_t>(r, 0, h - 1);
        c = std::clamp<int64_t>(c, 0, w - 1);
        return raw[static_cast<size_t>(r * w + c)];
    };
    const double k[3] = {0.25, 0.5, 0.25};
    for (int64_t r = 0; r < h; ++r)
        for (int64_t c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    acc += k[dr + 1] * k[dc + 1] * sample(r + dr, c + dc);
            blurred[static_cast<size_t>(r * w + c)] = std::clamp(acc, 0.0, 1.0);
        }

    Angiogram img;
    img.h = h;
    img.w = w;
    img.pix = std::move(blurred);
    return {std::move(img), std::move(mask)};
}

std::vector<double> minmax_normalize(const std::vector<double>& pix) {
    auto [mn, mx] = std::minmax_element(pix.begin(), pix.end());
    std::vector<double> out(pix.size(), 0.0);
    double range = *mx - *mn;
    if (range <= 0.0) return out;
    for (size_t i = 0; i < pix.size(); ++i) out[i] = (pix[i] - *mn) / range;
    return out;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    bool any_scribble = false;
    for (const auto& s : ds.samples)
        if (s.scribble) any_scribble = true;
    if (any_scribble) fs::create_directories(dir / "scribbles");

    std::ofstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw io_error("cannot write manifest in " + dir.string());
    for (const auto& s : ds.samples) {
        const std::string name = s.image.id + ".pgm";
        io::write_pgm16(dir / "images" / name, io::quantize16(s.image.pix, s.image.h, s.image.w));
        io::write_pgm8(dir / "masks" / name, io::GrayImage8{s.mask.h, s.mask.w, s.mask.lab});
        json line = {{"id", s.image.id},
                     {"tag", s.image.tag},
                     {"image", "images/" + name},
                     {"mask", "masks/" + name}};
        if (s.scribble) {
            io::write_pgm8(dir / "scribbles" / name,
                           io::GrayImage8{s.scribble->h, s.scribble->w, s.scribble->lab});
            line["scribble"] = "scribbles/" + name;
        }
        manifest << line.dump() << "\n";
    }
}

Dataset load_dataset(const fs::path& dir, bool require_scribbles) {
    fs::path manifest_path = dir / "manifest.jsonl";
    std::ifstream manifest(manifest_path);
    if (!manifest)
        throw Error("data-missing", "no manifest at " + manifest_path.string());
    Dataset ds;
    std::string line;
    size_t lineno = 0;
    while (std::getline(manifest, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("data-invalid", manifest_path.string() + ":" + std::to_string(lineno) +
                                            ": " + e.what());
        }
        Sample s;
        s.image.id = j.at("id").get<std::string>();
        s.image.tag = j.value("tag", std::string());

        auto img = io::read_pgm16(dir / j.at("image").get<std::string>());
        s.image.h = img.h;
        s.image.w = img.w;
        s.image.pix = minmax_normalize(io::dequantize16(img));

        auto m = io::read_pgm8(dir / j.at("mask").get<std::string>());
        s.mask = DenseMask{m.h, m.w, std::move(m.v)};
        if (s.mask.h != s.image.h || s.mask.w != s.image.w)
            throw Error("data-invalid", "sample " + s.image.id + ": mask shape mismatch");

        if (j.contains("scribble")) {
            fs::path sp = dir / j.at("scribble").get<std::string>();
            if (fs::exists(sp)) {
                auto sc = io::read_pgm8(sp);
                s.scribble = ScribbleLabel{sc.h, sc.w, std::move(sc.v)};
                if (s.scribble->h != s.image.h || s.scribble->w != s.image.w)
                    throw Error("data-invalid", "sample " + s.image.id + ": scribble shape mismatch");
            }
        }
        if (require_scribbles && !s.scribble)
            throw Error("data-missing", "sample " + s.image.id +
                                            " has no scribble; run scribble-gen first");
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw Error("data-invalid", "manifest lists no samples");
    return ds;
}

std::vector<std::string> generate_scribbles(const fs::path& mask_dir, const fs::path& out_dir,
                                            double availability, uint64_t seed) {
    if (!fs::is_directory(mask_dir))
        throw Error("data-missing", "mask directory " + mask_dir.string() + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(mask_dir))
        if (e.path().extension() == ".pgm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("data-missing", "no .pgm masks in " + mask_dir.string());

    std::vector<ScribbleLabel> scribbles;
    std::vector<std::string> names;
    for (const auto& f : files) {
        auto m = io::read_pgm8(f);
        DenseMask mask{m.h, m.w, std::move(m.v)};
        scribbles.push_back(scribble::make_scribble(mask));
        names.push_back(f.stem().string());
    }
    if (availability < 1.0) {
        std::vector<std::string> tags(scribbles.size());
        auto res = scribble::subsample_availability(scribbles, tags, availability, seed);
        scribbles = std::move(res.scribbles);
    }
    fs::create_directories(out_dir);
    for (size_t i = 0; i < scribbles.size(); ++i)
        io::write_pgm8(out_dir / (names[i] + ".pgm"),
                       io::GrayImage8{scribbles[i].h, scribbles[i].w, scribbles[i].lab});
    return names;
}

}  // namespace octave::data
