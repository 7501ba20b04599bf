#include "fgadv/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fgadv {

std::string to_string(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::threshold: return "threshold";
        case SelectionMode::top_fraction: return "top_fraction";
        case SelectionMode::manual_window: return "manual_window";
    }
    return "top_fraction";
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "threshold") return SelectionMode::threshold;
    if (s == "top_fraction") return SelectionMode::top_fraction;
    if (s == "manual_window") return SelectionMode::manual_window;
    throw ConfigError("unknown selection mode: " + s);
}

int PatchMask::zero_count() const {
    int c = 0;
    for (auto b : bits) c += (b == 0);
    return c;
}

std::vector<int> PatchMask::zero_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
        if (bits[i] == 0) idx.push_back(i);
    return idx;
}

std::vector<int> PatchMask::one_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
        if (bits[i] == 1) idx.push_back(i);
    return idx;
}

double cosine(const Vec& a, const Vec& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw ZeroVectorError("cosine of a zero vector");
    return a.dot(b) / (na * nb);
}

SimilarityVector patch_similarity(const Mat& patches, const Vec& text_embedding) {
    if (patches.cols() != text_embedding.size())
        throw DimensionError("patch and text embedding dims differ");
    const double tn = text_embedding.norm();
    if (tn == 0.0) throw ZeroVectorError("zero text embedding");
    SimilarityVector s;
    s.values.resize(patches.rows());
    for (Eigen::Index i = 0; i < patches.rows(); ++i) {
        const double pn = patches.row(i).norm();
        if (pn == 0.0) throw ZeroVectorError("zero patch embedding row");
        s.values(i) = patches.row(i).dot(text_embedding) / (pn * tn);
    }
    return s;
}

PatchMask build_removal_mask(const SimilarityVector& s, SelectionMode mode, double parameter) {
    const int n = static_cast<int>(s.values.size());
    if (n == 0) throw DimensionError("empty similarity vector");
    PatchMask mask;
    mask.selection_mode = mode;
    mask.bits.assign(n, 1);

    if (mode == SelectionMode::threshold) {
        if (!(parameter > -1.0 && parameter < 1.0))
            throw ConfigError("threshold must lie in (-1,1)");
        int selected = 0;
        for (int i = 0; i < n; ++i)
            if (s.values(i) > parameter) {
                mask.bits[i] = 0;
                ++selected;
            }
        if (selected == 0)
            throw EmptySelectionError("threshold selected no patches");
        return mask;
    }
    if (mode == SelectionMode::top_fraction) {
        if (!(parameter > 0.0 && parameter <= 1.0))
            throw ConfigError("fraction must lie in (0,1]");
        const int k = static_cast<int>(std::ceil(parameter * n));
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        // descending similarity, ties by ascending patch index
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return s.values(a) > s.values(b);
        });
        for (int j = 0; j < k; ++j) mask.bits[order[j]] = 0;
        return mask;
    }
    throw ConfigError("manual_window is not a removal-mask mode");
}

PatchMask mask_from_region(const RegionSpec& region, int grid_side) {
    if (region.m <= 0 || region.m > grid_side || region.row < 0 || region.col < 0 ||
        region.row + region.m > grid_side || region.col + region.m > grid_side)
        throw GeometryError("window does not fit the patch grid");
    PatchMask mask;
    mask.selection_mode = SelectionMode::manual_window;
    mask.bits.assign(static_cast<std::size_t>(grid_side) * grid_side, 1);
    for (int r = region.row; r < region.row + region.m; ++r)
        for (int c = region.col; c < region.col + region.m; ++c)
            mask.bits[r * grid_side + c] = 0;
    return mask;
}

InjectionRegion select_injection_region(const Mat& patches, int grid_side,
                                        const std::vector<Vec>& foreground_embeddings, int m,
                                        const std::optional<RegionSpec>& manual) {
    const int n = grid_side * grid_side;
    if (patches.rows() != n)
        throw DimensionError("patch count does not match the grid side");
    if (manual) {
        RegionSpec region = *manual;
        if (region.m == 0) region.m = m;
        return {region, mask_from_region(region, grid_side)};
    }
    if (m <= 0 || m > grid_side)
        throw GeometryError("window side exceeds the patch grid");
    if (foreground_embeddings.empty())
        throw ConfigError("automatic selection needs at least one foreground embedding");

    // per-patch score: max similarity over foreground texts
    Vec score(n);
    for (int i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (const Vec& t : foreground_embeddings)
            best = std::max(best, cosine(patches.row(i).transpose(), t));
        score(i) = best;
    }

    RegionSpec best_region{0, 0, m};
    double best_sum = std::numeric_limits<double>::infinity();
    for (int r = 0; r + m <= grid_side; ++r)
        for (int c = 0; c + m <= grid_side; ++c) {
            double sum = 0.0;
            for (int dr = 0; dr < m; ++dr)
                for (int dc = 0; dc < m; ++dc) sum += score((r + dr) * grid_side + (c + dc));
            if (sum < best_sum) {
                best_sum = sum;
                best_region = {r, c, m};
            }
        }
    return {best_region, mask_from_region(best_region, grid_side)};
}

ImageBuffer make_masked_image(const ImageBuffer& image, const PatchMask& mask, int patch_size) {
    if (patch_size <= 0 || image.height % patch_size != 0 || image.width % patch_size != 0)
        throw DimensionError("image sides must be multiples of the patch size");
    const int rows = image.height / patch_size;
    const int cols = image.width / patch_size;
    if (mask.size() != rows * cols)
        throw DimensionError("mask length does not match the patch count");

    ImageBuffer out = image;
    for (int pr = 0; pr < rows; ++pr)
        for (int pc = 0; pc < cols; ++pc) {
            if (mask.bits[pr * cols + pc] != 0) continue;
            for (int py = 0; py < patch_size; ++py)
                for (int px = 0; px < patch_size; ++px)
                    for (int ch = 0; ch < 3; ++ch)
                        out.at(pr * patch_size + py, pc * patch_size + px, ch) = 0.0;
        }
    return out;
}

WindowSide window_side_from_pixels(int pixels, int patch_size) {
    if (pixels <= 0 || patch_size <= 0)
        throw ConfigError("window pixels and patch size must be positive");
    WindowSide w;
    w.m = pixels / patch_size;
    w.rounded = (pixels % patch_size) != 0;
    if (w.m == 0) throw GeometryError("requested window is smaller than one patch");
    return w;
}

}  // namespace fgadv
