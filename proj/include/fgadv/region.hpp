#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fgadv/encoder.hpp"

namespace fgadv {

// Per-patch cosine similarities against one text embedding, values in [-1,1].
struct SimilarityVector {
    Vec values;
};

enum class SelectionMode { threshold, top_fraction, manual_window };

std::string to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(const std::string& s);

// n-length {0,1} vector: 0 marks attacked/injected patches, 1 preserved ones.
struct PatchMask {
    std::vector<std::uint8_t> bits;
    SelectionMode selection_mode = SelectionMode::top_fraction;

    int size() const { return static_cast<int>(bits.size()); }
    int zero_count() const;
    int one_count() const { return size() - zero_count(); }
    std::vector<int> zero_indices() const;
    std::vector<int> one_indices() const;

    bool operator==(const PatchMask& o) const = default;
};

// m x m window in patch-grid coordinates, fully inside the grid.
struct RegionSpec {
    int row = 0;
    int col = 0;
    int m = 0;

    bool operator==(const RegionSpec& o) const = default;
};

double cosine(const Vec& a, const Vec& b);

// values[i] = cosine(patches.row(i), text_embedding)
SimilarityVector patch_similarity(const Mat& patches, const Vec& text_embedding);

// threshold mode zeroes patches with similarity strictly above the threshold
// (errors when none qualifies); top_fraction zeroes exactly ceil(f*n) of the
// highest-similarity patches, ties broken by ascending patch index.
PatchMask build_removal_mask(const SimilarityVector& s, SelectionMode mode, double parameter);

struct InjectionRegion {
    RegionSpec region;
    PatchMask mask;
};

// Chooses the m x m window whose patches have the lowest summed
// max-over-texts similarity to the foreground embeddings. A manual RegionSpec
// overrides the search. grid_side is the patch grid side of `patches`.
InjectionRegion select_injection_region(const Mat& patches, int grid_side,
                                        const std::vector<Vec>& foreground_embeddings, int m,
                                        const std::optional<RegionSpec>& manual = std::nullopt);

PatchMask mask_from_region(const RegionSpec& region, int grid_side);

// Copies the image with every pixel of 0-bit patches set to 0.0.
ImageBuffer make_masked_image(const ImageBuffer& image, const PatchMask& mask, int patch_size);

// Window side in whole patches for a pixel-size request. `rounded` flags a
// request that was not an exact multiple of the patch size.
struct WindowSide {
    int m = 0;
    bool rounded = false;
};
WindowSide window_side_from_pixels(int pixels, int patch_size);

}  // namespace fgadv
