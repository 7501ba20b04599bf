#pragma once

#include <cstddef>
#include <vector>

#include "fgadv/errors.hpp"

namespace fgadv {

// H x W x 3 interleaved doubles. Pixel images live in [0,1]; gradients and
// perturbation deltas reuse the container without the range guarantee.
struct ImageBuffer {
    int height = 0;
    int width = 0;
    static constexpr int channels = 3;
    std::vector<double> data;

    ImageBuffer() = default;
    ImageBuffer(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w * channels, fill) {}

    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const ImageBuffer& o) const {
        return height == o.height && width == o.width;
    }

    bool in_unit_range() const {
        for (double v : data)
            if (!(v >= 0.0 && v <= 1.0)) return false;
        return true;
    }

    bool operator==(const ImageBuffer& o) const = default;
};

inline void require_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw DimensionError("image shapes differ");
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b);
double l2_diff(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace fgadv
