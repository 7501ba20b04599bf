#pragma once

#include <cstdint>

#include "fgadv/encoder.hpp"
#include "fgadv/rng.hpp"

namespace fgadv::testing {

inline ImageBuffer random_image(int h, int w, std::uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
    Rng rng(seed);
    ImageBuffer img(h, w);
    for (double& v : img.data) v = rng.uniform(lo, hi);
    return img;
}

// central finite difference of a scalar image functional at one pixel entry
template <typename Fn>
double central_difference(const Fn& f, const ImageBuffer& image, std::size_t index,
                          double step) {
    ImageBuffer plus = image;
    ImageBuffer minus = image;
    plus.data[index] += step;
    minus.data[index] -= step;
    return (f(plus) - f(minus)) / (2.0 * step);
}

inline double relative_error(double a, double b, double floor = 1e-6) {
    const double scale = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / scale;
}

}  // namespace fgadv::testing
