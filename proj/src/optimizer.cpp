#include "fgadv/optimizer.hpp"

#include <cmath>

namespace fgadv {

std::string to_string(NormMode mode) {
    return mode == NormMode::per_pixel_infinity ? "per_pixel_infinity" : "global_l2";
}

NormMode norm_mode_from_string(const std::string& s) {
    if (s == "per_pixel_infinity") return NormMode::per_pixel_infinity;
    if (s == "global_l2") return NormMode::global_l2;
    throw ConfigError("unknown norm mode: " + s);
}

AttackConfig AttackConfig::removal_defaults() {
    AttackConfig c;
    c.weights = {0.5, 2.0, 0.2};
    return c;
}

AttackConfig AttackConfig::addition_defaults() {
    AttackConfig c;
    c.weights = {0.8, 2.0, 0.3};
    return c;
}

void AttackConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    if (iterations < 0) throw ConfigError("iterations must be nonnegative");
    if (!(step_size > 0.0)) throw ConfigError("step size must be positive");
    for (double w : weights)
        if (!(w >= 0.0)) throw ConfigError("loss weights must be nonnegative");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0,1]");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw ConfigError("moment decays must lie in [0,1)");
    if (!(adam.stabilizer > 0.0)) throw ConfigError("stabilizer must be positive");
    if (region_pixels <= 0) throw ConfigError("region_pixels must be positive");
}

FeasibleBox FeasibleBox::around(const ImageBuffer& base, double epsilon) {
    FeasibleBox box;
    box.lo = ImageBuffer(base.height, base.width);
    box.hi = ImageBuffer(base.height, base.width);
    for (std::size_t i = 0; i < base.data.size(); ++i) {
        const double b = base.data[i];
        double lo = std::max(b - epsilon, 0.0);
        double hi = std::min(b + epsilon, 1.0);
        // rounding of b -/+ epsilon can land half an ulp outside the band;
        // nudge toward the base pixel until the measured residual obeys it
        while (b - lo > epsilon) lo = std::nextafter(lo, b);
        while (hi - b > epsilon) hi = std::nextafter(hi, b);
        box.lo.data[i] = lo;
        box.hi.data[i] = hi;
    }
    return box;
}

void FeasibleBox::clamp(ImageBuffer& x) const {
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        if (x.data[i] < lo.data[i]) x.data[i] = lo.data[i];
        if (x.data[i] > hi.data[i]) x.data[i] = hi.data[i];
    }
}

void project_l2_image(ImageBuffer& x, const ImageBuffer& base, double epsilon) {
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        if (x.data[i] < 0.0) x.data[i] = 0.0;
        if (x.data[i] > 1.0) x.data[i] = 1.0;
    }
    // shrink until the materialized image measures inside the ball; the box
    // clamp above never increases any |x-b|, so this terminates
    for (int pass = 0; pass < 64; ++pass) {
        const double norm = l2_diff(x, base);
        if (norm <= epsilon) break;
        const double scale = std::min(epsilon / norm, 1.0 - 0x1.0p-52);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            double d = (x.data[i] - base.data[i]) * scale;
            double v = base.data[i] + d;
            if (v < 0.0) v = 0.0;
            if (v > 1.0) v = 1.0;
            x.data[i] = v;
        }
    }
}

ImageBuffer project(const ImageBuffer& delta, double epsilon, NormMode mode,
                    const ImageBuffer& base) {
    require_same_shape(delta, base);
    ImageBuffer out = delta;
    if (mode == NormMode::per_pixel_infinity) {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double b = base.data[i];
            double lo = std::max(-epsilon, -b);
            double hi = std::min(epsilon, 1.0 - b);
            // keep base+delta inside [0,1] bit-exactly
            while (b + lo < 0.0) lo = std::nextafter(lo, 0.0);
            while (b + hi > 1.0) hi = std::nextafter(hi, 0.0);
            if (out.data[i] < lo) out.data[i] = lo;
            if (out.data[i] > hi) out.data[i] = hi;
        }
        return out;
    }
    // global L2: rescale onto the sphere when outside, then box-correct
    double norm = 0.0;
    for (double v : out.data) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > epsilon) {
        for (int pass = 0; pass < 64 && norm > epsilon; ++pass) {
            const double scale = std::min(epsilon / norm, 1.0 - 0x1.0p-52);
            norm = 0.0;
            for (double& v : out.data) {
                v *= scale;
                norm += v * v;
            }
            norm = std::sqrt(norm);
        }
    }
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double b = base.data[i];
        double lo = -b;
        double hi = 1.0 - b;
        while (b + lo < 0.0) lo = std::nextafter(lo, 0.0);
        while (b + hi > 1.0) hi = std::nextafter(hi, 0.0);
        if (out.data[i] < lo) out.data[i] = lo;
        if (out.data[i] > hi) out.data[i] = hi;
    }
    return out;
}

double compute_residual(const ImageBuffer& adv, const ImageBuffer& base, NormMode mode) {
    return mode == NormMode::per_pixel_infinity ? max_abs_diff(adv, base)
                                                : l2_diff(adv, base);
}

AttackResult optimize(const ImageLossFn& loss_fn, const ImageBuffer& base,
                      const AttackConfig& config) {
    config.validate();
    AttackResult result;
    result.adversarial = base;
    result.residual = 0.0;

    if (config.iterations == 0) return result;

    const bool inf_mode = config.norm_mode == NormMode::per_pixel_infinity;
    FeasibleBox box;
    if (inf_mode) box = FeasibleBox::around(base, config.epsilon);

    ImageBuffer x = base;
    ImageBuffer m(base.height, base.width, 0.0);
    ImageBuffer v(base.height, base.width, 0.0);
    const double b1 = config.adam.beta1, b2 = config.adam.beta2;
    double b1t = 1.0, b2t = 1.0;

    ImageBuffer best_x = base;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_iter = -1;

    for (int t = 0; t < config.iterations; ++t) {
        LossSample sample = loss_fn(x);
        if (!std::isfinite(sample.value)) {
            result.aborted = true;
            result.diagnostic = "non-finite loss at iteration " + std::to_string(t);
            break;
        }
        result.trace.push_back(sample.breakdown);
        result.iterations_run = t + 1;
        if (sample.value < best_loss) {
            best_loss = sample.value;
            best_x = x;
            best_iter = t;
        }

        b1t *= b1;
        b2t *= b2;
        const double mc = 1.0 / (1.0 - b1t);
        const double vc = 1.0 / (1.0 - b2t);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double g = sample.gradient.data[i];
            m.data[i] = b1 * m.data[i] + (1.0 - b1) * g;
            v.data[i] = b2 * v.data[i] + (1.0 - b2) * g * g;
            x.data[i] -= config.step_size * (m.data[i] * mc) /
                         (std::sqrt(v.data[i] * vc) + config.adam.stabilizer);
        }
        if (inf_mode)
            box.clamp(x);
        else
            project_l2_image(x, base, config.epsilon);
    }

    if (best_iter >= 0) {
        result.adversarial = best_x;
        result.best_loss = best_loss;
        result.best_iteration = best_iter;
        result.residual = compute_residual(best_x, base, config.norm_mode);
    }
    return result;
}

}  // namespace fgadv
