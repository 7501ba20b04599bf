#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fgadv/losses.hpp"

namespace fgadv {

enum class NormMode { per_pixel_infinity, global_l2 };

std::string to_string(NormMode mode);
NormMode norm_mode_from_string(const std::string& s);

struct SelectionSpec {
    SelectionMode mode = SelectionMode::top_fraction;
    double parameter = 0.2;
};

// Moment decays and stabilizer of the adaptive-moment update. The update rule
// only fixes the step size; these are the standard values, logged with runs.
struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double stabilizer = 1e-8;
};

struct AttackConfig {
    double epsilon = 8.0 / 255.0;
    NormMode norm_mode = NormMode::per_pixel_infinity;
    int iterations = 500;
    double step_size = 0.005;
    std::array<double, 3> weights{0.5, 2.0, 0.2};  // w1*l_cls + w2*l_p + w3*l_fix
    double alpha = 0.5;
    double beta = 0.4;
    SelectionSpec selection;
    std::uint64_t seed = 0;
    // Use fixed attention values as row weights inside the masked means
    // instead of the plain average (the literal product form is the default).
    bool attention_weighted_mean = false;
    AdamParams adam;
    // Manual injection window; when absent the window is searched
    // automatically with side floor(region_pixels / patch_size).
    std::optional<RegionSpec> region;
    int region_pixels = 100;
    std::vector<std::string> foreground_objects;

    static AttackConfig removal_defaults();
    static AttackConfig addition_defaults();
    void validate() const;
};

struct AttackResult {
    ImageBuffer adversarial;
    PatchMask mask;
    std::vector<LossBreakdown> trace;  // one entry per evaluated iterate
    double residual = 0.0;             // max |adv - base|, or the L2 norm in that mode
    int iterations_run = 0;
    bool aborted = false;      // non-finite loss stopped the run early
    std::string diagnostic;
    double best_loss = std::numeric_limits<double>::quiet_NaN();
    int best_iteration = -1;
    // attack-level summaries used by reports and sweeps
    double target_cosine_initial = std::numeric_limits<double>::quiet_NaN();
    double target_cosine_final = std::numeric_limits<double>::quiet_NaN();
    double kept_cosine_final = std::numeric_limits<double>::quiet_NaN();
};

struct LossSample {
    double value = 0.0;
    LossBreakdown breakdown;
    ImageBuffer gradient;
};

using ImageLossFn = std::function<LossSample(const ImageBuffer&)>;

// Per-pixel feasible interval for the adversarial image: intersection of the
// epsilon band around the base pixel with [0,1], with bounds nudged so that
// both the box and the measured residual hold exactly in double arithmetic.
struct FeasibleBox {
    ImageBuffer lo, hi;
    static FeasibleBox around(const ImageBuffer& base, double epsilon);
    void clamp(ImageBuffer& x) const;
};

// Projects a perturbation: per-pixel clamp to [-eps, eps] (infinity mode) or
// norm rescale (L2 mode), then correction so base+delta stays inside [0,1].
// Idempotent: project(project(d)) == project(d) bit-exactly.
ImageBuffer project(const ImageBuffer& delta, double epsilon, NormMode mode,
                    const ImageBuffer& base);

// Enforces the L2 ball and the [0,1] box directly on an adversarial image.
void project_l2_image(ImageBuffer& x, const ImageBuffer& base, double epsilon);

// Adaptive-moment descent on the image with projection after every step.
// Records one breakdown per evaluated iterate and returns the best-loss
// iterate, never the merely-last one. A non-finite loss aborts with the last
// valid iterate and a diagnostic message.
AttackResult optimize(const ImageLossFn& loss_fn, const ImageBuffer& base,
                      const AttackConfig& config);

double compute_residual(const ImageBuffer& adv, const ImageBuffer& base, NormMode mode);

}  // namespace fgadv
