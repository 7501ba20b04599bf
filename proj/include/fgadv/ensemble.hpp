#pragma once

#include "fgadv/attack.hpp"
#include "fgadv/mode.hpp"

namespace fgadv {

// Black-box transfer setup: losses averaged over surrogate encoders, each
// step optionally evaluated on frequency-augmented copies of the iterate.
struct EnsembleSpec {
    std::vector<std::string> encoder_ids;  // registry identifiers, at least one
    int augmentations_per_step = 0;        // 0 evaluates the clean copy only
    double spectrum_sigma = 0.0;           // pixel-noise scale
    double spectrum_rho = 0.0;             // coefficient-mask half-width, in [0,1]
    int iterations = 30;
    double epsilon = 16.0 / 255.0;
    // optional sharpness-style inner step on each member gradient, off by default
    double inner_ascent_radius = 0.0;

    void validate() const;
};

// Frequency-domain augmentation: orthonormal cosine transform per channel,
// coefficients scaled by an element-wise mask drawn from [1-rho, 1+rho],
// pixel-space gaussian noise of scale sigma, inverse transform, clamp.
ImageBuffer spectrum_augment(const ImageBuffer& image, double sigma, double rho,
                             std::uint64_t seed);

using MemberLossFn = std::function<LossSample(std::size_t member, const ImageBuffer& x)>;

// Arithmetic mean of member losses over the augmented copies (the clean copy
// when augmentations_per_step is 0); the gradient is pulled back through each
// augmentation and averaged the same way, summed in a fixed order.
LossSample ensemble_loss(const ImageBuffer& image, const EnsembleSpec& spec,
                         std::size_t member_count, const MemberLossFn& member_loss,
                         std::uint64_t round_seed);

struct TransferInputs {
    ImageBuffer image;
    AttackMode kind = AttackMode::removal;
    TextQuery target;
    // source for the injected reference; required in addition mode
    std::optional<ImageBuffer> reference_source;
};

// Runs the removal or addition objective across the surrogate ensemble with
// the spec's iteration and budget defaults. Per-member masks and targets are
// frozen at setup; the reported mask and summaries come from the first
// member.
AttackResult run_transfer_attack(const TransferInputs& inputs, const EnsembleSpec& spec,
                                 AttackConfig config, const EncoderRegistry& registry);

}  // namespace fgadv
