#include "fgadv/ensemble.hpp"

#include <cmath>
#include <map>

#include "fgadv/rng.hpp"

namespace fgadv {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// orthonormal DCT-II basis, cached per size
const Mat& dct_basis(int n) {
    static std::map<int, Mat> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Mat d(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int i = 0; i < n; ++i)
            d(k, i) = s * std::cos(kPi * (i + 0.5) * k / n);
    }
    return cache.emplace(n, std::move(d)).first->second;
}

struct SpectrumTransform {
    std::vector<double> coeff_mask;  // per (channel, ky, kx)
    std::vector<double> noise;       // per pixel entry
    int h = 0, w = 0;

    static SpectrumTransform make(int h, int w, double sigma, double rho,
                                  std::uint64_t seed) {
        SpectrumTransform t;
        t.h = h;
        t.w = w;
        Rng rng(seed);
        const std::size_t n = std::size_t(h) * w * 3;
        t.coeff_mask.resize(n);
        for (double& m : t.coeff_mask) m = rng.uniform(1.0 - rho, 1.0 + rho);
        t.noise.resize(n);
        for (double& v : t.noise) v = sigma * rng.normal();
        return t;
    }

    // y = idct(mask .* dct(x)); the operator is self-adjoint, so the same
    // filter implements the gradient pullback
    ImageBuffer filter(const ImageBuffer& x) const {
        const Mat& dh = dct_basis(h);
        const Mat& dw = dct_basis(w);
        ImageBuffer out(h, w);
        Mat chan(h, w);
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) chan(y, xx) = x.at(y, xx, c);
            Mat spec = dh * chan * dw.transpose();
            for (int ky = 0; ky < h; ++ky)
                for (int kx = 0; kx < w; ++kx)
                    spec(ky, kx) *= coeff_mask[(std::size_t(ky) * w + kx) * 3 + c];
            Mat back = dh.transpose() * spec * dw;
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) out.at(y, xx, c) = back(y, xx);
        }
        return out;
    }

    // forward: filter, add noise, clamp; `gate` marks entries the clamp left alive
    ImageBuffer apply(const ImageBuffer& x, std::vector<std::uint8_t>& gate) const {
        ImageBuffer y = filter(x);
        gate.assign(y.data.size(), 1);
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            double v = y.data[i] + noise[i];
            if (v < 0.0) {
                v = 0.0;
                gate[i] = 0;
            } else if (v > 1.0) {
                v = 1.0;
                gate[i] = 0;
            }
            y.data[i] = v;
        }
        return y;
    }

    ImageBuffer pullback(const ImageBuffer& g, const std::vector<std::uint8_t>& gate) const {
        ImageBuffer gated = g;
        for (std::size_t i = 0; i < gated.data.size(); ++i)
            if (!gate[i]) gated.data[i] = 0.0;
        return filter(gated);
    }
};

void accumulate(LossSample& acc, const LossSample& s) {
    acc.value += s.value;
    acc.breakdown.l_cls += s.breakdown.l_cls;
    acc.breakdown.l_p += s.breakdown.l_p;
    acc.breakdown.l_fix += s.breakdown.l_fix;
    acc.breakdown.total += s.breakdown.total;
    for (std::size_t i = 0; i < acc.gradient.data.size(); ++i)
        acc.gradient.data[i] += s.gradient.data[i];
}

void scale_sample(LossSample& acc, double inv) {
    acc.value *= inv;
    acc.breakdown.l_cls *= inv;
    acc.breakdown.l_p *= inv;
    acc.breakdown.l_fix *= inv;
    acc.breakdown.total *= inv;
    for (double& g : acc.gradient.data) g *= inv;
}

LossSample member_eval_with_ascent(const MemberLossFn& member_loss, std::size_t member,
                                   const ImageBuffer& x, double radius) {
    LossSample s = member_loss(member, x);
    if (radius <= 0.0) return s;
    double norm = 0.0;
    for (double g : s.gradient.data) norm += g * g;
    norm = std::sqrt(norm);
    if (norm == 0.0) return s;
    // sharpness-style probe: re-evaluate at a short step up the gradient
    ImageBuffer probe = x;
    for (std::size_t i = 0; i < probe.data.size(); ++i) {
        double v = probe.data[i] + radius * s.gradient.data[i] / norm;
        probe.data[i] = std::clamp(v, 0.0, 1.0);
    }
    return member_loss(member, probe);
}

}  // namespace

void EnsembleSpec::validate() const {
    if (encoder_ids.empty()) throw ConfigError("ensemble needs at least one encoder");
    if (augmentations_per_step < 0)
        throw ConfigError("augmentations_per_step must be nonnegative");
    if (!(spectrum_sigma >= 0.0)) throw ConfigError("spectrum_sigma must be nonnegative");
    if (!(spectrum_rho >= 0.0 && spectrum_rho <= 1.0))
        throw ConfigError("spectrum_rho must lie in [0,1]");
    if (iterations < 0) throw ConfigError("iterations must be nonnegative");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    if (!(inner_ascent_radius >= 0.0))
        throw ConfigError("inner_ascent_radius must be nonnegative");
}

ImageBuffer spectrum_augment(const ImageBuffer& image, double sigma, double rho,
                             std::uint64_t seed) {
    const SpectrumTransform t =
        SpectrumTransform::make(image.height, image.width, sigma, rho, seed);
    std::vector<std::uint8_t> gate;
    return t.apply(image, gate);
}

LossSample ensemble_loss(const ImageBuffer& image, const EnsembleSpec& spec,
                         std::size_t member_count, const MemberLossFn& member_loss,
                         std::uint64_t round_seed) {
    if (member_count == 0) throw ConfigError("ensemble needs at least one member");
    const int copies = spec.augmentations_per_step;

    LossSample acc;
    acc.gradient = ImageBuffer(image.height, image.width, 0.0);
    std::size_t evaluations = 0;

    if (copies == 0) {
        for (std::size_t m = 0; m < member_count; ++m) {
            accumulate(acc, member_eval_with_ascent(member_loss, m, image,
                                                    spec.inner_ascent_radius));
            ++evaluations;
        }
    } else {
        for (int j = 0; j < copies; ++j) {
            const SpectrumTransform t =
                SpectrumTransform::make(image.height, image.width, spec.spectrum_sigma,
                                        spec.spectrum_rho, mix_seed(round_seed, j));
            std::vector<std::uint8_t> gate;
            const ImageBuffer copy = t.apply(image, gate);
            for (std::size_t m = 0; m < member_count; ++m) {
                LossSample s = member_eval_with_ascent(member_loss, m, copy,
                                                       spec.inner_ascent_radius);
                s.gradient = t.pullback(s.gradient, gate);
                accumulate(acc, s);
                ++evaluations;
            }
        }
    }
    scale_sample(acc, 1.0 / double(evaluations));
    return acc;
}

AttackResult run_transfer_attack(const TransferInputs& inputs, const EnsembleSpec& spec,
                                 AttackConfig config, const EncoderRegistry& registry) {
    spec.validate();
    config.iterations = spec.iterations;
    config.epsilon = spec.epsilon;
    config.validate();

    std::vector<EncoderPtr> encoders;
    encoders.reserve(spec.encoder_ids.size());
    for (const std::string& id : spec.encoder_ids) encoders.push_back(registry.make(id));

    std::vector<AttackProblem> problems;
    problems.reserve(encoders.size());
    for (const EncoderPtr& enc : encoders) {
        if (inputs.kind == AttackMode::removal) {
            problems.push_back(
                AttackProblem::removal(inputs.image, inputs.target, config, *enc));
        } else {
            if (!inputs.reference_source)
                throw ConfigError("addition transfer needs a reference image");
            const int m = config.region
                              ? config.region->m
                              : window_side_from_pixels(config.region_pixels,
                                                        enc->descriptor().patch_size)
                                    .m;
            const ReferenceImage ref = prepare_reference(*inputs.reference_source, m, *enc);
            problems.push_back(
                AttackProblem::addition(inputs.image, ref, inputs.target, config, *enc));
        }
    }

    int round = 0;
    const MemberLossFn member_loss = [&](std::size_t m, const ImageBuffer& x) {
        return problems[m].evaluate(x);
    };
    AttackResult result = optimize(
        [&](const ImageBuffer& x) {
            const std::uint64_t round_seed = mix_seed(config.seed, 0x7f00 + round);
            ++round;
            return ensemble_loss(x, spec, problems.size(), member_loss, round_seed);
        },
        inputs.image, config);

    result.mask = problems[0].mask();
    result.target_cosine_initial = cosine(problems[0].clean().cls, problems[0].target_text());
    const EncoderOutput out_adv = problems[0].encoder().encode_image(result.adversarial);
    result.target_cosine_final = cosine(out_adv.cls, problems[0].target_text());
    result.kept_cosine_final = kept_patch_cosine(out_adv, problems[0].clean(), problems[0].mask());
    return result;
}

}  // namespace fgadv
