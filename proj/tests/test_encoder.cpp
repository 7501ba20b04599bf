#include "doctest.h"

#include "fgadv/losses.hpp"
#include "fgadv/toy_encoder.hpp"
#include "helpers.hpp"

using namespace fgadv;
using namespace fgadv::testing;

namespace {

// composite probe loss touching the cls, patch, and attention paths
double probe_loss(const EncoderOutput& out, OutputGrad& grad, const Vec& t0, const Vec& w,
                  const Vec& lin) {
    double value = cosine(out.cls, t0);
    grad.d_cls += cosine_grad(out.cls, t0);

    const double a5 = out.attention(5);
    const Vec u = a5 * out.patches.row(5).transpose();
    value += -0.5 * u.dot(w) / (u.norm() * w.norm());
    const Vec gu = cosine_grad(u, w);
    grad.d_patches.row(5) += (-0.5 * a5) * gu.transpose();

    value += lin.dot(out.attention) + 0.3 * out.attention.squaredNorm();
    grad.d_attention += lin + 0.6 * out.attention;
    return value;
}

}  // namespace

TEST_CASE("toy encoder patch grid and descriptor") {
    const auto enc = make_toy_encoder(3);
    const EncoderDescriptor& d = enc->descriptor();
    CHECK(d.patch_size == 8);
    CHECK(d.input_resolution == 32);
    CHECK(d.embedding_dim == 32);
    CHECK(d.patch_count() == 16);
    CHECK(d.joint_space);

    const ImageBuffer img = random_image(32, 32, 11);
    const EncoderOutput out = enc->encode_image(img);
    CHECK(out.patches.rows() == 16);
    CHECK(out.patches.cols() == 32);
    CHECK(out.attention.size() == 16);
    CHECK(out.cls.size() == 32);
}

TEST_CASE("encode_image is deterministic and attention is nonnegative") {
    const auto enc = make_toy_encoder(5);
    const ImageBuffer img = random_image(32, 32, 17);
    const EncoderOutput a = enc->encode_image(img);
    const EncoderOutput b = enc->encode_image(img);
    CHECK(bit_equal(a, b));
    CHECK((a.attention.array() >= 0.0).all());

    const auto enc2 = make_toy_encoder(5);
    CHECK(bit_equal(a, enc2->encode_image(img)));
}

TEST_CASE("different seeds give different encoders") {
    const auto a = make_toy_encoder(1);
    const auto b = make_toy_encoder(2);
    const ImageBuffer img = random_image(32, 32, 23);
    const double c = cosine(a->encode_image(img).cls, b->encode_image(img).cls);
    CHECK(c < 1.0);
}

TEST_CASE("all-zero and all-one images embed differently") {
    const auto enc = make_toy_encoder(0);
    const ImageBuffer zeros(32, 32, 0.0);
    const ImageBuffer ones(32, 32, 1.0);
    const EncoderOutput oz = enc->encode_image(zeros);
    const EncoderOutput oo = enc->encode_image(ones);
    CHECK(cosine(oz.cls, oo.cls) < 1.0);
    // golden fixture, pinned from a reference run of seed-0
    CHECK(cosine(oz.cls, oo.cls) == doctest::Approx(GOLDEN_ZERO_ONE_COSINE).epsilon(1e-9));
}

TEST_CASE("encode rejects bad inputs") {
    const auto enc = make_toy_encoder(1);
    CHECK_THROWS_AS(enc->encode_image(ImageBuffer(30, 30, 0.5)), DimensionError);
    CHECK_THROWS_AS(enc->encode_image(ImageBuffer(32, 24, 0.5)), DimensionError);
    ImageBuffer bad(32, 32, 0.5);
    bad.at(0, 0, 0) = 1.5;
    CHECK_THROWS(enc->encode_image(bad));
}

TEST_CASE("text encoding is deterministic with unit self-similarity") {
    const auto enc = make_toy_encoder(4);
    const Vec a = enc->encode_text({"cat"});
    const Vec b = enc->encode_text({"cat"});
    CHECK((a.array() == b.array()).all());
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK_THROWS_AS(enc->encode_text({"   "}), EmptyTextError);

    // distinct vocabulary words, golden fixture from the seed-4 table
    const double c = cosine(enc->encode_text({"cat"}), enc->encode_text({"car"}));
    CHECK(c < 1.0);
    CHECK(c == doctest::Approx(GOLDEN_CAT_CAR_COSINE).epsilon(1e-9));

    // out-of-vocabulary words hash to buckets deterministically
    const Vec oov1 = enc->encode_text({"zeppelin"});
    const Vec oov2 = enc->encode_text({"zeppelin"});
    CHECK((oov1.array() == oov2.array()).all());
}

TEST_CASE("constant loss gives an exactly zero gradient of the right shape") {
    const auto enc = make_toy_encoder(6);
    const ImageBuffer img = random_image(32, 32, 31);
    const ImageBuffer g = enc->input_gradient(
        img, [](const EncoderOutput&, OutputGrad&) { return 42.0; });
    CHECK(g.height == img.height);
    CHECK(g.width == img.width);
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("analytic input gradients match central finite differences") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const auto enc = make_toy_encoder(seed);
        // keep a margin so probe steps stay inside [0,1]
        const ImageBuffer img = random_image(32, 32, 100 + seed, 0.1, 0.9);
        Rng probe_rng(900 + seed);
        Vec t0(32), w(32), lin(16);
        for (int i = 0; i < 32; ++i) t0(i) = probe_rng.normal();
        for (int i = 0; i < 32; ++i) w(i) = probe_rng.normal();
        for (int i = 0; i < 16; ++i) lin(i) = probe_rng.normal();

        const LossEvaluator loss = [&](const EncoderOutput& out, OutputGrad& grad) {
            return probe_loss(out, grad, t0, w, lin);
        };
        const GradientEval eval = enc->evaluate_with_gradient(img, loss);

        const auto value_at = [&](const ImageBuffer& im) {
            OutputGrad scratch = OutputGrad::zeros(16, 32);
            return loss(enc->encode_image(im), scratch);
        };
        Rng pick(7000 + seed);
        for (int k = 0; k < 50; ++k) {
            const std::size_t idx = pick.below(img.data.size());
            const double fd = central_difference(value_at, img, idx, 1e-4);
            const double an = eval.gradient.data[idx];
            CHECK(relative_error(fd, an) <= 1e-3);
        }
    }
}

TEST_CASE("variable resolution encodes with the right patch count") {
    const auto enc = make_toy_encoder(8);
    const ImageBuffer small = random_image(16, 16, 41);
    const EncoderOutput out = enc->encode_image(small);
    CHECK(out.patches.rows() == 4);
    CHECK(out.attention.size() == 4);
}

TEST_CASE("registry builds seeded toy encoders") {
    EncoderRegistry& reg = EncoderRegistry::global();
    CHECK(reg.has("toy"));
    const EncoderPtr a = reg.make("toy:9");
    CHECK(a->descriptor().identifier == "toy:9");
    const ImageBuffer img = random_image(32, 32, 51);
    CHECK(bit_equal(a->encode_image(img), make_toy_encoder(9)->encode_image(img)));
    CHECK_THROWS_AS(reg.make("unknown"), ConfigError);
    CHECK_THROWS_AS(reg.make("toy:banana"), ConfigError);
}
