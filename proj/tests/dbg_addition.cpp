#include <cstdio>
#include "fgadv/toy_encoder.hpp"
#include "fgadv/attack.hpp"

using namespace fgadv;

int main() {
    const char* words[] = {"dog", "car", "tree", "person", "cup"};
    for (int run = 0; run < 20; ++run) {
        auto enc = make_toy_encoder(run % 5);
        const ToyEncoder* toy = dynamic_cast<const ToyEncoder*>(enc.get());
        const char* inj = words[(run + 2) % 5];
        ImageBuffer img2 = toy->pattern_image(words[(run + 1) % 5], 32);
        ReferenceImage ref = prepare_reference(toy->pattern_image(inj, 32), 2, *enc);
        Vec t = enc->encode_text({inj});
        EncoderOutput clean = enc->encode_image(img2);
        AttackConfig ac = AttackConfig::addition_defaults();
        ac.iterations = 500;
        ac.region = RegionSpec{1, 1, 2};
        AttackResult ar = run_addition_attack(img2, ref, {inj}, ac, *enc);
        Vec fused = fuse_cls_target(clean.cls, ref.outputs.cls, 0.5);
        std::printf("run %2d enc%llu inj=%-6s  init %.4f final %.4f  refT %.4f cleanT %.4f fusedT %.4f  %s\n",
                    run, (unsigned long long)(run % 5), inj,
                    ar.target_cosine_initial, ar.target_cosine_final,
                    cosine(ref.outputs.cls, t), cosine(clean.cls, t), cosine(fused, t),
                    ar.target_cosine_final > ar.target_cosine_initial ? "ok" : "FAIL");
    }
    return 0;
}
