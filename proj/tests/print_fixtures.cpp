#include <cstdio>
#include "fgadv/toy_encoder.hpp"
#include "fgadv/attack.hpp"

using namespace fgadv;

int main() {
    auto enc0 = make_toy_encoder(0);
    std::printf("zero_one = %.17g\n", cosine(enc0->encode_image(ImageBuffer(32,32,0.0)).cls,
                                             enc0->encode_image(ImageBuffer(32,32,1.0)).cls));
    auto enc4 = make_toy_encoder(4);
    std::printf("cat_car = %.17g\n", cosine(enc4->encode_text({"cat"}), enc4->encode_text({"car"})));
    auto enc2 = make_toy_encoder(2);
    const ToyEncoder* toy2 = dynamic_cast<const ToyEncoder*>(enc2.get());
    ReferenceImage ref = prepare_reference(toy2->pattern_image("dog", 32), 2, *enc2);
    std::printf("ref_cls0 = %.17g\nref_cls_norm = %.17g\n", ref.outputs.cls(0), ref.outputs.cls.norm());
    // sentence-level SS fixture on seed-4 text encoder (disjoint vocabulary)
    Vec a = enc4->encode_text({"a dog on the road"});
    Vec b = enc4->encode_text({"a cup near a lamp"});
    std::printf("ss_disjoint = %.17g\n", cosine(a, b));
    return 0;
}
