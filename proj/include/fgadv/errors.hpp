#pragma once

#include <stdexcept>
#include <string>

namespace fgadv {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or resolution disagreement between an image and an encoder.
struct DimensionError : Error { using Error::Error; };
// A cosine was requested against a zero-norm vector.
struct ZeroVectorError : Error { using Error::Error; };
// A mask rule selected no patches (or left none preserved).
struct EmptySelectionError : Error { using Error::Error; };
// A window or reference does not fit the patch grid.
struct GeometryError : Error { using Error::Error; };
// Element counts disagree (e.g. reference patches vs mask zeros).
struct CountMismatchError : Error { using Error::Error; };
// Invalid configuration value.
struct ConfigError : Error { using Error::Error; };
// The plugged encoder cannot provide input gradients.
struct NonDifferentiableEncoderError : Error { using Error::Error; };
// A text query or judged text is empty after trimming.
struct EmptyTextError : Error { using Error::Error; };
// Object-judge failures (remote transport, parse, empty input).
struct JudgeError : Error { using Error::Error; };
// File decode/encode failures.
struct IoError : Error { using Error::Error; };

}  // namespace fgadv
