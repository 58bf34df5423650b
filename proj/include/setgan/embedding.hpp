#pragma once

#include <optional>
#include <vector>

#include "setgan/core/image.hpp"

namespace setgan {

/// Maps an image to an identity vector; distances below threshold() mean
/// "same identity". Images arrive in the generator's signed range [-1, 1].
/// Implementations must be deterministic. embed returns nullopt when no
/// readable subject is found (the sample is dropped and counted by callers).
class EmbeddingAdapter {
public:
    virtual ~EmbeddingAdapter() = default;
    virtual std::optional<std::vector<double>> embed(const GrayImage& image_signed) const = 0;
    virtual double threshold() const = 0;
};

}  // namespace setgan
