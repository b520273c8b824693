#pragma once

#include <memory>

#include "flowpat/modules.hpp"

namespace flowpat::models {

// Three conv(k=5)/relu/max-pool stages, then two fully connected layers down
// to 7 logits. Accepts [B,1,500].
std::unique_ptr<nn::Sequential> build_cnn1d(std::uint64_t seed);

// 500 -> 200 -> 100 -> 200 -> 7 with relu between layers; flattens [B,1,500]
// or takes [B,500] directly. Parameter count: 141,907.
std::unique_ptr<nn::Sequential> build_mlp(std::uint64_t seed);

}  // namespace flowpat::models
