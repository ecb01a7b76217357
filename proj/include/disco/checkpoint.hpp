#pragma once

#include <string>

#include "disco/encoders.hpp"

namespace disco {

// Model checkpoint: "DISCOCKPT1" magic, u64 LE tensor count, then per tensor
// u16 LE name length + name bytes, u32 LE rank, rank u64 LE extents, and the
// row-major values as f64 LE. Bit-exact round trip.
void save_checkpoint(const NamedParams& params, const std::string& path);

// Copies stored values into the matching parameters; names and shapes must
// agree exactly in both directions.
void load_checkpoint(const NamedParams& params, const std::string& path);

}  // namespace disco
