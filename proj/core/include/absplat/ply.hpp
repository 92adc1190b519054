#pragma once

#include "absplat/cloud.hpp"

#include <string>

namespace absplat {

// Binary little-endian PLY in the splat-viewer attribute layout:
// x y z nx ny nz f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3, all
// float32. f_rest is channel-major; degree L carries 3(L+1)^2 - 3 rest
// coefficients (62 attributes total at degree 3).
void save_ply(const GaussianCloud& cloud, const std::string& path);

// Round-trip restores every parameter bit-exactly at float32 precision.
// Throws on malformed headers, truncated payloads, or a rest-coefficient
// count that matches no degree in 0..3. The ledger starts zeroed.
GaussianCloud load_ply(const std::string& path);

}  // namespace absplat
