#pragma once

namespace slhjb {

// Scheme presets: LISL pairs multilinear interpolation with k = sqrt(dx),
// MCSL pairs monotone cubic interpolation with k = dx.
enum class Scheme { LISL, MCSL };

}  // namespace slhjb
