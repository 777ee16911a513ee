#pragma once

#include "fodkit/gradients.hpp"
#include "fodkit/sh.hpp"

#include <vector>

namespace fodkit {

// Antipodally symmetric angular distance, radians.
double angular_distance(const Vec3& u, const Vec3& v);

// Classic Kennard-Stone max-min selection over the hemisphere metric:
// seed with the globally farthest pair, then repeatedly add the candidate
// maximizing the minimum distance to the selected set. Ties break to the
// lowest index. Returns indices in selection order.
std::vector<int> kennard_stone(const std::vector<Vec3>& shell_dirs, int k);

// All b0 rows plus k Kennard-Stone picks from the shell nearest target_shell_b,
// original row order preserved.
GradientTable subsample_acquisition(const GradientTable& table, double target_shell_b, int k);

} // namespace fodkit
