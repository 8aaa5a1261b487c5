#pragma once

#include <cstdint>
#include <functional>

#include "bundlenat/autodiff.hpp"

namespace bundlenat {

struct GradCheckOptions {
    double eps = 1e-5;           // must lie in [1e-7, 1e-4]
    int samples_per_param = 64;  // coordinates sampled per parameter (all if fewer)
    std::uint64_t seed = 0x5eed;
};

// Central-difference verification of the taped gradients. `build_loss` must
// be a deterministic forward pass (dropout off) producing a scalar; it is
// evaluated twice at the base point to detect nondeterminism. Returns the
// maximum relative error |fd - g| / max(|g|, 1e-8) over sampled coordinates.
double finite_diff_check(ParamStore& params,
                         const std::function<Var(Ctx&, ParamStore&)>& build_loss,
                         const GradCheckOptions& opts = {});

}  // namespace bundlenat
