#include "bundlenat/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bundlenat/errors.hpp"
#include "bundlenat/rng.hpp"

namespace bundlenat {

namespace {

double eval_value(ParamStore& params, const std::function<Var(Ctx&, ParamStore&)>& build_loss) {
    Ctx ctx;  // no tape, inference mode
    Var loss = build_loss(ctx, params);
    return loss->value.item();
}

}  // namespace

double finite_diff_check(ParamStore& params,
                         const std::function<Var(Ctx&, ParamStore&)>& build_loss,
                         const GradCheckOptions& opts) {
    if (opts.eps < 1e-7 || opts.eps > 1e-4)
        throw ContractError("finite_diff_check: eps must be in [1e-7, 1e-4]");

    const double base1 = eval_value(params, build_loss);
    const double base2 = eval_value(params, build_loss);
    if (!(base1 == base2))
        throw ContractError("finite_diff_check: forward pass is not deterministic");

    Tape tape;
    Ctx taped{&tape, /*training=*/false, /*rng=*/nullptr};
    Var loss = build_loss(taped, params);
    tape.backward(loss, params);

    Rng rng(opts.seed);
    double max_rel = 0.0;
    for (const std::string& name : params.names()) {
        ParamEntry& e = params.entry(name);
        const std::size_t n = e.value.size();

        std::vector<std::size_t> coords;
        if (n <= static_cast<std::size_t>(opts.samples_per_param)) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            Rng prng = rng.split(name);
            std::set<std::size_t> picked;
            while (picked.size() < static_cast<std::size_t>(opts.samples_per_param))
                picked.insert(static_cast<std::size_t>(prng.next_below(n)));
            coords.assign(picked.begin(), picked.end());
        }

        for (std::size_t idx : coords) {
            const double saved = e.value.data()[idx];
            e.value.data()[idx] = saved + opts.eps;
            const double f_plus = eval_value(params, build_loss);
            e.value.data()[idx] = saved - opts.eps;
            const double f_minus = eval_value(params, build_loss);
            e.value.data()[idx] = saved;

            const double fd = (f_plus - f_minus) / (2.0 * opts.eps);
            const double g = e.grad.data()[idx];
            const double rel = std::fabs(fd - g) / std::max(std::fabs(g), 1e-8);
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace bundlenat
