#pragma once

// Random points in R^d drawn from a caller-supplied generator.

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "steinclt/core/random.hpp"
#include "steinclt/tensor.hpp"

namespace steinclt {

/// A law on R^d given by a draw routine. `draw` must only touch its arguments so that
/// one sampler can be shared by all workers.
struct PointSampler {
    using Draw = std::function<void(Rng&, std::span<double>)>;

    std::string name;
    int dim = 0;
    Draw draw;

    PointSampler(std::string n, int d, Draw fn) : name(std::move(n)), dim(d), draw(std::move(fn)) {
        if (dim < 1) throw std::invalid_argument("PointSampler: dim must be >= 1");
        if (!draw) throw std::invalid_argument("PointSampler: draw required");
    }

    void operator()(Rng& rng, std::span<double> out) const { draw(rng, out); }
};

inline PointSampler standard_normal_sampler(int d) {
    return PointSampler("normal", d, [](Rng& rng, std::span<double> out) { fill_normal(rng, out); });
}

/// The law of X + shift for X drawn from `base`.
inline PointSampler shifted(PointSampler base, Vector shift) {
    if (static_cast<int>(shift.size()) != base.dim) throw std::invalid_argument("shifted: dimension mismatch");
    const int d = base.dim;
    auto b = std::make_shared<PointSampler>(std::move(base));
    return PointSampler(b->name + "_shifted", d, [b, shift = std::move(shift)](Rng& rng, std::span<double> out) {
        (*b)(rng, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += shift[i];
    });
}

}  // namespace steinclt
