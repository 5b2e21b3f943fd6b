#pragma once

// Size-bias and zero-bias constructions: exact one-dimensional transforms, the
// mixture representation of the measure mu-breve for independent sums, and the
// comparison measures nu_{i,x}, each with a verifier of its defining identity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinclt/core/random.hpp"
#include "steinclt/sampler.hpp"
#include "steinclt/summand.hpp"
#include "steinclt/tensor.hpp"
#include "steinclt/test_function.hpp"

namespace steinclt {

/// A pair of numbers that an identity says are equal.
struct IdentitySides {
    double lhs = 0.0;
    double rhs = 0.0;

    [[nodiscard]] double gap() const { return std::abs(lhs - rhs); }
};

/// The size-biased law of a nonnegative discrete W: atoms reweighted by w / E W.
inline Law1D size_bias(const Law1D& w_law) {
    if (!w_law.is_discrete()) throw std::invalid_argument("size_bias: discrete law required");
    if (w_law.values().front() < 0.0) throw std::invalid_argument("size_bias: W must be nonnegative");
    const double mean = w_law.mean();
    if (!(mean > 0.0)) throw std::invalid_argument("size_bias: E W must be > 0");
    std::vector<double> probs;
    for (std::size_t k = 0; k < w_law.values().size(); ++k) probs.push_back(w_law.probs()[k] * w_law.values()[k] / mean);
    double total = 0.0;
    for (double p : probs) total += p;
    for (double& p : probs) p /= total;
    return Law1D::discrete(w_law.name() + "_size_biased", w_law.values(), probs);
}

/// lhs = E[f(W) W] by enumeration, rhs = E W * E f(V0) with V0 the size-biased law.
inline IdentitySides verify_size_bias_identity(const Law1D& w_law, const TestFunction& f) {
    if (f.dim() != 1) throw std::invalid_argument("verify_size_bias_identity: f must be one-dimensional");
    const Law1D v0 = size_bias(w_law);
    auto fx = [&](double x) { return f(std::span<const double>(&x, 1)); };
    return {w_law.expect([&](double w) { return fx(w) * w; }), w_law.mean() * v0.expect(fx)};
}

/// The zero-bias law of a mean-zero W, with density E[W 1(W > w)] / Var W. Discrete
/// laws give a piecewise-uniform density between consecutive atoms; laws with a
/// density need a registered construction.
inline Law1D zero_bias_1d(const Law1D& law) {
    const double mean = law.mean();
    const double var = law.variance();
    if (std::abs(mean) > 1e-10 * (1.0 + std::sqrt(var)))
        throw std::invalid_argument("zero_bias_1d: law '" + law.name() + "' has nonzero mean");
    if (!(var > 0.0)) throw std::invalid_argument("zero_bias_1d: law '" + law.name() + "' has zero variance");
    if (!law.is_discrete()) {
        if (!law.zero_bias_hook()) throw std::invalid_argument("zero_bias_1d: no construction for '" + law.name() + "'");
        return law.zero_bias_hook()();
    }
    const auto& x = law.values();
    const auto& p = law.probs();
    // tail[k] = E[W 1(W > w)] for w in (x_k, x_{k+1})
    std::vector<double> height(x.size() - 1), mass(x.size() - 1);
    double tail = 0.0;
    for (std::size_t k = x.size() - 1; k-- > 0;) {
        tail += p[k + 1] * x[k + 1];
        height[k] = std::max(tail, 0.0) / var;
        mass[k] = height[k] * (x[k + 1] - x[k]);
    }
    std::vector<double> cumulative;
    double c = 0.0;
    for (double m : mass) cumulative.push_back(c += m);
    for (double& v : cumulative) v /= c;
    auto density = [x, height](double w) {
        const auto it = std::upper_bound(x.begin(), x.end(), w);
        if (it == x.begin() || it == x.end()) return 0.0;
        return height[static_cast<std::size_t>(it - x.begin()) - 1];
    };
    auto draw = [x, cumulative](Rng& rng) {
        const double u = uniform01(rng);
        auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        k = std::min(k, cumulative.size() - 1);
        return x[k] + (x[k + 1] - x[k]) * uniform01(rng);
    };
    std::vector<double> interior(x.begin() + 1, x.end() - 1);
    return Law1D::continuous(law.name() + "_zero_bias", density, x.front(), x.back(), interior, draw);
}

/// E[f(W) W] against Var(W) E f'(V), both by exact summation or quadrature.
inline IdentitySides zero_bias_identity_exact(const Law1D& law, const TestFunction& f) {
    if (f.dim() != 1) throw std::invalid_argument("zero_bias_identity_exact: f must be one-dimensional");
    const Law1D v = zero_bias_1d(law);
    auto fx = [&](double x) { return f(std::span<const double>(&x, 1)); };
    auto dfx = [&](double x) { return f.derivative(1, std::span<const double>(&x, 1))({0}); };
    return {law.expect([&](double w) { return fx(w) * w; }), law.variance() * v.expect(dfx)};
}

/// Monte Carlo of f(W) W - Var(W) f'(V) with W and V drawn independently.
inline Estimate zero_bias_identity_mc(const Law1D& law, const TestFunction& f, std::size_t mc_n, std::uint64_t seed) {
    if (f.dim() != 1) throw std::invalid_argument("zero_bias_identity_mc: f must be one-dimensional");
    const Law1D v = zero_bias_1d(law);
    const double var = law.variance();
    return monte_carlo_scalar(mc_n, seed, [&] {
        return [&](Rng& rng) {
            double w = law.sample(rng);
            double z = v.sample(rng);
            return f(std::span<const double>(&w, 1)) * w - var * f.derivative(1, std::span<const double>(&z, 1))({0});
        };
    });
}

/// Mixture representation of mu-breve for W = sum_i X_i: component i has mass
/// lambda_i = E|X_i|^2, and within it x follows the |x|^2-weighted law of X_i and
/// t ~ Uniform[0, 1]. Integrals against mu-breve become Lambda E[(x x^T / |x|^2) h(i, t x)]
/// with Lambda = sum_i lambda_i.
class MuBreveMixture {
public:
    struct Component {
        std::size_t i = 0;
        double t = 0.0;
        Vector x;
    };

    /// Pilot draws used to set the rejection cap for summands without an exact
    /// |x|^2-weighted sampler.
    static constexpr std::size_t kPilotDraws = 100'000;

    explicit MuBreveMixture(const SumModel& model, std::uint64_t pilot_seed = 0x9e37) : model_(&model) {
        double c = 0.0;
        for (std::size_t i = 0; i < model.size(); ++i) {
            const auto& s = model[i];
            const double lam = s.norm ? s.m2().mean : pilot_m2(s, pilot_seed);
            lambda_.push_back(lam);
            cumulative_.push_back(c += lam);
            caps_.push_back(s.size_biased ? 0.0 : rejection_cap(s, pilot_seed));
        }
        total_ = c;
    }

    [[nodiscard]] const SumModel& model() const { return *model_; }
    [[nodiscard]] double lambda(std::size_t i) const { return lambda_.at(i); }
    [[nodiscard]] double total_mass() const { return total_; }

    /// Per-worker sampling state; rejection caps ratchet up when exceeded.
    class Sampler {
    public:
        explicit Sampler(const MuBreveMixture& mix)
            : mix_(&mix), caps_(mix.caps_), scratch_(static_cast<std::size_t>(mix.model().dim())) {}

        void draw(Rng& rng, Component& out) {
            const auto& m = *mix_;
            const double u = uniform01(rng) * m.total_;
            auto i = static_cast<std::size_t>(std::upper_bound(m.cumulative_.begin(), m.cumulative_.end(), u) -
                                              m.cumulative_.begin());
            out.i = std::min(i, m.cumulative_.size() - 1);
            out.t = uniform01(rng);
            out.x.resize(scratch_.size());
            draw_size_biased(out.i, rng, out.x);
        }

        /// V_{i, t x} = W_i + t x.
        void draw_v(const Component& c, Rng& rng, std::span<double> out) {
            mix_->model().draw_without(c.i, rng, out, scratch_);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += c.t * c.x[k];
        }

    private:
        void draw_size_biased(std::size_t i, Rng& rng, std::span<double> x) {
            const auto& s = mix_->model()[i];
            if (s.size_biased) {
                s.size_biased(rng, x);
                return;
            }
            for (;;) {
                s.sampler(rng, x);
                const double r2 = dot(x, x);
                if (r2 > caps_[i]) caps_[i] = r2;
                if (uniform01(rng) * caps_[i] <= r2) return;
            }
        }

        const MuBreveMixture* mix_;
        std::vector<double> caps_;
        Vector scratch_;
    };

private:
    static double pilot_m2(const SummandSpec& s, std::uint64_t seed) {
        Rng rng = make_rng(seed, hash_string(s.name));
        Vector x(static_cast<std::size_t>(s.dim));
        double acc = 0.0;
        for (std::size_t k = 0; k < kPilotDraws; ++k) {
            s.sampler(rng, x);
            acc += dot(x, x);
        }
        return acc / static_cast<double>(kPilotDraws);
    }

    /// Exact sup |X|^2 for bounded laws, else the 99.9th percentile of pilot draws.
    static double rejection_cap(const SummandSpec& s, std::uint64_t seed) {
        if (s.norm && std::isfinite(s.norm->sup())) return s.norm->sup() * s.norm->sup();
        Rng rng = make_rng(seed, hash_string(s.name) ^ 0xcafe);
        Vector x(static_cast<std::size_t>(s.dim));
        std::vector<double> r2(kPilotDraws);
        for (double& v : r2) {
            s.sampler(rng, x);
            v = dot(x, x);
        }
        const auto q = static_cast<std::size_t>(0.999 * static_cast<double>(r2.size()));
        std::nth_element(r2.begin(), r2.begin() + static_cast<std::ptrdiff_t>(q), r2.end());
        return std::max(r2[q], 1e-300);
    }

    const SumModel* model_;
    std::vector<double> lambda_, cumulative_, caps_;
    double total_ = 0.0;
};

/// Per-coordinate Monte Carlo check of E[f(W) W] = sum_i int_0^1 E[X_i <X_i, grad f(W_i + t X_i)>] dt.
struct ZeroBiasCheck {
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> residual;
    std::vector<double> se;
    std::size_t mc_n = 0;

    [[nodiscard]] double max_residual() const {
        return residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end());
    }
    /// Largest residual in units of its own standard error.
    [[nodiscard]] double max_z() const {
        double z = 0.0;
        for (std::size_t k = 0; k < residual.size(); ++k)
            z = std::max(z, se[k] > 0.0 ? residual[k] / se[k] : (residual[k] > 0.0 ? INFINITY : 0.0));
        return z;
    }
    [[nodiscard]] bool passes(double n_se = 4.0) const { return max_z() <= n_se; }
};

/// Each sample draws W for the left side and, independently, a mixture component
/// (i, t, x) and W_i for the right side, whose integrand is Lambda x_k <x, grad f(V)> / |x|^2.
inline ZeroBiasCheck verify_zero_bias_identity(const SumModel& model, const MuBreveMixture& mix, const TestFunction& f,
                                               std::size_t mc_n, std::uint64_t seed) {
    if (f.dim() != model.dim()) throw std::invalid_argument("verify_zero_bias_identity: dimension mismatch");
    if (&mix.model() != &model) throw std::invalid_argument("verify_zero_bias_identity: mixture built for another model");
    if (!f.has_derivative(1)) throw std::invalid_argument("verify_zero_bias_identity: f needs a gradient");
    const auto d = static_cast<std::size_t>(model.dim());
    const double total = mix.total_mass();
    const auto est = monte_carlo(3 * d, mc_n, seed, [&] {
        return [&, sampler = MuBreveMixture::Sampler(mix), comp = MuBreveMixture::Component{}, w = Vector(d),
                v = Vector(d), scratch = Vector(d)](Rng& rng, std::span<double> out) mutable {
            model.draw(rng, w, scratch);
            const double fw = f(w);
            sampler.draw(rng, comp);
            sampler.draw_v(comp, rng, v);
            const SymTensor g = f.derivative(1, v);
            double xg = 0.0;
            for (std::size_t k = 0; k < d; ++k) xg += comp.x[k] * g({static_cast<int>(k)});
            const double r2 = dot(comp.x, comp.x);
            const double scale = r2 > 0.0 ? total * xg / r2 : 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                out[k] = fw * w[k];
                out[d + k] = scale * comp.x[k];
                out[2 * d + k] = out[k] - out[d + k];
            }
        };
    });
    ZeroBiasCheck c;
    c.mc_n = est.n;
    for (std::size_t k = 0; k < d; ++k) {
        c.lhs.push_back(est.mean[k]);
        c.rhs.push_back(est.mean[d + k]);
        c.residual.push_back(std::abs(est.mean[2 * d + k]));
        c.se.push_back(est.se[2 * d + k]);
    }
    return c;
}

/// nu_{i,x}: for t ~ Uniform[0, 1] and an independent copy of X_i, the point
/// (1 - t) x + t X_i carries the vector weight X_i - x.
class NuMixture {
public:
    struct Draw {
        double t = 0.0;
        Vector xi;
        Vector point;
        Vector weight;
    };

    NuMixture(const SummandSpec& summand, Vector x) : summand_(&summand), x_(std::move(x)) {
        if (static_cast<int>(x_.size()) != summand.dim) throw std::invalid_argument("NuMixture: dimension mismatch");
    }

    [[nodiscard]] const SummandSpec& summand() const { return *summand_; }
    [[nodiscard]] const Vector& x() const { return x_; }

    void draw(Rng& rng, Draw& out) const {
        const std::size_t d = x_.size();
        out.xi.resize(d);
        out.point.resize(d);
        out.weight.resize(d);
        out.t = uniform01(rng);
        (*summand_).sampler(rng, out.xi);
        for (std::size_t k = 0; k < d; ++k) {
            out.point[k] = (1.0 - out.t) * x_[k] + out.t * out.xi[k];
            out.weight[k] = out.xi[k] - x_[k];
        }
    }

    /// E|X_i| + |x|, the bound on the total variation of nu_{i,x}.
    [[nodiscard]] double beta1_bound() const { return summand_->m1().mean + norm(x_); }

    /// (1/2)(3 sqrt(m2) + |x|)(sqrt(m2) + |x|), the bound on beta_2^{(i,x)}.
    [[nodiscard]] double beta2_bound() const {
        const double r = std::sqrt(summand_->m2().mean);
        const double a = norm(x_);
        return 0.5 * (3.0 * r + a) * (r + a);
    }

private:
    const SummandSpec* summand_;
    Vector x_;
};

/// Monte Carlo total variation mass of nu_{i,x}: E|X_i - x|.
inline Estimate beta1_estimate(const NuMixture& nu, std::size_t mc_n, std::uint64_t seed) {
    return monte_carlo_scalar(mc_n, seed, [&] {
        return [&, draw = NuMixture::Draw{}](Rng& rng) mutable {
            nu.draw(rng, draw);
            return norm(draw.weight);
        };
    });
}

}  // namespace steinclt
