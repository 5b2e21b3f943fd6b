#pragma once

// Right-hand sides of the explicit normal approximation bounds for sums of
// independent vectors, and the chain of intermediate beta estimates they come from.
// Everything here is a functional of the laws of |X_i|.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinclt/core/random.hpp"
#include "steinclt/summand.hpp"

namespace steinclt {

enum class BoundKind { M1, M2, M3 };

inline const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::M1: return "M1";
        case BoundKind::M2: return "M2";
        case BoundKind::M3: return "M3";
    }
    return "?";
}

/// Where a summand's term came from: exact summation/quadrature, or a Monte Carlo
/// sample of the norm law with its standard error.
struct TermProvenance {
    bool exact = true;
    double se = 0.0;
    std::size_t samples = 0;
};

struct BoundReport {
    BoundKind which = BoundKind::M3;
    std::vector<double> per_summand;
    double total = 0.0;
    /// The M_r(f) the total is multiplied by; 1 means the unit ball of M_r.
    double Mr_budget = 1.0;
    int dim = 0;
    std::vector<TermProvenance> provenance;

    [[nodiscard]] double value() const { return total * Mr_budget; }
    [[nodiscard]] bool exact() const {
        for (const auto& p : provenance)
            if (!p.exact) return false;
        return true;
    }
    /// Sum of the per-summand SEs. Identical summands share one sample, so their
    /// errors add linearly rather than in quadrature.
    [[nodiscard]] double total_se() const {
        double s = 0.0;
        for (const auto& p : provenance) s += p.se;
        return s;
    }
};

/// 11.1 + 0.83 log d with the natural logarithm.
inline double m1_coefficient(double d) {
    if (!(d >= 1.0)) throw std::invalid_argument("m1_coefficient: d must be >= 1");
    return 11.1 + 0.83 * std::log(d);
}

namespace detail {

inline const NormLaw& require_norm(const SumModel& model, std::size_t i, const char* who) {
    const auto& s = model[i];
    if (!s.norm)
        throw std::invalid_argument(std::string(who) + ": summand " + std::to_string(i) + " ('" + s.name +
                                    "') has no moment information");
    return *s.norm;
}

/// Evaluates term(norm_law) for every summand, once per distinct (law, scale).
template <class Term>
BoundReport per_summand_report(const SumModel& model, BoundKind which, double Mr, const char* who, Term&& term) {
    if (!(Mr >= 0.0)) throw std::invalid_argument(std::string(who) + ": M_r budget must be >= 0");
    BoundReport r;
    r.which = which;
    r.Mr_budget = Mr;
    r.dim = model.dim();
    std::map<std::pair<const void*, double>, Estimate> memo;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const NormLaw& law = require_norm(model, i, who);
        const auto key = std::make_pair(law.identity(), law.scale());
        auto it = memo.find(key);
        if (it == memo.end()) it = memo.emplace(key, term(law)).first;
        const Estimate& e = it->second;
        r.per_summand.push_back(e.mean);
        r.provenance.push_back({law.exact(), e.se, e.n});
        r.total += e.mean;
    }
    return r;
}

}  // namespace detail

/// sum_i E|X_i|^3 / 2, the coefficient of M_3(f).
inline BoundReport bound_m3(const SumModel& model, double M3 = 1.0) {
    return detail::per_summand_report(model, BoundKind::M3, M3, "bound_m3", [](const NormLaw& law) {
        Estimate e = law.moment(3);
        e.mean *= 0.5;
        e.se *= 0.5;
        return e;
    });
}

/// sum_i E[|X_i|^2 min{2.5, 0.94 |X_i|}], the coefficient of M_2(f).
inline BoundReport bound_m2(const SumModel& model, double M2 = 1.0) {
    return detail::per_summand_report(model, BoundKind::M2, M2, "bound_m2", [](const NormLaw& law) {
        return law.expect([](double y) { return y * y * std::min(2.5, 0.94 * y); }, min_kink(2.5, 0.0, 0.94));
    });
}

/// sum_i E[|X_i|^2 min{4.5, (11.1 + 0.83 log d) |X_i|}], the coefficient of M_1(f).
inline BoundReport bound_m1(const SumModel& model, double M1 = 1.0) {
    const double k = m1_coefficient(model.dim());
    return detail::per_summand_report(model, BoundKind::M1, M1, "bound_m1", [k](const NormLaw& law) {
        return law.expect([k](double y) { return y * y * std::min(4.5, k * y); }, min_kink(4.5, 0.0, k));
    });
}

inline BoundReport bound(const SumModel& model, BoundKind which, double Mr = 1.0) {
    switch (which) {
        case BoundKind::M1: return bound_m1(model, Mr);
        case BoundKind::M2: return bound_m2(model, Mr);
        case BoundKind::M3: return bound_m3(model, Mr);
    }
    throw std::invalid_argument("bound: unknown kind");
}

/// h_{a,b}(u) = b u^{3/2} below the knot u = a^2 / b^2 and 3/2 a u - a^3 / (2 b^2)
/// above it. Convex, and squeezed between min{au, bu^{3/2}} and min{3/2 au, bu^{3/2}}.
inline double h_envelope(double a, double b, double u) {
    if (!(a >= 0.0 && b >= 0.0)) throw std::invalid_argument("h_envelope: a and b must be >= 0");
    if (!(u >= 0.0)) throw std::invalid_argument("h_envelope: u must be >= 0");
    if (b == 0.0) return 0.0;
    if (u * b * b <= a * a) return b * u * std::sqrt(u);
    return 1.5 * a * u - a * a * a / (2.0 * b * b);
}

struct MinMomentEnvelope {
    /// E[|X|^2 min{a, b|X|}] for the summand's law.
    Estimate distribution;
    /// E[|X|^2 min{3/2 a, b|X|}], which dominates E h_{a,b}(|X|^2) >= h_{a,b}(E|X|^2).
    Estimate jensen_upper;
    /// h_{a,b}(m2) and the sandwich around it.
    double h = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline MinMomentEnvelope min_moment_envelope(double a, double b, double m2, const SummandSpec& law) {
    if (!(a >= 0.0 && b >= 0.0)) throw std::invalid_argument("min_moment_envelope: a and b must be >= 0");
    if (!(m2 >= 0.0)) throw std::invalid_argument("min_moment_envelope: m2 must be >= 0");
    MinMomentEnvelope e;
    e.distribution = law.min_moment(a, b);
    e.jensen_upper = law.min_moment(1.5 * a, b);
    e.h = h_envelope(a, b, m2);
    const double cubic = b * m2 * std::sqrt(m2);
    e.lower = std::min(a * m2, cubic);
    e.upper = std::min(1.5 * a * m2, cubic);
    return e;
}

/// int_0^1 min{a, p + q t} dt for p, q >= 0.
inline double integrated_min(double a, double p, double q) {
    if (p >= a) return a;
    if (q <= 0.0) return p;
    const double t = (a - p) / q;
    if (t >= 1.0) return p + 0.5 * q;
    return p * t + 0.5 * q * t * t + a * (1.0 - t);
}

/// Upper estimates of the beta quantities for the independent-sum construction.
/// The functionals take expectations over the laws of |X_i|, which are shared with
/// the model.
class BetaSet {
public:
    explicit BetaSet(const SumModel& model) {
        for (std::size_t i = 0; i < model.size(); ++i) {
            const NormLaw& law = detail::require_norm(model, i, "beta_chain");
            laws_.push_back(law);
            m1_.push_back(law.moment(1).mean);
            m2_.push_back(law.moment(2).mean);
            m3_.push_back(law.moment(3).mean);
        }
    }

    [[nodiscard]] std::size_t size() const { return m1_.size(); }
    [[nodiscard]] double m1(std::size_t i) const { return m1_.at(i); }
    [[nodiscard]] double m2(std::size_t i) const { return m2_.at(i); }
    [[nodiscard]] double m3(std::size_t i) const { return m3_.at(i); }

    /// beta_1 at (i, x) is at most E|X_i| + |x|.
    [[nodiscard]] double beta1(std::size_t i, double x_norm) const { return m1(i) + x_norm; }

    /// beta_2 at (i, x) is at most (3 sqrt(m2) + |x|)(sqrt(m2) + |x|) / 2.
    [[nodiscard]] double beta2(std::size_t i, double x_norm) const {
        const double s = std::sqrt(m2(i));
        return 0.5 * (3.0 * s + x_norm) * (s + x_norm);
    }

    /// The AM-GM relaxation 5/4 sqrt(m2) + 3/4 |x| of sqrt(beta_2).
    [[nodiscard]] double sqrt_beta2(std::size_t i, double x_norm) const {
        return 1.25 * std::sqrt(m2(i)) + 0.75 * x_norm;
    }

    /// 3/2 sum_i E|X_i|^3.
    [[nodiscard]] double beta3() const {
        double s = 0.0;
        for (double m : m3_) s += m;
        return 1.5 * s;
    }

    /// sum_i E[|X_i|^2 int_0^1 min{a, b (E|X_i| + t|X_i|)} dt], before exchanging min and integral.
    [[nodiscard]] Estimate beta23_integrated(double a, double b) const {
        check_args(a, b, 0.0, "beta23_integrated");
        // smooth except where the integrand stops saturating at t = 0 or t = 1
        return sum([&](std::size_t i, double y) { return y * y * integrated_min(a, b * m1(i), b * y); },
                   [&](std::size_t i) {
                       auto k = min_kink(a, b * m1(i), b);
                       for (double x : min_kink(a, b * m1(i), 0.5 * b)) k.push_back(x);
                       return k;
                   });
    }

    /// sum_i E[|X_i|^2 min{a, b E|X_i| + b|X_i| / 2}].
    [[nodiscard]] Estimate beta23(double a, double b) const {
        check_args(a, b, 0.0, "beta23");
        return sum([&](std::size_t i, double y) { return y * y * std::min(a, b * m1(i) + 0.5 * b * y); },
                   [&](std::size_t i) { return min_kink(a, b * m1(i), 0.5 * b); });
    }

    /// sum_i E[|X_i|^2 min{5/2 a, 3/2 b |X_i|}].
    [[nodiscard]] Estimate beta23_lindeberg(double a, double b) const {
        check_args(a, b, 0.0, "beta23_lindeberg");
        return sum([&](std::size_t, double y) { return y * y * std::min(2.5 * a, 1.5 * b * y); },
                   [&](std::size_t) { return min_kink(2.5 * a, 0.0, 1.5 * b); });
    }

    /// sum_i E[|X_i|^2 int_0^1 min{a, (b + 5/4 c) sqrt(m2) + (b + 3/4 c) t |X_i|} dt].
    [[nodiscard]] Estimate beta234_integrated(double a, double b, double c) const {
        check_args(a, b, c, "beta234_integrated");
        return sum(
            [&](std::size_t i, double y) {
                return y * y * integrated_min(a, (b + 1.25 * c) * std::sqrt(m2(i)), (b + 0.75 * c) * y);
            },
            [&](std::size_t i) {
                const double p = (b + 1.25 * c) * std::sqrt(m2(i)), q = b + 0.75 * c;
                auto k = min_kink(a, p, q);
                for (double x : min_kink(a, p, 0.5 * q)) k.push_back(x);
                return k;
            });
    }

    /// sum_i E[|X_i|^2 min{a, (b + 5/4 c) sqrt(m2) + (b/2 + 3/8 c) |X_i|}].
    [[nodiscard]] Estimate beta234(double a, double b, double c) const {
        check_args(a, b, c, "beta234");
        return sum(
            [&](std::size_t i, double y) {
                return y * y * std::min(a, (b + 1.25 * c) * std::sqrt(m2(i)) + (0.5 * b + 0.375 * c) * y);
            },
            [&](std::size_t i) { return min_kink(a, (b + 1.25 * c) * std::sqrt(m2(i)), 0.5 * b + 0.375 * c); });
    }

    /// sum_i E[|X_i|^2 min{5/2 a, (3/2 b + 13/8 c) |X_i|}].
    [[nodiscard]] Estimate beta234_lindeberg(double a, double b, double c) const {
        check_args(a, b, c, "beta234_lindeberg");
        return sum([&](std::size_t, double y) { return y * y * std::min(2.5 * a, (1.5 * b + 1.625 * c) * y); },
                   [&](std::size_t) { return min_kink(2.5 * a, 0.0, 1.5 * b + 1.625 * c); });
    }

private:
    static void check_args(double a, double b, double c, const char* who) {
        if (!(a >= 0.0 && b >= 0.0 && c >= 0.0)) throw std::invalid_argument(std::string(who) + ": arguments must be >= 0");
    }

    /// sum_i E g(i, |X_i|), evaluated once per distinct norm law. SEs add linearly
    /// since summands may share a sample.
    template <class G, class K>
    Estimate sum(G&& g, K&& kinks) const {
        Estimate total;
        std::map<std::pair<const void*, double>, Estimate> memo;
        for (std::size_t i = 0; i < size(); ++i) {
            const NormLaw& law = laws_[i];
            const auto key = std::make_pair(law.identity(), law.scale());
            auto it = memo.find(key);
            if (it == memo.end()) it = memo.emplace(key, law.expect([&](double y) { return g(i, y); }, kinks(i))).first;
            const Estimate& e = it->second;
            total.mean += e.mean;
            total.se += e.se;
            total.n = std::max(total.n, e.n);
        }
        return total;
    }

    std::vector<NormLaw> laws_;
    std::vector<double> m1_, m2_, m3_;
};

/// The beta chain for a model. Summands without moment information get an
/// empirical norm law from mc_n draws of their sampler.
inline BetaSet beta_chain(SumModel& model, std::size_t mc_n, std::uint64_t seed) {
    for (std::size_t i = 0; i < model.size(); ++i) {
        auto& s = model.mutable_summand(i);
        if (!s.norm) s.with_mc_moments(derive_seed(seed, i), mc_n);
    }
    return BetaSet(model);
}

}  // namespace steinclt
