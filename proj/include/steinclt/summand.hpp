#pragma once

// Laws of independent summands X_i in R^d and of their norms |X_i|, with exact
// moment functionals where a closed description of the law exists.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinclt/core/quadrature.hpp"
#include "steinclt/core/random.hpp"
#include "steinclt/sampler.hpp"
#include "steinclt/tensor.hpp"

namespace steinclt {

/// A law on the real line: finitely many atoms, or a density on [lo, hi] that is
/// smooth between the listed breakpoints. Optional hooks give its zero-bias law and a
/// sampler of its x^2-weighted law when those have a closed description.
class Law1D {
public:
    using Density = std::function<double(double)>;
    using Draw = std::function<double(Rng&)>;
    using Factory = std::function<Law1D()>;

    static Law1D discrete(std::string name, std::vector<double> values, std::vector<double> probs) {
        if (values.empty() || values.size() != probs.size())
            throw std::invalid_argument("Law1D::discrete: values and probs must be non-empty and of equal length");
        std::vector<std::pair<double, double>> atoms;
        double total = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!(probs[k] >= 0.0) || !std::isfinite(values[k]))
                throw std::invalid_argument("Law1D::discrete: probabilities must be >= 0 and atoms finite");
            total += probs[k];
            if (probs[k] > 0.0) atoms.emplace_back(values[k], probs[k]);
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("Law1D::discrete: probabilities must sum to 1");
        std::sort(atoms.begin(), atoms.end());
        Law1D law;
        law.name_ = std::move(name);
        for (const auto& [x, p] : atoms) {
            if (!law.values_.empty() && law.values_.back() == x) {
                law.probs_.back() += p / total;
            } else {
                law.values_.push_back(x);
                law.probs_.push_back(p / total);
            }
        }
        double c = 0.0;
        for (double p : law.probs_) law.cumulative_.push_back(c += p);
        law.cumulative_.back() = 1.0;
        return law;
    }

    static Law1D continuous(std::string name, Density pdf, double lo, double hi, std::vector<double> breaks,
                            Draw draw) {
        if (!(lo < hi)) throw std::invalid_argument("Law1D::continuous: need lo < hi");
        if (!pdf || !draw) throw std::invalid_argument("Law1D::continuous: density and sampler required");
        Law1D law;
        law.name_ = std::move(name);
        law.pdf_ = std::move(pdf);
        law.lo_ = lo;
        law.hi_ = hi;
        law.breaks_ = std::move(breaks);
        law.draw_ = std::move(draw);
        return law;
    }

    Law1D& with_zero_bias(Factory f) {
        zero_bias_ = std::move(f);
        return *this;
    }

    Law1D& with_size_biased_draw(Draw d) {
        size_biased_ = std::move(d);
        return *this;
    }

    /// Marks [lo, hi] as a numerical cutoff of an unbounded support.
    Law1D& with_unbounded_support() {
        bounded_ = false;
        return *this;
    }

    /// The law of c X, c > 0, with the hooks carried along.
    [[nodiscard]] Law1D scaled(double c) const {
        if (!(c > 0.0)) throw std::invalid_argument("Law1D::scaled: factor must be > 0");
        if (c == 1.0) return *this;
        Law1D out;
        if (is_discrete()) {
            std::vector<double> v = values_;
            for (double& x : v) x *= c;
            out = discrete(name_, std::move(v), probs_);
        } else {
            std::vector<double> b = breaks_;
            for (double& x : b) x *= c;
            out = continuous(
                name_, [pdf = pdf_, c](double x) { return pdf(x / c) / c; }, c * lo_, c * hi_, std::move(b),
                [draw = draw_, c](Rng& rng) { return c * draw(rng); });
        }
        out.bounded_ = bounded_;
        if (zero_bias_) out.zero_bias_ = [f = zero_bias_, c] { return f().scaled(c); };
        if (size_biased_) out.size_biased_ = [d = size_biased_, c](Rng& rng) { return c * d(rng); };
        return out;
    }

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] bool bounded() const { return bounded_; }
    [[nodiscard]] bool is_discrete() const { return !values_.empty(); }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] const std::vector<double>& probs() const { return probs_; }
    [[nodiscard]] double lo() const { return is_discrete() ? values_.front() : lo_; }
    [[nodiscard]] double hi() const { return is_discrete() ? values_.back() : hi_; }
    [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }
    [[nodiscard]] const Factory& zero_bias_hook() const { return zero_bias_; }

    [[nodiscard]] double pdf(double x) const {
        if (is_discrete()) throw std::logic_error("Law1D::pdf: discrete law '" + name_ + "' has no density");
        return (x < lo_ || x > hi_) ? 0.0 : pdf_(x);
    }

    /// E g(X): a finite sum for atoms, adaptive quadrature for densities.
    template <class G>
    double expect(G&& g, double abs_tol = 1e-13) const {
        if (is_discrete()) {
            double s = 0.0;
            for (std::size_t k = 0; k < values_.size(); ++k) s += probs_[k] * g(values_[k]);
            return s;
        }
        return quad::integrate_piecewise([&](double x) { return g(x) * pdf_(x); }, lo_, hi_, breaks_, abs_tol).value;
    }

    [[nodiscard]] double mean() const {
        return expect([](double x) { return x; });
    }
    [[nodiscard]] double variance() const {
        const double m = mean();
        return expect([m](double x) { return (x - m) * (x - m); });
    }

    double sample(Rng& rng) const {
        if (!is_discrete()) return draw_(rng);
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return values_[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), values_.size() - 1)];
    }

    [[nodiscard]] bool has_size_biased_draw() const { return is_discrete() || bool(size_biased_); }

    /// A draw from the law with density x^2 p(x) / E X^2.
    double sample_size_biased(Rng& rng) const {
        if (size_biased_) return size_biased_(rng);
        if (!is_discrete()) throw std::logic_error("Law1D: no x^2-weighted sampler for '" + name_ + "'");
        double total = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k) total += probs_[k] * values_[k] * values_[k];
        double u = uniform01(rng) * total;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            u -= probs_[k] * values_[k] * values_[k];
            if (u < 0.0) return values_[k];
        }
        return values_.back();
    }

private:
    Law1D() = default;

    std::string name_;
    std::vector<double> values_, probs_, cumulative_;
    Density pdf_;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> breaks_;
    Draw draw_;
    Factory zero_bias_;
    Draw size_biased_;
    bool bounded_ = true;
};

namespace laws {

inline constexpr double kSqrt3 = 1.7320508075688772935274463415059;

inline Law1D rademacher() { return Law1D::discrete("rademacher", {-1.0, 1.0}, {0.5, 0.5}); }

/// Mean 0, variance 1, with P(X = sqrt((1-p)/p)) = p.
inline Law1D two_point(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("two_point: p must be in (0, 1)");
    return Law1D::discrete("two_point", {-std::sqrt(p / (1.0 - p)), std::sqrt((1.0 - p) / p)}, {1.0 - p, p});
}

/// Uniform(-a, a); its zero-bias law has density 3(a^2 - w^2) / (4 a^3).
inline Law1D uniform(double a = kSqrt3) {
    if (!(a > 0.0)) throw std::invalid_argument("uniform: a must be > 0");
    Law1D law = Law1D::continuous(
        "uniform", [a](double) { return 0.5 / a; }, -a, a, {}, [a](Rng& rng) { return a * (2.0 * uniform01(rng) - 1.0); });
    law.with_zero_bias([a] {
        return Law1D::continuous(
            "uniform_zero_bias", [a](double w) { return 0.75 * (a * a - w * w) / (a * a * a); }, -a, a, {},
            [a](Rng& rng) {
                for (;;) {
                    const double w = a * (2.0 * uniform01(rng) - 1.0);
                    if (uniform01(rng) * a * a <= a * a - w * w) return w;
                }
            });
    });
    // density proportional to x^2: |X| = a U^{1/3}
    law.with_size_biased_draw([a](Rng& rng) {
        const double r = a * std::cbrt(uniform01(rng));
        return (rng() >> 63) ? r : -r;
    });
    return law;
}

inline Law1D gaussian() {
    constexpr double inv_sqrt_2pi = 0.39894228040143267793994605993438;
    Law1D law = Law1D::continuous(
        "gaussian", [](double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }, -40.0, 40.0, {0.0},
        [](Rng& rng) { return standard_normal(rng); });
    law.with_unbounded_support();
    law.with_zero_bias([] { return gaussian(); });
    // x^2 phi(x) is the law of a signed chi_3 variable
    law.with_size_biased_draw([](Rng& rng) {
        const double a = standard_normal(rng), b = standard_normal(rng), c = standard_normal(rng);
        const double r = std::sqrt(a * a + b * b + c * c);
        return (rng() >> 63) ? r : -r;
    });
    return law;
}

/// E - 1 with E ~ Exp(1). The zero-bias law is Gamma(2, 1) - 1.
inline Law1D centered_exponential() {
    auto exp1 = [](Rng& rng) { return -std::log1p(-uniform01(rng)); };
    Law1D law = Law1D::continuous(
        "exponential", [](double x) { return std::exp(-(x + 1.0)); }, -1.0, 80.0, {0.0, 1.0},
        [exp1](Rng& rng) { return exp1(rng) - 1.0; });
    law.with_unbounded_support();
    law.with_zero_bias([exp1] {
        return Law1D::continuous(
            "exponential_zero_bias", [](double w) { return (w + 1.0) * std::exp(-(w + 1.0)); }, -1.0, 80.0, {0.0, 1.0},
            [exp1](Rng& rng) { return exp1(rng) + exp1(rng) - 1.0; }).with_unbounded_support();
    });
    // target (x - 1)^2 e^{-x} on x > 0, proposal (1/3) Exp(1) + (2/3) Gamma(3, 1), ratio <= 6
    law.with_size_biased_draw([exp1](Rng& rng) {
        for (;;) {
            const double x = uniform01(rng) < 1.0 / 3.0 ? exp1(rng) : exp1(rng) + exp1(rng) + exp1(rng);
            if (uniform01(rng) * 2.0 * (1.0 + x * x) <= (x - 1.0) * (x - 1.0)) return x - 1.0;
        }
    });
    return law;
}

}  // namespace laws

/// Where min{a, p + q y} switches branches, as a breakpoint list for quadrature.
inline std::vector<double> min_kink(double a, double p, double q) {
    if (q > 0.0 && a > p) return {(a - p) / q};
    return {};
}

/// The law of a norm |X| on [0, inf): atoms, a density, or an empirical sample.
/// Scaling is stored separately so that c|X| shares the data of |X|.
class NormLaw {
public:
    enum class Kind { atoms, density, empirical };

    static NormLaw atoms(std::vector<double> values, std::vector<double> probs) {
        auto data = std::make_shared<Data>();
        data->kind = Kind::atoms;
        data->values = std::move(values);
        data->probs = std::move(probs);
        if (data->values.size() != data->probs.size() || data->values.empty())
            throw std::invalid_argument("NormLaw::atoms: bad atoms");
        for (double v : data->values)
            if (!(v >= 0.0)) throw std::invalid_argument("NormLaw::atoms: norms must be >= 0");
        data->sup = *std::max_element(data->values.begin(), data->values.end());
        return NormLaw(std::move(data));
    }

    /// Density on [0, cutoff]; `bounded` says whether the true support ends there.
    static NormLaw density(std::function<double(double)> pdf, double cutoff, std::vector<double> breaks, bool bounded) {
        auto data = std::make_shared<Data>();
        data->kind = Kind::density;
        data->pdf = std::move(pdf);
        data->cutoff = cutoff;
        data->breaks = std::move(breaks);
        data->sup = bounded ? cutoff : INFINITY;
        return NormLaw(std::move(data));
    }

    static NormLaw empirical(std::vector<double> samples) {
        if (samples.empty()) throw std::invalid_argument("NormLaw::empirical: no samples");
        auto data = std::make_shared<Data>();
        data->kind = Kind::empirical;
        data->values = std::move(samples);
        data->sup = INFINITY;
        return NormLaw(std::move(data));
    }

    [[nodiscard]] NormLaw scaled(double c) const {
        if (!(c >= 0.0)) throw std::invalid_argument("NormLaw::scaled: factor must be >= 0");
        NormLaw out = *this;
        out.scale_ *= c;
        return out;
    }

    [[nodiscard]] Kind kind() const { return data_->kind; }
    [[nodiscard]] bool exact() const { return data_->kind != Kind::empirical; }
    [[nodiscard]] double scale() const { return scale_; }
    /// Essential supremum of |X|, infinite when unbounded or unknown.
    [[nodiscard]] double sup() const { return scale_ * data_->sup; }
    [[nodiscard]] const void* identity() const { return data_.get(); }

    /// E g(|X|); the SE is 0 for exact laws. `kinks` lists points (on the scale of
    /// |X|) where g is not smooth, so quadrature can split there.
    template <class G>
    Estimate expect(G&& g, const std::vector<double>& kinks = {}) const {
        const Data& d = *data_;
        switch (d.kind) {
            case Kind::atoms: {
                double s = 0.0;
                for (std::size_t k = 0; k < d.values.size(); ++k) s += d.probs[k] * g(scale_ * d.values[k]);
                return {s, 0.0, 0};
            }
            case Kind::density: {
                std::vector<double> breaks = d.breaks;
                if (scale_ > 0.0)
                    for (double k : kinks) breaks.push_back(k / scale_);
                const auto r = quad::integrate_piecewise([&](double y) { return g(scale_ * y) * d.pdf(y); }, 0.0,
                                                         d.cutoff, std::move(breaks), 1e-13);
                return {r.value, 0.0, 0};
            }
            case Kind::empirical: {
                RunningStats stats(1);
                for (double y : d.values) {
                    const double v = g(scale_ * y);
                    stats.push(std::span<const double>(&v, 1));
                }
                return stats.estimate().at(0);
            }
        }
        return {};
    }

    /// E|X|^p, computed once on the unscaled law and cached.
    [[nodiscard]] Estimate moment(int p) const {
        if (p < 0 || p > 4) throw std::invalid_argument("NormLaw::moment: p must be in 0..4");
        Data& d = *data_;
        std::call_once(d.moment_once[p], [&] {
            NormLaw unit = *this;
            unit.scale_ = 1.0;
            d.moments[p] = unit.expect([p](double y) { return std::pow(y, p); });
        });
        const double f = std::pow(scale_, p);
        return {f * d.moments[p].mean, f * d.moments[p].se, d.moments[p].n};
    }

private:
    struct Data {
        Kind kind = Kind::atoms;
        std::vector<double> values, probs;
        std::function<double(double)> pdf;
        double cutoff = 0.0;
        std::vector<double> breaks;
        double sup = 0.0;
        std::once_flag moment_once[5];
        Estimate moments[5];
    };

    explicit NormLaw(std::shared_ptr<Data> d) : data_(std::move(d)) {}

    std::shared_ptr<Data> data_;
    double scale_ = 1.0;
};

namespace detail {

/// Law of sqrt(xi_1^2 + ... + xi_d^2) for iid discrete xi, by convolving the laws of
/// the squares and merging coincident values.
inline NormLaw discrete_vector_norm(const Law1D& law, int d) {
    std::map<double, double> sq;
    for (std::size_t k = 0; k < law.values().size(); ++k) sq[law.values()[k] * law.values()[k]] += law.probs()[k];
    std::map<double, double> acc{{0.0, 1.0}};
    for (int j = 0; j < d; ++j) {
        std::map<double, double> next;
        for (const auto& [a, pa] : acc)
            for (const auto& [b, pb] : sq) next[a + b] += pa * pb;
        acc = std::move(next);
    }
    std::vector<double> values, probs;
    for (const auto& [s, p] : acc) {
        const double r = std::sqrt(s);
        if (!values.empty() && std::abs(values.back() - r) <= 1e-12 * (1.0 + r)) {
            probs.back() += p;
        } else {
            values.push_back(r);
            probs.push_back(p);
        }
    }
    return NormLaw::atoms(std::move(values), std::move(probs));
}

/// |xi| for a single coordinate with a density: p(y) + p(-y) on [0, max(|lo|, |hi|)].
inline NormLaw continuous_abs(const Law1D& law) {
    const double top = std::max(std::abs(law.lo()), std::abs(law.hi()));
    std::vector<double> breaks;
    for (double b : law.breaks()) breaks.push_back(std::abs(b));
    if (law.lo() < 0.0 && law.hi() > 0.0) breaks.push_back(std::min(-law.lo(), law.hi()));
    return NormLaw::density([law](double y) { return law.pdf(y) + (y > 0.0 ? law.pdf(-y) : 0.0); }, top, breaks,
                            law.bounded());
}

/// chi_d density.
inline NormLaw chi_norm(int d) {
    const double half = 0.5 * d;
    const double log_norm = (half - 1.0) * std::log(2.0) + std::lgamma(half);
    return NormLaw::density(
        [d, log_norm](double y) { return y <= 0.0 ? (d == 1 ? 2.0 * 0.3989422804014327 : 0.0) : std::exp((d - 1) * std::log(y) - 0.5 * y * y - log_norm); },
        std::sqrt(static_cast<double>(d)) + 40.0, {std::sqrt(static_cast<double>(d - 1))}, false);
}

inline constexpr std::size_t kEmpiricalNormSamples = 1'000'000;

/// 10^6 draws of |(xi_1..xi_d)|, cached per (law, d) for the process lifetime.
inline NormLaw empirical_vector_norm(const Law1D& law, int d) {
    static std::mutex mutex;
    static std::map<std::pair<std::string, int>, NormLaw> cache;
    std::lock_guard lock(mutex);
    const auto key = std::make_pair(law.name(), d);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    Rng rng = make_rng(hash_string(law.name()), static_cast<std::uint64_t>(d));
    std::vector<double> samples(kEmpiricalNormSamples);
    for (double& s : samples) {
        double r2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double x = law.sample(rng);
            r2 += x * x;
        }
        s = std::sqrt(r2);
    }
    auto out = NormLaw::empirical(std::move(samples));
    cache.emplace(key, out);
    return out;
}

}  // namespace detail

/// Law of |(xi_1, ..., xi_d)| for iid coordinates: exact for discrete laws, for d = 1,
/// and for Gaussian coordinates; an empirical sample otherwise.
inline NormLaw vector_norm_law(const Law1D& law, int d) {
    if (d < 1) throw std::invalid_argument("vector_norm_law: d must be >= 1");
    if (law.is_discrete()) return detail::discrete_vector_norm(law, d);
    if (law.name() == "gaussian") return detail::chi_norm(d);
    if (d == 1) return detail::continuous_abs(law);
    return detail::empirical_vector_norm(law, d);
}

/// One independent summand X in R^d: a sampler, the law of |X| (which carries all
/// moment functionals), and optional exact samplers for derived laws.
struct SummandSpec {
    using Draw = PointSampler::Draw;

    std::string name;
    int dim = 0;
    PointSampler sampler;
    std::optional<NormLaw> norm;
    /// Draws from the law with density |x|^2 p(x) / E|X|^2.
    Draw size_biased;
    /// The full law when d = 1.
    std::optional<Law1D> law1d;

    SummandSpec(std::string n, PointSampler s) : name(std::move(n)), dim(s.dim), sampler(std::move(s)) {}

    [[nodiscard]] const NormLaw& norm_law() const {
        if (!norm) throw std::invalid_argument("summand '" + name + "': no moment information");
        return *norm;
    }

    [[nodiscard]] Estimate m1() const { return norm_law().moment(1); }
    [[nodiscard]] Estimate m2() const { return norm_law().moment(2); }
    [[nodiscard]] Estimate m3() const { return norm_law().moment(3); }

    /// E[|X|^2 min{a, b|X|}].
    [[nodiscard]] Estimate min_moment(double a, double b) const {
        return norm_law().expect([a, b](double y) { return y * y * std::min(a, b * y); }, min_kink(a, 0.0, b));
    }

    /// Replaces the norm law by 10^6 Monte Carlo draws from the sampler.
    SummandSpec& with_mc_moments(std::uint64_t seed, std::size_t samples = detail::kEmpiricalNormSamples) {
        Rng rng = make_rng(seed, hash_string(name));
        std::vector<double> r(samples);
        Vector x(static_cast<std::size_t>(dim));
        for (double& v : r) {
            sampler(rng, x);
            v = steinclt::norm(x);
        }
        norm = NormLaw::empirical(std::move(r));
        return *this;
    }
};

/// A unit-variance, mean-zero coordinate law used iid in each coordinate.
struct Family {
    std::string name;
    Law1D law;
};

inline std::vector<std::string> available_families() {
    return {"rademacher", "uniform", "exponential", "gaussian", "two_point"};
}

/// Builds a family by name. `p` is used by two_point only.
inline Family make_family(const std::string& name, double p = 0.2) {
    if (name == "rademacher") return {name, laws::rademacher()};
    if (name == "uniform") return {name, laws::uniform()};
    if (name == "exponential") return {name, laws::centered_exponential()};
    if (name == "gaussian") return {name, laws::gaussian()};
    if (name == "two_point") return {name, laws::two_point(p)};
    std::string list;
    for (const auto& f : available_families()) list += (list.empty() ? "" : ", ") + f;
    throw std::invalid_argument("unknown family '" + name + "'; available: " + list);
}

/// X = (xi_1, ..., xi_d) * scale with iid coordinates from `law`.
inline SummandSpec iid_coordinate_summand(const Law1D& law, int d, double scale, std::string name) {
    auto shared = std::make_shared<Law1D>(law);
    SummandSpec s(std::move(name), PointSampler(law.name(), d, [shared, scale](Rng& rng, std::span<double> out) {
                      for (double& v : out) v = scale * shared->sample(rng);
                  }));
    s.norm = vector_norm_law(law, d).scaled(scale);
    if (law.has_size_biased_draw()) {
        // |x|^2 p(x) = sum_k x_k^2 p(x): pick a coordinate uniformly, weight only that one
        s.size_biased = [shared, scale, d](Rng& rng, std::span<double> out) {
            const auto k = static_cast<std::size_t>(uniform01(rng) * d);
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] = scale * (j == std::min<std::size_t>(k, out.size() - 1) ? shared->sample_size_biased(rng)
                                                                                 : shared->sample(rng));
        };
    }
    if (d == 1) s.law1d = law.scaled(scale);
    return s;
}

/// W = sum_i X_i for independent summands.
class SumModel {
public:
    SumModel(int dim, std::vector<SummandSpec> summands, bool standardized = false)
        : dim_(dim), summands_(std::move(summands)), standardized_(standardized) {
        if (dim_ < 1) throw std::invalid_argument("SumModel: dim must be >= 1");
        for (const auto& s : summands_)
            if (s.dim != dim_) throw std::invalid_argument("SumModel: summand '" + s.name + "' has wrong dimension");
    }

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] std::size_t size() const { return summands_.size(); }
    [[nodiscard]] const SummandSpec& operator[](std::size_t i) const { return summands_.at(i); }
    [[nodiscard]] const std::vector<SummandSpec>& summands() const { return summands_; }
    SummandSpec& mutable_summand(std::size_t i) { return summands_.at(i); }
    [[nodiscard]] bool standardized() const { return standardized_; }
    [[nodiscard]] const std::string& family() const { return family_; }
    SumModel& with_family(std::string f) {
        family_ = std::move(f);
        return *this;
    }

    /// W_skip = W - X_skip; skip = size() gives W itself.
    void draw_without(std::size_t skip, Rng& rng, std::span<double> out, std::span<double> scratch) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < summands_.size(); ++i) {
            if (i == skip) continue;
            summands_[i].sampler(rng, scratch);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += scratch[k];
        }
    }

    void draw(Rng& rng, std::span<double> out, std::span<double> scratch) const {
        draw_without(summands_.size(), rng, out, scratch);
    }

    /// Sampler of W.
    [[nodiscard]] PointSampler w_sampler() const {
        auto self = std::make_shared<SumModel>(*this);
        return PointSampler("W", dim_, [self](Rng& rng, std::span<double> out) {
            Vector scratch(out.size());
            self->draw(rng, out, scratch);
        });
    }

private:
    int dim_;
    std::vector<SummandSpec> summands_;
    bool standardized_;
    std::string family_;
};

/// Standardized iid model: n summands with coordinates xi / sqrt(n), so Var(W) = I_d.
inline SumModel iid_model(const Family& family, int d, int n) {
    if (n < 1) throw std::invalid_argument("iid_model: n must be >= 1");
    if (d < 1) throw std::invalid_argument("iid_model: d must be >= 1");
    const double var = family.law.variance();
    if (!(var > 0.0) || !std::isfinite(var))
        throw std::invalid_argument("iid_model: family '" + family.name + "' cannot be standardized");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n) * var);
    const SummandSpec one = iid_coordinate_summand(family.law, d, scale, family.name);
    return SumModel(d, std::vector<SummandSpec>(static_cast<std::size_t>(n), one), true).with_family(family.name);
}

/// Monte Carlo estimate of Cov(W), row-major d x d.
inline VectorEstimate covariance(const SumModel& model, std::size_t mc_n, std::uint64_t seed) {
    const auto d = static_cast<std::size_t>(model.dim());
    return monte_carlo(d * d, mc_n, seed, [&] {
        return [&, w = Vector(d), scratch = Vector(d)](Rng& rng, std::span<double> out) mutable {
            model.draw(rng, w, scratch);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) out[a * d + b] = w[a] * w[b];
        };
    });
}

}  // namespace steinclt
