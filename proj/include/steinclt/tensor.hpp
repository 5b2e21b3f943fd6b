#pragma once

// Dense symmetric tensors over R^d with canonical (nondecreasing multi-index)
// storage, pure-power pairings and the injective norm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinclt/core/random.hpp"

namespace steinclt {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

/// A point of the Euclidean unit sphere.
class UnitVector {
public:
    static constexpr double kTolerance = 1e-12;

    /// Throws unless |v| = 1 within kTolerance.
    explicit UnitVector(Vector v) : v_(std::move(v)) {
        if (v_.empty()) throw std::invalid_argument("UnitVector: empty");
        if (std::abs(norm(v_) - 1.0) > kTolerance)
            throw std::invalid_argument("UnitVector: norm differs from 1");
    }

    static UnitVector normalized(Vector v) {
        const double n = norm(v);
        if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("UnitVector: zero vector");
        for (double& x : v) x /= n;
        return UnitVector(std::move(v));
    }

    [[nodiscard]] int dim() const { return static_cast<int>(v_.size()); }
    [[nodiscard]] std::span<const double> components() const { return v_; }
    double operator[](std::size_t i) const { return v_[i]; }

private:
    Vector v_;
};

namespace detail {

/// Enumeration of the canonical multi-indices of a (order, dim) symmetric tensor.
struct SymLayout {
    int order = 0;
    int dim = 0;
    std::vector<int> indices;             // size() * order, row-major
    std::vector<double> multiplicity;     // distinct permutations of each row
    std::vector<std::uint32_t> full_map;  // dim^order flat offset -> canonical slot

    SymLayout(int r, int d) : order(r), dim(d) {
        std::vector<int> idx(static_cast<std::size_t>(r), 0);
        for (;;) {
            indices.insert(indices.end(), idx.begin(), idx.end());
            double perms = 1.0;
            for (int k = 2; k <= r; ++k) perms *= k;
            for (int j = 0; j < r;) {
                int run = 1;
                while (j + run < r && idx[j + run] == idx[j]) ++run;
                for (int k = 2; k <= run; ++k) perms /= k;
                j += run;
            }
            multiplicity.push_back(perms);
            int pos = r - 1;
            while (pos >= 0 && idx[pos] == d - 1) --pos;
            if (pos < 0) break;
            ++idx[pos];
            for (int k = pos + 1; k < r; ++k) idx[k] = idx[pos];
        }
        std::size_t full = 1;
        for (int k = 0; k < r; ++k) full *= static_cast<std::size_t>(d);
        full_map.assign(full, 0);
        std::vector<int> sorted(static_cast<std::size_t>(r));
        for (std::size_t flat = 0; flat < full; ++flat) {
            std::size_t rem = flat;
            for (int k = 0; k < r; ++k) {
                sorted[k] = static_cast<int>(rem % static_cast<std::size_t>(d));
                rem /= static_cast<std::size_t>(d);
            }
            std::sort(sorted.begin(), sorted.end());
            full_map[flat] = static_cast<std::uint32_t>(rank(sorted));
        }
    }

    [[nodiscard]] std::size_t size() const { return multiplicity.size(); }

    [[nodiscard]] std::span<const int> row(std::size_t k) const {
        return {indices.data() + k * static_cast<std::size_t>(order), static_cast<std::size_t>(order)};
    }

    // Position of a sorted multi-index in lexicographic enumeration.
    [[nodiscard]] std::size_t rank(std::span<const int> sorted) const {
        auto lo = std::size_t{0};
        auto hi = size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            auto r = row(mid);
            if (std::lexicographical_compare(r.begin(), r.end(), sorted.begin(), sorted.end()))
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }
};

inline std::shared_ptr<const SymLayout> layout_for(int order, int dim) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const SymLayout>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{order, dim}];
    if (!slot) slot = std::make_shared<const SymLayout>(order, dim);
    return slot;
}

}  // namespace detail

/// Symmetric tensor of order r >= 1 over R^d. Only one entry per multiset of
/// indices is stored, so every permutation of an index reads the same value.
class SymTensor {
public:
    static constexpr int kMaxOrder = 6;

    SymTensor(int order, int dim) {
        if (order < 1 || order > kMaxOrder) throw std::invalid_argument("SymTensor: order out of range");
        if (dim < 1) throw std::invalid_argument("SymTensor: dim must be >= 1");
        layout_ = detail::layout_for(order, dim);
        values_.assign(layout_->size(), 0.0);
    }

    /// Builds a tensor whose canonical entry for multi-index idx is fn(idx).
    template <class Fn>
    static SymTensor generate(int order, int dim, Fn&& fn) {
        SymTensor t(order, dim);
        for (std::size_t k = 0; k < t.size(); ++k) t.values_[k] = fn(t.layout_->row(k));
        return t;
    }

    static SymTensor identity(int dim) {
        return generate(2, dim, [](std::span<const int> i) { return i[0] == i[1] ? 1.0 : 0.0; });
    }

    [[nodiscard]] int order() const { return layout_->order; }
    [[nodiscard]] int dim() const { return layout_->dim; }
    /// Number of stored (canonical) entries.
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    double operator()(std::span<const int> idx) const { return values_[slot(idx)]; }
    double operator()(std::initializer_list<int> idx) const {
        return (*this)(std::span<const int>(idx.begin(), idx.size()));
    }
    /// Sets the entry for idx and, implicitly, for all its permutations.
    void set(std::span<const int> idx, double value) { values_[slot(idx)] = value; }
    void set(std::initializer_list<int> idx, double value) {
        set(std::span<const int>(idx.begin(), idx.size()), value);
    }

    [[nodiscard]] std::span<const int> canonical_index(std::size_t k) const { return layout_->row(k); }
    [[nodiscard]] double multiplicity(std::size_t k) const { return layout_->multiplicity[k]; }
    [[nodiscard]] std::span<const double> canonical_values() const { return values_; }
    [[nodiscard]] std::span<double> canonical_values() { return values_; }

    SymTensor& operator+=(const SymTensor& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    SymTensor& operator*=(double c) {
        for (double& v : values_) v *= c;
        return *this;
    }
    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(SymTensor a, double c) { return a *= c; }
    friend SymTensor operator*(double c, SymTensor a) { return a *= c; }

    /// Largest absolute entry difference; shapes must agree.
    [[nodiscard]] double max_abs_diff(const SymTensor& o) const {
        check_same_shape(o);
        double m = 0.0;
        for (std::size_t k = 0; k < size(); ++k) m = std::max(m, std::abs(values_[k] - o.values_[k]));
        return m;
    }

    /// Pairing with v^{(x)r} for an arbitrary (not necessarily unit) vector v.
    [[nodiscard]] double contract_power(std::span<const double> v) const {
        if (static_cast<int>(v.size()) != dim()) throw std::invalid_argument("SymTensor: dimension mismatch");
        double total = 0.0;
        for (std::size_t k = 0; k < size(); ++k) {
            double p = values_[k] * layout_->multiplicity[k];
            for (int i : layout_->row(k)) p *= v[i];
            total += p;
        }
        return total;
    }

    /// Gradient of v -> contract_power(v), i.e. r * T[v, ..., v, .].
    void contract_power_gradient(std::span<const double> v, std::span<double> grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        const int r = order();
        for (std::size_t k = 0; k < size(); ++k) {
            const auto row = layout_->row(k);
            const double c = values_[k] * layout_->multiplicity[k];
            for (int pos = 0; pos < r; ++pos) {
                double p = c;
                for (int q = 0; q < r; ++q)
                    if (q != pos) p *= v[row[q]];
                grad[row[pos]] += p;
            }
        }
    }

    /// Hessian of v -> contract_power(v), i.e. r (r - 1) T[v, ..., v, ., .], row-major d x d.
    void contract_power_hessian(std::span<const double> v, std::span<double> hess) const {
        std::fill(hess.begin(), hess.end(), 0.0);
        const int r = order();
        const int d = dim();
        for (std::size_t k = 0; k < size(); ++k) {
            const auto row = layout_->row(k);
            const double c = values_[k] * layout_->multiplicity[k];
            for (int a = 0; a < r; ++a) {
                for (int b = 0; b < r; ++b) {
                    if (a == b) continue;
                    double p = c;
                    for (int q = 0; q < r; ++q)
                        if (q != a && q != b) p *= v[row[q]];
                    hess[static_cast<std::size_t>(row[a] * d + row[b])] += p;
                }
            }
        }
    }

private:
    std::size_t slot(std::span<const int> idx) const {
        if (static_cast<int>(idx.size()) != order()) throw std::invalid_argument("SymTensor: index arity");
        std::size_t flat = 0;
        std::size_t stride = 1;
        for (int i : idx) {
            if (i < 0 || i >= dim()) throw std::out_of_range("SymTensor: index out of range");
            flat += static_cast<std::size_t>(i) * stride;
            stride *= static_cast<std::size_t>(dim());
        }
        return layout_->full_map[flat];
    }

    void check_same_shape(const SymTensor& o) const {
        if (o.order() != order() || o.dim() != dim()) throw std::invalid_argument("SymTensor: shape mismatch");
    }

    std::shared_ptr<const detail::SymLayout> layout_;
    Vector values_;
};

/// <t, v^{(x)r}> for a unit vector v.
inline double apply_pure(const SymTensor& t, const UnitVector& v) {
    if (t.dim() != v.dim()) throw std::invalid_argument("apply_pure: dimension mismatch");
    return t.contract_power(v.components());
}

/// u^{(x)r}.
inline SymTensor tensor_power(std::span<const double> u, int r) {
    if (r < 1) throw std::invalid_argument("tensor_power: r must be >= 1");
    return SymTensor::generate(r, static_cast<int>(u.size()), [&](std::span<const int> idx) {
        double p = 1.0;
        for (int i : idx) p *= u[i];
        return p;
    });
}

struct InjectiveNormOptions {
    int restarts = 32;
    double tol = 1e-10;
    int max_iterations = 20000;
    std::uint64_t seed = 0x5eed;
};

namespace detail {

// Solves the (n x n) row-major system a x = b in place by partial pivoting.
// Returns false when the matrix is numerically singular.
inline bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (std::abs(a[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * b[c];
        b[i] = s / a[i * n + i];
    }
    return true;
}

// Maximizes sign * <t, v^r> over the unit sphere: projected gradient ascent with
// backtracking, switching to Riemannian Newton steps once the gradient is small.
inline double sphere_ascent(const SymTensor& t, Vector v, double sign, const InjectiveNormOptions& opt) {
    const std::size_t d = v.size();
    Vector grad(d), trial(d), hess(d * d);
    std::vector<double> kkt((d + 1) * (d + 1)), rhs(d + 1);
    double value = sign * t.contract_power(v);
    double step = 1.0;
    int stalled = 0;
    auto retract = [&](const Vector& direction, double scale) {
        for (std::size_t i = 0; i < d; ++i) trial[i] = v[i] + scale * direction[i];
        const double n = norm(trial);
        for (double& x : trial) x /= n;
        return sign * t.contract_power(trial);
    };
    for (int it = 0; it < opt.max_iterations; ++it) {
        t.contract_power_gradient(v, grad);
        const double radial = dot(grad, v);
        for (std::size_t i = 0; i < d; ++i) grad[i] = sign * (grad[i] - radial * v[i]);
        const double gnorm = norm(grad);
        if (gnorm <= opt.tol) break;

        {
            // Riemannian Hessian P (sign * Hess) P - sign * <grad, v> I on the tangent
            // space, solved with the constraint <xi, v> = 0 as a bordered system.
            t.contract_power_hessian(v, hess);
            const std::size_t n = d + 1;
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j)
                    kkt[i * n + j] = sign * hess[i * d + j] - (i == j ? sign * radial : 0.0);
                kkt[i * n + d] = v[i];
                kkt[d * n + i] = v[i];
                rhs[i] = -grad[i];
            }
            kkt[d * n + d] = 0.0;
            rhs[d] = 0.0;
            if (solve_dense(kkt, rhs, n)) {
                Vector xi(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(d));
                const double candidate = retract(xi, 1.0);
                // far from a maximum the Newton step may head to a saddle; keep it only on ascent
                const bool near = gnorm < 1e-2 * (1.0 + std::abs(value));
                if (candidate > value || (near && candidate >= value - 1e-15 * (1.0 + std::abs(value)))) {
                    v.swap(trial);
                    value = std::max(value, candidate);
                    continue;
                }
            }
        }

        step = std::min(step * 2.0, 1e6);
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            const double candidate = retract(grad, step);
            double ascent = 0.0;
            for (std::size_t i = 0; i < d; ++i) ascent += grad[i] * (trial[i] - v[i]);
            if (candidate > value && candidate >= value + 1e-4 * ascent) {
                // a degenerate maximum lets the gradient decay much slower than the value
                stalled = candidate - value <= 1e-15 * (1.0 + std::abs(value)) ? stalled + 1 : 0;
                v.swap(trial);
                value = candidate;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved || stalled >= 8) break;
    }
    return value;
}

}  // namespace detail

/// Injective norm sup_{|v|=1} |<t, v^{(x)r}>| of a symmetric tensor. For r >= 2
/// this is a multi-start local search and hence a lower bound of the true value.
inline double injective_norm_symmetric(const SymTensor& t, const InjectiveNormOptions& opt = {}) {
    if (opt.restarts < 1) throw std::invalid_argument("injective_norm_symmetric: restarts must be >= 1");
    const auto values = t.canonical_values();
    if (t.order() == 1) {
        double s = 0.0;
        for (double x : values) s += x * x;
        return std::sqrt(s);
    }
    if (std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; })) return 0.0;

    Rng rng = make_rng(opt.seed);
    const auto d = static_cast<std::size_t>(t.dim());
    const bool even = t.order() % 2 == 0;
    double best = 0.0;
    Vector start(d);
    for (int s = 0; s < opt.restarts; ++s) {
        double n = 0.0;
        do {
            fill_normal(rng, start);
            n = norm(start);
        } while (n == 0.0);
        for (double& x : start) x /= n;
        best = std::max(best, detail::sphere_ascent(t, start, 1.0, opt));
        if (even) best = std::max(best, detail::sphere_ascent(t, start, -1.0, opt));
    }
    return best;
}

inline double injective_norm_symmetric(const SymTensor& t, int restarts, double tol) {
    InjectiveNormOptions opt;
    opt.restarts = restarts;
    opt.tol = tol;
    return injective_norm_symmetric(t, opt);
}

}  // namespace steinclt
