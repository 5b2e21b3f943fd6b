#pragma once

// Exact empirical W1 between equal-size point clouds by optimal assignment, a
// replicated estimator of W1(L(W), N(0, I_d)) with a bootstrap interval, and
// log-log rate fitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinclt/core/parallel.hpp"
#include "steinclt/core/random.hpp"
#include "steinclt/sampler.hpp"

namespace steinclt {

/// m points in R^d with weights 1/m, stored row-major.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
        if (dim_ < 1) throw std::invalid_argument("EmpiricalMeasure: dim must be >= 1");
        if (coords_.empty() || coords_.size() % static_cast<std::size_t>(dim_) != 0)
            throw std::invalid_argument("EmpiricalMeasure: need m >= 1 points of dimension " + std::to_string(dim_));
        for (double x : coords_)
            if (!std::isfinite(x)) throw std::invalid_argument("EmpiricalMeasure: points must be finite");
    }

    /// m draws from a sampler.
    static EmpiricalMeasure sample(const PointSampler& sampler, std::size_t m, Rng& rng) {
        std::vector<double> coords(m * static_cast<std::size_t>(sampler.dim));
        for (std::size_t i = 0; i < m; ++i) sampler(rng, std::span<double>(coords).subspan(i * sampler.dim, sampler.dim));
        return EmpiricalMeasure(sampler.dim, std::move(coords));
    }

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return std::span<const double>(coords_).subspan(i * dim_, dim_);
    }
    [[nodiscard]] const std::vector<double>& coords() const { return coords_; }

    /// The same cloud moved by v.
    [[nodiscard]] EmpiricalMeasure shifted(std::span<const double> v) const {
        if (v.size() != static_cast<std::size_t>(dim_)) throw std::invalid_argument("EmpiricalMeasure::shifted: dimension mismatch");
        auto c = coords_;
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[i % dim_];
        return EmpiricalMeasure(dim_, std::move(c));
    }

private:
    int dim_;
    std::vector<double> coords_;
};

/// Minimum-cost perfect matching on a dense n x n cost matrix (row-major), by the
/// Jonker-Volgenant method: column reduction with reduction transfer, then shortest
/// augmenting paths. JV's augmenting row reduction is left out; on Euclidean costs it
/// spends most of its time on tiny price decrements and was slower than augmenting
/// directly. Returns the column assigned to each row.
class AssignmentSolver {
public:
    std::vector<int> solve(std::span<const double> cost, std::size_t n) {
        if (cost.size() != n * n) throw std::invalid_argument("AssignmentSolver: cost must be n x n");
        c_ = cost.data();
        n_ = n;
        x_.assign(n, -1);
        y_.assign(n, -1);
        v_.assign(n, 0.0);
        if (n == 0) return x_;
        const std::vector<int> free_rows = column_reduction();
        d_.assign(n, 0.0);
        pred_.assign(n, 0);
        cols_.resize(n);
        for (int i : free_rows) augment(i);
        return x_;
    }

private:
    [[nodiscard]] double c(std::size_t i, std::size_t j) const { return c_[i * n_ + j]; }

    // Invariant after every phase: an assigned row's column minimises c(i, .) - v(.).
    std::vector<int> column_reduction() {
        const std::size_t n = n_;
        std::vector<int> argmin(n, 0);
        for (std::size_t j = 0; j < n; ++j) {
            double best = c(0, j);
            for (std::size_t i = 1; i < n; ++i)
                if (c(i, j) < best) {
                    best = c(i, j);
                    argmin[j] = static_cast<int>(i);
                }
            v_[j] = best;
        }
        std::vector<int> hits(n, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const int i = argmin[j];
            ++hits[i];
            if (x_[i] < 0) {
                x_[i] = static_cast<int>(j);
                y_[j] = i;
            }
        }
        std::vector<int> free_rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (x_[i] < 0) {
                free_rows.push_back(static_cast<int>(i));
            } else if (hits[i] == 1) {
                // reduction transfer: lower v on the row's column to its second-best slack
                const auto j = static_cast<std::size_t>(x_[i]);
                double second = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < n; ++k)
                    if (k != j) second = std::min(second, c(i, k) - v_[k]);
                if (std::isfinite(second)) v_[j] -= second;
            }
        }
        return free_rows;
    }

    /// Dijkstra over columns from free row `start`, then flips the path.
    void augment(int start) {
        const std::size_t n = n_;
        std::iota(cols_.begin(), cols_.end(), 0);
        for (std::size_t j = 0; j < n; ++j) {
            d_[j] = c(start, j) - v_[j];
            pred_[j] = start;
        }
        // cols_[0, ready) are settled, [ready, lo) scanned, [lo, hi) at the current minimum
        std::size_t lo = 0, hi = 0, ready = 0;
        int sink = -1;
        while (sink < 0) {
            if (lo == hi) {
                ready = lo;
                hi = lo + 1;
                double mind = d_[cols_[lo]];
                for (std::size_t k = hi; k < n; ++k) {
                    const int j = cols_[k];
                    if (d_[j] <= mind) {
                        if (d_[j] < mind) {
                            hi = lo;
                            mind = d_[j];
                        }
                        cols_[k] = cols_[hi];
                        cols_[hi++] = j;
                    }
                }
                for (std::size_t k = lo; k < hi; ++k)
                    if (y_[cols_[k]] < 0) {
                        sink = cols_[k];
                        break;
                    }
            }
            if (sink < 0) sink = scan(lo, hi);
        }
        const double mind = d_[sink];
        for (std::size_t k = 0; k < ready; ++k) {
            const int j = cols_[k];
            v_[j] += d_[j] - mind;
        }
        int j = sink;
        for (;;) {
            const int i = pred_[j];
            y_[j] = i;
            std::swap(j, x_[i]);
            if (i == start) break;
        }
    }

    int scan(std::size_t& lo, std::size_t& hi) {
        const std::size_t n = n_;
        while (lo != hi) {
            const int j = cols_[lo++];
            const int i = y_[j];
            const double mind = d_[j];
            const double h = c(i, j) - v_[j] - mind;
            for (std::size_t k = hi; k < n; ++k) {
                const int jj = cols_[k];
                const double reduced = c(i, jj) - v_[jj] - h;
                if (reduced < d_[jj]) {
                    d_[jj] = reduced;
                    pred_[jj] = i;
                    if (reduced == mind) {
                        if (y_[jj] < 0) return jj;
                        cols_[k] = cols_[hi];
                        cols_[hi++] = jj;
                    }
                }
            }
        }
        return -1;
    }

    const double* c_ = nullptr;
    std::size_t n_ = 0;
    std::vector<int> x_, y_, pred_, cols_;
    std::vector<double> v_, d_;
};

/// (1/m) min_sigma sum_i |a_i - b_sigma(i)|. On the line the sorted matching is
/// optimal and is used directly.
inline double w1_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("w1_exact: dimension mismatch");
    if (a.size() != b.size())
        throw std::invalid_argument("w1_exact: sizes differ (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    const std::size_t m = a.size();
    const auto d = static_cast<std::size_t>(a.dim());
    if (d == 1) {
        std::vector<double> p = a.coords(), q = b.coords();
        std::sort(p.begin(), p.end());
        std::sort(q.begin(), q.end());
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += std::abs(p[i] - q[i]);
        return s / static_cast<double>(m);
    }
    std::vector<double> cost(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto p = a.point(i);
        for (std::size_t j = 0; j < m; ++j) {
            const auto q = b.point(j);
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
            cost[i * m + j] = std::sqrt(s);
        }
    }
    AssignmentSolver solver;
    const auto match = solver.solve(cost, m);
    // summing the matched distances in sorted order makes w1(a, b) == w1(b, a) bitwise
    std::vector<double> matched(m);
    for (std::size_t i = 0; i < m; ++i) matched[i] = cost[i * m + static_cast<std::size_t>(match[i])];
    std::sort(matched.begin(), matched.end());
    double s = 0.0;
    for (double x : matched) s += x;
    return s / static_cast<double>(m);
}

struct W1Estimate {
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t m = 0;
    std::size_t replications = 0;
    std::vector<double> per_replication;

    [[nodiscard]] double half_width() const { return 0.5 * (ci_hi - ci_lo); }
};

inline constexpr std::size_t kBootstrapResamples = 2000;

/// Percentile bootstrap interval for the mean of `values` at level 1 - alpha.
inline std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, std::uint64_t seed,
                                                   std::size_t resamples = kBootstrapResamples, double alpha = 0.05) {
    if (values.empty()) throw std::invalid_argument("bootstrap_mean_ci: no values");
    Rng rng = make_rng(seed, 0xB007);
    const std::size_t r = values.size();
    std::vector<double> means(resamples);
    for (double& mean : means) {
        double s = 0.0;
        for (std::size_t k = 0; k < r; ++k) s += values[static_cast<std::size_t>(uniform01(rng) * r)];
        mean = s / static_cast<double>(r);
    }
    std::sort(means.begin(), means.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(resamples - 1);
        const auto k = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        return k + 1 < resamples ? means[k] * (1.0 - frac) + means[k + 1] * frac : means[k];
    };
    return {at(0.5 * alpha), at(1.0 - 0.5 * alpha)};
}

/// Replication r compares m draws of W with m independent N(0, I_d) draws, both
/// from stream r of `seed`; replications run in parallel and are reduced in order.
inline W1Estimate w1_estimate(const PointSampler& w_sampler, std::size_t m, std::size_t replications, std::uint64_t seed) {
    if (m < 10) throw std::invalid_argument("w1_estimate: m must be >= 10");
    if (replications < 20) throw std::invalid_argument("w1_estimate: replications must be >= 20");
    const PointSampler z = standard_normal_sampler(w_sampler.dim);
    W1Estimate est;
    est.m = m;
    est.replications = replications;
    est.per_replication.assign(replications, 0.0);
    parallel_for(replications, [&](std::size_t r) {
        Rng rng = make_rng(seed, r);
        const auto a = EmpiricalMeasure::sample(w_sampler, m, rng);
        const auto b = EmpiricalMeasure::sample(z, m, rng);
        est.per_replication[r] = w1_exact(a, b);
    });
    double s = 0.0;
    for (double v : est.per_replication) s += v;
    est.value = s / static_cast<double>(replications);
    const auto [lo, hi] = bootstrap_mean_ci(est.per_replication, seed);
    est.ci_lo = std::min(lo, est.value);
    est.ci_hi = std::max(hi, est.value);
    return est;
}

/// Least-squares slope of log w1 against log n.
inline double rate_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4) throw std::invalid_argument("rate_fit: need at least 4 points, got " + std::to_string(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (!(points[k].first > 0.0)) throw std::invalid_argument("rate_fit: n must be positive");
        if (!(points[k].second > 0.0)) throw std::invalid_argument("rate_fit: w1 values must be positive");
        if (k > 0 && !(points[k].first > points[k - 1].first))
            throw std::invalid_argument("rate_fit: n must be strictly increasing");
    }
    double mx = 0.0, my = 0.0;
    for (const auto& [n, w] : points) {
        mx += std::log(n);
        my += std::log(w);
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [n, w] : points) {
        const double dx = std::log(n) - mx;
        sxy += dx * (std::log(w) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Points with w1 >= factor * floor, in order; the fit stops at the first n that
/// falls below, since later ones measure the sampling floor rather than W1.
inline std::vector<std::pair<double, double>> above_floor(const std::vector<std::pair<double, double>>& points, double floor,
                                                          double factor = 2.0) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : points) {
        if (p.second < factor * floor) break;
        out.push_back(p);
    }
    return out;
}

/// Mean empirical W1 between two independent N(0, I_d) samples of size m.
inline W1Estimate sampling_floor(int d, std::size_t m, std::size_t replications, std::uint64_t seed) {
    return w1_estimate(standard_normal_sampler(d), m, replications, derive_seed(seed, 0xF1002));
}

}  // namespace steinclt
