#include "steinclt/smoothing.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace steinclt {
namespace {

TEST(Hermite, LowOrderPolynomials) {
    for (double x : {-2.5, -0.3, 0.0, 1.7}) {
        EXPECT_DOUBLE_EQ(hermite_he(0, x), 1.0);
        EXPECT_DOUBLE_EQ(hermite_he(1, x), x);
        EXPECT_NEAR(hermite_he(2, x), x * x - 1.0, 1e-14);
        EXPECT_NEAR(hermite_he(3, x), x * x * x - 3.0 * x, 1e-13);
        EXPECT_NEAR(hermite_he(4, x), x * x * x * x - 6.0 * x * x + 3.0, 1e-13);
    }
}

TEST(Hermite, DensityDerivativeMatchesFiniteDifferences) {
    for (int k = 0; k < 4; ++k) {
        for (double z : {-1.3, 0.2, 2.0}) {
            const double h = 1e-5;
            const double fd = (normal_density_derivative(k, z + h) - normal_density_derivative(k, z - h)) / (2 * h);
            EXPECT_NEAR(normal_density_derivative(k + 1, z), fd, 1e-8);
        }
    }
}

TEST(Hermite, TensorIsGradientOfGaussianDensity) {
    // grad^2 phi_d = H_2 phi_d, checked entrywise by differencing grad phi_d = -z phi_d.
    const Vector z{0.4, -1.1};
    const auto h2 = hermite_tensor(z, 2);
    EXPECT_NEAR(h2({0, 0}), z[0] * z[0] - 1.0, 1e-15);
    EXPECT_NEAR(h2({0, 1}), z[0] * z[1], 1e-15);
    const auto h3 = hermite_tensor(z, 3);
    EXPECT_NEAR(h3({0, 0, 1}), (z[0] * z[0] - 1.0) * z[1], 1e-15);
    EXPECT_NEAR(h3({1, 1, 1}), z[1] * z[1] * z[1] - 3.0 * z[1], 1e-15);
}

TEST(SmoothingConstants, ClosedFormsMatchQuadrature) {
    for (int s = 0; s <= 3; ++s) {
        const auto q = constants_c_quadrature(s);
        EXPECT_NEAR(q.value, constants_c(s), 1e-10) << "s=" << s;
    }
    EXPECT_DOUBLE_EQ(constants_c(0), 1.0);
    EXPECT_NEAR(constants_c(1), 2.0 / std::sqrt(2.0 * M_PI), 1e-15);
    EXPECT_NEAR(constants_c(3), (2.0 + 8.0 * std::exp(-1.5)) / std::sqrt(2.0 * M_PI), 1e-15);
    EXPECT_THROW(constants_c(4), std::out_of_range);
    EXPECT_THROW(constants_c(-1), std::out_of_range);
    const auto k = SmoothingConstants::closed_form();
    EXPECT_EQ(k[0], 1.0);
    EXPECT_EQ(k[2], constants_c(2));
}

TEST(Smooth, ZeroBandwidthIsExact) {
    const auto f = battery::cosine({1.0, 0.5});
    const Vector x{0.3, -0.2};
    const auto e = smooth(f, 0.0, x, 10, 1);
    EXPECT_EQ(e.mean, f(x));
    EXPECT_EQ(e.se, 0.0);
}

TEST(Smooth, SquaredNormAtOrigin) {
    const auto e = smooth(battery::squared_norm(2), 0.5, Vector{0.0, 0.0}, kDefaultSmoothSamples, 3);
    EXPECT_NEAR(e.mean, 0.5, 4 * e.se);
}

TEST(Smooth, LinearIsUnchanged) {
    const auto f = battery::linear({0.2, -1.0, 0.7});
    const Vector x{1.0, 2.0, -0.5};
    const auto e = smooth(f, 0.8, x, kDefaultSmoothSamples, 4);
    EXPECT_NEAR(e.mean, f(x), 4 * e.se);
}

TEST(Smooth, CosineCharacteristicFunction) {
    const auto e = smooth(battery::cosine({1.0}), 1.0, Vector{0.0}, kDefaultSmoothSamples, 5);
    EXPECT_NEAR(e.mean, std::exp(-0.5), 4 * e.se);
    EXPECT_NEAR(std::exp(-0.5), 0.60653, 1e-5);
}

TEST(Smooth, DeterministicGivenSeedAndThreadCount) {
    const auto f = battery::sine({1.0, 1.0});
    const Vector x{0.1, 0.2};
    set_thread_count(1);
    const auto a = smooth(f, 0.3, x, 50'000, 9);
    set_thread_count(4);
    const auto b = smooth(f, 0.3, x, 50'000, 9);
    set_thread_count(0);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.se, b.se);
}

TEST(Smooth, StandardBandwidthAtOriginIsGaussianMean) {
    // N f = E f(Z); for exp(-|w|^2/2) this is 2^{-d/2}
    const auto e = smooth(battery::gaussian_bump(2), 1.0, Vector{0.0, 0.0}, kDefaultSmoothSamples, 6);
    EXPECT_NEAR(e.mean, 0.5, 4 * e.se);
}

TEST(Smooth, Semigroup) {
    // N_delta(N_eps f) = N_sqrt(eps^2 + delta^2) f, with the inner smoothing itself sampled
    const auto f = battery::cosine({1.0, -0.5});
    const Vector x{0.4, 0.1};
    const double eps = 0.6, delta = 0.8;
    const auto inner = smoothed_function(f, eps, 400, 17);
    const auto nested = smooth(inner, delta, x, 2000, 18);
    const auto direct = smooth(f, std::hypot(eps, delta), x, 200'000, 19);
    // inner estimates share one seed, so their error is a smooth function of x: treat
    // it as an additional Monte Carlo term of 400 draws
    const double inner_se = std::sqrt(0.5 / 400.0);
    EXPECT_NEAR(nested.mean, direct.mean, 4 * std::sqrt(nested.se * nested.se + direct.se * direct.se + inner_se * inner_se));
    // closed form: exp(-|u|^2 sigma^2 / 2) cos(<u, x>)
    const double u2 = 1.25;
    EXPECT_NEAR(direct.mean, std::exp(-0.5 * u2) * std::cos(0.35), 4 * direct.se);
}

TEST(SmoothDerivative, QuadraticHessianIsTwiceIdentity) {
    for (const Vector& x : {Vector{0.0, 0.0}, Vector{1.5, -0.7}}) {
        const auto e = smooth_derivative(battery::squared_norm(2), 0.7, x, 2, kDefaultDerivativeSamples, 7);
        const auto expected = SymTensor::identity(2) * 2.0;
        for (std::size_t k = 0; k < e.mean.size(); ++k)
            EXPECT_NEAR(e.mean.canonical_values()[k], expected.canonical_values()[k], 4 * e.se.canonical_values()[k]);
    }
}

TEST(SmoothDerivative, LinearHasNoCurvature) {
    const auto e = smooth_derivative(battery::linear({1.0, 2.0}), 0.5, Vector{0.3, 0.3}, 2, kDefaultDerivativeSamples, 8);
    for (std::size_t k = 0; k < e.mean.size(); ++k) EXPECT_NEAR(e.mean.canonical_values()[k], 0.0, 4 * e.se.canonical_values()[k]);
}

TEST(SmoothDerivative, CosineGradientAtOriginVanishes) {
    const auto e = smooth_derivative(battery::cosine({1.0}), 0.5, Vector{0.0}, 1, kDefaultDerivativeSamples, 9);
    EXPECT_NEAR(e.mean({0}), 0.0, 4 * e.se({0}));
}

TEST(SmoothDerivative, CosineAllOrdersMatchClosedForm) {
    // grad^s N_eps cos(<u,w>) = exp(-eps^2 |u|^2 / 2) cos^{(s)}(<u,x>) u^{(x)s}
    const Vector u{1.0};
    const Vector x{0.7};
    const double eps = 0.5;
    const double damp = std::exp(-0.125);
    const double expected[] = {-std::sin(0.7), -std::cos(0.7), std::sin(0.7), std::cos(0.7)};
    for (int s = 1; s <= 4; ++s) {
        const auto e = smooth_derivative(battery::cosine(u), eps, x, s, kDefaultDerivativeSamples, 10 + s);
        std::vector<int> idx(static_cast<std::size_t>(s), 0);
        EXPECT_NEAR(e.mean(idx), damp * expected[s - 1], 4 * e.se(idx)) << "s=" << s;
    }
}

TEST(SmoothDerivative, RejectsNonPositiveBandwidth) {
    const auto f = battery::cosine({1.0});
    EXPECT_THROW(smooth_derivative(f, 0.0, Vector{0.0}, 1), std::invalid_argument);
    EXPECT_THROW(smooth_derivative(f, -1.0, Vector{0.0}, 1), std::invalid_argument);
    EXPECT_THROW(smooth_derivative(f, 1.0, Vector{0.0}, 5), std::invalid_argument);
}

TEST(EstimateMr, WorkedExamples) {
    EXPECT_NEAR(estimate_Mr(battery::linear({0.6, 0.8}), 1, 1000, 1), 1.0, 1e-6);
    EXPECT_NEAR(estimate_Mr(battery::half_squared_norm(3), 2, 1000, 2), 1.0, 1e-6);
    const double m = estimate_Mr(battery::sine({1.0}), 1, 1000, 3);
    EXPECT_GE(m, 0.95);
    EXPECT_LE(m, 1.0);
}

TEST(TestFunction, ClosedFormGradientsMatchFiniteDifferences) {
    Rng rng = make_rng(31);
    for (int d = 1; d <= 3; ++d) {
        auto fs = battery::stein_battery(d);
        fs.push_back(battery::soft_norm(d));
        fs.push_back(battery::cubic(battery::diagonal_direction(d)));
        for (const auto& f : fs) {
            const TestFunction numeric(f.name(), d, [&f](std::span<const double> w) { return f(w); });
            for (int k = 0; k < 20; ++k) {
                Vector x(static_cast<std::size_t>(d));
                fill_normal(rng, x);
                const auto exact = f.derivative(1, x);
                const auto fd = numeric.derivative(1, x);
                for (int i = 0; i < d; ++i)
                    EXPECT_NEAR(fd({i}), exact({i}), 1e-5 * std::max(1.0, std::abs(exact({i})))) << f.name();
            }
        }
    }
}

TEST(TestFunction, HigherOracleOrdersAreConsistent) {
    // grad^{r+1} oracle agrees with differences of the grad^r oracle
    Rng rng = make_rng(32);
    for (int d = 1; d <= 3; ++d) {
        for (const auto& f : battery::stein_battery(d)) {
            for (int r = 1; r < 4; ++r) {
                if (!f.closed_form(r) || !f.closed_form(r + 1)) continue;
                Vector x(static_cast<std::size_t>(d));
                fill_normal(rng, x);
                const Vector dir = battery::diagonal_direction(d);
                const double h = 1e-5;
                Vector xp = x, xm = x;
                for (int i = 0; i < d; ++i) {
                    xp[i] += h * dir[i];
                    xm[i] -= h * dir[i];
                }
                // <grad^{r+1} f(x), dir^{r+1}> = d/dt <grad^r f(x + t dir), dir^r>
                const double fd = (f.derivative(r, xp).contract_power(dir) - f.derivative(r, xm).contract_power(dir)) / (2 * h);
                EXPECT_NEAR(f.derivative(r + 1, x).contract_power(dir), fd, 1e-5) << f.name() << " r=" << r;
            }
        }
    }
}

TEST(TestFunction, DeclaredSeminormsDominateEmpiricalQuotients) {
    for (int d = 1; d <= 2; ++d) {
        const Vector u = battery::diagonal_direction(d);
        std::vector<TestFunction> fs = battery::stein_battery(d);
        fs.push_back(battery::soft_norm(d));
        fs.push_back(battery::absolute(u));
        for (const auto& f : fs) {
            for (int r = 1; r <= 4; ++r) {
                const auto declared = f.declared_M(r);
                if (!declared || (r > 1 && !f.has_derivative(r - 1))) continue;
                EXPECT_LE(estimate_Mr(f, r, 1000, 40 + r), *declared * (1 + 1e-6) + 1e-9) << f.name() << " r=" << r;
            }
        }
    }
}

TEST(TestFunction, MissingHighOrderOracleThrows) {
    const auto f = battery::soft_norm(2);
    EXPECT_TRUE(f.has_derivative(2));
    EXPECT_FALSE(f.has_derivative(3));
    EXPECT_THROW((void)f.derivative(3, Vector{0.0, 0.0}), std::logic_error);
    EXPECT_THROW(estimate_Mr(f, 4, 10, 0), std::invalid_argument);
}

TEST(TestFunction, FiniteDifferenceHessianFallback) {
    const TestFunction f("poly", 2, [](std::span<const double> w) { return w[0] * w[0] * w[1] + 3 * w[1] * w[1]; });
    const auto h = f.derivative(2, Vector{0.5, -1.0});
    EXPECT_NEAR(h({0, 0}), -2.0, 1e-5);
    EXPECT_NEAR(h({0, 1}), 1.0, 1e-5);
    EXPECT_NEAR(h({1, 1}), 6.0, 1e-5);
}

TEST(SmoothingLemma, SingleCaseHolds) {
    // M_2(N_eps |w_1|) <= c_1 / eps; |w_1| makes the bound tight near the origin
    const auto f = battery::absolute({1.0});
    const double eps = 0.5;
    const double m = estimate_Mr_smoothed(f, eps, 1, 300, 20'000, 77);
    EXPECT_LE(m, constants_c(1) / eps * 1.02);
    EXPECT_GT(m, 0.5 * constants_c(1) / eps);
}

}  // namespace
}  // namespace steinclt
