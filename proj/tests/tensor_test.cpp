#include "steinclt/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

namespace steinclt {
namespace {

SymTensor random_symmetric(int order, int dim, Rng& rng) {
    SymTensor t(order, dim);
    for (double& v : t.canonical_values()) v = standard_normal(rng);
    return t;
}

TEST(SymTensor, PermutedIndicesReadTheSameEntry) {
    SymTensor t(3, 3);
    t.set({2, 0, 1}, 4.5);
    EXPECT_EQ(t({0, 1, 2}), 4.5);
    EXPECT_EQ(t({1, 2, 0}), 4.5);
    EXPECT_EQ(t({2, 1, 0}), 4.5);
    EXPECT_EQ(t({0, 0, 1}), 0.0);
    // C(d + r - 1, r) canonical entries
    EXPECT_EQ(t.size(), 10u);
    EXPECT_EQ(SymTensor(4, 10).size(), 715u);
}

TEST(SymTensor, ShapeIsChecked) {
    EXPECT_THROW(SymTensor(0, 2), std::invalid_argument);
    EXPECT_THROW(SymTensor(2, 0), std::invalid_argument);
    SymTensor t(2, 2);
    EXPECT_THROW(t({0, 2}), std::out_of_range);
    EXPECT_THROW(t({0}), std::invalid_argument);
    EXPECT_THROW(t += SymTensor(2, 3), std::invalid_argument);
}

TEST(SymTensor, CanonicalPairingMatchesFullSum) {
    Rng rng = make_rng(11);
    for (int r = 1; r <= 4; ++r) {
        for (int d = 1; d <= 4; ++d) {
            const SymTensor t = random_symmetric(r, d, rng);
            Vector v(static_cast<std::size_t>(d));
            fill_normal(rng, v);
            EXPECT_NEAR(t.contract_power(v), oracle::full_pairing(t, v), 1e-11) << "r=" << r << " d=" << d;
        }
    }
}

TEST(SymTensor, PowerGradientMatchesFiniteDifferences) {
    Rng rng = make_rng(12);
    const SymTensor t = random_symmetric(3, 3, rng);
    Vector v{0.3, -0.7, 1.1}, g(3);
    t.contract_power_gradient(v, g);
    for (int i = 0; i < 3; ++i) {
        Vector p = v, m = v;
        p[i] += 1e-6;
        m[i] -= 1e-6;
        EXPECT_NEAR(g[i], (t.contract_power(p) - t.contract_power(m)) / 2e-6, 1e-6);
    }
}

TEST(UnitVector, RejectsNonUnit) {
    EXPECT_NO_THROW(UnitVector({0.6, 0.8}));
    EXPECT_THROW(UnitVector({0.6, 0.81}), std::invalid_argument);
    EXPECT_THROW(UnitVector::normalized({0.0, 0.0}), std::invalid_argument);
    EXPECT_NEAR(norm(UnitVector::normalized({3.0, 4.0}).components()), 1.0, 1e-15);
}

TEST(ApplyPure, WorkedExamples) {
    const UnitVector e1({1.0, 0.0});
    EXPECT_DOUBLE_EQ(apply_pure(tensor_power(Vector{1.0, 0.0}, 2), e1), 1.0);
    const auto v = UnitVector::normalized({0.3, -2.0});
    EXPECT_NEAR(apply_pure(SymTensor::identity(2), v), 1.0, 1e-15);

    SymTensor t(2, 2);
    t.set({0, 0}, 1.0);
    t.set({1, 1}, -1.0);
    const double th = std::numbers::pi / 4;
    // cos^2 - sin^2 at pi/4
    EXPECT_NEAR(apply_pure(t, UnitVector::normalized({std::cos(th), std::sin(th)})), 0.0, 1e-15);
    EXPECT_THROW(apply_pure(t, UnitVector({1.0, 0.0, 0.0})), std::invalid_argument);
}

TEST(TensorPower, WorkedExamples) {
    const auto a = tensor_power(Vector{1.0, 0.0}, 2);
    EXPECT_EQ(a({0, 0}), 1.0);
    EXPECT_EQ(a({0, 1}), 0.0);
    EXPECT_EQ(a({1, 1}), 0.0);
    const auto zero = tensor_power(Vector{0.0, 0.0, 0.0}, 3);
    for (double v : zero.canonical_values()) EXPECT_EQ(v, 0.0);
    const auto ones = tensor_power(Vector{1.0, 1.0}, 2);
    for (double v : ones.canonical_values()) EXPECT_EQ(v, 1.0);
    EXPECT_THROW(tensor_power(Vector{1.0}, 0), std::invalid_argument);
}

TEST(InjectiveNorm, WorkedExamples) {
    EXPECT_NEAR(injective_norm_symmetric(tensor_power(Vector{2.0, 0.0, 0.0}, 3)), 8.0, 1e-9);
    EXPECT_NEAR(injective_norm_symmetric(tensor_power(Vector{1.2, 0.0, -1.6}, 3)), 8.0, 1e-9);
    for (int d = 1; d <= 5; ++d) EXPECT_NEAR(injective_norm_symmetric(SymTensor::identity(d)), 1.0, 1e-9);
    EXPECT_THROW(injective_norm_symmetric(SymTensor::identity(2), 0, 1e-9), std::invalid_argument);
}

TEST(InjectiveNorm, IndefiniteEvenOrderUsesBothSigns) {
    SymTensor t(2, 2);
    t.set({0, 0}, 0.5);
    t.set({1, 1}, -3.0);
    EXPECT_NEAR(injective_norm_symmetric(t), 3.0, 1e-9);
}

TEST(InjectiveNorm, CrossNormOfUnitPowers) {
    Rng rng = make_rng(21);
    for (int r = 1; r <= 4; ++r) {
        for (int d = 1; d <= 5; ++d) {
            Vector u(static_cast<std::size_t>(d));
            fill_normal(rng, u);
            const auto unit = UnitVector::normalized(u);
            const Vector uv(unit.components().begin(), unit.components().end());
            EXPECT_NEAR(injective_norm_symmetric(tensor_power(uv, r)), 1.0, 1e-9) << "r=" << r << " d=" << d;
        }
    }
}

TEST(InjectiveNorm, Homogeneity) {
    Rng rng = make_rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const SymTensor t = random_symmetric(2 + trial % 3, 1 + trial % 4, rng);
        const double c = 4.0 * standard_normal(rng);
        const double base = injective_norm_symmetric(t);
        EXPECT_NEAR(injective_norm_symmetric(t * c), std::abs(c) * base, 1e-9 * (1.0 + std::abs(c) * base));
    }
}

TEST(InjectiveNorm, RandomOrder3Dim2MatchesGridSearch) {
    Rng rng = make_rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const SymTensor t = random_symmetric(3, 2, rng);
        const double grid = oracle::grid_injective_norm(t, 10'000);
        EXPECT_NEAR(injective_norm_symmetric(t), grid, 1e-3 * grid);
    }
}

TEST(InjectiveNorm, OracleEquivalenceLowOrder) {
    Rng rng = make_rng(24);
    for (int d = 1; d <= 3; ++d) {
        for (int r = 1; r <= 3; ++r) {
            for (int trial = 0; trial < 5; ++trial) {
                const SymTensor t = random_symmetric(r, d, rng);
                const double grid = oracle::grid_injective_norm(t, d == 3 ? 200'000 : 10'000);
                const double ascent = injective_norm_symmetric(t);
                EXPECT_GE(ascent, grid * (1.0 - 1e-12));
                EXPECT_NEAR(ascent, grid, 1e-3 * grid) << "r=" << r << " d=" << d;
            }
        }
    }
}

TEST(InjectiveNorm, TriangleInequalityOnGrid) {
    Rng rng = make_rng(25);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 1 + trial % 3;
        const int r = 1 + (trial / 3) % 3;
        const SymTensor s = random_symmetric(r, d, rng);
        const SymTensor t = random_symmetric(r, d, rng);
        const int pts = 4000;
        EXPECT_LE(oracle::grid_injective_norm(s + t, pts),
                  oracle::grid_injective_norm(s, pts) + oracle::grid_injective_norm(t, pts) + 1e-9);
    }
}

}  // namespace
}  // namespace steinclt
