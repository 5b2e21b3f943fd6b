// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.
//
//   acceptance            run everything
//   acceptance 1 5 8      run the listed criteria

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "oracles.hpp"
#include "steinclt/experiment.hpp"

namespace {

using namespace steinclt;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s;  // 0 = none
    std::function<Outcome()> body;
};

std::string fmt(double x) { return detail::csv_number(x); }

Outcome constants() {
    // closed forms written out independently of the library
    const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
    const double want[4] = {1.0, 2.0 / sqrt_2pi, 4.0 / std::sqrt(2.0 * std::numbers::pi * std::numbers::e),
                            (2.0 + 8.0 * std::exp(-1.5)) / sqrt_2pi};
    Outcome o;
    double worst = 0.0;
    for (int s = 0; s <= 3; ++s) {
        const double got = constants_c_quadrature(s, 1e-12).value;
        worst = std::max({worst, std::abs(got - want[s]), std::abs(constants_c(s) - want[s])});
    }
    o.pass = worst <= 1e-10;
    o.detail = "max abs error " + fmt(worst) + " (tol 1e-10)";
    return o;
}

Outcome stein_identity() {
    double worst = 0.0;
    std::string arg;
    std::uint64_t stream = 0;
    for (int d : {1, 2, 3})
        for (const auto& f : battery::stein_battery(d)) {
            const auto e = stein_expectation(f, standard_normal_sampler(d), 500'000, derive_seed(2, ++stream));
            const double z = std::abs(e.mean) / e.se;
            if (z > worst) {
                worst = z;
                arg = f.name() + " d=" + std::to_string(d);
            }
        }
    return {worst <= 4.0, "18 cases, max |mean|/SE " + fmt(worst) + " at " + arg + " (limit 4)"};
}

Outcome zero_bias() {
    double worst = 0.0;
    std::string arg;
    std::uint64_t seed = 300;
    for (const char* fam : {"rademacher", "uniform", "exponential"})
        for (int d : {1, 2})
            for (int n : {4, 16}) {
                const auto model = iid_model(make_family(fam), d, n);
                const MuBreveMixture mix(model);
                const Vector u = battery::diagonal_direction(d);
                for (const auto& f : {battery::cosine(u), battery::sine(u), battery::gaussian_bump(d)}) {
                    const double z = verify_zero_bias_identity(model, mix, f, 100'000, ++seed).max_z();
                    if (z > worst) {
                        worst = z;
                        arg = std::string(fam) + " d=" + std::to_string(d) + " n=" + std::to_string(n) + " " + f.name();
                    }
                }
            }
    // Rademacher has the Uniform(-1, 1) zero-bias law: density and identity by quadrature
    const auto v = zero_bias_1d(laws::rademacher());
    double exact = 0.0;
    for (double w = -0.975; w < 1.0; w += 0.05) exact = std::max(exact, std::abs(v.pdf(w) - 0.5));
    exact = std::max(exact, std::abs(v.pdf(1.5)));
    for (const auto& f : {battery::cubic({1.0}), battery::sine({1.0}), battery::cosine({1.0}), battery::log_cosh({1.0})})
        exact = std::max(exact, zero_bias_identity_exact(laws::rademacher(), f).gap());
    // E[f'(U)] for U ~ Uniform(-1, 1) and f = sin: (sin 1 - sin(-1)) / 2
    exact = std::max(exact, std::abs(v.expect([](double x) { return std::cos(x); }) - std::sin(1.0)));
    return {worst <= 4.0 && exact <= 1e-9,
            "36 MC checks, max z " + fmt(worst) + " at " + arg + " (limit 4); exact 1-d error " + fmt(exact) +
                " (tol 1e-9)"};
}

Outcome smoothing_lemma() {
    // |w| in d = 1 makes every inequality close to tight near the origin
    const auto f = battery::absolute({1.0});
    const double M1 = estimate_Mr(f, 1, 1000, 4);
    double worst = 0.0;
    std::string arg;
    std::uint64_t seed = 400;
    for (int s : {0, 1, 2})
        for (double eps : {0.25, 0.5, 1.0}) {
            const double lhs = estimate_Mr_smoothed(f, eps, s, 1000, 20'000, ++seed);
            const double rhs = constants_c(s) / std::pow(eps, s) * M1;
            if (lhs / rhs > worst) {
                worst = lhs / rhs;
                arg = "s=" + std::to_string(s) + " eps=" + fmt(eps);
            }
        }
    return {worst <= 1.02, "9 cases, max M_{1+s}(N_eps f) / bound " + fmt(worst) + " at " + arg + " (limit 1.02)"};
}

Outcome circum() {
    double worst = 0.0;
    for (int k = 0; k <= 30; ++k) {
        const auto r = circum_bound_check(std::pow(10.0, -6.0 + 0.4 * k), 1e-10);
        worst = std::max(worst, r.lhs / r.rhs);
    }
    return {worst <= 1.0, "31 grid points, max lhs/rhs " + fmt(worst)};
}

ExperimentConfig w1_config(std::vector<std::string> families, std::vector<int> dims, std::vector<int> ns,
                           std::uint64_t seed) {
    ExperimentConfig c;
    for (auto& f : families) c.families.push_back({f, 0.2});
    c.dims = std::move(dims);
    c.ns = std::move(ns);
    c.estimator.m = 2000;
    c.estimator.replications = 50;
    c.seed = seed;
    return c;
}

Outcome dominance() {
    const auto rows = run(w1_config({"rademacher", "uniform"}, {1, 2, 3}, {25, 100, 400}, 6));
    Outcome o;
    double margin = INFINITY;
    std::string arg;
    for (const auto& r : rows) {
        if (r.bound_m1 < r.w1_ci_lo) o.pass = false;
        if (r.bound_m1 - r.w1_ci_lo < margin) {
            margin = r.bound_m1 - r.w1_ci_lo;
            arg = r.family + " d=" + std::to_string(r.d) + " n=" + std::to_string(r.n) + ": bound " +
                  fmt(r.bound_m1) + " vs ci_lo " + fmt(r.w1_ci_lo);
        }
    }
    o.detail = std::to_string(rows.size()) + " cells, tightest " + arg;
    return o;
}

Outcome rate() {
    std::vector<int> ns;
    for (int n = 1; n <= 256; n *= 2) ns.push_back(n);
    const auto config = w1_config({"rademacher"}, {1}, ns, 7);
    const auto rows = run(config);
    const auto summary = rate_summaries(config, rows).at(0);
    // bound_m3 * sqrt(n) is E|xi|^3 / 2 = 1/2 for every n
    double drift = 0.0;
    for (const auto& r : rows) drift = std::max(drift, std::abs(r.bound_m3 * std::sqrt(r.n) - 0.5));
    Outcome o;
    o.pass = summary.slope && *summary.slope >= -0.65 && *summary.slope <= -0.35 && drift <= 1e-12;
    o.detail = "slope " + (summary.slope ? fmt(*summary.slope) : std::string("NA")) + " over " +
               std::to_string(summary.points) + " values of n above 2x floor " + fmt(summary.floor) +
               " (band [-0.65, -0.35]); bound_m3*sqrt(n) drift " + fmt(drift);
    return o;
}

Outcome assignment() {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> z;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto m = static_cast<std::size_t>(1 + k % 8);
        const int d = 1 + (k / 8) % 3;
        std::vector<Vector> a(m, Vector(static_cast<std::size_t>(d))), b = a;
        std::vector<double> ca, cb;
        for (auto* pts : {&a, &b})
            for (auto& p : *pts)
                for (double& x : p) x = z(gen);
        for (const auto& p : a) ca.insert(ca.end(), p.begin(), p.end());
        for (const auto& p : b) cb.insert(cb.end(), p.begin(), p.end());
        const double got = w1_exact(EmpiricalMeasure(d, ca), EmpiricalMeasure(d, cb));
        worst = std::max(worst, std::abs(got - oracle::brute_force_w1(a, b)));
    }
    return {worst <= 1e-12, "200 instances, max |w1_exact - brute force| " + fmt(worst) + " (tol 1e-12)"};
}

#ifdef STEINCLT_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(STEINCLT_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "steinclt_acceptance";
    std::filesystem::create_directories(dir);
    const auto cfg = dir / "config.json";
    std::ofstream(cfg) << R"({
  "seed": 20240901,
  "families": ["rademacher", "uniform", "exponential", {"name": "two_point", "p": 0.1}],
  "d": [1, 2],
  "n": [4, 16, 64, 256],
  "estimator": {"m": 300, "replications": 20}
})";
    const auto a = dir / "a.csv", b = dir / "b.csv";
    const int ra = run_cli("run --config " + cfg.string() + " --out " + a.string());
    const int rb = run_cli("run --config " + cfg.string() + " --out " + b.string());
    const std::string sa = slurp(a), sb = slurp(b);
    std::filesystem::remove_all(dir);
    Outcome o;
    o.pass = ra == 0 && rb == 0 && !sa.empty() && sa == sb;
    o.detail = "exit codes " + std::to_string(ra) + "/" + std::to_string(rb) + ", " + std::to_string(sa.size()) +
               " bytes, " + (sa == sb ? "identical" : "different");
    return o;
}
#else
Outcome determinism() { return {false, "built without the command-line tool"}; }
#endif

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "smoothing constants by quadrature", 1.0, constants},
        {2, "Stein identity under the normal", 30.0, stein_identity},
        {3, "zero-bias identity", 60.0, zero_bias},
        {4, "smoothing lemma seminorm bounds", 60.0, smoothing_lemma},
        {5, "circum bound on a log grid", 1.0, circum},
        {6, "bound dominates W1 lower CI", 600.0, dominance},
        {7, "n^-1/2 rate", 0.0, rate},
        {8, "assignment exactness", 10.0, assignment},
        {9, "CLI determinism", 0.0, determinism},
    };
    std::set<int> wanted;
    for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

    bool ok = true;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt(std::round(secs * 100) / 100) + " s";
        if (c.time_limit_s > 0.0) {
            timing += " of " + fmt(c.time_limit_s) + " s";
            if (secs > c.time_limit_s) o.pass = false;
        }
        ok = ok && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
                  << " [" << timing << "]" << std::endl;
    }
    return ok ? 0 : 1;
}
