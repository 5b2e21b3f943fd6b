#pragma once

// Configuration-driven experiments: for every (family, d, n) cell build the
// standardized i.i.d. sum, evaluate the three bounds and estimate W1 to the normal.
// Also the identity/property battery behind the `verify` command.
//
// Needs nlohmann/json on the include path (vendor/json.hpp).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "steinclt/bias.hpp"
#include "steinclt/bounds.hpp"
#include "steinclt/core/parallel.hpp"
#include "steinclt/core/random.hpp"
#include "steinclt/smoothing.hpp"
#include "steinclt/stein.hpp"
#include "steinclt/summand.hpp"
#include "steinclt/test_function.hpp"
#include "steinclt/wasserstein.hpp"

namespace steinclt {

/// Invalid or incomplete configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FamilySpec {
    std::string name;
    double p = 0.2;  // two_point only

    [[nodiscard]] std::string label() const {
        if (name != "two_point") return name;
        std::ostringstream os;
        os << name << "(p=" << p << ")";
        return os.str();
    }
    [[nodiscard]] Family build() const { return make_family(name, p); }
};

struct EstimatorSettings {
    std::size_t m = 2000;
    std::size_t replications = 50;
    std::size_t mc_n = 100'000;
    bool rate_footer = true;
};

struct VerifySettings {
    std::size_t zero_bias_n = 4;
    double slepian_eps = 0.1;
    int slepian_alpha_nodes = 16;
    /// The Slepian check is inconclusive when 4 SE exceeds this.
    double slepian_max_halfwidth = 0.05;
    double n_se = 4.0;
    /// Test fixture: "c0".."c3" corrupts that constant before the quadrature check.
    std::string inject_fault;
};

struct ExperimentConfig {
    std::vector<FamilySpec> families;
    std::vector<int> dims;
    std::vector<int> ns;
    EstimatorSettings estimator;
    VerifySettings verify;
    std::uint64_t seed = 0;
    std::string csv_path;
    int threads = 0;
};

namespace detail {

template <class T>
T get_positive(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("'" + key + "' must be a positive integer");
    return static_cast<T>(v.get<long long>());
}

inline std::vector<int> positive_list(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing '" + key + "'");
    const auto& v = j.at(key);
    std::vector<int> out;
    if (v.is_number_integer()) {
        out.push_back(v.get<int>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError("'" + key + "' entries must be integers");
            out.push_back(e.get<int>());
        }
    } else {
        throw ConfigError("'" + key + "' must be an integer or a list of integers");
    }
    if (out.empty()) throw ConfigError("'" + key + "' is empty");
    for (int x : out)
        if (x < 1) throw ConfigError("'" + key + "' entries must be positive");
    return out;
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

}  // namespace detail

/// Layout: {"seed": 42, "families": ["rademacher", {"name": "two_point", "p": 0.3}],
/// "d": [1, 2], "n": [25, 100], "estimator": {"m", "replications", "mc_n", "rate_footer"},
/// "verify": {...}, "output": {"csv": "path"}, "threads": 0}.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j, {"seed", "families", "d", "n", "estimator", "verify", "output", "threads"}, "config");
    ExperimentConfig c;
    if (!j.contains("seed")) throw ConfigError("missing 'seed' (there is no clock-based default)");
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
        throw ConfigError("'seed' must be a non-negative integer");
    if (j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0) throw ConfigError("'seed' must be >= 0");
    c.seed = j.at("seed").get<std::uint64_t>();

    if (!j.contains("families") || !j.at("families").is_array() || j.at("families").empty())
        throw ConfigError("'families' must be a non-empty list");
    for (const auto& f : j.at("families")) {
        FamilySpec spec;
        if (f.is_string()) {
            spec.name = f.get<std::string>();
        } else if (f.is_object() && f.contains("name") && f.at("name").is_string()) {
            detail::reject_unknown(f, {"name", "p"}, "family entry");
            spec.name = f.at("name").get<std::string>();
            if (f.contains("p")) {
                if (!f.at("p").is_number()) throw ConfigError("family 'p' must be a number");
                spec.p = f.at("p").get<double>();
            }
        } else {
            throw ConfigError("family entries must be names or {\"name\": ..., \"p\": ...}");
        }
        try {
            const Family fam = spec.build();
            iid_model(fam, 1, 1);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        c.families.push_back(spec);
    }
    c.dims = detail::positive_list(j, "d");
    c.ns = detail::positive_list(j, "n");

    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        if (!e.is_object()) throw ConfigError("'estimator' must be an object");
        detail::reject_unknown(e, {"m", "replications", "mc_n", "rate_footer"}, "estimator");
        c.estimator.m = detail::get_positive<std::size_t>(e, "m", c.estimator.m);
        c.estimator.replications = detail::get_positive<std::size_t>(e, "replications", c.estimator.replications);
        c.estimator.mc_n = detail::get_positive<std::size_t>(e, "mc_n", c.estimator.mc_n);
        if (e.contains("rate_footer")) {
            if (!e.at("rate_footer").is_boolean()) throw ConfigError("'rate_footer' must be true or false");
            c.estimator.rate_footer = e.at("rate_footer").get<bool>();
        }
    }
    if (c.estimator.m < 10) throw ConfigError("'m' must be >= 10");
    if (c.estimator.replications < 20) throw ConfigError("'replications' must be >= 20");

    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        if (!v.is_object()) throw ConfigError("'verify' must be an object");
        detail::reject_unknown(v, {"zero_bias_n", "slepian_eps", "slepian_alpha_nodes", "slepian_max_halfwidth", "n_se",
                                   "inject_fault"},
                               "verify");
        c.verify.zero_bias_n = detail::get_positive<std::size_t>(v, "zero_bias_n", c.verify.zero_bias_n);
        c.verify.slepian_alpha_nodes = detail::get_positive<int>(v, "slepian_alpha_nodes", c.verify.slepian_alpha_nodes);
        for (auto [key, slot] : {std::pair{"slepian_eps", &c.verify.slepian_eps},
                                 std::pair{"slepian_max_halfwidth", &c.verify.slepian_max_halfwidth},
                                 std::pair{"n_se", &c.verify.n_se}}) {
            if (!v.contains(key)) continue;
            if (!v.at(key).is_number() || !(v.at(key).get<double>() > 0.0))
                throw ConfigError(std::string("'") + key + "' must be a positive number");
            *slot = v.at(key).get<double>();
        }
        if (!(c.verify.slepian_eps < kHalfPi)) throw ConfigError("'slepian_eps' must be below pi/2");
        if (c.verify.slepian_alpha_nodes < 8) throw ConfigError("'slepian_alpha_nodes' must be >= 8");
        if (v.contains("inject_fault")) {
            if (!v.at("inject_fault").is_string()) throw ConfigError("'inject_fault' must be a string");
            c.verify.inject_fault = v.at("inject_fault").get<std::string>();
            const auto& f = c.verify.inject_fault;
            if (!f.empty() && !(f.size() == 2 && f[0] == 'c' && f[1] >= '0' && f[1] <= '3'))
                throw ConfigError("'inject_fault' must be one of c0, c1, c2, c3");
        }
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (!o.is_object()) throw ConfigError("'output' must be an object");
        detail::reject_unknown(o, {"csv"}, "output");
        if (o.contains("csv")) {
            if (!o.at("csv").is_string()) throw ConfigError("'output.csv' must be a path");
            c.csv_path = o.at("csv").get<std::string>();
        }
    }
    if (j.contains("threads")) {
        if (!j.at("threads").is_number_integer() || j.at("threads").get<int>() < 0)
            throw ConfigError("'threads' must be a non-negative integer");
        c.threads = j.at("threads").get<int>();
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

struct ResultRow {
    std::string family;
    int d = 0;
    int n = 0;
    double bound_m1 = 0.0;
    double bound_m2 = 0.0;
    double bound_m3 = 0.0;
    double w1_value = 0.0;
    double w1_ci_lo = 0.0;
    double w1_ci_hi = 0.0;
    std::uint64_t seed = 0;
};

/// Seed of one cell, a hash of the master seed, the family label, d and n.
inline std::uint64_t cell_seed(std::uint64_t master, const std::string& family, int d, int n) {
    std::uint64_t s = derive_seed(master, hash_string(family));
    s = derive_seed(s, static_cast<std::uint64_t>(d));
    return derive_seed(s, static_cast<std::uint64_t>(n));
}

inline ResultRow run_cell(const FamilySpec& family, int d, int n, const EstimatorSettings& est, std::uint64_t master) {
    ResultRow row;
    row.family = family.label();
    row.d = d;
    row.n = n;
    row.seed = cell_seed(master, row.family, d, n);
    const SumModel model = iid_model(family.build(), d, n);
    row.bound_m1 = bound_m1(model).total;
    row.bound_m2 = bound_m2(model).total;
    row.bound_m3 = bound_m3(model).total;
    const W1Estimate w = w1_estimate(model.w_sampler(), est.m, est.replications, row.seed);
    row.w1_value = w.value;
    row.w1_ci_lo = w.ci_lo;
    row.w1_ci_hi = w.ci_hi;
    return row;
}

/// All cells in (family, d, n) order, evaluated in parallel.
inline std::vector<ResultRow> run(const ExperimentConfig& config) {
    struct Cell {
        const FamilySpec* family;
        int d, n;
    };
    std::vector<Cell> cells;
    for (const auto& f : config.families)
        for (int d : config.dims)
            for (int n : config.ns) cells.push_back({&f, d, n});
    std::vector<ResultRow> rows(cells.size());
    parallel_for(cells.size(), [&](std::size_t k) {
        rows[k] = run_cell(*cells[k].family, cells[k].d, cells[k].n, config.estimator, config.seed);
    });
    return rows;
}

struct RateSummary {
    std::string family;
    int d = 0;
    double floor = 0.0;
    std::size_t points = 0;
    std::optional<double> slope;
};

/// Per (family, d): the sampling floor of N(0, I_d) against itself at the same m,
/// and the log-log slope of w1 over the leading n whose w1 stays above twice it.
inline std::vector<RateSummary> rate_summaries(const ExperimentConfig& config, const std::vector<ResultRow>& rows) {
    std::vector<int> dims;
    for (const auto& r : rows)
        if (std::find(dims.begin(), dims.end(), r.d) == dims.end()) dims.push_back(r.d);
    std::vector<double> floors(dims.size());
    parallel_for(dims.size(), [&](std::size_t k) {
        floors[k] = sampling_floor(dims[k], config.estimator.m, config.estimator.replications, config.seed).value;
    });
    std::vector<RateSummary> out;
    for (const auto& f : config.families)
        for (std::size_t k = 0; k < dims.size(); ++k) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rows)
                if (r.family == f.label() && r.d == dims[k]) pts.emplace_back(r.n, r.w1_value);
            std::sort(pts.begin(), pts.end());
            RateSummary s{f.label(), dims[k], floors[k], 0, std::nullopt};
            const auto kept = above_floor(pts, floors[k]);
            s.points = kept.size();
            if (kept.size() >= 4) s.slope = rate_fit(kept);
            out.push_back(s);
        }
    return out;
}

namespace detail {

inline std::string csv_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// RFC 4180 quoting: fields with a comma, quote or line break are quoted.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

inline constexpr const char* kCsvHeader = "family,d,n,bound_m1,bound_m2,bound_m3,w1_value,w1_ci_lo,w1_ci_hi,seed";

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, const std::vector<RateSummary>& footer) {
    using detail::csv_number;
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << detail::csv_field(r.family) << ',' << r.d << ',' << r.n << ',' << csv_number(r.bound_m1) << ','
           << csv_number(r.bound_m2) << ',' << csv_number(r.bound_m3) << ',' << csv_number(r.w1_value) << ','
           << csv_number(r.w1_ci_lo) << ',' << csv_number(r.w1_ci_hi) << ',' << r.seed << '\n';
    }
    for (const auto& s : footer) {
        os << "# rate_fit family=" << s.family << " d=" << s.d << " floor=" << csv_number(s.floor)
           << " points=" << s.points;
        if (s.slope) {
            os << " slope=" << csv_number(*s.slope) << '\n';
        } else {
            os << " slope=NA (need 4 values of n with w1 above twice the floor)\n";
        }
    }
}

inline std::string to_csv(const std::vector<ResultRow>& rows, const std::vector<RateSummary>& footer) {
    std::ostringstream os;
    write_csv(os, rows, footer);
    return os.str();
}

// ---------------------------------------------------------------------------
// verify

enum class CheckStatus { pass, fail, inconclusive };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "PASS";
        case CheckStatus::fail: return "FAIL";
        case CheckStatus::inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool passed() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::fail) return false;
        return true;
    }
    /// 0 unless some check failed; inconclusive checks do not fail the run.
    [[nodiscard]] int exit_code() const { return passed() ? 0 : 1; }
    [[nodiscard]] std::vector<std::string> failing() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (c.status == CheckStatus::fail) out.push_back(c.name);
        return out;
    }
};

namespace detail {

inline CheckResult bounded_check(std::string name, double measured, double threshold, std::string detail) {
    return {std::move(name), measured <= threshold ? CheckStatus::pass : CheckStatus::fail, measured, threshold,
            std::move(detail)};
}

inline std::string dims_label(const std::string& what, int d) { return what + "[d=" + std::to_string(d) + "]"; }

}  // namespace detail

/// Runs the identity battery. Checks are independent and evaluated in parallel;
/// the report lists them in a fixed order.
inline VerifyReport verify(const ExperimentConfig& config) {
    const auto& vs = config.verify;
    const std::size_t mc_n = config.estimator.mc_n;
    std::vector<std::function<CheckResult()>> jobs;

    jobs.emplace_back([&] {
        std::array<double, 4> constants{};
        for (int s = 0; s <= 3; ++s) constants[s] = constants_c(s);
        if (!vs.inject_fault.empty()) constants[vs.inject_fault[1] - '0'] *= 1.01;
        double worst = 0.0;
        for (int s = 0; s <= 3; ++s)
            worst = std::max(worst, std::abs(constants_c_quadrature(s).value - constants[s]));
        return detail::bounded_check("constants_c", worst, 1e-10, "max |quadrature - closed form| over s = 0..3");
    });

    jobs.emplace_back([] {
        double worst = 0.0;
        for (int k = 0; k <= 30; ++k) {
            const auto r = circum_bound_check(std::pow(10.0, -6.0 + 0.4 * k));
            worst = std::max(worst, r.lhs / r.rhs);
        }
        return detail::bounded_check("circum_bound", worst, 1.0, "max lhs / rhs over beta2 in [1e-6, 1e6]");
    });

    jobs.emplace_back([] {
        const auto v = zero_bias_1d(laws::rademacher());
        double worst = 0.0;
        for (const auto& f : {battery::cubic({1.0}), battery::sine({1.0}), battery::cosine({1.0})}) {
            const auto s = zero_bias_identity_exact(laws::rademacher(), f);
            worst = std::max(worst, s.gap());
        }
        // the zero-bias law of a sign is Uniform(-1, 1)
        for (double w : {-0.9, -0.3, 0.2, 0.8}) worst = std::max(worst, std::abs(v.pdf(w) - 0.5));
        return detail::bounded_check("zero_bias_exact_1d", worst, 1e-9, "Rademacher sign against Uniform(-1, 1)");
    });

    for (int d : config.dims)
        jobs.emplace_back([&, d] {
            double worst = 0.0;
            std::string arg;
            std::uint64_t stream = 0;
            for (const auto& f : battery::stein_battery(d)) {
                const auto e = stein_expectation(f, standard_normal_sampler(d), mc_n,
                                                 derive_seed(config.seed, 100 + 10 * d + stream++));
                const double z = e.se > 0.0 ? std::abs(e.mean) / e.se : (e.mean == 0.0 ? 0.0 : INFINITY);
                if (z >= worst) {
                    worst = z;
                    arg = f.name();
                }
            }
            return detail::bounded_check(detail::dims_label("stein_identity", d), worst, vs.n_se,
                                         "max |E S f(Z)| / SE over the battery (worst: " + arg + ")");
        });

    for (const auto& fam : config.families)
        for (int d : config.dims)
            jobs.emplace_back([&, d] {
                const SumModel model = iid_model(fam.build(), d, static_cast<int>(vs.zero_bias_n));
                const MuBreveMixture mix(model, config.seed);
                const auto f = battery::sine(battery::diagonal_direction(d));
                const auto c = verify_zero_bias_identity(model, mix, f, mc_n,
                                                         cell_seed(config.seed, "zero_bias:" + fam.label(), d, 0));
                return detail::bounded_check("zero_bias_identity[" + fam.label() + ",d=" + std::to_string(d) + "]",
                                             c.max_z(), vs.n_se, "max residual / SE over coordinates");
            });

    for (int d : config.dims)
        jobs.emplace_back([&, d] {
            const auto& fam = config.families.front();
            const SumModel model = iid_model(fam.build(), d, static_cast<int>(vs.zero_bias_n));
            const auto f = battery::cosine(battery::diagonal_direction(d));
            const auto r = slepian_residual(f, model.w_sampler(), vs.slepian_eps, vs.slepian_alpha_nodes, mc_n,
                                            derive_seed(config.seed, 900 + static_cast<std::uint64_t>(d)));
            CheckResult c;
            c.name = detail::dims_label("slepian_residual", d);
            c.measured = r.z_score();
            c.threshold = vs.n_se;
            if (vs.n_se * r.se > vs.slepian_max_halfwidth) {
                c.status = CheckStatus::inconclusive;
                c.detail = "SE " + detail::csv_number(r.se) + " too wide: " + detail::csv_number(vs.n_se) +
                           " SE exceeds " + detail::csv_number(vs.slepian_max_halfwidth);
            } else {
                c.status = r.residual <= vs.n_se * r.se ? CheckStatus::pass : CheckStatus::fail;
                c.detail = "|residual| / SE, residual " + detail::csv_number(r.residual);
            }
            return c;
        });

    VerifyReport report;
    report.checks.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t k) { report.checks[k] = jobs[k](); });
    return report;
}

inline void print_report(std::ostream& os, const VerifyReport& report) {
    for (const auto& c : report.checks)
        os << to_string(c.status) << ' ' << c.name << " measured=" << detail::csv_number(c.measured)
           << " threshold=" << detail::csv_number(c.threshold) << " (" << c.detail << ")\n";
}

}  // namespace steinclt
