#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "fluctuon/experiment_fit.hpp"
#include "fluctuon/rng.hpp"
#include "oracles.hpp"

using namespace fluctuon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentDataset synthetic_echo(const EffectiveFluctuator& slow, double gamma_2, double v2,
                                 double noise_level, std::uint64_t seed) {
    ExperimentDataset dataset;
    dataset.label = "synthetic";
    dataset.protocol = Protocol::echo;
    RngStream rng(seed, 0);
    for (double t : oracles::linear_grid(0.0, 3.0, 31)) {
        const double clean =
            phi_echo(slow.gamma_star, slow.a_star, t) * phi_echo(gamma_2, v2, t);
        const double noise =
            noise_level > 0.0 ? noise_level * (2.0 * rng.uniform01() - 1.0) : 0.0;
        dataset.samples.push_back({t, clean + noise, 0.0});
    }
    return dataset;
}

} // namespace

TEST_CASE("echo rate and v1 relations") {
    CHECK(echo_rate_gaussian(0.0, 123.0) == 0.0);

    // inverse of the v1 relation with sample-A numbers
    const double a_lambda = 4.92 * 4.92 / (2.0 * std::log(1e6));
    CHECK_THAT(echo_rate_gaussian(a_lambda, 1.0), WithinRel(0.779254584365, 1e-10));
    CHECK_THAT(echo_rate_gaussian(a_lambda, 1.0), WithinAbs(0.779, 5e-4));
    CHECK_THAT(echo_rate_gaussian(a_lambda, 2.0), WithinRel(2.0 * echo_rate_gaussian(a_lambda, 1.0), 1e-14));

    CHECK_THAT(v1_from_echo_rate(0.8, 5e-7, 0.5), WithinRel(5.05098087194, 1e-10));
    CHECK(v1_from_echo_rate(0.0, 5e-7, 0.5) == 0.0);

    // round trip: Gamma -> v1 -> Gamma
    const double gamma = 0.8;
    const double v1 = v1_from_echo_rate(gamma, 5e-7, 0.5);
    const double back = echo_rate_gaussian(v1 * v1 / (2.0 * std::log(0.5 / 5e-7)), 1.0);
    CHECK_THAT(back, WithinRel(gamma, 1e-12));
}

TEST_CASE("fid rate") {
    CHECK_THAT(fid_rate_gaussian(4.92, 2.72), WithinRel(3.97522326417, 1e-10));
    CHECK_THAT(fid_rate_gaussian(4.92, 2.72), WithinRel(3.97, 0.005));
    CHECK_THAT(fid_rate_gaussian(3.0, 0.0), WithinRel(3.0 / std::sqrt(2.0), 1e-14));
    CHECK_THAT(fid_rate_gaussian(4.92, 2.72) / 0.8, WithinRel(4.96, 0.01));
}

TEST_CASE("preset regressions") {
    const auto presets = sample_presets();
    REQUIRE(presets.size() == 3);

    const auto& a = presets[0];
    CHECK(a.name == "sample-a-flux");
    CHECK(a.gamma_m == 5e-7);
    CHECK(a.gamma_c == 0.5);
    CHECK(a.gamma_0 == 4.25);
    CHECK(a.gamma_1 == 0.04);
    CHECK(a.gamma_2 == 1.2);
    CHECK(a.v1 == 4.92);
    CHECK(a.v2 == 2.72);
    CHECK(a.echo_rate == 0.8);
    CHECK(a.has_bands());
    CHECK_THAT(gamma2_from_cutoffs(a.gamma_c, a.gamma_0), WithinRel(a.gamma_2, 0.02));

    const auto& b = presets[1];
    CHECK(b.name == "sample-b-flux");
    CHECK(b.v1 == 21.0);
    CHECK(b.gamma_2 == 5.75);
    CHECK(b.v2 == 12.45);
    CHECK(b.echo_rate == 3.75);
    CHECK_FALSE(b.has_bands());

    const auto& bias = presets[2];
    CHECK(bias.name == "sample-a-bias");
    CHECK(bias.v1 == 10.5);
    CHECK(bias.gamma_2 == 2.0);
    CHECK(bias.v2 == 50.0);
    CHECK(bias.echo_rate == 1.7);
    CHECK(bias.exponential_decay);

    CHECK_THROWS_AS(find_preset("sample-z"), ConfigError);
}

TEST_CASE("fit recovers generating parameters from clean data") {
    const EffectiveFluctuator slow{4.92, 0.04};
    const double gamma_0_true = 4.25;
    const double gamma_2_true = gamma2_from_cutoffs(0.5, gamma_0_true);
    const auto dataset = synthetic_echo(slow, gamma_2_true, 2.72, 0.0, 1);

    FitBounds bounds;
    bounds.v2_lo = 0.1;
    bounds.v2_hi = 30.0;
    bounds.gamma0_lo_offset = 0.05;
    bounds.gamma0_hi = 60.0;
    const FitResult fit = fit_fast_fluctuator(dataset, slow, 0.5, bounds);

    CHECK_THAT(fit.v2, WithinRel(2.72, 0.01));
    CHECK_THAT(fit.gamma_0, WithinRel(gamma_0_true, 0.02));
    CHECK_THAT(fit.gamma_2, WithinRel(gamma_2_true, 0.02));
    CHECK(fit.sse < 1e-10);
    CHECK(fit.iterations > 0);
}

TEST_CASE("fit tolerates noisy data") {
    const EffectiveFluctuator slow{4.92, 0.04};
    const double gamma_2_true = gamma2_from_cutoffs(0.5, 4.25);
    auto dataset = synthetic_echo(slow, gamma_2_true, 2.72, 0.01, 2);
    dataset.samples[0].value = 1.0; // keep the t=0 anchor exact

    FitBounds bounds;
    bounds.v2_lo = 0.1;
    bounds.v2_hi = 30.0;
    bounds.gamma0_lo_offset = 0.05;
    bounds.gamma0_hi = 60.0;
    const FitResult fit = fit_fast_fluctuator(dataset, slow, 0.5, bounds);
    CHECK_THAT(fit.v2, WithinRel(2.72, 0.05));
    CHECK_THAT(fit.gamma_0, WithinRel(4.25, 0.30));
}

TEST_CASE("fit of a flat dataset drives v2 to the lower bound") {
    ExperimentDataset dataset;
    dataset.protocol = Protocol::echo;
    for (double t : oracles::linear_grid(0.0, 3.0, 16)) dataset.samples.push_back({t, 1.0, 0.0});

    const EffectiveFluctuator no_slow{0.0, 0.04};
    FitBounds bounds;
    bounds.v2_lo = 1e-3;
    bounds.v2_hi = 10.0;
    const FitResult fit = fit_fast_fluctuator(dataset, no_slow, 0.5, bounds);
    CHECK(fit.v2 <= 1.5 * bounds.v2_lo);
    CHECK(fit.sse < 1e-8);
}

TEST_CASE("fit input validation") {
    const EffectiveFluctuator slow{4.92, 0.04};
    ExperimentDataset tiny;
    tiny.protocol = Protocol::echo;
    tiny.samples = {{0.0, 1.0, 0.0}, {1.0, 0.5, 0.0}};
    CHECK_THROWS_AS(fit_fast_fluctuator(tiny, slow, 0.5), std::invalid_argument);

    ExperimentDataset empty;
    CHECK_THROWS_AS(fit_fast_fluctuator(empty, slow, 0.5), std::invalid_argument);
}

TEST_CASE("nelder-mead best objective is monotone") {
    auto rosenbrock = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    NelderMeadOptions opt;
    opt.diameter_tol = 1e-10;
    opt.max_iterations = 2000;
    const auto result = nelder_mead(rosenbrock, {-1.0, 1.0}, {0.5, 0.5}, opt);
    CHECK_THAT(result.x[0], WithinAbs(1.0, 1e-4));
    CHECK_THAT(result.x[1], WithinAbs(1.0, 1e-4));
    for (std::size_t i = 1; i < result.best_history.size(); ++i)
        CHECK(result.best_history[i] <= result.best_history[i - 1]);

    NelderMeadOptions strict;
    strict.max_iterations = 3;
    strict.diameter_tol = 1e-15;
    CHECK_THROWS_AS(nelder_mead(rosenbrock, {-1.0, 1.0}, {0.5, 0.5}, strict),
                    NonConvergenceError);
}

TEST_CASE("dataset parsing") {
    std::istringstream good("t_us,envelope\n0.0,1.0\n0.5,0.8\n1.0,0.6\n");
    const auto dataset = parse_dataset(good, "good.csv");
    REQUIRE(dataset.samples.size() == 3);
    CHECK(dataset.samples[1].t == 0.5);
    CHECK(dataset.samples[1].value == 0.8);

    std::istringstream decreasing("0.0,1.0\n1.0,0.8\n0.5,0.7\n");
    CHECK_THROWS_AS(parse_dataset(decreasing, "bad.csv"), std::invalid_argument);

    std::istringstream malformed("0.0,1.0\n0.5,oops\n");
    CHECK_THROWS_WITH(parse_dataset(malformed, "rows.csv"),
                      Catch::Matchers::ContainsSubstring("rows.csv:2"));

    std::istringstream wrong_columns("0.0,1.0\n0.5\n");
    CHECK_THROWS_AS(parse_dataset(wrong_columns, "cols.csv"), IoError);

    std::istringstream not_normalized("0.0,0.5\n1.0,0.4\n");
    CHECK_THROWS_AS(parse_dataset(not_normalized, "norm.csv"), std::invalid_argument);
}

TEST_CASE("dataset round trip preserves values bit-exactly") {
    ExperimentDataset dataset;
    dataset.protocol = Protocol::echo;
    const EffectiveFluctuator slow{4.92, 0.04};
    for (double t : oracles::linear_grid(0.0, 2.0, 21))
        dataset.samples.push_back(
            {t, phi_echo(slow.gamma_star, slow.a_star, t) * phi_echo(1.2, 2.72, t), 0.0});

    std::ostringstream os;
    write_dataset_csv(os, dataset);
    std::istringstream is(os.str());
    const auto reloaded = parse_dataset(is, "roundtrip.csv");
    REQUIRE(reloaded.samples.size() == dataset.samples.size());
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        CHECK(reloaded.samples[i].t == dataset.samples[i].t);
        CHECK(reloaded.samples[i].value == dataset.samples[i].value);
    }
}

TEST_CASE("fit identifiability across all presets") {
    struct Case {
        const char* name;
        EffectiveFluctuator slow;
        double v2, gamma_0, t_max;
    };
    // gamma_0 chosen so gamma2_from_cutoffs reproduces each preset's gamma_2
    const Case cases[] = {
        {"sample-a-flux", {4.92, 0.04}, 2.72, 4.25, 3.0},
        {"sample-b-flux", {21.0, 0.04}, 12.45, 48500.0, 0.6},
        {"sample-a-bias", {10.5, 0.04}, 50.0, 25.4, 0.2},
    };
    for (const auto& c : cases) {
        ExperimentDataset dataset;
        dataset.label = c.name;
        dataset.protocol = Protocol::echo;
        const double gamma_2 = gamma2_from_cutoffs(0.5, c.gamma_0);
        for (double t : oracles::linear_grid(0.0, c.t_max, 41))
            dataset.samples.push_back(
                {t, phi_echo(c.slow.gamma_star, c.slow.a_star, t) * phi_echo(gamma_2, c.v2, t),
                 0.0});

        FitBounds bounds;
        bounds.v2_lo = 0.5;
        bounds.v2_hi = 100.0;
        bounds.gamma0_lo_offset = 0.05;
        bounds.gamma0_hi = 1e6;
        const FitResult fit = fit_fast_fluctuator(dataset, c.slow, 0.5, bounds, 1.0, 1500);
        INFO(c.name);
        CHECK_THAT(fit.v2, WithinRel(c.v2, 0.01));
        CHECK_THAT(fit.gamma_0, WithinRel(c.gamma_0, 0.02));
    }
}
