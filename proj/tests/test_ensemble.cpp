#include <doctest.h>

#include <cmath>

#include "sykqb/ensemble.hpp"
#include "sykqb/fermion.hpp"
#include "sykqb/rng.hpp"

using namespace sykqb;

namespace {

EnsembleConfig tiny_config() {
    EnsembleConfig config;
    config.n_list = {4};
    config.realizations_override[4] = 6;
    config.variant = ChargerVariant::regularized;
    config.horizon = 8.0;
    config.grid_points = 81;
    config.otoc_grid_points = 41;
    config.threads = 2;
    return config;
}

}  // namespace

TEST_CASE("realization schedule follows the paper bands") {
    CHECK(realization_schedule(4) == 1000);
    CHECK(realization_schedule(8) == 1000);
    CHECK(realization_schedule(10) == 1000);
    CHECK(realization_schedule(11) == 500);
    CHECK(realization_schedule(12) == 500);
    CHECK(realization_schedule(13) == 500);
    CHECK(realization_schedule(14) == 200);
    CHECK(realization_schedule(15) == 200);
    CHECK(realization_schedule(17) == 200);
    CHECK_THROWS_AS(realization_schedule(3), SizeTooSmall);
}

TEST_CASE("realization count scales the schedule") {
    EnsembleConfig config;
    config.schedule_scale = 0.1;
    CHECK(realization_count(config, 8) == 100);
    CHECK(realization_count(config, 12) == 50);
    config.realizations_override[8] = 7;
    CHECK(realization_count(config, 8) == 7);
    config.schedule_scale = 1e-9;
    CHECK(realization_count(config, 12) == 2);  // never below 2
}

TEST_CASE("seed derivation is stable and collision-free across realizations") {
    CHECK(derive_seed(1, 8, 0) == derive_seed(1, 8, 0));
    CHECK(derive_seed(1, 8, 0) != derive_seed(1, 8, 1));
    CHECK(derive_seed(1, 8, 0) != derive_seed(1, 10, 0));
    CHECK(derive_seed(1, 8, 0) != derive_seed(2, 8, 0));
}

TEST_CASE("summary scalars are deterministic across thread counts") {
    EnsembleConfig config = tiny_config();
    config.threads = 1;
    const EnsembleSummary a = run_ensemble(config);
    config.threads = 2;
    const EnsembleSummary b = run_ensemble(config);

    REQUIRE(a.per_n.size() == 1);
    REQUIRE(b.per_n.size() == 1);
    CHECK(a.per_n[0].tau_star == b.per_n[0].tau_star);
    CHECK(a.per_n[0].p_star == b.per_n[0].p_star);
    CHECK(a.per_n[0].bandwidth_mean == b.per_n[0].bandwidth_mean);
    REQUIRE(a.per_n[0].energy.mean.size() == b.per_n[0].energy.mean.size());
    for (std::size_t k = 0; k < a.per_n[0].energy.mean.size(); ++k) {
        CHECK(a.per_n[0].energy.mean[k] == b.per_n[0].energy.mean[k]);
        CHECK(a.per_n[0].energy.sem[k] == b.per_n[0].energy.sem[k]);
    }
    for (std::size_t r = 0; r < a.per_n[0].realizations.size(); ++r) {
        CHECK(a.per_n[0].realizations[r].seed == b.per_n[0].realizations[r].seed);
        CHECK(a.per_n[0].realizations[r].tau_star == b.per_n[0].realizations[r].tau_star);
    }
}

TEST_CASE("averaged energy equals the level contraction of averaged populations") {
    const EnsembleSummary summary = run_ensemble(tiny_config());
    const EnsembleNResult& res = summary.per_n[0];
    const BatterySpectrum spec = battery_spectrum(4, 1.0);
    for (int k = 0; k < res.grid.n_steps; ++k) {
        double contracted = 0.0;
        for (int level = 0; level <= 4; ++level)
            contracted += spec.levels[static_cast<std::size_t>(level)] *
                          res.populations_mean(k, level);
        CHECK(res.energy.mean[static_cast<std::size_t>(k)] ==
              doctest::Approx(contracted).epsilon(1e-10));
    }
}

TEST_CASE("per-realization inequality checks all pass") {
    const EnsembleSummary summary = run_ensemble(tiny_config());
    for (const auto& rec : summary.per_n[0].realizations) {
        REQUIRE(rec.ok);
        CHECK(rec.sandwich_ok);
        CHECK(rec.speed_limits_ok);
        CHECK(rec.sum_rule_error < 1e-9);
    }
}

TEST_CASE("standard error shrinks like one over sqrt of realizations") {
    EnsembleConfig small = tiny_config();
    small.realizations_override[4] = 12;
    small.observables.populations = false;
    small.observables.variances = false;
    small.observables.bounds = false;
    EnsembleConfig big = small;
    big.realizations_override[4] = 48;

    const EnsembleSummary a = run_ensemble(small);
    const EnsembleSummary b = run_ensemble(big);
    // compare SEM at a mid-grid point (fixed-seed superset, ratio ~ 2)
    const std::size_t mid = 40;
    const double ratio = a.per_n[0].energy.sem[mid] / b.per_n[0].energy.sem[mid];
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
}

TEST_CASE("boundary maxima become explicit null results with a warning") {
    EnsembleConfig config = tiny_config();
    config.horizon = 0.4;  // far below the power peak
    config.observables.populations = false;
    config.observables.variances = false;
    config.observables.bounds = false;
    const EnsembleSummary summary = run_ensemble(config);
    CHECK(std::isnan(summary.per_n[0].tau_star));
    bool found = false;
    for (const auto& warning : summary.warnings)
        if (warning.find("boundary") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("otoc pipeline produces a fit at desk sizes") {
    EnsembleConfig config;
    config.n_list = {4, 5, 6};
    for (int n : config.n_list) config.realizations_override[n] = 8;
    config.observables = {};
    config.observables.energy = config.observables.populations = false;
    config.observables.variances = config.observables.bounds = false;
    config.observables.otoc = true;
    config.otoc_grid_points = 81;
    config.threads = 2;
    const EnsembleSummary summary = run_ensemble(config);

    REQUIRE(summary.per_n.size() == 3);
    for (const auto& res : summary.per_n) {
        REQUIRE(res.otoc.mean.size() == 81);
        CHECK(std::abs(res.otoc.mean.front()) < 1e-10);
        REQUIRE(res.lyapunov.has_value());
        CHECK(res.lyapunov->lambda > 0.0);
        CHECK(res.ehrenfest == doctest::Approx(std::log(res.n_sites) / res.lyapunov->lambda));
    }
    CHECK(summary.lyapunov_expansion.has_value());
}

TEST_CASE("per-realization lyapunov fitting averages the exponents") {
    EnsembleConfig config;
    config.n_list = {5};
    config.realizations_override[5] = 8;
    config.observables = {};
    config.observables.energy = config.observables.populations = false;
    config.observables.variances = config.observables.bounds = false;
    config.observables.otoc = true;
    config.otoc_grid_points = 81;
    config.otoc_fit_per_realization = true;
    config.threads = 2;
    const EnsembleSummary summary = run_ensemble(config);
    const EnsembleNResult& res = summary.per_n[0];
    REQUIRE(res.lyapunov.has_value());
    CHECK(res.lyapunov->lambda > 0.0);
    std::vector<double> lambdas;
    for (const auto& rec : res.realizations)
        if (std::isfinite(rec.lyapunov_lambda)) lambdas.push_back(rec.lyapunov_lambda);
    REQUIRE(lambdas.size() >= 3);
    const auto [mean, sem] = mean_and_sem(lambdas);
    CHECK(res.lyapunov->lambda == doctest::Approx(mean));
}

TEST_CASE("raw-frame grids are rescaled by the mean bandwidth") {
    EnsembleConfig config = tiny_config();
    config.variant = ChargerVariant::raw;
    config.observables.populations = false;
    config.observables.variances = false;
    const EnsembleSummary summary = run_ensemble(config);
    const EnsembleNResult& res = summary.per_n[0];
    CHECK(res.grid.t1 == doctest::Approx(config.horizon / res.bandwidth_mean));
}

TEST_CASE("config validation") {
    EnsembleConfig config;
    config.n_list = {};
    CHECK_THROWS_AS(run_ensemble(config), Error);
    config.n_list = {3};
    CHECK_THROWS_AS(run_ensemble(config), SizeTooSmall);
}
