#pragma once

// Disorder-averaged experiments across system sizes: deterministic seeding,
// a realization work pool, pointwise trace averaging with standard errors,
// and the power-law scaling fits.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sykqb/charging.hpp"
#include "sykqb/fit.hpp"
#include "sykqb/scrambling.hpp"

namespace sykqb {

struct ObservableSelection {
    bool energy = true;
    bool populations = true;
    bool variances = true;
    bool bounds = true;
    bool otoc = false;
    bool commutators = false;
};

struct EnsembleConfig {
    std::vector<int> n_list{4, 6, 8, 10, 12};
    std::map<int, int> realizations_override;
    double schedule_scale = 0.1;  // desk-scale factor on the paper schedule
    std::uint64_t base_seed = 0x53594b5142ull;
    ChargerVariant variant = ChargerVariant::regularized;
    double j_energy = 1.0;
    double omega0 = 1.0;

    // Horizon in the regularized frame; raw-frame runs use horizon divided
    // by the ensemble-mean bandwidth so both frames cover the same physics.
    double horizon = 16.0;
    int grid_points = 321;
    int otoc_grid_points = 161;

    ObservableSelection observables;
    int max_commutator_order = 6;
    double otoc_f0 = 0.02;
    double otoc_f1 = 0.2;
    // Default: fit the disorder-averaged OTOC curve. When set, fit every
    // realization separately and average the exponents instead.
    bool otoc_fit_per_realization = false;
    int fit_discard_smallest = 0;  // 3 reproduces the paper's fits
    int threads = 0;               // 0 = hardware concurrency
};

/// Paper realization schedule: 1000 for N in [4,10], 500 for [11,13],
/// 200 for N >= 14.
int realization_schedule(int n_sites);

/// Scheduled count scaled for desk runs (override wins), never below 2.
int realization_count(const EnsembleConfig& config, int n_sites);

struct AveragedTrace {
    std::vector<double> mean;
    std::vector<double> sem;  // unbiased standard error of the mean
    int count = 0;
};

/// Scalars retained per realization for error bars and cross-checks.
struct RealizationRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;

    double bandwidth = 0.0;
    double tau_star = 0.0;  // NaN when the per-realization maximum hits the boundary
    double p_star = 0.0;
    double energy_final = 0.0;
    double var_h0 = 0.0;
    double var_h0_local = 0.0;
    double var_h0_entangled = 0.0;
    double var_h1 = 0.0;
    double fs_length = 0.0;
    double t_qsl = 0.0;
    double t_rqsl = 0.0;
    double p_lower = 0.0;
    double p_upper = 0.0;

    // Inequality checks accumulated over every defined grid point.
    bool sandwich_ok = true;
    bool speed_limits_ok = true;
    double sandwich_margin = 0.0;     // most negative slack observed
    double speed_limit_margin = 0.0;
    double sum_rule_error = 0.0;      // |local + entangled - total| / total

    std::vector<double> commutator_norms;  // per order, when enabled
    double lyapunov_lambda = 0.0;          // NaN when the per-realization fit failed
};

struct EnsembleNResult {
    int n_sites = 0;
    TimeGrid grid;       // actual charge grid (raw frame is rescaled)
    TimeGrid otoc_grid;  // when OTOC is enabled
    double bandwidth_mean = 0.0;
    double bandwidth_sem = 0.0;

    AveragedTrace energy;
    AveragedTrace power;
    AveragedTrace var_h0;
    AveragedTrace p_lower;
    AveragedTrace p_upper;
    AveragedTrace t_qsl;
    AveragedTrace t_rqsl;
    Eigen::MatrixXd populations_mean;  // n_steps x (N+1)
    std::vector<double> hellinger_sq;  // from the averaged populations

    // Scalars derived from the averaged curves.
    double tau_star = 0.0;
    double p_star = 0.0;
    double energy_at_tau_star = 0.0;
    double hellinger_at_tau_star = 0.0;
    double hellinger_final = 0.0;

    AveragedTrace otoc;
    std::optional<LyapunovFit> lyapunov;
    double ehrenfest = 0.0;

    std::vector<double> commutator_norms_mean;  // index k-1
    std::vector<double> commutator_norms_sem;

    std::vector<RealizationRecord> realizations;
};

struct ScalingFit {
    std::string observable;
    std::vector<int> n_values;
    std::vector<double> y_values;
    std::optional<PowerLawFit> fit;  // null when the fit failed or was skipped
    std::string note;
};

struct EnsembleSummary {
    EnsembleConfig config;
    std::vector<EnsembleNResult> per_n;
    std::vector<ScalingFit> scaling_fits;
    std::optional<LyapunovExpansion> lyapunov_expansion;
    std::vector<std::string> warnings;
};

/// Run the configured pipeline. Deterministic for a fixed config regardless
/// of the thread count: realizations write into their own slots and every
/// reduction runs in fixed index order.
EnsembleSummary run_ensemble(const EnsembleConfig& config);

/// Mean and unbiased standard error over the given values.
std::pair<double, double> mean_and_sem(std::span<const double> values);

}  // namespace sykqb
