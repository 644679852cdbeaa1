#include "sykqb/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "sykqb/rng.hpp"

namespace sykqb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for_index(int n_tasks, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n_tasks));
    if (threads == 1) {
        for (int i = 0; i < n_tasks; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
}

// Everything one realization produces; slots are reduced in index order.
struct RealizationTraces {
    RealizationRecord record;
    std::vector<double> energy, power, var_h0, p_lower, p_upper, t_qsl, t_rqsl;
    Eigen::MatrixXd populations;
    std::vector<double> otoc;
    std::vector<double> commutator_norms;
};

AveragedTrace reduce_traces(const std::vector<RealizationTraces>& slots,
                            std::vector<double> RealizationTraces::* member) {
    AveragedTrace out;
    std::size_t len = 0;
    for (const auto& s : slots)
        if (s.record.ok) len = std::max(len, (s.*member).size());
    if (len == 0) return out;

    out.mean.assign(len, 0.0);
    out.sem.assign(len, 0.0);
    std::vector<double> column;
    for (std::size_t k = 0; k < len; ++k) {
        column.clear();
        for (const auto& s : slots) {
            if (!s.record.ok) continue;
            const auto& v = s.*member;
            if (k < v.size() && std::isfinite(v[k])) column.push_back(v[k]);
        }
        if (column.empty()) {
            out.mean[k] = kNaN;
            out.sem[k] = kNaN;
            continue;
        }
        const auto [m, sem] = mean_and_sem(column);
        out.mean[k] = m;
        out.sem[k] = sem;
        out.count = std::max(out.count, static_cast<int>(column.size()));
    }
    return out;
}

}  // namespace

std::pair<double, double> mean_and_sem(std::span<const double> values) {
    const auto n = values.size();
    if (n == 0) return {kNaN, kNaN};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

int realization_schedule(int n_sites) {
    if (n_sites < 4) throw SizeTooSmall("realization_schedule: N must be at least 4");
    if (n_sites <= 10) return 1000;
    if (n_sites <= 13) return 500;
    return 200;
}

int realization_count(const EnsembleConfig& config, int n_sites) {
    if (auto it = config.realizations_override.find(n_sites);
        it != config.realizations_override.end())
        return std::max(2, it->second);
    const double scaled = realization_schedule(n_sites) * config.schedule_scale;
    return std::max(2, static_cast<int>(std::llround(scaled)));
}

namespace {

RealizationTraces run_one(const EnsembleConfig& config, int n_sites, std::uint64_t seed,
                          double lambda_min, double lambda_max, const TimeGrid& grid,
                          const TimeGrid& otoc_grid, const SparseHamiltonian& h0,
                          const LadderOperator& v_op, const LadderOperator& w_op) {
    RealizationTraces out;
    out.record.seed = seed;
    out.record.bandwidth = lambda_max - lambda_min;

    const CouplingTensor tensor = sample_couplings(n_sites, config.j_energy, seed);
    const SparseHamiltonian h1_raw = build_syk_hamiltonian(tensor);
    const ChargerSetup charger = make_charger(h1_raw, lambda_min, lambda_max, config.variant);
    const SparseHamiltonian h1_shifted = charger.shifted_generator();

    const auto& obs = config.observables;
    const bool need_states = obs.energy || obs.populations || obs.variances || obs.bounds;

    if (need_states) {
        const std::vector<StateVector> states = charge(charger, n_sites, grid);

        if (obs.energy || obs.bounds) {
            const ObservableTrace energy = energy_trace(states, grid, h0);
            const ObservableTrace power = power_trace(energy);
            out.energy = energy.values;
            out.power = power.values;
            out.record.energy_final = energy.values.back();
            try {
                const OptimalCharging opt = optimal_charging(power);
                out.record.tau_star = opt.tau_star;
                out.record.p_star = opt.p_star;
            } catch (const MaxAtBoundary&) {
                out.record.tau_star = kNaN;
                out.record.p_star = kNaN;
            }

            if (obs.bounds) {
                const BoundTraces bounds = bound_traces(states, grid, h0, h1_shifted, energy);
                out.var_h0 = bounds.var_h0;
                out.p_lower = bounds.p_lower;
                out.p_upper = bounds.p_upper;
                out.t_qsl = bounds.t_qsl;
                out.t_rqsl = bounds.t_rqsl;
                out.record.var_h1 = bounds.var_h1;
                out.record.t_qsl = bounds.t_qsl.back();
                out.record.t_rqsl = bounds.t_rqsl.back();
                out.record.p_lower = bounds.p_lower.back();
                out.record.p_upper = bounds.p_upper.back();
                out.record.var_h0 = bounds.var_h0_prefix.back();
                out.record.fs_length = std::sqrt(bounds.var_h1) * (grid.t1 - grid.t0);

                double sandwich_margin = std::numeric_limits<double>::infinity();
                double speed_margin = std::numeric_limits<double>::infinity();
                for (int k = 1; k < grid.n_steps; ++k) {
                    const double t = grid.time(k);
                    const double p = out.power[static_cast<std::size_t>(k)];
                    if (std::isfinite(out.p_lower[static_cast<std::size_t>(k)]))
                        sandwich_margin =
                            std::min(sandwich_margin, p - out.p_lower[static_cast<std::size_t>(k)]);
                    sandwich_margin =
                        std::min(sandwich_margin, out.p_upper[static_cast<std::size_t>(k)] - p);
                    if (std::isfinite(out.t_qsl[static_cast<std::size_t>(k)]))
                        speed_margin =
                            std::min(speed_margin, t - out.t_qsl[static_cast<std::size_t>(k)]);
                    if (std::isfinite(out.t_rqsl[static_cast<std::size_t>(k)]))
                        speed_margin =
                            std::min(speed_margin, out.t_rqsl[static_cast<std::size_t>(k)] - t);
                }
                out.record.sandwich_margin = sandwich_margin;
                out.record.speed_limit_margin = speed_margin;
                const double scale = std::max(out.record.p_upper, 1e-12);
                out.record.sandwich_ok = sandwich_margin > -1e-9 * scale;
                out.record.speed_limits_ok = speed_margin > -1e-9 * (grid.t1 - grid.t0);
            }
        }

        if (obs.populations) out.populations = populations_trace(states, grid, n_sites).values;

        if (obs.variances) {
            const VarianceSplit split = battery_variance_split(states, grid, n_sites, config.omega0);
            out.record.var_h0_local = split.local;
            out.record.var_h0_entangled = split.entangled;
            const double total = averaged_moment(h0, states, grid, 2);
            out.record.sum_rule_error =
                std::abs(split.local + split.entangled - total) / std::max(total, 1e-30);
            if (!obs.bounds) out.record.var_h0 = total;
        }
    }

    if (obs.otoc) {
        OtocTrace trace = otoc_trace(charger.generator, battery_ground_state(n_sites), v_op, w_op,
                                     otoc_grid);
        out.record.lyapunov_lambda = kNaN;
        if (config.otoc_fit_per_realization) {
            try {
                const LyapunovFit fit = fit_lyapunov(trace, config.otoc_f0, config.otoc_f1);
                if (fit.converged) out.record.lyapunov_lambda = fit.lambda;
            } catch (const Error&) {
                // left as NaN: an explicit per-realization null result
            }
        }
        out.otoc = std::move(trace.values);
    }

    if (obs.commutators) {
        const ChargerSetup reg = config.variant == ChargerVariant::regularized
                                     ? charger
                                     : make_charger(h1_raw, lambda_min, lambda_max,
                                                    ChargerVariant::regularized);
        out.commutator_norms =
            nested_commutator_norms(reg.generator, w_op, config.max_commutator_order);
        out.record.commutator_norms = out.commutator_norms;
    }

    out.record.ok = true;
    return out;
}

}  // namespace

EnsembleSummary run_ensemble(const EnsembleConfig& config) {
    if (config.n_list.empty()) throw Error("run_ensemble: empty N list");
    for (int n : config.n_list)
        if (n < 4) throw SizeTooSmall("run_ensemble: N entries must be at least 4");

    EnsembleSummary summary;
    summary.config = config;

    for (int n_sites : config.n_list) {
        const int count = realization_count(config, n_sites);
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
        for (int r = 0; r < count; ++r)
            seeds[static_cast<std::size_t>(r)] =
                derive_seed(config.base_seed, static_cast<std::uint64_t>(n_sites),
                            static_cast<std::uint64_t>(r));

        // Pass 1: extremal eigenvalues per realization; these fix the raw
        // grid horizon and are reused when building the chargers.
        std::vector<std::pair<double, double>> extremes(static_cast<std::size_t>(count));
        std::vector<std::string> extreme_errors(static_cast<std::size_t>(count));
        parallel_for_index(count, config.threads, [&](int r) {
            try {
                const CouplingTensor tensor =
                    sample_couplings(n_sites, config.j_energy, seeds[static_cast<std::size_t>(r)]);
                extremes[static_cast<std::size_t>(r)] =
                    extremal_eigenvalues(build_syk_hamiltonian(tensor));
            } catch (const std::exception& ex) {
                extreme_errors[static_cast<std::size_t>(r)] = ex.what();
            }
        });

        std::vector<double> bandwidths;
        for (int r = 0; r < count; ++r)
            if (extreme_errors[static_cast<std::size_t>(r)].empty())
                bandwidths.push_back(extremes[static_cast<std::size_t>(r)].second -
                                     extremes[static_cast<std::size_t>(r)].first);
        if (bandwidths.empty())
            throw Error("run_ensemble: every realization failed at N = " + std::to_string(n_sites));
        const auto [bw_mean, bw_sem] = mean_and_sem(bandwidths);

        double horizon = config.horizon;
        if (config.variant == ChargerVariant::raw) {
            if (bw_mean > 1e-12)
                horizon = config.horizon / bw_mean;
            else
                summary.warnings.push_back("zero mean bandwidth at N = " + std::to_string(n_sites) +
                                           "; keeping the unrescaled horizon");
        }
        const TimeGrid grid(0.0, horizon, config.grid_points);
        const TimeGrid otoc_grid(0.0, horizon, config.otoc_grid_points);

        const SparseHamiltonian h0 = battery_hamiltonian(n_sites, config.omega0);
        const LadderOperator v_op = majorana_local(n_sites, n_sites);
        const LadderOperator w_op = majorana_local(n_sites - 1, n_sites);

        // Pass 2: the full per-realization pipeline.
        std::vector<RealizationTraces> slots(static_cast<std::size_t>(count));
        parallel_for_index(count, config.threads, [&](int r) {
            auto& slot = slots[static_cast<std::size_t>(r)];
            slot.record.seed = seeds[static_cast<std::size_t>(r)];
            if (!extreme_errors[static_cast<std::size_t>(r)].empty()) {
                slot.record.ok = false;
                slot.record.error = extreme_errors[static_cast<std::size_t>(r)];
                return;
            }
            try {
                slot = run_one(config, n_sites, seeds[static_cast<std::size_t>(r)],
                               extremes[static_cast<std::size_t>(r)].first,
                               extremes[static_cast<std::size_t>(r)].second, grid, otoc_grid, h0,
                               v_op, w_op);
            } catch (const std::exception& ex) {
                slot.record.ok = false;
                slot.record.error = ex.what();
            }
        });

        int failures = 0;
        for (const auto& s : slots)
            if (!s.record.ok) ++failures;
        if (failures > 0) {
            const double frac = static_cast<double>(failures) / count;
            std::string msg = std::to_string(failures) + " of " + std::to_string(count) +
                              " realizations failed at N = " + std::to_string(n_sites) +
                              " (first: " + [&] {
                                  for (const auto& s : slots)
                                      if (!s.record.ok) return s.record.error;
                                  return std::string();
                              }() + ")";
            if (frac >= 0.01) throw Error("run_ensemble: " + msg);
            summary.warnings.push_back("excluded " + msg);
        }

        EnsembleNResult res;
        res.n_sites = n_sites;
        res.grid = grid;
        res.otoc_grid = otoc_grid;
        res.bandwidth_mean = bw_mean;
        res.bandwidth_sem = bw_sem;

        res.energy = reduce_traces(slots, &RealizationTraces::energy);
        res.power = reduce_traces(slots, &RealizationTraces::power);
        res.var_h0 = reduce_traces(slots, &RealizationTraces::var_h0);
        res.p_lower = reduce_traces(slots, &RealizationTraces::p_lower);
        res.p_upper = reduce_traces(slots, &RealizationTraces::p_upper);
        res.t_qsl = reduce_traces(slots, &RealizationTraces::t_qsl);
        res.t_rqsl = reduce_traces(slots, &RealizationTraces::t_rqsl);
        res.otoc = reduce_traces(slots, &RealizationTraces::otoc);

        if (config.observables.populations) {
            res.populations_mean = Eigen::MatrixXd::Zero(grid.n_steps, n_sites + 1);
            int used = 0;
            for (const auto& s : slots) {
                if (!s.record.ok || s.populations.size() == 0) continue;
                res.populations_mean += s.populations;
                ++used;
            }
            if (used > 0) res.populations_mean /= static_cast<double>(used);
            res.hellinger_sq.resize(static_cast<std::size_t>(grid.n_steps));
            for (int k = 0; k < grid.n_steps; ++k) {
                Eigen::VectorXd p = res.populations_mean.row(k).transpose();
                const double total = p.sum();
                if (used == 0 || std::abs(total - 1.0) > 1e-6) {
                    res.hellinger_sq[static_cast<std::size_t>(k)] = kNaN;
                    continue;
                }
                res.hellinger_sq[static_cast<std::size_t>(k)] =
                    hellinger_to_binomial(p / total, n_sites);
            }
        }

        if (!res.power.mean.empty()) {
            ObservableTrace averaged_power{"P_N", grid, res.power.mean, ""};
            try {
                const OptimalCharging opt = optimal_charging(averaged_power);
                res.tau_star = opt.tau_star;
                res.p_star = opt.p_star;
                const int idx = static_cast<int>(std::llround((opt.tau_star - grid.t0) / grid.dt()));
                const int clamped = std::clamp(idx, 0, grid.n_steps - 1);
                res.energy_at_tau_star = res.energy.mean[static_cast<std::size_t>(clamped)];
                if (!res.hellinger_sq.empty()) {
                    res.hellinger_at_tau_star = res.hellinger_sq[static_cast<std::size_t>(clamped)];
                    res.hellinger_final = res.hellinger_sq.back();
                }
            } catch (const MaxAtBoundary&) {
                res.tau_star = kNaN;
                res.p_star = kNaN;
                summary.warnings.push_back("averaged power maximum at the grid boundary for N = " +
                                           std::to_string(n_sites));
            }
        }

        if (config.observables.otoc && !res.otoc.mean.empty()) {
            if (config.otoc_fit_per_realization) {
                std::vector<double> lambdas;
                for (const auto& s : slots)
                    if (s.record.ok && std::isfinite(s.record.lyapunov_lambda))
                        lambdas.push_back(s.record.lyapunov_lambda);
                if (lambdas.size() >= 3) {
                    LyapunovFit fit;
                    fit.lambda = mean_and_sem(lambdas).first;
                    fit.f0 = config.otoc_f0;
                    fit.f1 = config.otoc_f1;
                    fit.fit_points = static_cast<int>(lambdas.size());
                    fit.a = fit.b = kNaN;
                    fit.converged = true;
                    res.lyapunov = fit;
                    res.ehrenfest = ehrenfest_time(n_sites, fit.lambda);
                } else {
                    summary.warnings.push_back(
                        "too few converged per-realization Lyapunov fits for N = " +
                        std::to_string(n_sites));
                }
            } else {
                OtocTrace averaged{otoc_grid, res.otoc.mean, n_sites, config.variant};
                try {
                    LyapunovFit fit = fit_lyapunov(averaged, config.otoc_f0, config.otoc_f1);
                    if (fit.converged) {
                        res.lyapunov = fit;
                        res.ehrenfest = ehrenfest_time(n_sites, fit.lambda);
                    } else {
                        summary.warnings.push_back("Lyapunov fit did not converge for N = " +
                                                   std::to_string(n_sites));
                    }
                } catch (const Error& ex) {
                    summary.warnings.push_back("Lyapunov fit failed for N = " +
                                               std::to_string(n_sites) + ": " + ex.what());
                }
            }
        }

        if (config.observables.commutators) {
            const int kmax = config.max_commutator_order;
            res.commutator_norms_mean.resize(static_cast<std::size_t>(kmax), kNaN);
            res.commutator_norms_sem.resize(static_cast<std::size_t>(kmax), kNaN);
            std::vector<double> column;
            for (int k = 0; k < kmax; ++k) {
                column.clear();
                for (const auto& s : slots)
                    if (s.record.ok && k < static_cast<int>(s.commutator_norms.size()))
                        column.push_back(s.commutator_norms[static_cast<std::size_t>(k)]);
                if (column.empty()) continue;
                const auto [m, sem] = mean_and_sem(column);
                res.commutator_norms_mean[static_cast<std::size_t>(k)] = m;
                res.commutator_norms_sem[static_cast<std::size_t>(k)] = sem;
            }
        }

        for (auto& s : slots) res.realizations.push_back(std::move(s.record));
        summary.per_n.push_back(std::move(res));
    }

    // Scaling fits across N on the averaged scalars.
    const auto add_fit = [&](const std::string& name, auto getter, bool require_all = true) {
        ScalingFit fit;
        fit.observable = name;
        for (const auto& res : summary.per_n) {
            const double y = getter(res);
            if (!std::isfinite(y)) {
                if (require_all) {
                    fit.note = "missing value at N = " + std::to_string(res.n_sites);
                    summary.scaling_fits.push_back(fit);
                    return;
                }
                continue;
            }
            fit.n_values.push_back(res.n_sites);
            fit.y_values.push_back(y);
        }
        std::vector<double> xs(fit.n_values.begin(), fit.n_values.end());
        try {
            fit.fit = power_law_fit(xs, fit.y_values, config.fit_discard_smallest);
        } catch (const Error& ex) {
            fit.note = ex.what();
        }
        summary.scaling_fits.push_back(fit);
    };

    if (summary.per_n.size() >= 2) {
        if (config.observables.energy) {
            add_fit("tau_star", [](const EnsembleNResult& r) { return r.tau_star; });
            add_fit("p_star", [](const EnsembleNResult& r) { return r.p_star; });
        }
        add_fit("bandwidth", [](const EnsembleNResult& r) { return r.bandwidth_mean; });
        if (config.observables.variances) {
            const auto mean_record = [](const EnsembleNResult& r, auto member) {
                std::vector<double> vals;
                for (const auto& rec : r.realizations)
                    if (rec.ok) vals.push_back(rec.*member);
                return mean_and_sem(vals).first;
            };
            add_fit("var_h0_local", [&](const EnsembleNResult& r) {
                return mean_record(r, &RealizationRecord::var_h0_local);
            });
            add_fit("var_h0_entangled", [&](const EnsembleNResult& r) {
                return mean_record(r, &RealizationRecord::var_h0_entangled);
            });
            add_fit("var_h0", [&](const EnsembleNResult& r) {
                return mean_record(r, &RealizationRecord::var_h0);
            });
            add_fit("var_h1", [&](const EnsembleNResult& r) {
                return mean_record(r, &RealizationRecord::var_h1);
            });
        }
    }

    if (config.observables.otoc) {
        std::vector<std::pair<int, double>> points;
        for (const auto& res : summary.per_n)
            if (res.lyapunov) points.emplace_back(res.n_sites, res.lyapunov->lambda);
        if (points.size() >= 3) summary.lyapunov_expansion = lyapunov_expansion(points);
    }

    return summary;
}

}  // namespace sykqb
