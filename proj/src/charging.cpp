#include "sykqb/charging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sykqb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kOverlapFloor = 1e-10;

double clamp01(double x) { return std::min(std::max(x, 0.0), 1.0); }

// <psi|H|psi> and <psi|H^2|psi> from a single matvec.
std::pair<double, double> first_two_moments(const SparseHamiltonian& h, const StateVector& psi) {
    const StateVector hpsi = h.matrix() * psi;
    return {std::real(psi.dot(hpsi)), hpsi.squaredNorm()};
}

// Length of the phase-referenced section chi(t). The speed has the closed
// form ||chi_dot||^2 = Var(H) + (phi_dot - <H>)^2 with
// phi_dot = Re(<psi0|H|psi(t)> / <psi0|psi(t)>), both conserved moments
// taken in psi0. Written this way the integrand never drops below the
// uncertainty Delta H, so the integrated length obeys l >= Delta_tau H * t
// under any positive-weight quadrature and tau <= T_RQSL survives
// discretization. Falls back to chord accumulation when the overlap with
// psi(0) vanishes somewhere along the path.
struct PathLengths {
    std::vector<double> values;  // NaN where undefined
    int skipped = 0;
};

PathLengths reference_path_lengths(const std::vector<StateVector>& states, const TimeGrid& grid,
                                   const SparseHamiltonian& h, double mean, double var) {
    const auto n = states.size();
    const StateVector& psi0 = states.front();
    PathLengths out;
    out.values.assign(n, 0.0);

    std::vector<Complex> overlaps(n);
    bool all_defined = true;
    for (std::size_t k = 0; k < n; ++k) {
        overlaps[k] = psi0.dot(states[k]);
        if (k > 0 && std::abs(overlaps[k]) < kOverlapFloor) {
            all_defined = false;
            ++out.skipped;
        }
    }

    if (all_defined) {
        const StateVector h_psi0 = h.matrix() * psi0;
        std::vector<double> speed(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double phi_dot = std::real(h_psi0.dot(states[k]) / overlaps[k]);
            speed[k] = std::sqrt(std::max(var, 0.0) + (phi_dot - mean) * (phi_dot - mean));
        }
        out.values = simpson_prefix(speed, grid.dt());
        return out;
    }

    double length = 0.0;
    StateVector chi_prev = psi0;
    for (std::size_t k = 1; k < n; ++k) {
        if (std::abs(overlaps[k]) < kOverlapFloor) {
            out.values[k] = kNaN;
            continue;
        }
        const StateVector chi = (std::conj(overlaps[k]) / std::abs(overlaps[k])) * states[k];
        length += (chi - chi_prev).norm();
        chi_prev = chi;
        out.values[k] = length;
    }
    return out;
}

}  // namespace

std::string to_string(ChargerVariant v) {
    return v == ChargerVariant::raw ? "raw" : "regularized";
}

ChargerVariant charger_variant_from_string(const std::string& s) {
    if (s == "raw") return ChargerVariant::raw;
    if (s == "regularized") return ChargerVariant::regularized;
    throw Error("unknown charger variant '" + s + "' (expected raw|regularized)");
}

SparseHamiltonian ChargerSetup::shifted_generator() const {
    if (variant == ChargerVariant::regularized) return generator;  // minimum already at zero
    SparseMatrixCd m = generator.matrix();
    SparseMatrixCd eye(generator.dim(), generator.dim());
    eye.setIdentity();
    m -= lambda_min * eye;
    return from_sparse_matrix(std::move(m), true);
}

ChargerSetup make_charger(const SparseHamiltonian& h1_raw, double lambda_min, double lambda_max,
                          ChargerVariant v) {
    ChargerSetup setup;
    setup.lambda_min = lambda_min;
    setup.lambda_max = lambda_max;
    setup.bandwidth = lambda_max - lambda_min;
    setup.variant = v;
    if (v == ChargerVariant::regularized) {
        RegularizedCharger reg = regularize_with(h1_raw, lambda_min, lambda_max);
        setup.generator = std::move(reg.matrix);
        setup.shift = reg.shift;
        setup.scale = reg.scale;
    } else {
        setup.generator = h1_raw;
    }
    return setup;
}

ChargerSetup make_charger(int n_sites, double j_energy, std::uint64_t seed, ChargerVariant v) {
    const CouplingTensor tensor = sample_couplings(n_sites, j_energy, seed);
    const SparseHamiltonian h1 = build_syk_hamiltonian(tensor);
    const auto [lo, hi] = extremal_eigenvalues(h1);
    return make_charger(h1, lo, hi, v);
}

std::vector<StateVector> charge(const ChargerSetup& charger, int n_sites, const TimeGrid& grid) {
    if (grid.t0 != 0.0) throw Error("charge: the protocol grid must start at t = 0");
    const StateVector psi0 = battery_ground_state(n_sites);
    if (psi0.size() != charger.generator.dim())
        throw DimensionMismatch("charge: charger dimension does not match the site count");
    return expm_action_grid(charger.generator, psi0, grid, -1);
}

std::vector<StateVector> charge(const ChargingProtocol& protocol) {
    const ChargerSetup charger =
        make_charger(protocol.n_sites, protocol.j_energy, protocol.seed, protocol.variant);
    return charge(charger, protocol.n_sites, protocol.grid);
}

ObservableTrace energy_trace(const std::vector<StateVector>& states, const TimeGrid& grid,
                             const SparseHamiltonian& h0) {
    if (static_cast<int>(states.size()) != grid.n_steps)
        throw DimensionMismatch("energy_trace: state count does not match the grid");
    ObservableTrace trace{"E_N", grid, {}, "omega0"};
    trace.values.reserve(states.size());
    for (const auto& psi : states) trace.values.push_back(std::real(psi.dot(h0.matrix() * psi)));
    return trace;
}

ObservableTrace power_trace(const ObservableTrace& energy) {
    if (energy.grid.t0 != 0.0) throw Error("power_trace: grid must start at 0");
    ObservableTrace trace{"P_N", energy.grid, {}, energy.units + "/time"};
    trace.values.resize(energy.values.size(), 0.0);
    for (std::size_t k = 1; k < energy.values.size(); ++k)
        trace.values[k] = energy.values[k] / energy.grid.time(static_cast<int>(k));
    return trace;
}

OptimalCharging optimal_charging(const ObservableTrace& power) {
    const auto n = power.values.size();
    if (n < 3) throw TooFewSamples("optimal_charging: need at least 3 points");

    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)  // strict > keeps ties at the smaller tau
        if (power.values[k] > power.values[arg]) arg = k;
    if (arg == 0 || arg == n - 1)
        throw MaxAtBoundary("optimal_charging: maximum at grid " +
                            std::string(arg == 0 ? "start" : "end") + "; extend the window");

    const double pm = power.values[arg - 1];
    const double p0 = power.values[arg];
    const double pp = power.values[arg + 1];
    const double denom = pm - 2.0 * p0 + pp;
    const double dt = power.grid.dt();
    double offset = 0.0;
    if (denom < 0.0) offset = 0.5 * dt * (pm - pp) / denom;
    offset = std::clamp(offset, -dt, dt);

    OptimalCharging opt;
    opt.tau_star = power.grid.time(static_cast<int>(arg)) + offset;
    opt.p_star = p0 - 0.25 * (pm - pp) * offset / dt;
    return opt;
}

PopulationsTrace populations_trace(const std::vector<StateVector>& states, const TimeGrid& grid,
                                   int n_sites) {
    if (static_cast<int>(states.size()) != grid.n_steps)
        throw DimensionMismatch("populations_trace: state count does not match the grid");
    PopulationsTrace trace{grid, Eigen::MatrixXd(grid.n_steps, n_sites + 1)};
    for (std::size_t k = 0; k < states.size(); ++k)
        trace.values.row(static_cast<Eigen::Index>(k)) = populations(states[k], n_sites).transpose();
    return trace;
}

double hellinger_to_binomial(const Eigen::VectorXd& p, int n_sites) {
    if (p.size() != n_sites + 1)
        throw DimensionMismatch("hellinger_to_binomial: expected N+1 populations");
    double total = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (p[k] < -1e-10) throw NotNormalized("hellinger_to_binomial: negative population");
        total += p[k];
    }
    if (std::abs(total - 1.0) > 1e-8)
        throw NotNormalized("hellinger_to_binomial: populations sum to " + std::to_string(total));

    double acc = 0.0;
    for (int k = 0; k <= n_sites; ++k)
        acc += std::sqrt(std::max(p[k], 0.0) * static_cast<double>(binomial(n_sites, k)));
    return clamp01(1.0 - std::pow(2.0, -0.5 * n_sites) * acc);
}

double averaged_moment(const SparseHamiltonian& h, const std::vector<StateVector>& states,
                       const TimeGrid& grid, int alpha) {
    if (alpha != 1 && alpha != 2) throw Error("averaged_moment: alpha must be 1 or 2");
    if (static_cast<int>(states.size()) != grid.n_steps)
        throw DimensionMismatch("averaged_moment: state count does not match the grid");

    std::vector<double> integrand(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto [mean, second] = first_two_moments(h, states[k]);
        const double var = std::max(second - mean * mean, 0.0);
        integrand[k] = alpha == 2 ? var : std::sqrt(var);
    }
    const double window = grid.t1 - grid.t0;
    return simpson_integrate(integrand, grid.dt()) / window;
}

VarianceSplit battery_variance_split(const std::vector<StateVector>& states, const TimeGrid& grid,
                                     int n_sites, double omega0) {
    if (static_cast<int>(states.size()) != grid.n_steps)
        throw DimensionMismatch("battery_variance_split: state count does not match the grid");

    const double w2 = omega0 * omega0 / 4.0;
    std::vector<double> local_t(states.size()), ent_t(states.size());
    std::vector<double> sy(static_cast<std::size_t>(n_sites) + 1);
    for (std::size_t t = 0; t < states.size(); ++t) {
        const StateVector& psi = states[t];
        double local = 0.0;
        for (int s = 1; s <= n_sites; ++s) {
            sy[s] = sigma_y_expectation(psi, s, n_sites);
            local += w2 * (1.0 - sy[s] * sy[s]);  // <h_j^2> = omega0^2/4 exactly
        }
        double ent = 0.0;
        for (int a = 1; a <= n_sites; ++a)
            for (int b = a + 1; b <= n_sites; ++b)
                ent += 2.0 * w2 * (sigma_yy_expectation(psi, a, b, n_sites) - sy[a] * sy[b]);
        local_t[t] = local;
        ent_t[t] = ent;
    }
    const double window = grid.t1 - grid.t0;
    VarianceSplit split;
    split.local = simpson_integrate(local_t, grid.dt()) / window;
    split.entangled = simpson_integrate(ent_t, grid.dt()) / window;
    return split;
}

double fubini_study_length(const std::vector<StateVector>& states, const TimeGrid& grid,
                           const SparseHamiltonian& h1) {
    return averaged_moment(h1, states, grid, 1) * (grid.t1 - grid.t0);
}

BoundTraces bound_traces(const std::vector<StateVector>& states, const TimeGrid& grid,
                         const SparseHamiltonian& h0, const SparseHamiltonian& h1_shifted,
                         const ObservableTrace& energy) {
    const auto n = states.size();
    if (static_cast<int>(n) != grid.n_steps || energy.values.size() != n)
        throw DimensionMismatch("bound_traces: inconsistent trace lengths");

    BoundTraces out;
    out.bures_angle.resize(n);
    out.t_qsl.resize(n);
    out.t_rqsl.resize(n);
    out.p_lower.resize(n);
    out.p_upper.resize(n);
    out.var_h0.resize(n);
    out.var_h0_prefix.resize(n, 0.0);

    {
        const auto [mean1, second1] = first_two_moments(h1_shifted, states.front());
        out.mean_h1_shifted = mean1;
        out.var_h1 = std::max(second1 - mean1 * mean1, 0.0);
    }
    const double delta_e = std::sqrt(out.var_h1);

    for (std::size_t k = 0; k < n; ++k) {
        const auto [mean0, second0] = first_two_moments(h0, states[k]);
        out.var_h0[k] = std::max(second0 - mean0 * mean0, 0.0);
    }
    const std::vector<double> var0_int = simpson_prefix(out.var_h0, grid.dt());

    const StateVector& psi0 = states.front();
    const PathLengths lengths =
        reference_path_lengths(states, grid, h1_shifted, out.mean_h1_shifted, out.var_h1);
    out.skipped_overlap_points = lengths.skipped;

    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(static_cast<int>(k));
        const Complex overlap = psi0.dot(states[k]);
        const double fidelity = std::min(std::abs(overlap), 1.0);
        out.bures_angle[k] = std::acos(fidelity);

        if (k == 0) {
            out.t_qsl[k] = 0.0;
            out.t_rqsl[k] = 0.0;
            out.p_lower[k] = 0.0;
            out.p_upper[k] = 0.0;
            continue;
        }

        const double avg_var0 = var0_int[k] / t;
        out.var_h0_prefix[k] = avg_var0;
        out.p_upper[k] = 2.0 * std::sqrt(avg_var0 * out.var_h1);

        if (out.mean_h1_shifted < 1e-12 && delta_e < 1e-12) {
            out.t_qsl[k] = kNaN;
        } else {
            double bound = 0.0;
            if (out.mean_h1_shifted > 1e-12)
                bound = std::max(bound, out.bures_angle[k] / out.mean_h1_shifted);
            if (delta_e > 1e-12) bound = std::max(bound, out.bures_angle[k] / delta_e);
            out.t_qsl[k] = bound;
        }

        if (std::isnan(lengths.values[k])) {
            out.t_rqsl[k] = kNaN;
            out.p_lower[k] = kNaN;
        } else if (delta_e < 1e-12) {
            out.t_rqsl[k] = 0.0;  // stationary dynamics by convention
            out.p_lower[k] = 0.0;
        } else {
            out.t_rqsl[k] = lengths.values[k] / delta_e;
            out.p_lower[k] = out.t_rqsl[k] > 0.0 ? energy.values[k] / out.t_rqsl[k] : 0.0;
        }
    }
    return out;
}

double qsl_time(const std::vector<StateVector>& states, const TimeGrid& grid,
                const SparseHamiltonian& h1_shifted) {
    if (states.size() < 2) throw TooFewSamples("qsl_time: need at least 2 states");
    const auto [mean1, second1] = first_two_moments(h1_shifted, states.front());
    const double var1 = std::max(second1 - mean1 * mean1, 0.0);
    const double delta_e = std::sqrt(var1);
    if (mean1 < 1e-12 && delta_e < 1e-12)
        throw ZeroEnergy("qsl_time: mean energy and uncertainty both vanish");

    const double fid = std::min(std::abs(states.front().dot(states.back())), 1.0);
    const double angle = std::acos(fid);
    double bound = 0.0;
    if (mean1 > 1e-12) bound = std::max(bound, angle / mean1);
    if (delta_e > 1e-12) bound = std::max(bound, angle / delta_e);
    return bound;
}

double rqsl_time(const std::vector<StateVector>& states, const TimeGrid& grid,
                 const SparseHamiltonian& h1) {
    if (static_cast<int>(states.size()) != grid.n_steps)
        throw DimensionMismatch("rqsl_time: state count does not match the grid");

    const StateVector& psi0 = states.front();
    const Complex end_overlap = psi0.dot(states.back());
    if (std::abs(end_overlap) < kOverlapFloor)
        throw OverlapVanished("rqsl_time: the overlap with psi(0) vanished at tau");

    const auto [mean1, second1] = first_two_moments(h1, psi0);
    const double var1 = std::max(second1 - mean1 * mean1, 0.0);
    const double delta_e = std::sqrt(var1);
    if (delta_e < 1e-12) return 0.0;  // stationary state: 0/0 guarded to 0

    const PathLengths lengths = reference_path_lengths(states, grid, h1, mean1, var1);
    double last = 0.0;
    for (double v : lengths.values)
        if (!std::isnan(v)) last = v;
    return last / delta_e;
}

PowerBoundsResult power_bounds(const std::vector<StateVector>& states, const TimeGrid& grid,
                               const SparseHamiltonian& h0, const SparseHamiltonian& h1_shifted,
                               double energy_at_tau) {
    PowerBoundsResult bounds;
    const double t_rqsl = rqsl_time(states, grid, h1_shifted);
    bounds.lower = t_rqsl > 0.0 ? energy_at_tau / t_rqsl : 0.0;
    const double var0 = averaged_moment(h0, states, grid, 2);
    const double var1 = averaged_moment(h1_shifted, states, grid, 2);
    bounds.upper = 2.0 * std::sqrt(var0 * var1);
    return bounds;
}

}  // namespace sykqb
