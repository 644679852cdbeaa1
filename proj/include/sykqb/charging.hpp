#pragma once

// The step charging protocol and every battery-side observable: injected
// energy, power, optimal charging time, level populations and their
// Hellinger distance to the binomial, time-averaged variances with the
// local/entangled split, Fubini-Study length, QSL/RQSL times and the power
// bounds.

#include <cstdint>
#include <string>
#include <vector>

#include "sykqb/fermion.hpp"
#include "sykqb/linalg.hpp"
#include "sykqb/syk.hpp"

namespace sykqb {

enum class ChargerVariant { raw, regularized };

std::string to_string(ChargerVariant v);
ChargerVariant charger_variant_from_string(const std::string& s);

struct ChargingProtocol {
    int n_sites = 4;
    double omega0 = 1.0;
    double j_energy = 1.0;
    ChargerVariant variant = ChargerVariant::regularized;
    TimeGrid grid;  // must start at 0: the switch function is 1 on [0, tau]
    std::uint64_t seed = 0;
};

/// Charger prepared for one realization: the evolution generator actually
/// used plus the affine data relating it back to the raw charger.
struct ChargerSetup {
    SparseHamiltonian generator;   // raw H1 or its regularized image
    double lambda_min = 0.0;       // extremes of the raw charger
    double lambda_max = 0.0;
    double bandwidth = 0.0;        // lambda_max - lambda_min
    double shift = 0.0;            // subtracted multiple of identity (0 for raw)
    double scale = 1.0;            // divisor (1 for raw)
    ChargerVariant variant = ChargerVariant::raw;

    /// Generator with its minimum eigenvalue shifted to zero; this is the
    /// energy reference the speed limits use.
    SparseHamiltonian shifted_generator() const;
};

ChargerSetup make_charger(int n_sites, double j_energy, std::uint64_t seed, ChargerVariant v);
ChargerSetup make_charger(const SparseHamiltonian& h1_raw, double lambda_min, double lambda_max,
                          ChargerVariant v);

struct ObservableTrace {
    std::string name;
    TimeGrid grid;
    std::vector<double> values;
    std::string units;
};

struct PopulationsTrace {
    TimeGrid grid;
    Eigen::MatrixXd values;  // n_steps x (N+1)
};

/// Evolve the battery ground state under the charger over the grid.
std::vector<StateVector> charge(const ChargingProtocol& protocol);
std::vector<StateVector> charge(const ChargerSetup& charger, int n_sites, const TimeGrid& grid);

/// E_N(t) = <psi(t)| H0 |psi(t)> with the shifted battery Hamiltonian.
ObservableTrace energy_trace(const std::vector<StateVector>& states, const TimeGrid& grid,
                             const SparseHamiltonian& h0);

/// P_N(t) = E_N(t)/t, with P(0) = 0 by the small-time limit.
ObservableTrace power_trace(const ObservableTrace& energy);

struct OptimalCharging {
    double tau_star = 0.0;
    double p_star = 0.0;
};

/// Grid argmax refined by a parabola through the argmax and neighbours.
/// Throws MaxAtBoundary when the maximum sits on either grid end.
OptimalCharging optimal_charging(const ObservableTrace& power);

PopulationsTrace populations_trace(const std::vector<StateVector>& states, const TimeGrid& grid,
                                   int n_sites);

/// H^2(P, Q) = 1 - 2^{-N/2} sum_k sqrt(p_k binomial(N,k)).
double hellinger_to_binomial(const Eigen::VectorXd& p, int n_sites);

/// (1/tau) integral of [<H^2>_t - <H>_t^2]^{alpha/2}; alpha = 1 gives the
/// averaged uncertainty, alpha = 2 the averaged variance.
double averaged_moment(const SparseHamiltonian& h, const std::vector<StateVector>& states,
                       const TimeGrid& grid, int alpha);

struct VarianceSplit {
    double local = 0.0;
    double entangled = 0.0;
};

/// Time-averaged battery variance split into single-site and cross-site
/// contributions; local + entangled equals the full averaged variance.
VarianceSplit battery_variance_split(const std::vector<StateVector>& states, const TimeGrid& grid,
                                     int n_sites, double omega0);

/// l(C) = Delta_tau H1 * tau.
double fubini_study_length(const std::vector<StateVector>& states, const TimeGrid& grid,
                           const SparseHamiltonian& h1);

/// T_QSL = max(L/E, L/DeltaE) with the Bures angle L between the first and
/// last state. Pass the spectrum-shifted charger so the mean energy is
/// referenced to the ground state.
double qsl_time(const std::vector<StateVector>& states, const TimeGrid& grid,
                const SparseHamiltonian& h1_shifted);

/// T_RQSL = discrete length of the phase-referenced path over Delta_tau H1.
double rqsl_time(const std::vector<StateVector>& states, const TimeGrid& grid,
                 const SparseHamiltonian& h1);

struct PowerBoundsResult {
    double lower = 0.0;
    double upper = 0.0;
};

/// E_N(tau)/T_RQSL <= P_N(tau) <= 2 sqrt(Delta_tau H0^2 Delta_tau H1^2),
/// both evaluated over the full grid window.
PowerBoundsResult power_bounds(const std::vector<StateVector>& states, const TimeGrid& grid,
                               const SparseHamiltonian& h0, const SparseHamiltonian& h1_shifted,
                               double energy_at_tau);

/// Everything the bounds need, per grid point. Entries are NaN where the
/// quantity is undefined (vanished overlap for the RQSL). The same
/// computation backs qsl_time/rqsl_time/power_bounds at the grid end.
struct BoundTraces {
    std::vector<double> bures_angle;
    std::vector<double> t_qsl;
    std::vector<double> t_rqsl;
    std::vector<double> p_lower;
    std::vector<double> p_upper;
    std::vector<double> var_h0;        // instantaneous variance of H0
    std::vector<double> var_h0_prefix; // Delta_tau H0^2 as a function of tau
    double var_h1 = 0.0;               // conserved under the charger
    double mean_h1_shifted = 0.0;      // conserved; QSL energy reference
    int skipped_overlap_points = 0;
};

BoundTraces bound_traces(const std::vector<StateVector>& states, const TimeGrid& grid,
                         const SparseHamiltonian& h0, const SparseHamiltonian& h1_shifted,
                         const ObservableTrace& energy);

}  // namespace sykqb
