// syk-battery: command-line front end over the ensemble runner. Each paper
// figure's data pipeline is reachable through a preset; every run writes
// plot-ready CSV plus a JSON summary and a reproducibility manifest.

#include <cxxabi.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sykqb/io.hpp"

namespace {

using sykqb::ChargerVariant;
using sykqb::EnsembleConfig;

std::string demangled(const std::exception& ex) {
    int status = 0;
    char* name = abi::__cxa_demangle(typeid(ex).name(), nullptr, nullptr, &status);
    std::string out = status == 0 && name ? name : typeid(ex).name();
    std::free(name);
    return out;
}

struct PresetPatch {
    std::vector<int> n_list;
    ChargerVariant variant = ChargerVariant::regularized;
    bool set_variant = false;
    sykqb::ObservableSelection observables;
    int fit_discard = 0;
};

// Desk-scale parameter choices behind each figure's pipeline.
std::map<std::string, PresetPatch> presets_for(const std::string& experiment) {
    std::map<std::string, PresetPatch> table;
    const auto obs_traces = [] {
        sykqb::ObservableSelection o;
        o.otoc = o.commutators = false;
        return o;
    };
    const auto obs_otoc = [] {
        sykqb::ObservableSelection o;
        o.energy = o.populations = o.variances = o.bounds = o.commutators = false;
        o.otoc = true;
        return o;
    };
    const auto obs_comm = [] {
        sykqb::ObservableSelection o;
        o.energy = o.populations = o.variances = o.bounds = o.otoc = false;
        o.commutators = true;
        return o;
    };
    const auto obs_none = [] {
        sykqb::ObservableSelection o;
        o.energy = o.populations = o.variances = o.bounds = o.otoc = o.commutators = false;
        return o;
    };

    if (experiment == "otoc") {
        table["fig2"] = {{4, 6, 8, 10}, ChargerVariant::raw, true, obs_otoc(), 0};
        table["fig3a"] = {{4, 6, 8, 10}, ChargerVariant::regularized, true, obs_otoc(), 0};
        table["fig3"] = table["fig3a"];
    } else if (experiment == "charge") {
        table["fig3d"] = {{4, 6, 8, 10, 12}, ChargerVariant::regularized, true, obs_traces(), 0};
        table["fig3"] = table["fig3d"];
        table["fig4"] = {{10}, ChargerVariant::regularized, true, obs_traces(), 0};
        table["fig5"] = table["fig4"];
    } else if (experiment == "sweep") {
        table["fig3bc"] = {{4, 6, 8, 10, 12}, ChargerVariant::regularized, true, obs_traces(), 0};
        table["fig3"] = table["fig3bc"];
        table["figS7"] = {{4, 6, 8, 10, 12}, ChargerVariant::regularized, false, obs_traces(), 0};
        table["figS8"] = {{4, 5, 6, 7, 8, 9, 10, 11, 12}, ChargerVariant::regularized, false,
                          obs_none(), 0};
    } else if (experiment == "commutators") {
        table["fig6"] = {{6, 8, 10}, ChargerVariant::regularized, true, obs_comm(), 0};
    }
    return table;
}

struct CommonFlags {
    std::string config_file;
    std::string preset;
    std::string out_dir = "results";
    std::vector<int> n_list;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int realizations = 0;
    std::string variant;
    int threads = -1;
    double j_energy = 0.0;
    double omega0 = 0.0;
    double horizon = 0.0;
    int grid_points = 0;
    double schedule_scale = 0.0;
    int discard = -1;
    bool zero_charger = false;  // debug: J = 0, raw frame
    bool fit_per_realization = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_file, "JSON config file (flags override it)");
    cmd->add_option("--preset", flags.preset, "figure preset (fig2..fig6, figS7, figS8)");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--n", flags.n_list, "system sizes")->delimiter(',');
    cmd->add_option("--seed", flags.seed, "base seed")->each([&](const std::string&) {
        flags.seed_set = true;
    });
    cmd->add_option("--realizations", flags.realizations, "realizations per N (override)");
    cmd->add_option("--variant", flags.variant, "charger variant: raw|regularized");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
    cmd->add_option("--j", flags.j_energy, "charger energy scale J");
    cmd->add_option("--omega0", flags.omega0, "battery level spacing");
    cmd->add_option("--horizon", flags.horizon, "regularized-frame time horizon");
    cmd->add_option("--grid-points", flags.grid_points, "points on the charge grid");
    cmd->add_option("--schedule-scale", flags.schedule_scale,
                    "factor on the paper realization schedule");
    cmd->add_option("--discard", flags.discard, "smallest-N points discarded from scaling fits");
}

EnsembleConfig resolve_config(const std::string& experiment, const CommonFlags& flags) {
    EnsembleConfig config;
    if (experiment == "otoc") {
        config.observables = {};
        config.observables.energy = config.observables.populations = false;
        config.observables.variances = config.observables.bounds = false;
        config.observables.otoc = true;
    } else if (experiment == "commutators") {
        config.observables = {};
        config.observables.energy = config.observables.populations = false;
        config.observables.variances = config.observables.bounds = false;
        config.observables.commutators = true;
    }

    if (!flags.config_file.empty()) {
        std::ifstream in(flags.config_file);
        if (!in) throw sykqb::Error("cannot open config file " + flags.config_file);
        config = sykqb::config_from_json(nlohmann::json::parse(in));
    }

    if (!flags.preset.empty()) {
        const auto table = presets_for(experiment);
        const auto it = table.find(flags.preset);
        if (it == table.end())
            throw sykqb::Error("preset '" + flags.preset + "' is not defined for " + experiment);
        config.n_list = it->second.n_list;
        if (it->second.set_variant) config.variant = it->second.variant;
        config.observables = it->second.observables;
        config.fit_discard_smallest = it->second.fit_discard;
    }

    if (!flags.n_list.empty()) config.n_list = flags.n_list;
    if (flags.seed_set) config.base_seed = flags.seed;
    if (!flags.variant.empty()) config.variant = sykqb::charger_variant_from_string(flags.variant);
    if (flags.threads >= 0) config.threads = flags.threads;
    if (flags.j_energy > 0.0) config.j_energy = flags.j_energy;
    if (flags.omega0 > 0.0) config.omega0 = flags.omega0;
    if (flags.horizon > 0.0) config.horizon = flags.horizon;
    if (flags.grid_points > 1) config.grid_points = flags.grid_points;
    if (flags.schedule_scale > 0.0) config.schedule_scale = flags.schedule_scale;
    if (flags.discard >= 0) config.fit_discard_smallest = flags.discard;
    if (flags.realizations > 0)
        for (int n : config.n_list) config.realizations_override[n] = flags.realizations;
    if (flags.fit_per_realization) config.otoc_fit_per_realization = true;
    if (flags.zero_charger) {
        config.j_energy = 0.0;
        config.variant = ChargerVariant::raw;
    }
    return config;
}

int run_experiment(const std::string& experiment, const CommonFlags& flags) {
    const EnsembleConfig config = resolve_config(experiment, flags);
    const sykqb::EnsembleSummary summary = sykqb::run_ensemble(config);
    const auto files = sykqb::write_results({flags.out_dir, experiment}, summary);
    for (const auto& warning : summary.warnings) std::cerr << "warning: " << warning << "\n";
    for (const auto& file : files) std::cout << file.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"complex-SYK quantum battery simulations"};
    app.require_subcommand(1);

    CommonFlags charge_flags, otoc_flags, sweep_flags, comm_flags;
    auto* cmd_charge = app.add_subcommand("charge", "charging ensemble: energy, power, populations");
    add_common_flags(cmd_charge, charge_flags);
    auto* cmd_otoc = app.add_subcommand("otoc", "OTOC traces and Lyapunov fits");
    add_common_flags(cmd_otoc, otoc_flags);
    cmd_otoc->add_flag("--zero-charger", otoc_flags.zero_charger,
                       "debug: run with J = 0 (raw frame), the OTOC must stay zero");
    cmd_otoc->add_flag("--fit-per-realization", otoc_flags.fit_per_realization,
                       "fit each realization's OTOC and average the exponents");
    auto* cmd_sweep = app.add_subcommand("sweep", "N sweep: tau*, P*, bounds, variances, fits");
    add_common_flags(cmd_sweep, sweep_flags);
    auto* cmd_comm = app.add_subcommand("commutators", "nested-commutator norm diagnostics");
    add_common_flags(cmd_comm, comm_flags);

    std::string report_dir = "results";
    std::string report_out;
    auto* cmd_report = app.add_subcommand("report", "collate results into one markdown summary");
    cmd_report->add_option("--results", report_dir, "directory with result files");
    cmd_report->add_option("--out", report_out, "report file (default: <results>/report.md)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_charge->parsed()) return run_experiment("charge", charge_flags);
        if (cmd_otoc->parsed()) return run_experiment("otoc", otoc_flags);
        if (cmd_sweep->parsed()) return run_experiment("sweep", sweep_flags);
        if (cmd_comm->parsed()) return run_experiment("commutators", comm_flags);
        if (cmd_report->parsed()) {
            const std::filesystem::path out =
                report_out.empty() ? std::filesystem::path(report_dir) / "report.md"
                                   : std::filesystem::path(report_out);
            const auto written = sykqb::write_report(report_dir, out);
            std::cout << written.string() << "\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        nlohmann::json record;
        record["error"] = {{"type", demangled(ex)}, {"message", ex.what()}};
        std::cerr << record.dump() << "\n";
        return 1;
    }
    return 0;
}
