#include "sykqb/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace sykqb {

const char* const kVersionString = "sykqb 0.1.0";

namespace {

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot open " + file.string() + " for writing");
    out << text;
}

nlohmann::json trace_stats(const AveragedTrace& t) {
    return {{"count", t.count}};
}

nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;  // NaN/inf serialize as JSON null
}

}  // namespace

std::string format_cell(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json config_to_json(const EnsembleConfig& c) {
    nlohmann::json doc;
    doc["n_list"] = c.n_list;
    doc["realizations_override"] = nlohmann::json::object();
    for (const auto& [n, count] : c.realizations_override)
        doc["realizations_override"][std::to_string(n)] = count;
    doc["schedule_scale"] = c.schedule_scale;
    doc["base_seed"] = c.base_seed;
    doc["variant"] = to_string(c.variant);
    doc["j_energy"] = c.j_energy;
    doc["omega0"] = c.omega0;
    doc["horizon"] = c.horizon;
    doc["grid_points"] = c.grid_points;
    doc["otoc_grid_points"] = c.otoc_grid_points;
    doc["observables"] = {{"energy", c.observables.energy},
                          {"populations", c.observables.populations},
                          {"variances", c.observables.variances},
                          {"bounds", c.observables.bounds},
                          {"otoc", c.observables.otoc},
                          {"commutators", c.observables.commutators}};
    doc["max_commutator_order"] = c.max_commutator_order;
    doc["otoc_f0"] = c.otoc_f0;
    doc["otoc_f1"] = c.otoc_f1;
    doc["otoc_fit_per_realization"] = c.otoc_fit_per_realization;
    doc["fit_discard_smallest"] = c.fit_discard_smallest;
    return doc;
}

EnsembleConfig config_from_json(const nlohmann::json& doc) {
    EnsembleConfig c;
    if (doc.contains("n_list")) c.n_list = doc["n_list"].get<std::vector<int>>();
    if (doc.contains("realizations_override"))
        for (const auto& [key, value] : doc["realizations_override"].items())
            c.realizations_override[std::stoi(key)] = value.get<int>();
    c.schedule_scale = doc.value("schedule_scale", c.schedule_scale);
    c.base_seed = doc.value("base_seed", c.base_seed);
    if (doc.contains("variant")) c.variant = charger_variant_from_string(doc["variant"]);
    c.j_energy = doc.value("j_energy", c.j_energy);
    c.omega0 = doc.value("omega0", c.omega0);
    c.horizon = doc.value("horizon", c.horizon);
    c.grid_points = doc.value("grid_points", c.grid_points);
    c.otoc_grid_points = doc.value("otoc_grid_points", c.otoc_grid_points);
    if (doc.contains("observables")) {
        const auto& o = doc["observables"];
        c.observables.energy = o.value("energy", c.observables.energy);
        c.observables.populations = o.value("populations", c.observables.populations);
        c.observables.variances = o.value("variances", c.observables.variances);
        c.observables.bounds = o.value("bounds", c.observables.bounds);
        c.observables.otoc = o.value("otoc", c.observables.otoc);
        c.observables.commutators = o.value("commutators", c.observables.commutators);
    }
    c.max_commutator_order = doc.value("max_commutator_order", c.max_commutator_order);
    c.otoc_f0 = doc.value("otoc_f0", c.otoc_f0);
    c.otoc_f1 = doc.value("otoc_f1", c.otoc_f1);
    c.otoc_fit_per_realization =
        doc.value("otoc_fit_per_realization", c.otoc_fit_per_realization);
    c.fit_discard_smallest = doc.value("fit_discard_smallest", c.fit_discard_smallest);
    c.threads = doc.value("threads", 0);
    return c;
}

std::string config_core_hash(const EnsembleConfig& c) {
    // Only what must match before results may be collated together.
    std::string canon = "seed=" + std::to_string(c.base_seed) + ";J=" + format_cell(c.j_energy) +
                        ";omega0=" + format_cell(c.omega0) +
                        ";scale=" + format_cell(c.schedule_scale);
    return fnv1a_hex(canon);
}

std::string config_full_hash(const EnsembleConfig& c) {
    return fnv1a_hex(config_to_json(c).dump());
}

namespace {

std::string csv_comment(const EnsembleConfig& config, const std::string& experiment, int n_sites) {
    std::string line = "# ";
    line += kVersionString;
    line += " experiment=" + experiment;
    if (n_sites > 0) line += " n=" + std::to_string(n_sites);
    line += " variant=" + to_string(config.variant);
    line += " core=" + config_core_hash(config);
    line += " full=" + config_full_hash(config);
    return line + "\n";
}

std::string charge_csv(const EnsembleConfig& config, const EnsembleNResult& res,
                       const std::string& experiment) {
    std::string text = csv_comment(config, experiment, res.n_sites);
    text += "t,E,E_se,P,P_se,var_h0,p_lower,p_upper,t_qsl,t_rqsl,hellinger_sq";
    for (int k = 0; k <= res.n_sites; ++k) text += ",p_" + std::to_string(k);
    text += "\n";

    const auto cell = [](const std::vector<double>& v, std::size_t k) {
        return k < v.size() ? format_cell(v[k]) : std::string("nan");
    };
    for (int k = 0; k < res.grid.n_steps; ++k) {
        const auto i = static_cast<std::size_t>(k);
        text += format_cell(res.grid.time(k));
        text += "," + cell(res.energy.mean, i) + "," + cell(res.energy.sem, i);
        text += "," + cell(res.power.mean, i) + "," + cell(res.power.sem, i);
        text += "," + cell(res.var_h0.mean, i);
        text += "," + cell(res.p_lower.mean, i) + "," + cell(res.p_upper.mean, i);
        text += "," + cell(res.t_qsl.mean, i) + "," + cell(res.t_rqsl.mean, i);
        text += "," + cell(res.hellinger_sq, i);
        for (int level = 0; level <= res.n_sites; ++level)
            text += "," + (res.populations_mean.size() > 0
                               ? format_cell(res.populations_mean(k, level))
                               : std::string("nan"));
        text += "\n";
    }
    return text;
}

std::string otoc_csv(const EnsembleConfig& config, const EnsembleNResult& res) {
    std::string text = csv_comment(config, "otoc", res.n_sites);
    text += "t,F,F_se\n";
    for (int k = 0; k < res.otoc_grid.n_steps; ++k) {
        const auto i = static_cast<std::size_t>(k);
        text += format_cell(res.otoc_grid.time(k));
        text += "," + (i < res.otoc.mean.size() ? format_cell(res.otoc.mean[i]) : std::string("nan"));
        text += "," + (i < res.otoc.sem.size() ? format_cell(res.otoc.sem[i]) : std::string("nan"));
        text += "\n";
    }
    return text;
}

std::string lyapunov_csv(const EnsembleConfig& config, const EnsembleSummary& summary) {
    std::string text = csv_comment(config, "otoc", 0);
    text += "N,lambda_fit,a,b,residual,fit_points,ehrenfest_time\n";
    for (const auto& res : summary.per_n) {
        text += std::to_string(res.n_sites);
        if (res.lyapunov) {
            text += "," + format_cell(res.lyapunov->lambda) + "," + format_cell(res.lyapunov->a) +
                    "," + format_cell(res.lyapunov->b) + "," + format_cell(res.lyapunov->residual) +
                    "," + std::to_string(res.lyapunov->fit_points) + "," +
                    format_cell(res.ehrenfest);
        } else {
            text += ",nan,nan,nan,nan,0,nan";
        }
        text += "\n";
    }
    return text;
}

double record_mean(const EnsembleNResult& res, double RealizationRecord::* member) {
    std::vector<double> vals;
    for (const auto& rec : res.realizations)
        if (rec.ok && std::isfinite(rec.*member)) vals.push_back(rec.*member);
    return mean_and_sem(vals).first;
}

std::string sweep_csv(const EnsembleConfig& config, const EnsembleSummary& summary) {
    std::string text = csv_comment(config, "sweep", 0);
    text +=
        "N,realizations,bandwidth_mean,bandwidth_se,tau_star,p_star,E_at_tau_star,"
        "E_norm_at_tau_star,t_qsl,t_rqsl,p_lower,p_upper,var_h0,var_h0_local,var_h0_ent,"
        "var_h1,fs_length,hellinger_at_tau_star,hellinger_final\n";
    for (const auto& res : summary.per_n) {
        int ok = 0;
        for (const auto& rec : res.realizations)
            if (rec.ok) ++ok;
        text += std::to_string(res.n_sites) + "," + std::to_string(ok);
        text += "," + format_cell(res.bandwidth_mean) + "," + format_cell(res.bandwidth_sem);
        text += "," + format_cell(res.tau_star) + "," + format_cell(res.p_star);
        text += "," + format_cell(res.energy_at_tau_star);
        text += "," + format_cell(res.energy_at_tau_star / (res.n_sites * config.omega0));
        text += "," + format_cell(record_mean(res, &RealizationRecord::t_qsl));
        text += "," + format_cell(record_mean(res, &RealizationRecord::t_rqsl));
        text += "," + format_cell(record_mean(res, &RealizationRecord::p_lower));
        text += "," + format_cell(record_mean(res, &RealizationRecord::p_upper));
        text += "," + format_cell(record_mean(res, &RealizationRecord::var_h0));
        text += "," + format_cell(record_mean(res, &RealizationRecord::var_h0_local));
        text += "," + format_cell(record_mean(res, &RealizationRecord::var_h0_entangled));
        text += "," + format_cell(record_mean(res, &RealizationRecord::var_h1));
        text += "," + format_cell(record_mean(res, &RealizationRecord::fs_length));
        text += "," + format_cell(res.hellinger_at_tau_star) + "," + format_cell(res.hellinger_final);
        text += "\n";
    }
    return text;
}

std::string commutators_csv(const EnsembleConfig& config, const EnsembleSummary& summary) {
    std::string text = csv_comment(config, "commutators", 0);
    text += "N,k,norm_mean,norm_se\n";
    for (const auto& res : summary.per_n) {
        text += std::to_string(res.n_sites) + ",0,1,0\n";  // C_0 = W, unitary
        for (std::size_t k = 0; k < res.commutator_norms_mean.size(); ++k)
            text += std::to_string(res.n_sites) + "," + std::to_string(k + 1) + "," +
                    format_cell(res.commutator_norms_mean[k]) + "," +
                    format_cell(res.commutator_norms_sem[k]) + "\n";
    }
    return text;
}

nlohmann::json summary_to_json(const std::string& experiment, const EnsembleSummary& summary) {
    nlohmann::json doc;
    doc["experiment"] = experiment;
    doc["version"] = kVersionString;
    doc["config"] = config_to_json(summary.config);
    doc["config_core_hash"] = config_core_hash(summary.config);
    doc["config_full_hash"] = config_full_hash(summary.config);
    doc["warnings"] = summary.warnings;

    auto& per_n = doc["per_n"] = nlohmann::json::array();
    for (const auto& res : summary.per_n) {
        nlohmann::json item;
        item["n"] = res.n_sites;
        item["grid"] = {{"t0", res.grid.t0}, {"t1", res.grid.t1}, {"points", res.grid.n_steps}};
        item["bandwidth_mean"] = num(res.bandwidth_mean);
        item["bandwidth_se"] = num(res.bandwidth_sem);
        item["tau_star"] = num(res.tau_star);
        item["p_star"] = num(res.p_star);
        item["energy_at_tau_star"] = num(res.energy_at_tau_star);
        item["energy_norm_at_tau_star"] =
            num(res.energy_at_tau_star / (res.n_sites * summary.config.omega0));
        item["hellinger_at_tau_star"] = num(res.hellinger_at_tau_star);
        item["hellinger_final"] = num(res.hellinger_final);
        if (res.lyapunov) {
            item["lyapunov"] = {{"lambda", num(res.lyapunov->lambda)},
                                {"a", num(res.lyapunov->a)},
                                {"b", num(res.lyapunov->b)},
                                {"residual", num(res.lyapunov->residual)},
                                {"fit_points", res.lyapunov->fit_points},
                                {"f0", res.lyapunov->f0},
                                {"f1", res.lyapunov->f1}};
            item["ehrenfest_time"] = num(res.ehrenfest);
        }
        if (!res.commutator_norms_mean.empty()) {
            item["commutator_norms_mean"] = nlohmann::json::array();
            for (double v : res.commutator_norms_mean) item["commutator_norms_mean"].push_back(num(v));
        }

        int ok = 0;
        bool sandwich_ok = true, speed_ok = true;
        double max_sum_rule = 0.0;
        std::vector<double> tau_stars, bandwidths;
        for (const auto& rec : res.realizations) {
            if (!rec.ok) continue;
            ++ok;
            sandwich_ok = sandwich_ok && rec.sandwich_ok;
            speed_ok = speed_ok && rec.speed_limits_ok;
            max_sum_rule = std::max(max_sum_rule, rec.sum_rule_error);
            if (std::isfinite(rec.tau_star)) tau_stars.push_back(rec.tau_star);
            bandwidths.push_back(rec.bandwidth);
        }
        item["realizations"] = {{"total", static_cast<int>(res.realizations.size())},
                                {"ok", ok},
                                {"sandwich_ok", sandwich_ok},
                                {"speed_limits_ok", speed_ok},
                                {"max_sum_rule_error", num(max_sum_rule)}};
        if (!tau_stars.empty()) {
            const auto [m, sem] = mean_and_sem(tau_stars);
            item["realizations"]["tau_star_mean"] = num(m);
            item["realizations"]["tau_star_se"] = num(sem);
        }
        item["statistics"] = trace_stats(res.energy);
        per_n.push_back(std::move(item));
    }

    auto& fits = doc["scaling_fits"] = nlohmann::json::array();
    for (const auto& fit : summary.scaling_fits) {
        nlohmann::json item;
        item["observable"] = fit.observable;
        item["n"] = fit.n_values;
        item["y"] = nlohmann::json::array();
        for (double v : fit.y_values) item["y"].push_back(num(v));
        if (fit.fit) {
            item["a"] = num(fit.fit->a);
            item["b"] = num(fit.fit->b);
            item["c"] = num(fit.fit->c);
            item["rms"] = num(fit.fit->rms);
            item["degenerate"] = fit.fit->degenerate;
        }
        if (!fit.note.empty()) item["note"] = fit.note;
        fits.push_back(std::move(item));
    }
    if (summary.lyapunov_expansion)
        doc["lyapunov_expansion"] = {{"lambda0", num(summary.lyapunov_expansion->lambda0)},
                                     {"lambda1", num(summary.lyapunov_expansion->lambda1)},
                                     {"lambda2", num(summary.lyapunov_expansion->lambda2)}};
    return doc;
}

nlohmann::json manifest_json(const std::string& experiment, const EnsembleSummary& summary) {
    nlohmann::json doc;
    doc["version"] = kVersionString;
    doc["experiment"] = experiment;
    doc["config"] = config_to_json(summary.config);
    doc["config_core_hash"] = config_core_hash(summary.config);
    doc["config_full_hash"] = config_full_hash(summary.config);
    auto& seeds = doc["seeds"] = nlohmann::json::object();
    for (const auto& res : summary.per_n) {
        auto& list = seeds[std::to_string(res.n_sites)] = nlohmann::json::array();
        for (const auto& rec : res.realizations) list.push_back(rec.seed);
    }
    return doc;
}

}  // namespace

std::vector<std::filesystem::path> write_results(const OutputLayout& layout,
                                                 const EnsembleSummary& summary) {
    std::filesystem::create_directories(layout.dir);
    std::vector<std::filesystem::path> written;
    const std::string variant = to_string(summary.config.variant);

    const auto emit = [&](const std::filesystem::path& name, const std::string& text) {
        const auto path = layout.dir / name;
        write_text(path, text);
        written.push_back(path);
    };

    const bool has_charge_traces =
        summary.config.observables.energy || summary.config.observables.populations ||
        summary.config.observables.bounds;
    for (const auto& res : summary.per_n) {
        if (has_charge_traces && (layout.experiment == "charge" || layout.experiment == "sweep"))
            emit("charge_N" + std::to_string(res.n_sites) + "_" + variant + ".csv",
                 charge_csv(summary.config, res, layout.experiment));
        if (summary.config.observables.otoc)
            emit("otoc_N" + std::to_string(res.n_sites) + "_" + variant + ".csv",
                 otoc_csv(summary.config, res));
    }
    if (summary.config.observables.otoc)
        emit("lyapunov_" + variant + ".csv", lyapunov_csv(summary.config, summary));
    if (layout.experiment == "sweep")
        emit("sweep_" + variant + ".csv", sweep_csv(summary.config, summary));
    if (summary.config.observables.commutators)
        emit("commutators_" + variant + ".csv", commutators_csv(summary.config, summary));

    emit(layout.experiment + "_" + variant + "_summary.json",
         summary_to_json(layout.experiment, summary).dump(2) + "\n");
    emit(layout.experiment + "_" + variant + "_manifest.json",
         manifest_json(layout.experiment, summary).dump(2) + "\n");
    return written;
}

std::filesystem::path write_report(const std::filesystem::path& results_dir,
                                   const std::filesystem::path& out_file) {
    if (!std::filesystem::is_directory(results_dir))
        throw MissingResults("report: " + results_dir.string() + " is not a directory");

    std::vector<std::filesystem::path> summaries;
    for (const auto& entry : std::filesystem::directory_iterator(results_dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > 13 && name.substr(name.size() - 13) == "_summary.json")
            summaries.push_back(entry.path());
    }
    std::sort(summaries.begin(), summaries.end());
    if (summaries.empty())
        throw MissingResults("report: no *_summary.json files in " + results_dir.string());

    std::vector<nlohmann::json> docs;
    std::set<std::string> core_hashes;
    for (const auto& path : summaries) {
        std::ifstream in(path);
        docs.push_back(nlohmann::json::parse(in));
        core_hashes.insert(docs.back().value("config_core_hash", ""));
    }
    if (core_hashes.size() > 1)
        throw Error("report: config core hashes disagree across result files; refusing to collate");

    std::string md = "# syk-battery run report\n\n";
    md += "version: " + std::string(kVersionString) + "\n";
    md += "config core hash: " + *core_hashes.begin() + "\n\n";

    const auto fmt = [](const nlohmann::json& v) {
        if (v.is_null()) return std::string("-");
        if (v.is_number()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
            return std::string(buf);
        }
        return v.dump();
    };

    for (const auto& doc : docs) {
        const std::string experiment = doc.value("experiment", "?");
        const std::string variant = doc["config"].value("variant", "?");
        md += "## " + experiment + " (" + variant + ")\n\n";
        md += "| N | tau* | P* | E(tau*)/(N w0) | bandwidth | lambda_fit | sandwich | speed limits | max sum-rule err |\n";
        md += "|---|------|----|----------------|-----------|------------|----------|--------------|------------------|\n";
        for (const auto& item : doc["per_n"]) {
            const auto& rl = item["realizations"];
            md += "| " + std::to_string(item["n"].get<int>());
            md += " | " + fmt(item.value("tau_star", nlohmann::json()));
            md += " | " + fmt(item.value("p_star", nlohmann::json()));
            md += " | " + fmt(item.value("energy_norm_at_tau_star", nlohmann::json()));
            md += " | " + fmt(item.value("bandwidth_mean", nlohmann::json()));
            md += " | " +
                  (item.contains("lyapunov") ? fmt(item["lyapunov"]["lambda"]) : std::string("-"));
            md += " | " + std::string(rl.value("sandwich_ok", true) ? "pass" : "FAIL");
            md += " | " + std::string(rl.value("speed_limits_ok", true) ? "pass" : "FAIL");
            md += " | " + fmt(rl.value("max_sum_rule_error", nlohmann::json()));
            md += " |\n";
        }
        md += "\n";
        if (doc.contains("scaling_fits") && !doc["scaling_fits"].empty()) {
            md += "| fit | a | b | c | rms |\n|-----|---|---|---|-----|\n";
            for (const auto& fit : doc["scaling_fits"]) {
                md += "| " + fit["observable"].get<std::string>();
                md += " | " + fmt(fit.value("a", nlohmann::json()));
                md += " | " + fmt(fit.value("b", nlohmann::json()));
                md += " | " + fmt(fit.value("c", nlohmann::json()));
                md += " | " + fmt(fit.value("rms", nlohmann::json()));
                md += " |\n";
            }
            md += "\n";
        }
    }

    // Frame cross-check: regularized tau* should equal raw tau* times the
    // raw-frame mean bandwidth, to a regularized grid step.
    const auto find_variant = [&](const std::string& variant) -> const nlohmann::json* {
        for (const auto& doc : docs) {
            const std::string exp = doc.value("experiment", "");
            if ((exp == "charge" || exp == "sweep") && doc["config"].value("variant", "") == variant)
                return &doc;
        }
        return nullptr;
    };
    const nlohmann::json* raw = find_variant("raw");
    const nlohmann::json* reg = find_variant("regularized");
    if (raw && reg) {
        md += "## frame consistency\n\n";
        md += "| N | tau*_raw x bandwidth | tau*_reg | grid step | status |\n";
        md += "|---|----------------------|----------|-----------|--------|\n";
        for (const auto& item_raw : (*raw)["per_n"]) {
            const int n = item_raw["n"].get<int>();
            for (const auto& item_reg : (*reg)["per_n"]) {
                if (item_reg["n"].get<int>() != n) continue;
                if (item_raw["tau_star"].is_null() || item_reg["tau_star"].is_null()) continue;
                const double mapped = item_raw["tau_star"].get<double>() *
                                      item_raw["bandwidth_mean"].get<double>();
                const double tau_reg = item_reg["tau_star"].get<double>();
                const double step = (item_reg["grid"]["t1"].get<double>() -
                                     item_reg["grid"]["t0"].get<double>()) /
                                    (item_reg["grid"]["points"].get<int>() - 1);
                const bool pass = std::abs(mapped - tau_reg) <= step;
                char buf[160];
                std::snprintf(buf, sizeof buf, "| %d | %.6g | %.6g | %.6g | %s |\n", n, mapped,
                              tau_reg, step, pass ? "pass" : "FAIL");
                md += buf;
            }
        }
        md += "\n";
    }

    write_text(out_file, md);
    return out_file;
}

}  // namespace sykqb
