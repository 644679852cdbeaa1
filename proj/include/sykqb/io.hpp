#pragma once

// Result persistence: CSV traces, JSON summaries, the reproducibility
// manifest, and the collated report. Output is plot-ready data, never
// images. All numeric formatting is deterministic so reruns are
// byte-identical.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sykqb/ensemble.hpp"

namespace sykqb {

extern const char* const kVersionString;

nlohmann::json config_to_json(const EnsembleConfig& config);
EnsembleConfig config_from_json(const nlohmann::json& doc);

/// Hash over the fields that must agree before results from different
/// commands may be collated into one report (seed, units, schedule).
std::string config_core_hash(const EnsembleConfig& config);

/// Hash over the complete configuration.
std::string config_full_hash(const EnsembleConfig& config);

/// Fixed-format floating point for CSV cells (round-trippable %.17g).
std::string format_cell(double v);

struct OutputLayout {
    std::filesystem::path dir;
    std::string experiment;  // charge | otoc | sweep | commutators
};

/// Write every file one experiment produces: per-N trace CSVs, the scalar
/// summary JSON, and the manifest. Returns the list of files written.
std::vector<std::filesystem::path> write_results(const OutputLayout& layout,
                                                 const EnsembleSummary& summary);

/// Collate every summary JSON under `results_dir` into a markdown report.
/// Throws MissingResults for an empty directory and refuses to mix files
/// whose core config hashes disagree.
std::filesystem::path write_report(const std::filesystem::path& results_dir,
                                   const std::filesystem::path& out_file);

}  // namespace sykqb
