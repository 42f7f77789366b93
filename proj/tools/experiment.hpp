#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codistill/data.hpp"
#include "codistill/eval.hpp"
#include "codistill/train.hpp"

namespace codistill::cli {

// Canonical experiment mode names and column order, mirroring the comparison
// table: kd, ml, kd_ml_online, kd_ml_offline.
extern const std::vector<std::string> kKnownModes;

struct DatasetSpec {
    std::string kind = "gaussian_blobs";  // gaussian_blobs | synthetic_images | csv
    std::size_t classes = 3;
    std::size_t per_class = 300;
    std::size_t dim = 2;
    std::size_t side = 12;
    double separation = 6.0;
    std::uint64_t seed = 42;
    std::string csv_path;
    std::string label_column = "label";
};

// A parsed experiment file: which dataset, which network version preset,
// which modes and seeds to run, and the training configuration.
struct ExperimentSpec {
    std::string name = "experiment";
    DatasetSpec dataset;
    std::string preset = "v1";
    std::vector<std::string> teacher_layers;               // raw layer texts
    std::vector<std::vector<std::string>> student_layers;  // one list per student
    std::vector<std::string> modes;
    std::vector<std::uint64_t> seeds;
    DistillConfig base;

    // Everything that identifies the experiment, sorted key=value lines.
    std::string canonical_text() const;
    // canonical_text minus name/modes/seeds: runs that only differ in those
    // still belong to one experiment and may be aggregated together.
    std::string fingerprint() const;
    std::string spec_hash() const;
};

ExperimentSpec parse_experiment(const std::filesystem::path& spec_path);

Dataset build_dataset(const DatasetSpec& spec);

// report.json round-trip.
void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

// All report.json files under runs_dir/<mode>/<seed>/, modes in canonical
// order, seeds ascending.
std::vector<RunReport> collect_reports(const std::filesystem::path& runs_dir);

struct RenderedTable {
    std::string text;
    std::string csv;
};

// Mean +/- std per (model, mode) cell with significance asterisks against the
// kd ensemble. Falls back to a plain single-seed table (no deviations, no
// asterisks, explanatory footnote) when any series has fewer than two seeds.
RenderedTable render_table(const std::vector<RunReport>& reports);

// Subcommand entry points; return process exit codes (0 ok, 2 usage/config,
// 3 divergence, 1 other failures).
int run_command(const std::filesystem::path& spec_path, std::size_t jobs,
                const std::filesystem::path& out_dir);
int table_command(const std::filesystem::path& runs_dir);
int plot_command(const std::filesystem::path& runs_dir);

}  // namespace codistill::cli
