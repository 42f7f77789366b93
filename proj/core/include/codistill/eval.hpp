#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codistill/losses.hpp"
#include "codistill/tensor.hpp"

namespace codistill {

enum class EnsembleRule {
    ElementwiseMax,  // per (sample, class) maximum across students
    MostConfident,   // whole row from the student with the highest peak
};

// Combines student probability matrices into one [N, C] score matrix. With
// the elementwise rule the rows need not sum to 1; this is a score matrix,
// not a distribution.
Tensor ensemble_probs(const std::vector<ProbBatch>& students,
                      EnsembleRule rule = EnsembleRule::ElementwiseMax);

// Row argmax; ties break to the lowest class index.
LabelBatch ensemble_predict(const Tensor& scores);

// Percent correct in [0, 100].
double accuracy(const LabelBatch& pred, const LabelBatch& truth);

struct WelchResult {
    double t = 0.0;
    double p = 1.0;
    double dof = 0.0;
    bool significant = false;  // two-sided p < 0.05
    bool degenerate = false;   // both samples had zero variance
};

// Welch's unequal-variance t test with Welch-Satterthwaite degrees of
// freedom. Needs at least two observations per side.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// One training run's outcome: final test accuracy per model plus the student
// ensemble, and parameter counts for the compression report.
struct RunReport {
    std::string fingerprint;  // experiment identity (dataset + networks + config)
    std::string mode;         // kd | ml | kd_ml_online | kd_ml_offline
    std::uint64_t seed = 0;
    std::string preset;
    std::vector<std::pair<std::string, double>> model_accuracy;
    double ensemble_accuracy = 0.0;
    std::vector<std::pair<std::string, std::size_t>> param_counts;
};

// Statistics of one (mode, model) series over seeds.
struct SeriesStat {
    std::string mode;
    std::string model;
    double mean = 0.0;
    double stddev = 0.0;  // sample std, n - 1 denominator
    std::size_t count = 0;
    bool significant_vs_baseline = false;  // significant improvement only
    bool welch_degenerate = false;
};

struct AggregateReport {
    std::vector<SeriesStat> series;
    std::string baseline_mode;
    std::string baseline_model;
};

// Aggregates per-seed reports into mean +/- std per (mode, model) series and
// tests every series against the named baseline series (typically the kd
// ensemble). All reports must share one config fingerprint and every series
// needs at least two seeds.
AggregateReport aggregate(const std::vector<RunReport>& reports,
                          const std::string& baseline_mode,
                          const std::string& baseline_model = "ensemble");

}  // namespace codistill
