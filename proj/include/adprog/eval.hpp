#ifndef ADPROG_EVAL_HPP
#define ADPROG_EVAL_HPP

#include "adprog/allpairs.hpp"
#include "adprog/cohort.hpp"
#include "adprog/metrics.hpp"
#include "adprog/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adprog {

// Runs fn(0..n-1) on up to `jobs` threads. Job index -> result slot keeps
// every reduction order-deterministic regardless of thread count.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

enum class CvGrouping { Patient, Row };
CvGrouping cv_grouping_from_string(std::string_view s);
std::string_view cv_grouping_name(CvGrouping g);

struct FoldResult {
    int fold = 0;
    double train_mauc = 0.0;
    double test_mauc = 0.0;
    Eigen::Index train_rows = 0;
    Eigen::Index test_rows = 0;
    // Distinct patient ids behind the train/test rows, from provenance.
    std::vector<std::string> train_patients;
    std::vector<std::string> test_patients;
    bool valid = false;
    std::string note;
};

struct CvReport {
    std::vector<FoldResult> folds;
    double mean_train_mauc = 0.0;
    double mean_test_mauc = 0.0;
    double sd_test_mauc = 0.0; // sample sd (n-1) over valid folds
    int valid_folds = 0;
    std::string config;
    int k = 0;
    CvGrouping grouping = CvGrouping::Patient;
    std::uint64_t seed = 0;
};

// k-fold cross-validation. Patient grouping keeps all of a patient's rows in
// one fold (no cross-fold provenance overlap); row grouping splits the
// transformed rows directly. Single-class folds are flagged and excluded
// from the aggregates.
CvReport cross_validate(std::span<const PatientRecord> records, const FeatureGroup& group,
                        PairMode mode, const MlpHyperparams& hp, int k, CvGrouping grouping,
                        std::uint64_t seed, int jobs = 1);

struct SplitScore {
    int index = 0;
    double train_mauc = 0.0;
    double test_mauc = 0.0;
    bool valid = false;
    std::string note;
};

// n_splits independent seeded train/test splits at patient granularity.
std::vector<SplitScore> random_splits(std::span<const PatientRecord> records,
                                      const FeatureGroup& group, PairMode mode,
                                      const MlpHyperparams& hp, int n_splits,
                                      double train_fraction, std::uint64_t seed, int jobs = 1);

struct GridSpec {
    std::vector<double> alphas{1e-4, 1e-3, 1e-2};
    std::vector<double> learning_rates{1e-4, 1e-3, 1e-2};
    std::vector<std::vector<int>> hidden_sizes{{50}, {100}, {200}};
};

struct GridProtocol {
    enum class Kind { Split, Cv, Forward } kind = Kind::Split;
    double train_fraction = 0.7;
    int k = 7;
    // Forward protocol: train on `records`, score against these.
    std::vector<PatientRecord> lb2;
    std::vector<PatientRecord> lb4;
};

struct GridEntry {
    MlpHyperparams hp; // seed field unused; per-run seeds are derived
    std::vector<double> test_scores;
    double mean_test_mauc = 0.0;
    double sd_test_mauc = 0.0;
    bool ok = false;
    std::string note;
};

struct GridResult {
    std::vector<GridEntry> entries; // ranked by mean test mAUC, failures last
    long total_runs = 0;
};

// Full grid sweep: every (alpha, lr, hidden) combination x repeats, each run
// with its own derived seed. A failing configuration is kept, ranked last,
// with the reason in its note.
GridResult grid_search(std::span<const PatientRecord> records, const FeatureGroup& group,
                       PairMode mode, const GridSpec& grid, int repeats,
                       const GridProtocol& protocol, std::uint64_t seed, int jobs = 1);

// Date/diagnosis projection of a future exam. evaluate_forward consumes
// these instead of LB4 records so LB4 feature values are unreachable by
// construction.
struct ForwardTarget {
    Date date{};
    Diagnosis dx = Diagnosis::NL;
};

struct ForwardResult {
    std::vector<ScoredSample> samples;
    double mauc_score = 0.0;
    std::vector<std::string> excluded_patients; // no usable source exams
    int evaluated_targets = 0;
};

// For each diagnosed LB4 exam: build up to three prediction vectors (one per
// last-3 usable LB2 exam) with t = months from the LB2 exam to the LB4 exam,
// average the probability triples, and score against the LB4 diagnosis.
ForwardResult evaluate_forward(const MlpModel& model, std::span<const PatientRecord> lb2,
                               std::span<const PatientRecord> lb4, PairMode mode);
ForwardResult evaluate_forward_targets(
    const MlpModel& model, std::span<const PatientRecord> lb2,
    const std::map<std::string, std::vector<ForwardTarget>>& targets_by_patient, PairMode mode);

struct PatientForecast {
    std::string patient_id;
    Eigen::MatrixXd probs; // horizon x 3, one row per month t = 1..horizon
    std::vector<Diagnosis> predicted;
};

struct ForecastTable {
    std::vector<PatientForecast> patients;
    int horizon = 0;
    std::vector<std::string> excluded_patients;
};

// Monthly probability trajectories over t = 1..horizon, averaged over the
// last-3 usable LB2 exams per patient.
ForecastTable forecast_monthly(const MlpModel& model, std::span<const PatientRecord> lb2,
                               int horizon, PairMode mode);

} // namespace adprog

#endif
