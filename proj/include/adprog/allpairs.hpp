#ifndef ADPROG_ALLPAIRS_HPP
#define ADPROG_ALLPAIRS_HPP

#include "adprog/cohort.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adprog {

enum class PairMode { Pairs, Triplets };

PairMode pair_mode_from_string(std::string_view s); // "pairs" / "triplets"
std::string_view pair_mode_name(PairMode m);

// Origin of one training row: exam indices within the named patient.
// source_b is -1 in pairs mode. Indices always satisfy
// source_a < source_b < target within the patient's exam sequence.
struct RowProvenance {
    std::string patient_id;
    int source_a = -1;
    int source_b = -1;
    int target = -1;
};

// Supervised matrix produced by the all-pairs transform. Rows are sorted by
// (patient_id, source indices); x never contains absent values — candidate
// rows with unresolved absences are skipped and counted.
struct TrainingMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXi y; // diagnosis ordinals
    std::vector<std::string> column_names;
    std::vector<RowProvenance> provenance;
    std::string group_name;
    PairMode mode = PairMode::Pairs;
    std::int64_t skipped_missing_target = 0;  // target exam lacked a diagnosis
    std::int64_t skipped_missing_feature = 0; // some involved exam lacked a feature

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
};

// Column layout of the transform output for one group and mode.
// Pairs:    [TimeDiff, biomarkers..., DX]
// Triplets: [TimeDiff, TimeDiffPrev, biomarkers..., DX,
//            biomarkers_prev..., DX_prev]
// TimeDiff is months from the most recent source exam to the target;
// TimeDiffPrev is months between the two source exams.
std::vector<std::string> matrix_columns(const FeatureGroup& group, PairMode mode);

// True when the exam can participate in a row: diagnosis present and every
// group biomarker present.
bool exam_usable(const Examination& exam, const FeatureGroup& group);

// Every ordered pair of visits (j_a < j_b) of every patient whose exams are
// usable yields the row [months(j_b - j_a), biomarkers(j_a), dx(j_a)] with
// target dx(j_b). With complete data the row count is sum_i C(L_i, 2).
TrainingMatrix transform_pairs(std::span<const PatientRecord> records,
                               const FeatureGroup& group);

// Triplet extension (j_a < j_b < j_c):
// [months(j_c - j_b), months(j_b - j_a), biomarkers(j_b), dx(j_b),
//  biomarkers(j_a), dx(j_a)] with target dx(j_c). Complete-data row count
// is sum_i C(L_i, 3).
TrainingMatrix transform_triplets(std::span<const PatientRecord> records,
                                  const FeatureGroup& group);

TrainingMatrix transform(std::span<const PatientRecord> records,
                         const FeatureGroup& group, PairMode mode);

// One inference row whose columns match the corresponding TrainingMatrix.
// t_months (> 0) takes the place of the observed time difference. Triplet
// mode additionally needs the prior source exam; the pair spacing column is
// months between exam and prior.
Eigen::RowVectorXd build_prediction_vector(const Examination& exam, double t_months,
                                           const FeatureGroup& group, PairMode mode,
                                           const Examination* prior_exam = nullptr);

// Row subset preserving column metadata; provenance follows the rows.
TrainingMatrix select_rows(const TrainingMatrix& m, std::span<const Eigen::Index> row_indices);

} // namespace adprog

#endif
