#ifndef ADPROG_INGEST_HPP
#define ADPROG_INGEST_HPP

#include "adprog/cohort.hpp"
#include "adprog/textio.hpp"

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace adprog {

// Column mapping plus category dictionaries for one source table. Defaults
// match the canonical layout written by `adprog synth`; a config file remaps
// the headers for TADPOLE-style exports.
struct CsvSchema {
    std::string patient_id_col = "patient_id";
    std::string date_col = "exam_date";
    std::string diagnosis_col = "diagnosis";
    std::string phase_col = "phase";

    // feature name -> CSV header. Explicitly mapped features must exist in
    // the header; defaults are loaded only when the header has them.
    std::map<std::string, std::string> feature_cols;
    std::set<std::string> explicit_features; // mapped via config, hence required

    // Cells equal to any of these (after trimming) are treated as missing,
    // in addition to the empty cell.
    std::set<std::string> sentinels{"NA", "NaN", "nan", "-4", "-4.0"};

    std::map<std::string, Diagnosis> diagnosis_codes;
    CategoryCodec race;

    // baseline_plus_elapsed: source AGE is age at first visit (ADNI style);
    // per-exam age is reconstructed as AGE + elapsed years.
    // as_is: source AGE is already per-exam.
    enum class AgeMode { BaselinePlusElapsed, AsIs } age_mode = AgeMode::BaselinePlusElapsed;
};

CsvSchema default_schema();
CsvSchema schema_from_config(const KeyValueConfig& cfg);

Date parse_date(std::string_view text, const std::string& context);

std::vector<PatientRecord> parse_cohort_csv(const std::filesystem::path& path,
                                            const CsvSchema& schema);
std::vector<PatientRecord> parse_cohort_text(std::string_view text, const CsvSchema& schema,
                                             const std::string& origin);

// Canonical cohort export, the inverse of the default schema. AGE is written
// ADNI-style as the age at the patient's first visit.
std::string cohort_to_csv(std::span<const PatientRecord> records);
void write_cohort_csv(const std::filesystem::path& path, std::span<const PatientRecord> records);

// LB1 / LB2 / LB4 partition per the TADPOLE convention.
struct DatasetSplit {
    std::vector<PatientRecord> lb1; // training cohort
    std::vector<PatientRecord> lb2; // early observations of held-out patients
    std::vector<PatientRecord> lb4; // later observations of the same patients
};

// A patient is held out iff they have >= 1 exam in early_phase, >= 1 exam in
// late_phases, and their last early_phase diagnosis is not DEMENTIA. LB2
// gets their early-phase exams, LB4 the late-phase exams; everyone else goes
// to LB1 whole.
DatasetSplit split_tadpole(std::span<const PatientRecord> records, const std::string& early_phase,
                           const std::set<std::string>& late_phases);

enum class ImputePolicy { DropRow, ForwardFillThenDrop };

ImputePolicy impute_policy_from_string(std::string_view s);
std::string_view impute_policy_name(ImputePolicy p);

// forward-fill-then-drop: each absent biomarker takes the patient's most
// recent earlier value; whatever remains absent drops the exam at
// matrix-build time. drop-row: leave absences in place (the transform skips
// them). Diagnosis is never imputed.
std::vector<PatientRecord> impute(std::span<const PatientRecord> records, ImputePolicy policy);

struct ColumnMissingness {
    std::string feature;
    std::size_t n_exams = 0;
    std::size_t n_present = 0;
    std::size_t n_missing() const { return n_exams - n_present; }
};

std::vector<ColumnMissingness> missingness_summary(std::span<const PatientRecord> records);
std::string missingness_csv(std::span<const PatientRecord> records);

} // namespace adprog

#endif
