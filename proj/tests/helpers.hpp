#ifndef ADPROG_TESTS_HELPERS_HPP
#define ADPROG_TESTS_HELPERS_HPP

#include "adprog/cohort.hpp"
#include "adprog/seed.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace adprog::testing {

inline Date date(int y, int m, int d) { return make_date(y, m, d); }

// Exam with every biomarker of the G15 universe populated from a seeded RNG.
inline Examination complete_exam(const Date& when, int dx, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 50.0);
    Examination e;
    e.date = when;
    if (dx >= 0) e.diagnosis = diagnosis_from_ordinal(dx);
    for (const auto& f : {"ADAS13", "Ventricles", "AGE", "FAQ", "PTRACCAT", "Hippocampus",
                          "APOE4", "MMSE", "ADAS11", "RAVLT_immediate", "RAVLT_learning",
                          "RAVLT_forgetting", "RAVLT_perc_forgetting"})
        e.biomarkers[f] = u(rng);
    return e;
}

inline PatientRecord complete_patient(const std::string& id, int n_visits, std::uint64_t seed,
                                      int gap_days = 180) {
    std::mt19937_64 rng(derive_seed(seed, "patient/" + id));
    std::uniform_int_distribution<int> dx_dist(0, 2);
    PatientRecord rec;
    rec.id = id;
    Date when = date(2010, 1, 15);
    for (int v = 0; v < n_visits; ++v) {
        rec.exams.push_back(complete_exam(when, dx_dist(rng), rng));
        rec.phases.push_back("P");
        when = Date{std::chrono::floor<std::chrono::days>(std::chrono::sys_days(when) +
                                                          std::chrono::days(gap_days + v))};
    }
    return rec;
}

// Cohort with random visit counts, optional random missingness of features
// and diagnoses.
inline std::vector<PatientRecord> random_cohort(int n_patients, int max_visits,
                                                double missing_feature_rate,
                                                double missing_dx_rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> visits(1, max_visits);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PatientRecord> cohort;
    for (int p = 0; p < n_patients; ++p) {
        auto rec = complete_patient("P" + std::to_string(1000 + p), visits(rng), seed + 17 * p);
        for (auto& exam : rec.exams) {
            if (missing_dx_rate > 0 && u(rng) < missing_dx_rate) exam.diagnosis.reset();
            if (missing_feature_rate > 0) {
                for (auto it = exam.biomarkers.begin(); it != exam.biomarkers.end();) {
                    if (u(rng) < missing_feature_rate) it = exam.biomarkers.erase(it);
                    else ++it;
                }
            }
        }
        cohort.push_back(std::move(rec));
    }
    return cohort;
}

// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("adprog_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace adprog::testing

#endif
