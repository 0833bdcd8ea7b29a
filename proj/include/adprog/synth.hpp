#ifndef ADPROG_SYNTH_HPP
#define ADPROG_SYNTH_HPP

#include "adprog/cohort.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace adprog {

// Drift model for one biomarker. Offsets and slope are expressed in units
// of noise_sd so that a single separability factor scales the whole signal.
struct BiomarkerTrend {
    double baseline_mean = 0.0;
    double baseline_sd = 1.0;
    std::array<double, 3> state_offset{0.0, 0.0, 0.0}; // per diagnosis, noise-sd units
    double slope_per_month = 0.0;                      // noise-sd units per month
    double noise_sd = 1.0;
    double min_value = -1e308;
    double max_value = 1e308;
};

struct CohortSpec {
    int n_patients = 200;
    int min_visits = 3;
    int max_visits = 8;
    double interval_mean_months = 8.0;
    double interval_sd_months = 2.0;

    // Monthly transition hazards of the monotone NL -> MCI -> DEMENTIA chain.
    double hazard_nl_to_mci = 0.015;
    double hazard_mci_to_dem = 0.025;
    double reversion_prob = 0.0; // per-visit chance to step back one state
    std::array<double, 3> initial_state_probs{0.45, 0.40, 0.15};

    double separability = 1.0;
    std::map<std::string, BiomarkerTrend> trends;

    double missing_value_rate = 0.0;     // chance an emitted biomarker is dropped
    double missing_diagnosis_rate = 0.0; // chance an exam's diagnosis is dropped

    // Study timeline: patients enroll uniformly inside the window; exams
    // before the phase cut are tagged early_phase, the rest late_phase.
    Date epoch = Date{std::chrono::year{2005}, std::chrono::month{1}, std::chrono::day{1}};
    double enroll_window_months = 30.0;
    double phase_cut_months = 36.0;
    std::string early_phase = "PH1";
    std::string late_phase = "PH2";

    double age_mean = 73.0;
    double age_sd = 6.0;
    std::array<double, 3> apoe4_probs{0.55, 0.35, 0.10};
    int n_race_categories = 7;

    std::uint64_t seed = 0;
};

// Trends for the 13 Table-style biomarkers with qualitatively correct
// directions (ADAS/FAQ/Ventricles rise with severity, Hippocampus/MMSE/RAVLT
// fall) and separable per-state offsets.
CohortSpec default_cohort_spec();

CohortSpec cohort_spec_from_json(const nlohmann::json& j);
nlohmann::json cohort_spec_to_json(const CohortSpec& spec);

// Deterministic for a given seed; per-patient sub-seeds keep patients
// independent of each other and of cohort size changes upstream of them.
std::vector<PatientRecord> generate(const CohortSpec& spec);

} // namespace adprog

#endif
