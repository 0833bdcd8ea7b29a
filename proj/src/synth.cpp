#include "adprog/synth.hpp"

#include "adprog/errors.hpp"
#include "adprog/seed.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace adprog {

using json = nlohmann::json;

CohortSpec default_cohort_spec() {
    CohortSpec s;
    s.trends["ADAS13"] = {10.0, 3.0, {0.0, 2.5, 6.0}, 0.02, 2.5, 0.0, 85.0};
    s.trends["ADAS11"] = {7.0, 2.5, {0.0, 2.2, 5.0}, 0.015, 2.0, 0.0, 70.0};
    s.trends["MMSE"] = {28.5, 1.0, {0.0, -2.2, -5.5}, -0.01, 1.0, 0.0, 30.0};
    s.trends["FAQ"] = {1.5, 1.2, {0.0, 2.5, 6.0}, 0.02, 1.8, 0.0, 30.0};
    s.trends["Ventricles"] = {30000.0, 8000.0, {0.0, 2.0, 4.5}, 0.02, 4000.0, 0.0, 200000.0};
    s.trends["Hippocampus"] = {7200.0, 600.0, {0.0, -2.0, -4.0}, -0.01, 350.0, 1000.0, 12000.0};
    s.trends["RAVLT_immediate"] = {45.0, 8.0, {0.0, -2.0, -4.5}, -0.01, 5.0, 0.0, 75.0};
    s.trends["RAVLT_learning"] = {6.0, 2.0, {0.0, -1.5, -3.0}, -0.005, 1.3, -5.0, 14.0};
    s.trends["RAVLT_forgetting"] = {3.0, 1.5, {0.0, 1.2, 2.4}, 0.005, 1.2, -10.0, 15.0};
    s.trends["RAVLT_perc_forgetting"] = {35.0, 15.0, {0.0, 1.8, 4.0}, 0.01, 12.0, 0.0, 100.0};
    return s;
}

namespace {

Date add_days(const Date& base, double days) {
    using std::chrono::sys_days;
    const auto d = sys_days(base) + std::chrono::days(static_cast<long>(std::llround(days)));
    return Date{std::chrono::floor<std::chrono::days>(d)};
}

int sample_categorical(std::mt19937_64& rng, const std::array<double, 3>& probs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double total = probs[0] + probs[1] + probs[2];
    double x = u(rng) * total;
    for (int i = 0; i < 2; ++i) {
        x -= probs[static_cast<std::size_t>(i)];
        if (x < 0.0) return i;
    }
    return 2;
}

// P(at least one transition over dt months) under a constant monthly hazard.
double transition_prob(double hazard, double dt_months) {
    return 1.0 - std::pow(1.0 - hazard, dt_months);
}

void validate_spec(const CohortSpec& s) {
    if (s.n_patients < 0) throw DataError("n_patients must be nonnegative");
    if (s.min_visits < 1 || s.max_visits < s.min_visits)
        throw DataError("visit range invalid: min " + std::to_string(s.min_visits) + ", max " +
                        std::to_string(s.max_visits));
    if (s.hazard_nl_to_mci < 0 || s.hazard_nl_to_mci > 1 || s.hazard_mci_to_dem < 0 ||
        s.hazard_mci_to_dem > 1)
        throw DataError("hazards must lie in [0, 1]");
    if (s.reversion_prob < 0 || s.reversion_prob > 1)
        throw DataError("reversion_prob must lie in [0, 1]");
    for (const auto& [name, t] : s.trends) {
        if (!is_registered_feature(name))
            throw DataError("trend for unregistered feature '" + name + "'");
        if (t.noise_sd < 0) throw DataError("noise sd must be nonnegative for '" + name + "'");
    }
}

} // namespace

std::vector<PatientRecord> generate(const CohortSpec& spec) {
    validate_spec(spec);
    std::vector<PatientRecord> records;
    records.reserve(static_cast<std::size_t>(spec.n_patients));

    const int id_width = std::max(4, static_cast<int>(std::to_string(spec.n_patients).size()));

    for (int p = 0; p < spec.n_patients; ++p) {
        std::string id = std::to_string(p + 1);
        id.insert(0, static_cast<std::size_t>(id_width) - id.size(), '0');
        id.insert(0, "S");

        std::mt19937_64 rng(derive_seed(spec.seed, "patient/" + id));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        PatientRecord rec;
        rec.id = id;

        const double baseline_age = spec.age_mean + spec.age_sd * gauss(rng);
        const double apoe4 = sample_categorical(rng, spec.apoe4_probs);
        const double race = std::floor(unit(rng) * spec.n_race_categories);
        const double enroll_months = unit(rng) * spec.enroll_window_months;

        int state = sample_categorical(rng, spec.initial_state_probs);
        const int n_visits =
            spec.min_visits +
            static_cast<int>(unit(rng) * static_cast<double>(spec.max_visits - spec.min_visits + 1));

        // Per-patient biomarker baselines drawn once; the state offset and
        // slope move around them visit by visit.
        std::map<std::string, double> baselines;
        for (const auto& [name, t] : spec.trends)
            baselines[name] = t.baseline_mean + t.baseline_sd * gauss(rng);

        double months = enroll_months;
        double prev_months = months;
        for (int v = 0; v < std::min(n_visits, spec.max_visits); ++v) {
            if (v > 0) {
                double gap = spec.interval_mean_months + spec.interval_sd_months * gauss(rng);
                gap = std::max(1.0, gap);
                prev_months = months;
                months += gap;

                const double dt = months - prev_months;
                if (state == 0 && unit(rng) < transition_prob(spec.hazard_nl_to_mci, dt)) {
                    state = 1;
                } else if (state == 1 && unit(rng) < transition_prob(spec.hazard_mci_to_dem, dt)) {
                    state = 2;
                } else if (spec.reversion_prob > 0 && state > 0 &&
                           unit(rng) < spec.reversion_prob) {
                    state -= 1;
                }
            }

            Examination exam;
            exam.date = add_days(spec.epoch, months * kDaysPerMonth);
            exam.diagnosis = static_cast<Diagnosis>(state);

            const double months_since_baseline = months - enroll_months;
            for (const auto& [name, t] : spec.trends) {
                const double signal = spec.separability *
                                      (t.state_offset[static_cast<std::size_t>(state)] +
                                       t.slope_per_month * months_since_baseline);
                double value = baselines[name] + t.noise_sd * signal + t.noise_sd * gauss(rng);
                value = std::clamp(value, t.min_value, t.max_value);
                exam.biomarkers[name] = value;
            }
            exam.biomarkers["AGE"] = baseline_age + months_since_baseline / 12.0;
            exam.biomarkers["APOE4"] = apoe4;
            exam.biomarkers["PTRACCAT"] = race;

            // Missingness knobs for transform/imputation tests. Diagnosis
            // dropping is independent of value dropping.
            if (spec.missing_value_rate > 0.0) {
                for (auto it = exam.biomarkers.begin(); it != exam.biomarkers.end();) {
                    if (unit(rng) < spec.missing_value_rate) it = exam.biomarkers.erase(it);
                    else ++it;
                }
            }
            if (spec.missing_diagnosis_rate > 0.0 && unit(rng) < spec.missing_diagnosis_rate)
                exam.diagnosis.reset();

            rec.phases.push_back(months < spec.phase_cut_months ? spec.early_phase
                                                                : spec.late_phase);
            rec.exams.push_back(std::move(exam));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

json trend_to_json(const BiomarkerTrend& t) {
    return json{{"baseline_mean", t.baseline_mean},
                {"baseline_sd", t.baseline_sd},
                {"state_offset", t.state_offset},
                {"slope_per_month", t.slope_per_month},
                {"noise_sd", t.noise_sd},
                {"min_value", t.min_value},
                {"max_value", t.max_value}};
}

BiomarkerTrend trend_from_json(const json& j) {
    BiomarkerTrend t;
    t.baseline_mean = j.value("baseline_mean", t.baseline_mean);
    t.baseline_sd = j.value("baseline_sd", t.baseline_sd);
    if (j.contains("state_offset")) t.state_offset = j.at("state_offset").get<std::array<double, 3>>();
    t.slope_per_month = j.value("slope_per_month", t.slope_per_month);
    t.noise_sd = j.value("noise_sd", t.noise_sd);
    t.min_value = j.value("min_value", t.min_value);
    t.max_value = j.value("max_value", t.max_value);
    return t;
}

} // namespace

json cohort_spec_to_json(const CohortSpec& s) {
    json j;
    j["n_patients"] = s.n_patients;
    j["min_visits"] = s.min_visits;
    j["max_visits"] = s.max_visits;
    j["interval_mean_months"] = s.interval_mean_months;
    j["interval_sd_months"] = s.interval_sd_months;
    j["hazard_nl_to_mci"] = s.hazard_nl_to_mci;
    j["hazard_mci_to_dem"] = s.hazard_mci_to_dem;
    j["reversion_prob"] = s.reversion_prob;
    j["initial_state_probs"] = s.initial_state_probs;
    j["separability"] = s.separability;
    j["missing_value_rate"] = s.missing_value_rate;
    j["missing_diagnosis_rate"] = s.missing_diagnosis_rate;
    j["epoch"] = date_to_string(s.epoch);
    j["enroll_window_months"] = s.enroll_window_months;
    j["phase_cut_months"] = s.phase_cut_months;
    j["early_phase"] = s.early_phase;
    j["late_phase"] = s.late_phase;
    j["age_mean"] = s.age_mean;
    j["age_sd"] = s.age_sd;
    j["apoe4_probs"] = s.apoe4_probs;
    j["n_race_categories"] = s.n_race_categories;
    j["seed"] = s.seed;
    json trends;
    for (const auto& [name, t] : s.trends) trends[name] = trend_to_json(t);
    j["trends"] = std::move(trends);
    return j;
}

CohortSpec cohort_spec_from_json(const json& j) {
    CohortSpec s = default_cohort_spec();
    s.n_patients = j.value("n_patients", s.n_patients);
    s.min_visits = j.value("min_visits", s.min_visits);
    s.max_visits = j.value("max_visits", s.max_visits);
    s.interval_mean_months = j.value("interval_mean_months", s.interval_mean_months);
    s.interval_sd_months = j.value("interval_sd_months", s.interval_sd_months);
    s.hazard_nl_to_mci = j.value("hazard_nl_to_mci", s.hazard_nl_to_mci);
    s.hazard_mci_to_dem = j.value("hazard_mci_to_dem", s.hazard_mci_to_dem);
    s.reversion_prob = j.value("reversion_prob", s.reversion_prob);
    if (j.contains("initial_state_probs"))
        s.initial_state_probs = j.at("initial_state_probs").get<std::array<double, 3>>();
    s.separability = j.value("separability", s.separability);
    s.missing_value_rate = j.value("missing_value_rate", s.missing_value_rate);
    s.missing_diagnosis_rate = j.value("missing_diagnosis_rate", s.missing_diagnosis_rate);
    if (j.contains("epoch")) {
        const std::string d = j.at("epoch").get<std::string>();
        int y = 0, m = 0, day = 0;
        if (std::sscanf(d.c_str(), "%d-%d-%d", &y, &m, &day) != 3)
            throw DataError("cohort spec: bad epoch date '" + d + "'");
        s.epoch = make_date(y, m, day);
    }
    s.enroll_window_months = j.value("enroll_window_months", s.enroll_window_months);
    s.phase_cut_months = j.value("phase_cut_months", s.phase_cut_months);
    s.early_phase = j.value("early_phase", s.early_phase);
    s.late_phase = j.value("late_phase", s.late_phase);
    s.age_mean = j.value("age_mean", s.age_mean);
    s.age_sd = j.value("age_sd", s.age_sd);
    if (j.contains("apoe4_probs")) s.apoe4_probs = j.at("apoe4_probs").get<std::array<double, 3>>();
    s.n_race_categories = j.value("n_race_categories", s.n_race_categories);
    s.seed = j.value("seed", s.seed);
    if (j.contains("trends")) {
        s.trends.clear();
        for (const auto& [name, tj] : j.at("trends").items())
            s.trends[name] = trend_from_json(tj);
    }
    return s;
}

} // namespace adprog
