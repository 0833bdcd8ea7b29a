#include "adprog/ingest.hpp"

#include "adprog/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

namespace adprog {

CsvSchema default_schema() {
    CsvSchema s;
    s.diagnosis_codes = {
        {"NL", Diagnosis::NL},
        {"CN", Diagnosis::NL},
        {"Normal", Diagnosis::NL},
        {"MCI", Diagnosis::MCI},
        {"EMCI", Diagnosis::MCI},
        {"LMCI", Diagnosis::MCI},
        {"Dementia", Diagnosis::Dementia},
        {"DEMENTIA", Diagnosis::Dementia},
        {"AD", Diagnosis::Dementia},
        // Transition labels map to the destination state.
        {"NL to MCI", Diagnosis::MCI},
        {"MCI to NL", Diagnosis::NL},
        {"MCI to Dementia", Diagnosis::Dementia},
        {"NL to Dementia", Diagnosis::Dementia},
        {"Dementia to MCI", Diagnosis::MCI},
        {"Dementia to NL", Diagnosis::NL},
    };
    s.race.codes = {
        {"White", 0},         {"Black", 1},
        {"Asian", 2},         {"More than one", 3},
        {"Am Indian/Alaskan", 4}, {"Hawaiian/Other PI", 5},
        {"Unknown", 6},
    };
    s.race.other_code = 7;
    return s;
}

CsvSchema schema_from_config(const KeyValueConfig& cfg) {
    CsvSchema s = default_schema();
    for (const auto& [key, value] : cfg.section("columns")) {
        if (key == "patient_id") s.patient_id_col = value;
        else if (key == "exam_date") s.date_col = value;
        else if (key == "diagnosis") s.diagnosis_col = value;
        else if (key == "phase") s.phase_col = value;
        else if (is_registered_feature(key)) {
            s.feature_cols[key] = value;
            s.explicit_features.insert(key);
        } else {
            throw DataError("config maps unknown column role '" + key + "'");
        }
    }
    if (cfg.has("sentinels", "values")) {
        s.sentinels.clear();
        for (const auto& v : split(cfg.get("sentinels", "values", ""), ','))
            if (!trim(v).empty()) s.sentinels.insert(trim(v));
    }
    const auto dx_entries = cfg.section("diagnosis");
    if (!dx_entries.empty()) {
        for (const auto& [key, value] : dx_entries)
            s.diagnosis_codes[key] = diagnosis_from_name(value);
    }
    const auto race_entries = cfg.section("race");
    if (!race_entries.empty()) {
        s.race.codes.clear();
        for (const auto& [key, value] : race_entries)
            s.race.codes[key] = parse_double(value, "race code for '" + key + "'");
    }
    if (cfg.has("options", "race_other_code"))
        s.race.other_code = parse_double(cfg.get("options", "race_other_code", ""), "race_other_code");
    const std::string age_mode = cfg.get("options", "age_mode", "");
    if (age_mode == "as_is") s.age_mode = CsvSchema::AgeMode::AsIs;
    else if (age_mode == "baseline_plus_elapsed" || age_mode.empty()) {
        // default already set
    } else {
        throw DataError("unknown age_mode: '" + age_mode + "'");
    }
    return s;
}

Date parse_date(std::string_view text, const std::string& context) {
    const std::string t = trim(text);
    int a = 0, b = 0, c = 0;
    if (t.find('-') != std::string::npos) {
        if (std::sscanf(t.c_str(), "%d-%d-%d", &a, &b, &c) != 3)
            throw DataError("unparseable date '" + t + "' (" + context + ")");
        return make_date(a, b, c);
    }
    if (t.find('/') != std::string::npos) {
        if (std::sscanf(t.c_str(), "%d/%d/%d", &a, &b, &c) != 3)
            throw DataError("unparseable date '" + t + "' (" + context + ")");
        return make_date(c, a, b); // M/D/YYYY
    }
    throw DataError("unparseable date '" + t + "' (" + context + ")");
}

namespace {

bool is_missing_cell(const std::string& trimmed, const CsvSchema& schema) {
    return trimmed.empty() || schema.sentinels.count(trimmed) > 0;
}

bool try_parse_number(const std::string& s, double* out) {
    try {
        *out = parse_double(s, "");
        return true;
    } catch (const DataError&) {
        return false;
    }
}

std::optional<Diagnosis> decode_diagnosis(const std::string& cell, const CsvSchema& schema,
                                          std::size_t line_no) {
    const std::string t = trim(cell);
    if (is_missing_cell(t, schema)) return std::nullopt;
    auto it = schema.diagnosis_codes.find(t);
    if (it != schema.diagnosis_codes.end()) return it->second;
    double num{};
    if (try_parse_number(t, &num)) {
        const int code = static_cast<int>(num);
        if (code >= 0 && code <= 2 && static_cast<double>(code) == num)
            return static_cast<Diagnosis>(code);
    }
    throw DataError("unknown diagnosis '" + t + "' at line " + std::to_string(line_no));
}

struct ParsedExam {
    Examination exam;
    std::string phase;
    std::size_t line_no;
};

} // namespace

std::vector<PatientRecord> parse_cohort_text(std::string_view text, const CsvSchema& schema,
                                             const std::string& origin) {
    const CsvTable table = parse_csv_text(text, origin);

    const auto need_col = [&](const std::string& name, const char* role) {
        const int idx = table.column(name);
        if (idx < 0)
            throw DataError(origin + ": missing required column '" + name + "' (" + role + ")");
        return idx;
    };
    const int id_col = need_col(schema.patient_id_col, "patient_id");
    const int date_col = need_col(schema.date_col, "exam_date");
    const int dx_col = need_col(schema.diagnosis_col, "diagnosis");
    const int phase_col = need_col(schema.phase_col, "phase");

    // Effective feature -> column-index mapping. Explicit mappings are
    // required to resolve; default identity mappings load when present.
    std::vector<std::pair<std::string, int>> feature_idx;
    for (const auto& feature : registered_features()) {
        if (feature == "Ventricles_ICV" && !schema.feature_cols.count(feature)) continue;
        auto it = schema.feature_cols.find(feature);
        const std::string header = it != schema.feature_cols.end() ? it->second : feature;
        const int idx = table.column(header);
        if (idx < 0) {
            if (schema.explicit_features.count(feature))
                throw DataError(origin + ": mapped column '" + header + "' for feature '" +
                                feature + "' not in header");
            continue;
        }
        feature_idx.emplace_back(feature, idx);
    }

    std::set<std::string> warned_categories;
    std::map<std::string, std::vector<ParsedExam>> by_patient;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line_no = r + 2; // header is line 1
        const std::string pid = trim(row[static_cast<std::size_t>(id_col)]);
        if (pid.empty())
            throw DataError(origin + ": empty patient_id at line " + std::to_string(line_no));

        ParsedExam pe;
        pe.line_no = line_no;
        pe.exam.date = parse_date(row[static_cast<std::size_t>(date_col)],
                                  origin + " line " + std::to_string(line_no));
        pe.exam.diagnosis = decode_diagnosis(row[static_cast<std::size_t>(dx_col)], schema, line_no);
        pe.phase = trim(row[static_cast<std::size_t>(phase_col)]);

        for (const auto& [feature, idx] : feature_idx) {
            const std::string cell = trim(row[static_cast<std::size_t>(idx)]);
            if (is_missing_cell(cell, schema)) continue;
            double value{};
            if (feature == "PTRACCAT") {
                if (!try_parse_number(cell, &value)) {
                    bool unseen = false;
                    value = schema.race.encode(cell, &unseen);
                    if (unseen && warned_categories.insert(cell).second)
                        std::cerr << "warning: unseen PTRACCAT category '" << cell
                                  << "' mapped to code " << schema.race.other_code << "\n";
                }
            } else if (!try_parse_number(cell, &value)) {
                throw DataError(origin + ": non-numeric value '" + cell + "' for feature '" +
                                feature + "' at line " + std::to_string(line_no));
            }
            pe.exam.biomarkers[feature] = value;
        }
        by_patient[pid].push_back(std::move(pe));
    }

    std::vector<PatientRecord> records;
    records.reserve(by_patient.size());
    for (auto& [pid, exams] : by_patient) {
        std::stable_sort(exams.begin(), exams.end(),
                         [](const ParsedExam& a, const ParsedExam& b) { return a.exam.date < b.exam.date; });
        for (std::size_t i = 1; i < exams.size(); ++i) {
            if (exams[i].exam.date == exams[i - 1].exam.date)
                throw DataError(origin + ": duplicate (patient, date) rows for patient " + pid +
                                " at lines " + std::to_string(exams[i - 1].line_no) + " and " +
                                std::to_string(exams[i].line_no));
        }

        PatientRecord rec;
        rec.id = pid;
        for (auto& pe : exams) {
            rec.exams.push_back(std::move(pe.exam));
            rec.phases.push_back(std::move(pe.phase));
        }

        if (schema.age_mode == CsvSchema::AgeMode::BaselinePlusElapsed) {
            const Date baseline = rec.exams.front().date;
            for (auto& exam : rec.exams) {
                auto it = exam.biomarkers.find("AGE");
                if (it != exam.biomarkers.end())
                    it->second += months_between(exam.date, baseline) / 12.0;
            }
        }

        // Derived ventricle/ICV ratio when both raw volumes are present.
        for (auto& exam : rec.exams) {
            if (exam.biomarkers.count("Ventricles_ICV")) continue;
            auto vent = exam.biomarkers.find("Ventricles");
            auto icv = exam.biomarkers.find("ICV");
            if (vent != exam.biomarkers.end() && icv != exam.biomarkers.end() && icv->second != 0.0)
                exam.biomarkers["Ventricles_ICV"] = vent->second / icv->second;
        }

        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<PatientRecord> parse_cohort_csv(const std::filesystem::path& path,
                                            const CsvSchema& schema) {
    return parse_cohort_text(read_file(path), schema, path.string());
}

std::string cohort_to_csv(std::span<const PatientRecord> records) {
    // Column set: canonical order, restricted to features seen in the data.
    std::vector<std::string> features;
    for (const auto& f : registered_features()) {
        bool seen = false;
        for (const auto& rec : records) {
            for (const auto& exam : rec.exams)
                if (exam.biomarkers.count(f)) { seen = true; break; }
            if (seen) break;
        }
        if (seen && f != "Ventricles_ICV") features.push_back(f);
    }

    std::ostringstream out;
    out << "patient_id,exam_date,phase,diagnosis";
    for (const auto& f : features) out << ',' << f;
    out << '\n';

    for (const auto& rec : records) {
        // Baseline age reconstructed from the earliest exam carrying AGE.
        std::optional<double> baseline_age;
        for (const auto& exam : rec.exams) {
            auto it = exam.biomarkers.find("AGE");
            if (it != exam.biomarkers.end()) {
                baseline_age = it->second - months_between(exam.date, rec.exams.front().date) / 12.0;
                break;
            }
        }
        for (std::size_t i = 0; i < rec.exams.size(); ++i) {
            const auto& exam = rec.exams[i];
            out << csv_escape(rec.id) << ',' << date_to_string(exam.date) << ','
                << csv_escape(rec.phases[i]) << ','
                << (exam.diagnosis ? std::string(diagnosis_name(*exam.diagnosis)) : std::string());
            for (const auto& f : features) {
                out << ',';
                if (f == "AGE") {
                    if (exam.biomarkers.count("AGE") && baseline_age)
                        out << format_double(*baseline_age);
                    continue;
                }
                auto it = exam.biomarkers.find(f);
                if (it != exam.biomarkers.end()) out << format_double(it->second);
            }
            out << '\n';
        }
    }
    return out.str();
}

void write_cohort_csv(const std::filesystem::path& path, std::span<const PatientRecord> records) {
    write_file(path, cohort_to_csv(records));
}

DatasetSplit split_tadpole(std::span<const PatientRecord> records, const std::string& early_phase,
                           const std::set<std::string>& late_phases) {
    DatasetSplit out;
    for (const auto& rec : records) {
        bool has_early = false, has_late = false;
        for (const auto& phase : rec.phases) {
            if (phase == early_phase) has_early = true;
            if (late_phases.count(phase)) has_late = true;
        }

        // Last early-phase diagnosis: latest early exam that carries one.
        // A patient with no diagnosed early exam counts as not demented.
        std::optional<Diagnosis> last_early_dx;
        for (std::size_t i = 0; i < rec.exams.size(); ++i)
            if (rec.phases[i] == early_phase && rec.exams[i].diagnosis)
                last_early_dx = rec.exams[i].diagnosis;

        const bool held_out =
            has_early && has_late && !(last_early_dx && *last_early_dx == Diagnosis::Dementia);

        if (!held_out) {
            out.lb1.push_back(rec);
            continue;
        }
        PatientRecord early, late;
        early.id = rec.id;
        late.id = rec.id;
        for (std::size_t i = 0; i < rec.exams.size(); ++i) {
            if (rec.phases[i] == early_phase) {
                early.exams.push_back(rec.exams[i]);
                early.phases.push_back(rec.phases[i]);
            } else if (late_phases.count(rec.phases[i])) {
                late.exams.push_back(rec.exams[i]);
                late.phases.push_back(rec.phases[i]);
            }
        }
        out.lb2.push_back(std::move(early));
        out.lb4.push_back(std::move(late));
    }
    return out;
}

ImputePolicy impute_policy_from_string(std::string_view s) {
    if (s == "drop-row") return ImputePolicy::DropRow;
    if (s == "forward-fill-then-drop") return ImputePolicy::ForwardFillThenDrop;
    throw DataError("unknown imputation policy: '" + std::string(s) +
                    "' (expected drop-row or forward-fill-then-drop)");
}

std::string_view impute_policy_name(ImputePolicy p) {
    return p == ImputePolicy::DropRow ? "drop-row" : "forward-fill-then-drop";
}

std::vector<PatientRecord> impute(std::span<const PatientRecord> records, ImputePolicy policy) {
    std::vector<PatientRecord> out(records.begin(), records.end());
    if (policy == ImputePolicy::DropRow) return out;

    for (auto& rec : out) {
        std::map<std::string, double> last_seen;
        for (auto& exam : rec.exams) {
            for (const auto& [name, value] : last_seen)
                exam.biomarkers.try_emplace(name, value);
            for (const auto& [name, value] : exam.biomarkers) last_seen[name] = value;
        }
    }
    return out;
}

std::vector<ColumnMissingness> missingness_summary(std::span<const PatientRecord> records) {
    std::size_t n_exams = 0;
    for (const auto& rec : records) n_exams += rec.exams.size();

    std::vector<ColumnMissingness> out;
    for (const auto& f : registered_features()) {
        ColumnMissingness cm;
        cm.feature = f;
        cm.n_exams = n_exams;
        for (const auto& rec : records)
            for (const auto& exam : rec.exams)
                if (exam.biomarkers.count(f)) ++cm.n_present;
        out.push_back(cm);
    }
    ColumnMissingness dx;
    dx.feature = "diagnosis";
    dx.n_exams = n_exams;
    for (const auto& rec : records)
        for (const auto& exam : rec.exams)
            if (exam.diagnosis) ++dx.n_present;
    out.push_back(dx);
    return out;
}

std::string missingness_csv(std::span<const PatientRecord> records) {
    std::ostringstream out;
    out << "column,n_exams,n_present,n_missing,missing_fraction\n";
    for (const auto& cm : missingness_summary(records)) {
        const double frac = cm.n_exams == 0
                                ? 0.0
                                : static_cast<double>(cm.n_missing()) / static_cast<double>(cm.n_exams);
        out << cm.feature << ',' << cm.n_exams << ',' << cm.n_present << ',' << cm.n_missing()
            << ',' << format_double4(frac) << '\n';
    }
    return out.str();
}

} // namespace adprog
