#include "adprog/cohort.hpp"

#include "adprog/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

namespace adprog {

Diagnosis diagnosis_from_ordinal(int code) {
    if (code < 0 || code > 2)
        throw DataError("diagnosis ordinal out of range: " + std::to_string(code));
    return static_cast<Diagnosis>(code);
}

std::string_view diagnosis_name(Diagnosis d) {
    switch (d) {
        case Diagnosis::NL: return "NL";
        case Diagnosis::MCI: return "MCI";
        case Diagnosis::Dementia: return "DEMENTIA";
    }
    throw DataError("invalid diagnosis value");
}

Diagnosis diagnosis_from_name(std::string_view name) {
    if (name == "NL") return Diagnosis::NL;
    if (name == "MCI") return Diagnosis::MCI;
    if (name == "DEMENTIA") return Diagnosis::Dementia;
    throw DataError("unknown diagnosis name: '" + std::string(name) + "'");
}

Date make_date(int year, int month, int day) {
    Date d{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
           std::chrono::day{static_cast<unsigned>(day)}};
    if (!d.ok())
        throw DataError("invalid calendar date: " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day));
    return d;
}

std::string date_to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

double days_between(const Date& later, const Date& earlier) {
    using std::chrono::sys_days;
    return static_cast<double>((sys_days(later) - sys_days(earlier)).count());
}

double months_between(const Date& later, const Date& earlier) {
    if (later < earlier)
        throw DataError("months_between: " + date_to_string(later) + " precedes " +
                        date_to_string(earlier));
    return days_between(later, earlier) / kDaysPerMonth;
}

void validate_record(const PatientRecord& rec) {
    if (rec.exams.empty())
        throw DataError("patient " + rec.id + " has no examinations");
    if (rec.phases.size() != rec.exams.size())
        throw DataError("patient " + rec.id + " phase tags do not match exam count");
    for (std::size_t i = 1; i < rec.exams.size(); ++i) {
        if (!(rec.exams[i - 1].date < rec.exams[i].date))
            throw DataError("patient " + rec.id + " exams not strictly sorted by date at index " +
                            std::to_string(i));
    }
    for (const auto& exam : rec.exams)
        for (const auto& [name, value] : exam.biomarkers)
            if (!is_registered_feature(name))
                throw DataError("patient " + rec.id + " carries unregistered feature '" + name + "'");
}

const std::vector<std::string>& registered_features() {
    static const std::vector<std::string> features = {
        "ADAS13",
        "Ventricles",
        "AGE",
        "FAQ",
        "PTRACCAT",
        "Hippocampus",
        "APOE4",
        "MMSE",
        "ADAS11",
        "RAVLT_immediate",
        "RAVLT_learning",
        "RAVLT_forgetting",
        "RAVLT_perc_forgetting",
        "ICV",
        "Ventricles_ICV", // derived ratio, not in any default group
    };
    return features;
}

bool is_registered_feature(const std::string& name) {
    const auto& all = registered_features();
    return std::find(all.begin(), all.end(), name) != all.end();
}

std::vector<std::string> FeatureGroup::biomarker_names() const {
    std::vector<std::string> out;
    for (const auto& f : feature_names)
        if (f != kColDiagnosis && f != kColTimeDiff) out.push_back(f);
    return out;
}

FeatureGroup feature_group(std::string_view name) {
    FeatureGroup g;
    g.name = std::string(name);
    if (name == "G8") {
        g.feature_names = {"DX", "ADAS13", "Ventricles", "AGE", "PTRACCAT",
                           "Hippocampus", "APOE4", "TimeDiff"};
    } else if (name == "G11") {
        g.feature_names = {"DX",  "ADAS13",      "Ventricles", "AGE",
                           "FAQ", "PTRACCAT",    "Hippocampus", "APOE4",
                           "MMSE", "ADAS11",     "TimeDiff"};
    } else if (name == "G15") {
        g.feature_names = {"DX",
                           "ADAS13",
                           "Ventricles",
                           "AGE",
                           "FAQ",
                           "PTRACCAT",
                           "Hippocampus",
                           "APOE4",
                           "MMSE",
                           "ADAS11",
                           "RAVLT_immediate",
                           "RAVLT_learning",
                           "RAVLT_forgetting",
                           "RAVLT_perc_forgetting",
                           "TimeDiff"};
    } else {
        throw DataError("unknown feature group: '" + g.name + "' (expected G8, G11 or G15)");
    }
    return g;
}

double CategoryCodec::encode(const std::string& value, bool* unseen) const {
    auto it = codes.find(value);
    if (it != codes.end()) {
        if (unseen) *unseen = false;
        return it->second;
    }
    if (unseen) *unseen = true;
    return other_code;
}

} // namespace adprog
