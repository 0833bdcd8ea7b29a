#ifndef ADPROG_COHORT_HPP
#define ADPROG_COHORT_HPP

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adprog {

// Clinical diagnosis classes, ordered by disease severity.
enum class Diagnosis : int { NL = 0, MCI = 1, Dementia = 2 };

constexpr int ordinal(Diagnosis d) { return static_cast<int>(d); }
Diagnosis diagnosis_from_ordinal(int code);
std::string_view diagnosis_name(Diagnosis d); // "NL" / "MCI" / "DEMENTIA"
Diagnosis diagnosis_from_name(std::string_view name);

using Date = std::chrono::year_month_day;

Date make_date(int year, int month, int day);
std::string date_to_string(const Date& d); // ISO "YYYY-MM-DD"

double days_between(const Date& later, const Date& earlier);

// Elapsed time in mean Gregorian months (days / 30.4375). later must not
// precede earlier.
double months_between(const Date& later, const Date& earlier);

constexpr double kDaysPerMonth = 30.4375;

// One clinic visit. A missing biomarker is an absent map key, never a
// sentinel value. Diagnosis may be absent.
struct Examination {
    Date date{};
    std::map<std::string, double> biomarkers;
    std::optional<Diagnosis> diagnosis;

    std::optional<double> biomarker(const std::string& name) const {
        auto it = biomarkers.find(name);
        if (it == biomarkers.end()) return std::nullopt;
        return it->second;
    }
};

// Ordered examination sequence for one patient. Exams are strictly sorted
// ascending by date; one study-phase tag per exam.
struct PatientRecord {
    std::string id;
    std::vector<Examination> exams;
    std::vector<std::string> phases;

    std::size_t visit_count() const { return exams.size(); }
};

// Throws DataError on unsorted/tied exam dates or phase/exam count mismatch.
void validate_record(const PatientRecord& rec);

inline constexpr std::string_view kColDiagnosis = "DX";
inline constexpr std::string_view kColTimeDiff = "TimeDiff";
inline constexpr std::string_view kColTimeDiffPrev = "TimeDiffPrev";

// All biomarker names the artifact understands, in canonical order.
const std::vector<std::string>& registered_features();
bool is_registered_feature(const std::string& name);

// One of the fixed training groups G8 / G11 / G15. feature_names keeps the
// canonical order with DX first and TimeDiff last; biomarker_names() is the
// same list with those two stripped.
struct FeatureGroup {
    std::string name;
    std::vector<std::string> feature_names;

    std::vector<std::string> biomarker_names() const;
};

FeatureGroup feature_group(std::string_view name);

// string -> numeric code dictionary for categorical features (race). Unseen
// categories fall back to other_code.
struct CategoryCodec {
    std::map<std::string, double> codes;
    double other_code = -1.0;

    double encode(const std::string& value, bool* unseen = nullptr) const;
};

} // namespace adprog

#endif
