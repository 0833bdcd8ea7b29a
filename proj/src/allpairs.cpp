#include "adprog/allpairs.hpp"

#include "adprog/errors.hpp"

#include <algorithm>
#include <numeric>

namespace adprog {

PairMode pair_mode_from_string(std::string_view s) {
    if (s == "pairs") return PairMode::Pairs;
    if (s == "triplets") return PairMode::Triplets;
    throw DataError("unknown mode: '" + std::string(s) + "' (expected pairs or triplets)");
}

std::string_view pair_mode_name(PairMode m) {
    return m == PairMode::Pairs ? "pairs" : "triplets";
}

std::vector<std::string> matrix_columns(const FeatureGroup& group, PairMode mode) {
    const auto bio = group.biomarker_names();
    std::vector<std::string> cols;
    cols.emplace_back(kColTimeDiff);
    if (mode == PairMode::Triplets) cols.emplace_back(kColTimeDiffPrev);
    cols.insert(cols.end(), bio.begin(), bio.end());
    cols.emplace_back(kColDiagnosis);
    if (mode == PairMode::Triplets) {
        for (const auto& b : bio) cols.push_back(b + "_prev");
        cols.emplace_back(std::string(kColDiagnosis) + "_prev");
    }
    return cols;
}

bool exam_usable(const Examination& exam, const FeatureGroup& group) {
    if (!exam.diagnosis) return false;
    for (const auto& b : group.biomarker_names())
        if (!exam.biomarkers.count(b)) return false;
    return true;
}

namespace {

void check_group_registered(const FeatureGroup& group) {
    for (const auto& b : group.biomarker_names())
        if (!is_registered_feature(b))
            throw DataError("feature group '" + group.name + "' names unregistered feature '" +
                            b + "'");
}

// Patients iterated in id order so the output is independent of input order.
std::vector<const PatientRecord*> sorted_by_id(std::span<const PatientRecord> records) {
    std::vector<const PatientRecord*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records) ptrs.push_back(&r);
    std::stable_sort(ptrs.begin(), ptrs.end(),
                     [](const PatientRecord* a, const PatientRecord* b) { return a->id < b->id; });
    return ptrs;
}

void append_biomarkers(std::vector<double>& row, const Examination& exam,
                       const std::vector<std::string>& bio) {
    for (const auto& b : bio) row.push_back(exam.biomarkers.at(b));
}

TrainingMatrix assemble(std::vector<std::vector<double>>&& rows, std::vector<int>&& targets,
                        std::vector<RowProvenance>&& prov, const FeatureGroup& group,
                        PairMode mode) {
    TrainingMatrix m;
    m.column_names = matrix_columns(group, mode);
    m.group_name = group.name;
    m.mode = mode;
    m.provenance = std::move(prov);
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index d = static_cast<Eigen::Index>(m.column_names.size());
    m.x.resize(n, d);
    m.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) m.x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        m.y[i] = targets[static_cast<std::size_t>(i)];
    }
    return m;
}

} // namespace

TrainingMatrix transform_pairs(std::span<const PatientRecord> records, const FeatureGroup& group) {
    check_group_registered(group);
    const auto bio = group.biomarker_names();

    std::vector<std::vector<double>> rows;
    std::vector<int> targets;
    std::vector<RowProvenance> prov;
    std::int64_t skipped_target = 0, skipped_feature = 0;

    for (const PatientRecord* rec : sorted_by_id(records)) {
        const auto& exams = rec->exams;
        const int n = static_cast<int>(exams.size());
        std::vector<char> usable(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) usable[static_cast<std::size_t>(j)] = exam_usable(exams[static_cast<std::size_t>(j)], group);

        for (int ja = 0; ja < n; ++ja) {
            for (int jb = ja + 1; jb < n; ++jb) {
                const auto& src = exams[static_cast<std::size_t>(ja)];
                const auto& tgt = exams[static_cast<std::size_t>(jb)];
                if (!tgt.diagnosis) {
                    ++skipped_target;
                    continue;
                }
                if (!usable[static_cast<std::size_t>(ja)] || !usable[static_cast<std::size_t>(jb)]) {
                    ++skipped_feature;
                    continue;
                }
                std::vector<double> row;
                row.reserve(bio.size() + 2);
                row.push_back(months_between(tgt.date, src.date));
                append_biomarkers(row, src, bio);
                row.push_back(static_cast<double>(ordinal(*src.diagnosis)));
                rows.push_back(std::move(row));
                targets.push_back(ordinal(*tgt.diagnosis));
                prov.push_back({rec->id, ja, -1, jb});
            }
        }
    }

    auto m = assemble(std::move(rows), std::move(targets), std::move(prov), group, PairMode::Pairs);
    m.skipped_missing_target = skipped_target;
    m.skipped_missing_feature = skipped_feature;
    return m;
}

TrainingMatrix transform_triplets(std::span<const PatientRecord> records,
                                  const FeatureGroup& group) {
    check_group_registered(group);
    const auto bio = group.biomarker_names();

    std::vector<std::vector<double>> rows;
    std::vector<int> targets;
    std::vector<RowProvenance> prov;
    std::int64_t skipped_target = 0, skipped_feature = 0;

    for (const PatientRecord* rec : sorted_by_id(records)) {
        const auto& exams = rec->exams;
        const int n = static_cast<int>(exams.size());
        std::vector<char> usable(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) usable[static_cast<std::size_t>(j)] = exam_usable(exams[static_cast<std::size_t>(j)], group);

        for (int ja = 0; ja < n; ++ja) {
            for (int jb = ja + 1; jb < n; ++jb) {
                for (int jc = jb + 1; jc < n; ++jc) {
                    const auto& ea = exams[static_cast<std::size_t>(ja)];
                    const auto& eb = exams[static_cast<std::size_t>(jb)];
                    const auto& ec = exams[static_cast<std::size_t>(jc)];
                    if (!ec.diagnosis) {
                        ++skipped_target;
                        continue;
                    }
                    if (!usable[static_cast<std::size_t>(ja)] || !usable[static_cast<std::size_t>(jb)] ||
                        !usable[static_cast<std::size_t>(jc)]) {
                        ++skipped_feature;
                        continue;
                    }
                    std::vector<double> row;
                    row.reserve(2 * bio.size() + 4);
                    row.push_back(months_between(ec.date, eb.date));
                    row.push_back(months_between(eb.date, ea.date));
                    append_biomarkers(row, eb, bio);
                    row.push_back(static_cast<double>(ordinal(*eb.diagnosis)));
                    append_biomarkers(row, ea, bio);
                    row.push_back(static_cast<double>(ordinal(*ea.diagnosis)));
                    rows.push_back(std::move(row));
                    targets.push_back(ordinal(*ec.diagnosis));
                    prov.push_back({rec->id, ja, jb, jc});
                }
            }
        }
    }

    auto m = assemble(std::move(rows), std::move(targets), std::move(prov), group,
                      PairMode::Triplets);
    m.skipped_missing_target = skipped_target;
    m.skipped_missing_feature = skipped_feature;
    return m;
}

TrainingMatrix transform(std::span<const PatientRecord> records, const FeatureGroup& group,
                         PairMode mode) {
    return mode == PairMode::Pairs ? transform_pairs(records, group)
                                   : transform_triplets(records, group);
}

Eigen::RowVectorXd build_prediction_vector(const Examination& exam, double t_months,
                                           const FeatureGroup& group, PairMode mode,
                                           const Examination* prior_exam) {
    if (!(t_months > 0.0))
        throw DataError("prediction time must be positive, got " + std::to_string(t_months));
    const auto require = [&](const Examination& e, const char* role) {
        if (!e.diagnosis)
            throw DataError(std::string("prediction ") + role + " exam lacks a diagnosis");
        for (const auto& b : group.biomarker_names())
            if (!e.biomarkers.count(b))
                throw DataError(std::string("prediction ") + role + " exam lacks feature '" + b +
                                "'");
    };
    require(exam, "source");

    const auto bio = group.biomarker_names();
    std::vector<double> row;
    row.push_back(t_months);
    if (mode == PairMode::Triplets) {
        if (!prior_exam)
            throw DataError("triplet-mode prediction vector requires a prior exam");
        require(*prior_exam, "prior");
        row.push_back(months_between(exam.date, prior_exam->date));
    }
    for (const auto& b : bio) row.push_back(exam.biomarkers.at(b));
    row.push_back(static_cast<double>(ordinal(*exam.diagnosis)));
    if (mode == PairMode::Triplets) {
        for (const auto& b : bio) row.push_back(prior_exam->biomarkers.at(b));
        row.push_back(static_cast<double>(ordinal(*prior_exam->diagnosis)));
    }

    Eigen::RowVectorXd v(static_cast<Eigen::Index>(row.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = row[static_cast<std::size_t>(i)];
    return v;
}

TrainingMatrix select_rows(const TrainingMatrix& m, std::span<const Eigen::Index> row_indices) {
    TrainingMatrix out;
    out.column_names = m.column_names;
    out.group_name = m.group_name;
    out.mode = m.mode;
    out.x.resize(static_cast<Eigen::Index>(row_indices.size()), m.x.cols());
    out.y.resize(static_cast<Eigen::Index>(row_indices.size()));
    out.provenance.reserve(row_indices.size());
    Eigen::Index r = 0;
    for (Eigen::Index idx : row_indices) {
        out.x.row(r) = m.x.row(idx);
        out.y[r] = m.y[idx];
        out.provenance.push_back(m.provenance[static_cast<std::size_t>(idx)]);
        ++r;
    }
    return out;
}

} // namespace adprog
