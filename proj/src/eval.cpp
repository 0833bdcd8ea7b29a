#include "adprog/eval.hpp"

#include "adprog/errors.hpp"
#include "adprog/seed.hpp"
#include "adprog/textio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace adprog {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (jobs <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const int n_threads = std::min(jobs, n);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        threads.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

CvGrouping cv_grouping_from_string(std::string_view s) {
    if (s == "patient") return CvGrouping::Patient;
    if (s == "row") return CvGrouping::Row;
    throw DataError("unknown grouping: '" + std::string(s) + "' (expected patient or row)");
}

std::string_view cv_grouping_name(CvGrouping g) {
    return g == CvGrouping::Patient ? "patient" : "row";
}

namespace {

std::vector<ScoredSample> score_matrix(const MlpModel& model, const TrainingMatrix& m) {
    const Eigen::MatrixXd probs = predict_proba(model, m.x);
    std::vector<ScoredSample> out;
    out.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out.push_back({probs.row(i).transpose(), diagnosis_from_ordinal(m.y[i])});
    return out;
}

std::vector<std::string> distinct_patients(const TrainingMatrix& m) {
    std::set<std::string> ids;
    for (const auto& p : m.provenance) ids.insert(p.patient_id);
    return {ids.begin(), ids.end()};
}

int distinct_classes(const TrainingMatrix& m) {
    std::set<int> c(m.y.begin(), m.y.end());
    return static_cast<int>(c.size());
}

// Contiguous near-equal chunks of a shuffled index list; the first n % k
// chunks take the extra element.
std::vector<std::vector<std::size_t>> deal_folds(std::vector<std::size_t> shuffled, int k) {
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    const std::size_t n = shuffled.size();
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos),
                        shuffled.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return folds;
}

void aggregate_cv(CvReport& report) {
    double train_sum = 0.0, test_sum = 0.0;
    std::vector<double> test_scores;
    for (const auto& f : report.folds) {
        if (!f.valid) continue;
        train_sum += f.train_mauc;
        test_sum += f.test_mauc;
        test_scores.push_back(f.test_mauc);
    }
    report.valid_folds = static_cast<int>(test_scores.size());
    if (report.valid_folds == 0) return;
    const double n = static_cast<double>(report.valid_folds);
    report.mean_train_mauc = train_sum / n;
    report.mean_test_mauc = test_sum / n;
    if (report.valid_folds > 1) {
        double ss = 0.0;
        for (double s : test_scores) ss += (s - report.mean_test_mauc) * (s - report.mean_test_mauc);
        report.sd_test_mauc = std::sqrt(ss / (n - 1.0));
    }
}

// Fit + score one train/test matrix pair; fills the shared FoldResult
// fields. Returns false (with note) on degenerate folds.
bool run_fold(const TrainingMatrix& train_m, const TrainingMatrix& test_m,
              const MlpHyperparams& hp, std::uint64_t fit_seed, FoldResult& fr) {
    fr.train_rows = train_m.rows();
    fr.test_rows = test_m.rows();
    fr.train_patients = distinct_patients(train_m);
    fr.test_patients = distinct_patients(test_m);
    if (train_m.rows() == 0 || test_m.rows() == 0) {
        fr.note = "empty train or test side";
        return false;
    }
    if (distinct_classes(train_m) < 2) {
        fr.note = "train side has a single class";
        return false;
    }
    if (distinct_classes(test_m) < 2) {
        fr.note = "test side has a single class";
        return false;
    }
    MlpHyperparams fold_hp = hp;
    fold_hp.seed = fit_seed;
    const MlpModel model = fit(train_m, fold_hp);
    const auto train_scored = score_matrix(model, train_m);
    const auto test_scored = score_matrix(model, test_m);
    fr.train_mauc = mauc(train_scored);
    fr.test_mauc = mauc(test_scored);
    fr.valid = true;
    return true;
}

std::string config_descriptor(const FeatureGroup& group, PairMode mode, const MlpHyperparams& hp) {
    std::ostringstream os;
    os << group.name << " " << pair_mode_name(mode) << " " << hp.describe();
    return os.str();
}

} // namespace

CvReport cross_validate(std::span<const PatientRecord> records, const FeatureGroup& group,
                        PairMode mode, const MlpHyperparams& hp, int k, CvGrouping grouping,
                        std::uint64_t seed, int jobs) {
    if (k < 2) throw DataError("cross_validate requires k >= 2");
    CvReport report;
    report.k = k;
    report.grouping = grouping;
    report.seed = seed;
    report.config = config_descriptor(group, mode, hp) + " k=" + std::to_string(k) + " grouping=" +
                    std::string(cv_grouping_name(grouping));
    report.folds.resize(static_cast<std::size_t>(k));

    if (grouping == CvGrouping::Patient) {
        // Canonical patient order first so fold assignment is independent of
        // input order.
        std::vector<std::size_t> order(records.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });
        std::mt19937_64 rng(derive_seed(seed, "cv/folds"));
        std::shuffle(order.begin(), order.end(), rng);
        const auto folds = deal_folds(std::move(order), k);

        parallel_for(k, jobs, [&](int f) {
            FoldResult& fr = report.folds[static_cast<std::size_t>(f)];
            fr.fold = f;
            std::set<std::size_t> test_set(folds[static_cast<std::size_t>(f)].begin(),
                                           folds[static_cast<std::size_t>(f)].end());
            std::vector<PatientRecord> train_recs, test_recs;
            for (std::size_t i = 0; i < records.size(); ++i)
                (test_set.count(i) ? test_recs : train_recs).push_back(records[i]);
            const auto train_m = transform(train_recs, group, mode);
            const auto test_m = transform(test_recs, group, mode);
            run_fold(train_m, test_m, hp, derive_seed(seed, "cv/fit/" + std::to_string(f)), fr);
        });
    } else {
        const auto whole = transform(records, group, mode);
        std::vector<std::size_t> order(static_cast<std::size_t>(whole.rows()));
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(derive_seed(seed, "cv/folds"));
        std::shuffle(order.begin(), order.end(), rng);
        const auto folds = deal_folds(std::move(order), k);

        parallel_for(k, jobs, [&](int f) {
            FoldResult& fr = report.folds[static_cast<std::size_t>(f)];
            fr.fold = f;
            std::set<std::size_t> test_set(folds[static_cast<std::size_t>(f)].begin(),
                                           folds[static_cast<std::size_t>(f)].end());
            std::vector<Eigen::Index> train_idx, test_idx;
            for (std::size_t i = 0; i < static_cast<std::size_t>(whole.rows()); ++i)
                (test_set.count(i) ? test_idx : train_idx).push_back(static_cast<Eigen::Index>(i));
            const auto train_m = select_rows(whole, train_idx);
            const auto test_m = select_rows(whole, test_idx);
            run_fold(train_m, test_m, hp, derive_seed(seed, "cv/fit/" + std::to_string(f)), fr);
        });
    }

    aggregate_cv(report);
    return report;
}

std::vector<SplitScore> random_splits(std::span<const PatientRecord> records,
                                      const FeatureGroup& group, PairMode mode,
                                      const MlpHyperparams& hp, int n_splits,
                                      double train_fraction, std::uint64_t seed, int jobs) {
    if (n_splits < 1) throw DataError("random_splits requires n_splits >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DataError("train_fraction must lie strictly between 0 and 1");

    std::vector<std::size_t> base_order(records.size());
    std::iota(base_order.begin(), base_order.end(), 0);
    std::sort(base_order.begin(), base_order.end(),
              [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });

    std::vector<SplitScore> scores(static_cast<std::size_t>(n_splits));
    parallel_for(n_splits, jobs, [&](int s) {
        SplitScore& sc = scores[static_cast<std::size_t>(s)];
        sc.index = s;
        auto order = base_order;
        std::mt19937_64 rng(derive_seed(seed, "split/" + std::to_string(s)));
        std::shuffle(order.begin(), order.end(), rng);

        const auto n = static_cast<long>(order.size());
        long n_train = std::lround(train_fraction * static_cast<double>(n));
        n_train = std::clamp(n_train, 1L, n - 1);
        if (n < 2) {
            sc.note = "fewer than two patients";
            return;
        }
        std::vector<PatientRecord> train_recs, test_recs;
        for (long i = 0; i < n; ++i)
            (i < n_train ? train_recs : test_recs).push_back(records[order[static_cast<std::size_t>(i)]]);

        FoldResult fr;
        const auto train_m = transform(train_recs, group, mode);
        const auto test_m = transform(test_recs, group, mode);
        if (run_fold(train_m, test_m, hp, derive_seed(seed, "split/" + std::to_string(s) + "/fit"),
                     fr)) {
            sc.train_mauc = fr.train_mauc;
            sc.test_mauc = fr.test_mauc;
            sc.valid = true;
        } else {
            sc.note = fr.note;
        }
    });
    return scores;
}

GridResult grid_search(std::span<const PatientRecord> records, const FeatureGroup& group,
                       PairMode mode, const GridSpec& grid, int repeats,
                       const GridProtocol& protocol, std::uint64_t seed, int jobs) {
    if (repeats < 1) throw DataError("grid_search requires repeats >= 1");
    if (grid.alphas.empty() || grid.learning_rates.empty() || grid.hidden_sizes.empty())
        throw DataError("grid_search requires nonempty parameter grids");

    std::vector<MlpHyperparams> configs;
    for (double alpha : grid.alphas)
        for (double lr : grid.learning_rates)
            for (const auto& hidden : grid.hidden_sizes) {
                MlpHyperparams hp;
                hp.alpha = alpha;
                hp.learning_rate = lr;
                hp.hidden_sizes = hidden;
                configs.push_back(hp);
            }

    const int n_configs = static_cast<int>(configs.size());
    const int n_runs = n_configs * repeats;
    std::vector<double> run_scores(static_cast<std::size_t>(n_runs));
    std::vector<std::string> run_notes(static_cast<std::size_t>(n_runs));

    parallel_for(n_runs, jobs, [&](int r) {
        const int cfg = r / repeats;
        const int rep = r % repeats;
        const std::string label = "grid/" + std::to_string(cfg) + "/" + std::to_string(rep);
        const std::uint64_t run_seed = derive_seed(seed, label);
        try {
            switch (protocol.kind) {
                case GridProtocol::Kind::Split: {
                    auto scores = random_splits(records, group, mode, configs[static_cast<std::size_t>(cfg)],
                                                1, protocol.train_fraction, run_seed, 1);
                    if (!scores[0].valid) throw DataError(scores[0].note);
                    run_scores[static_cast<std::size_t>(r)] = scores[0].test_mauc;
                    break;
                }
                case GridProtocol::Kind::Cv: {
                    auto report = cross_validate(records, group, mode, configs[static_cast<std::size_t>(cfg)],
                                                 protocol.k, CvGrouping::Patient, run_seed, 1);
                    if (report.valid_folds == 0) throw DataError("no valid folds");
                    run_scores[static_cast<std::size_t>(r)] = report.mean_test_mauc;
                    break;
                }
                case GridProtocol::Kind::Forward: {
                    MlpHyperparams hp = configs[static_cast<std::size_t>(cfg)];
                    hp.seed = run_seed;
                    const auto train_m = transform(records, group, mode);
                    const MlpModel model = fit(train_m, hp);
                    const auto fwd = evaluate_forward(model, protocol.lb2, protocol.lb4, mode);
                    run_scores[static_cast<std::size_t>(r)] = fwd.mauc_score;
                    break;
                }
            }
        } catch (const std::exception& e) {
            run_notes[static_cast<std::size_t>(r)] = e.what();
        }
    });

    GridResult result;
    result.total_runs = n_runs;
    for (int c = 0; c < n_configs; ++c) {
        GridEntry entry;
        entry.hp = configs[static_cast<std::size_t>(c)];
        entry.ok = true;
        for (int rep = 0; rep < repeats; ++rep) {
            const auto r = static_cast<std::size_t>(c * repeats + rep);
            if (!run_notes[r].empty()) {
                entry.ok = false;
                if (entry.note.empty()) entry.note = run_notes[r];
                continue;
            }
            entry.test_scores.push_back(run_scores[r]);
        }
        if (!entry.test_scores.empty()) {
            const double n = static_cast<double>(entry.test_scores.size());
            entry.mean_test_mauc =
                std::accumulate(entry.test_scores.begin(), entry.test_scores.end(), 0.0) / n;
            if (entry.test_scores.size() > 1) {
                double ss = 0.0;
                for (double s : entry.test_scores)
                    ss += (s - entry.mean_test_mauc) * (s - entry.mean_test_mauc);
                entry.sd_test_mauc = std::sqrt(ss / (n - 1.0));
            }
        }
        result.entries.push_back(std::move(entry));
    }
    std::stable_sort(result.entries.begin(), result.entries.end(),
                     [](const GridEntry& a, const GridEntry& b) {
                         if (a.ok != b.ok) return a.ok;
                         return a.mean_test_mauc > b.mean_test_mauc;
                     });
    return result;
}

namespace {

struct SourceExam {
    const Examination* exam = nullptr;
    const Examination* prior = nullptr; // triplet mode only
};

// The last three usable exams, newest first. In triplet mode a source also
// needs a usable prior exam (the most recent usable one strictly earlier).
std::vector<SourceExam> select_sources(const PatientRecord& rec, const FeatureGroup& group,
                                       PairMode mode) {
    std::vector<const Examination*> usable;
    for (const auto& exam : rec.exams)
        if (exam_usable(exam, group)) usable.push_back(&exam);

    std::vector<SourceExam> sources;
    for (std::size_t i = usable.size(); i-- > 0 && sources.size() < 3;) {
        SourceExam s;
        s.exam = usable[i];
        if (mode == PairMode::Triplets) {
            if (i == 0) continue; // no earlier usable exam to pair with
            s.prior = usable[i - 1];
        }
        sources.push_back(s);
    }
    return sources;
}

Eigen::Vector3d average_probs(const MlpModel& model, const std::vector<Eigen::RowVectorXd>& rows) {
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = rows[i];
    const Eigen::MatrixXd probs = predict_proba(model, batch);
    return probs.colwise().mean().transpose();
}

} // namespace

ForwardResult evaluate_forward_targets(
    const MlpModel& model, std::span<const PatientRecord> lb2,
    const std::map<std::string, std::vector<ForwardTarget>>& targets_by_patient, PairMode mode) {
    const FeatureGroup group = feature_group(model.feature_group);
    std::map<std::string, const PatientRecord*> lb2_by_id;
    for (const auto& rec : lb2) lb2_by_id[rec.id] = &rec;

    ForwardResult result;
    for (const auto& [pid, targets] : targets_by_patient) {
        auto it = lb2_by_id.find(pid);
        const auto sources =
            it == lb2_by_id.end() ? std::vector<SourceExam>{} : select_sources(*it->second, group, mode);
        if (sources.empty()) {
            result.excluded_patients.push_back(pid);
            continue;
        }
        for (const auto& target : targets) {
            std::vector<Eigen::RowVectorXd> rows;
            for (const auto& src : sources) {
                if (!(target.date > src.exam->date)) continue; // t must be positive
                const double t = months_between(target.date, src.exam->date);
                rows.push_back(build_prediction_vector(*src.exam, t, group, mode, src.prior));
            }
            if (rows.empty()) continue;
            result.samples.push_back({average_probs(model, rows), target.dx});
            ++result.evaluated_targets;
        }
    }
    result.mauc_score = mauc(result.samples);
    return result;
}

ForwardResult evaluate_forward(const MlpModel& model, std::span<const PatientRecord> lb2,
                               std::span<const PatientRecord> lb4, PairMode mode) {
    // Only dates and diagnoses of LB4 cross this boundary.
    std::map<std::string, std::vector<ForwardTarget>> targets;
    for (const auto& rec : lb4)
        for (const auto& exam : rec.exams)
            if (exam.diagnosis) targets[rec.id].push_back({exam.date, *exam.diagnosis});
    return evaluate_forward_targets(model, lb2, targets, mode);
}

ForecastTable forecast_monthly(const MlpModel& model, std::span<const PatientRecord> lb2,
                               int horizon, PairMode mode) {
    if (horizon < 1) throw DataError("forecast horizon must be >= 1");
    const FeatureGroup group = feature_group(model.feature_group);

    std::vector<const PatientRecord*> ordered;
    for (const auto& rec : lb2) ordered.push_back(&rec);
    std::sort(ordered.begin(), ordered.end(),
              [](const PatientRecord* a, const PatientRecord* b) { return a->id < b->id; });

    ForecastTable table;
    table.horizon = horizon;
    for (const PatientRecord* rec : ordered) {
        const auto sources = select_sources(*rec, group, mode);
        if (sources.empty()) {
            table.excluded_patients.push_back(rec->id);
            continue;
        }
        const auto n_src = static_cast<Eigen::Index>(sources.size());
        Eigen::MatrixXd batch(static_cast<Eigen::Index>(horizon) * n_src,
                              static_cast<Eigen::Index>(model.column_names.size()));
        for (int t = 1; t <= horizon; ++t) {
            for (Eigen::Index s = 0; s < n_src; ++s) {
                const auto& src = sources[static_cast<std::size_t>(s)];
                batch.row((t - 1) * n_src + s) = build_prediction_vector(
                    *src.exam, static_cast<double>(t), group, mode, src.prior);
            }
        }
        const Eigen::MatrixXd probs = predict_proba(model, batch);

        PatientForecast pf;
        pf.patient_id = rec->id;
        pf.probs.resize(horizon, 3);
        for (int t = 0; t < horizon; ++t) {
            pf.probs.row(t) = probs.middleRows(static_cast<Eigen::Index>(t) * n_src, n_src).colwise().mean();
            pf.predicted.push_back(
                diagnosis_from_ordinal(argmax_class(pf.probs.row(t).transpose())));
        }
        table.patients.push_back(std::move(pf));
    }
    return table;
}

} // namespace adprog
