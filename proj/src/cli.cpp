#include "adprog/cli.hpp"

#include "adprog/allpairs.hpp"
#include "adprog/cohort.hpp"
#include "adprog/errors.hpp"
#include "adprog/eval.hpp"
#include "adprog/ingest.hpp"
#include "adprog/metrics.hpp"
#include "adprog/model.hpp"
#include "adprog/report.hpp"
#include "adprog/seed.hpp"
#include "adprog/synth.hpp"
#include "adprog/textio.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <array>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace adprog::cli {

using json = nlohmann::json;

namespace {

struct CommonOpts {
    std::string input;
    std::string config_path;
    std::string features = "G15";
    std::string mode = "pairs";
    std::string impute_policy = "forward-fill-then-drop";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    if (const char* env = std::getenv("ADPROG_SEED")) {
        try {
            return static_cast<std::uint64_t>(parse_long(env, "ADPROG_SEED"));
        } catch (const DataError& e) {
            throw UsageError(e.what());
        }
    }
    throw UsageError("a seed is required: pass --seed or set ADPROG_SEED");
}

CsvSchema load_schema(const std::string& config_path) {
    if (config_path.empty()) return default_schema();
    return schema_from_config(KeyValueConfig::from_file(config_path));
}

std::vector<PatientRecord> load_records(const CommonOpts& opts) {
    const auto schema = load_schema(opts.config_path);
    auto records = parse_cohort_csv(opts.input, schema);
    for (const auto& rec : records) validate_record(rec);
    return impute(records, impute_policy_from_string(opts.impute_policy));
}

// Hyperparameter flags shared by train / cv / splits / grid. Flag values
// override [hyperparams] entries from --hp.
struct HpOpts {
    std::string hp_file;
    std::string hidden;
    double alpha = -1.0;
    double learning_rate = -1.0;
    int batch_size = -1;
    int max_epochs = -1;
    bool no_early_stop = false;
    double val_fraction = -1.0;
    int patience = -1;
    std::string optimizer;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--hp", hp_file, "config file with a [hyperparams] section")
            ->check(CLI::ExistingFile);
        cmd->add_option("--hidden", hidden, "hidden layer sizes, comma separated (default 100)");
        cmd->add_option("--alpha", alpha, "L2 penalty (default 1e-4)");
        cmd->add_option("--lr", learning_rate, "learning rate (default 1e-3)");
        cmd->add_option("--batch", batch_size, "mini-batch size (default 64)");
        cmd->add_option("--epochs", max_epochs, "max training epochs (default 300)");
        cmd->add_flag("--no-early-stop", no_early_stop, "disable early stopping");
        cmd->add_option("--val-fraction", val_fraction,
                        "early-stopping validation fraction (default 0.1)");
        cmd->add_option("--patience", patience, "early-stopping patience (default 15)");
        cmd->add_option("--optimizer", optimizer, "adam or sgd (default adam)");
    }

    MlpHyperparams build() const {
        MlpHyperparams hp;
        if (!hp_file.empty()) {
            const auto cfg = KeyValueConfig::from_file(hp_file);
            const auto get = [&](const char* key) { return cfg.get("hyperparams", key, ""); };
            if (!get("hidden").empty()) hp.hidden_sizes = parse_hidden(get("hidden"));
            if (!get("alpha").empty()) hp.alpha = parse_double(get("alpha"), "hyperparams.alpha");
            if (!get("learning_rate").empty())
                hp.learning_rate = parse_double(get("learning_rate"), "hyperparams.learning_rate");
            if (!get("batch_size").empty())
                hp.batch_size = static_cast<int>(parse_long(get("batch_size"), "hyperparams.batch_size"));
            if (!get("max_epochs").empty())
                hp.max_epochs = static_cast<int>(parse_long(get("max_epochs"), "hyperparams.max_epochs"));
            if (get("early_stop") == "off") hp.early_stop.reset();
            if (!get("validation_fraction").empty() && hp.early_stop)
                hp.early_stop->validation_fraction =
                    parse_double(get("validation_fraction"), "hyperparams.validation_fraction");
            if (!get("patience").empty() && hp.early_stop)
                hp.early_stop->patience =
                    static_cast<int>(parse_long(get("patience"), "hyperparams.patience"));
            if (get("optimizer") == "sgd") hp.optimizer = Optimizer::Sgd;
        }
        if (!hidden.empty()) hp.hidden_sizes = parse_hidden(hidden);
        if (alpha >= 0.0) hp.alpha = alpha;
        if (learning_rate > 0.0) hp.learning_rate = learning_rate;
        if (batch_size > 0) hp.batch_size = batch_size;
        if (max_epochs > 0) hp.max_epochs = max_epochs;
        if (no_early_stop) hp.early_stop.reset();
        if (val_fraction > 0.0) {
            if (!hp.early_stop) hp.early_stop = EarlyStopConfig{};
            hp.early_stop->validation_fraction = val_fraction;
        }
        if (patience > 0) {
            if (!hp.early_stop) hp.early_stop = EarlyStopConfig{};
            hp.early_stop->patience = patience;
        }
        if (!optimizer.empty()) {
            if (optimizer == "adam") hp.optimizer = Optimizer::Adam;
            else if (optimizer == "sgd") hp.optimizer = Optimizer::Sgd;
            else throw UsageError("unknown optimizer: " + optimizer);
        }
        return hp;
    }

    static std::vector<int> parse_hidden(const std::string& text) {
        std::vector<int> out;
        for (const auto& part : split(text, ','))
            out.push_back(static_cast<int>(parse_long(part, "hidden sizes")));
        return out;
    }
};

std::string matrix_to_csv(const TrainingMatrix& m) {
    std::ostringstream out;
    for (std::size_t c = 0; c < m.column_names.size(); ++c)
        out << (c ? "," : "") << csv_escape(m.column_names[c]);
    out << ",target\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m.x(r, c));
        out << ',' << m.y[r] << '\n';
    }
    return out.str();
}

std::string provenance_to_csv(const TrainingMatrix& m) {
    std::ostringstream out;
    out << "patient_id,source_a,source_b,target_exam\n";
    for (const auto& p : m.provenance) {
        out << csv_escape(p.patient_id) << ',' << p.source_a << ',';
        if (p.source_b >= 0) out << p.source_b;
        out << ',' << p.target << '\n';
    }
    return out.str();
}

// LB2/LB4 inputs for evaluate/forecast: either explicit per-split files or
// one combined file plus phase labels.
struct LbOpts {
    std::string lb2_path;
    std::string lb4_path;
    std::string combined_path;
    std::string early_phase = "ADNI1";
    std::string late_phases = "ADNI2,ADNIGO";

    void add_flags(CLI::App* cmd, bool lb4_needed) {
        cmd->add_option("--lb2", lb2_path, "LB2 cohort CSV (early observations)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--lb4", lb4_path,
                        lb4_needed ? "LB4 cohort CSV (later observations)"
                                   : "LB4 cohort CSV (actual diagnoses for coloring)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--in", combined_path, "combined cohort CSV, split by phase tags")
            ->check(CLI::ExistingFile);
        cmd->add_option("--early-phase", early_phase, "phase tag of early observations");
        cmd->add_option("--late-phases", late_phases, "comma-separated later phase tags");
    }

    // Returns (lb2, lb4). lb4 may be empty when not provided and not required.
    std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>>
    load(const CsvSchema& schema, ImputePolicy policy, bool lb4_needed) const {
        std::vector<PatientRecord> lb2, lb4;
        if (!combined_path.empty()) {
            auto records = parse_cohort_csv(combined_path, schema);
            std::set<std::string> late;
            for (const auto& p : split(late_phases, ','))
                if (!trim(p).empty()) late.insert(trim(p));
            auto ds = split_tadpole(records, early_phase, late);
            lb2 = std::move(ds.lb2);
            lb4 = std::move(ds.lb4);
        } else {
            if (lb2_path.empty())
                throw UsageError("provide --lb2 (and --lb4) or a combined --in file");
            lb2 = parse_cohort_csv(lb2_path, schema);
            if (!lb4_path.empty()) lb4 = parse_cohort_csv(lb4_path, schema);
        }
        if (lb4_needed && lb4.empty())
            throw UsageError("LB4 data required: pass --lb4 or a combined --in file");
        lb2 = impute(lb2, policy);
        return {std::move(lb2), std::move(lb4)};
    }
};

GridSpec parse_grid_spec(const std::string& alphas, const std::string& lrs,
                         const std::string& hiddens) {
    GridSpec spec;
    if (!alphas.empty()) {
        spec.alphas.clear();
        for (const auto& a : split(alphas, ','))
            spec.alphas.push_back(parse_double(a, "--alphas"));
    }
    if (!lrs.empty()) {
        spec.learning_rates.clear();
        for (const auto& l : split(lrs, ','))
            spec.learning_rates.push_back(parse_double(l, "--lrs"));
    }
    if (!hiddens.empty()) {
        spec.hidden_sizes.clear();
        for (const auto& h : split(hiddens, ';'))
            spec.hidden_sizes.push_back(HpOpts::parse_hidden(h));
    }
    return spec;
}

json cv_report_to_json(const CvReport& r) {
    json folds = json::array();
    for (const auto& f : r.folds) {
        json fj = {{"fold", f.fold},
                   {"valid", f.valid},
                   {"train_rows", f.train_rows},
                   {"test_rows", f.test_rows},
                   {"train_patients", f.train_patients.size()},
                   {"test_patients", f.test_patients.size()}};
        if (f.valid) {
            fj["train_mauc"] = f.train_mauc;
            fj["test_mauc"] = f.test_mauc;
        } else {
            fj["note"] = f.note;
        }
        folds.push_back(std::move(fj));
    }
    return json{{"config", r.config},
                {"k", r.k},
                {"grouping", std::string(cv_grouping_name(r.grouping))},
                {"seed", r.seed},
                {"valid_folds", r.valid_folds},
                {"mean_train_mauc", r.mean_train_mauc},
                {"mean_test_mauc", r.mean_test_mauc},
                {"sd_test_mauc", r.sd_test_mauc},
                {"folds", std::move(folds)}};
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"adprog: forecasting disease progression from longitudinal visit data"};
    app.require_subcommand(1);

    try {
        // ---- synth ----
        auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort CSV");
        struct {
            std::string spec_path, out;
            std::optional<std::uint64_t> seed;
            int patients = -1;
            double separability = -1.0, missing_rate = -1.0;
        } synth_opts;
        synth_cmd->add_option("--spec", synth_opts.spec_path, "cohort spec JSON")
            ->check(CLI::ExistingFile);
        synth_cmd->add_option("--out", synth_opts.out, "output cohort CSV")->required();
        synth_cmd->add_option("--seed", synth_opts.seed, "master seed");
        synth_cmd->add_option("--patients", synth_opts.patients, "override patient count");
        synth_cmd->add_option("--separability", synth_opts.separability,
                              "override signal/noise scale");
        synth_cmd->add_option("--missing-rate", synth_opts.missing_rate,
                              "override biomarker missingness rate");
        synth_cmd->callback([&] {
            CohortSpec spec = synth_opts.spec_path.empty()
                                  ? default_cohort_spec()
                                  : cohort_spec_from_json(json::parse(read_file(synth_opts.spec_path)));
            spec.seed = require_seed(synth_opts.seed);
            if (synth_opts.patients >= 0) spec.n_patients = synth_opts.patients;
            if (synth_opts.separability >= 0.0) spec.separability = synth_opts.separability;
            if (synth_opts.missing_rate >= 0.0) spec.missing_value_rate = synth_opts.missing_rate;
            const auto records = generate(spec);
            write_cohort_csv(synth_opts.out, records);
            std::size_t exams = 0;
            for (const auto& r : records) exams += r.exams.size();
            std::cout << "wrote " << records.size() << " patients (" << exams << " exams) to "
                      << synth_opts.out << "\n";
        });

        // ---- ingest ----
        auto* ingest_cmd = app.add_subcommand("ingest", "parse and inspect a cohort CSV");
        struct {
            std::string input, config;
            bool inspect = false;
        } ingest_opts;
        ingest_cmd->add_option("--in", ingest_opts.input, "cohort CSV")->required()
            ->check(CLI::ExistingFile);
        ingest_cmd->add_option("--config", ingest_opts.config, "schema config file")
            ->check(CLI::ExistingFile);
        ingest_cmd->add_flag("--inspect", ingest_opts.inspect,
                             "print per-column missingness CSV to stdout");
        ingest_cmd->callback([&] {
            const auto schema = load_schema(ingest_opts.config);
            const auto records = parse_cohort_csv(ingest_opts.input, schema);
            for (const auto& rec : records) validate_record(rec);
            if (ingest_opts.inspect) {
                std::cout << missingness_csv(records);
            } else {
                std::size_t exams = 0;
                for (const auto& r : records) exams += r.exams.size();
                std::cout << "parsed " << records.size() << " patients, " << exams << " exams\n";
            }
        });

        // ---- transform ----
        auto* transform_cmd =
            app.add_subcommand("transform", "run the all-pairs transform and write the matrix");
        CommonOpts transform_common;
        std::string transform_out, transform_prov;
        transform_cmd->add_option("--in", transform_common.input, "cohort CSV")->required()
            ->check(CLI::ExistingFile);
        transform_cmd->add_option("--config", transform_common.config_path, "schema config")
            ->check(CLI::ExistingFile);
        transform_cmd->add_option("--features", transform_common.features, "G8 | G11 | G15");
        transform_cmd->add_option("--mode", transform_common.mode, "pairs | triplets");
        transform_cmd->add_option("--impute", transform_common.impute_policy,
                                  "drop-row | forward-fill-then-drop");
        transform_cmd->add_option("--out", transform_out, "output matrix CSV")->required();
        transform_cmd->add_option("--provenance", transform_prov,
                                  "provenance sidecar CSV (default <out>.provenance.csv)");
        transform_cmd->callback([&] {
            const auto records = load_records(transform_common);
            const auto m = transform(records, feature_group(transform_common.features),
                                     pair_mode_from_string(transform_common.mode));
            write_file(transform_out, matrix_to_csv(m));
            const std::string prov_path =
                transform_prov.empty() ? transform_out + ".provenance.csv" : transform_prov;
            write_file(prov_path, provenance_to_csv(m));
            std::cout << "rows=" << m.rows() << " cols=" << m.cols()
                      << " skipped_missing_feature=" << m.skipped_missing_feature
                      << " skipped_missing_target=" << m.skipped_missing_target << "\n";
        });

        // ---- train ----
        auto* train_cmd = app.add_subcommand("train", "train an MLP on a cohort CSV");
        CommonOpts train_common;
        HpOpts train_hp;
        std::string train_out, train_early_phase, train_late_phases;
        train_cmd->add_option("--in", train_common.input, "training cohort CSV")->required()
            ->check(CLI::ExistingFile);
        train_cmd->add_option("--config", train_common.config_path, "schema config")
            ->check(CLI::ExistingFile);
        train_cmd->add_option("--features", train_common.features, "G8 | G11 | G15");
        train_cmd->add_option("--mode", train_common.mode, "pairs | triplets");
        train_cmd->add_option("--impute", train_common.impute_policy,
                              "drop-row | forward-fill-then-drop");
        train_cmd->add_option("--seed", train_common.seed, "master seed");
        train_cmd->add_option("--out", train_out, "output model file")->required();
        train_cmd->add_option("--early-phase", train_early_phase,
                              "train only on the LB1 side of a phase split");
        train_cmd->add_option("--late-phases", train_late_phases,
                              "comma-separated later phase tags for the LB1 split");
        train_hp.add_flags(train_cmd);
        train_cmd->callback([&] {
            auto records = load_records(train_common);
            if (!train_early_phase.empty()) {
                std::set<std::string> late;
                for (const auto& p : split(train_late_phases, ','))
                    if (!trim(p).empty()) late.insert(trim(p));
                records = split_tadpole(records, train_early_phase, late).lb1;
            }
            MlpHyperparams hp = train_hp.build();
            hp.seed = derive_seed(require_seed(train_common.seed), "train");
            const auto m = transform(records, feature_group(train_common.features),
                                     pair_mode_from_string(train_common.mode));
            const MlpModel model = fit(m, hp);
            save_model(train_out, model);
            std::cout << "trained on " << m.rows() << " rows (" << model.feature_group << " "
                      << model.pair_mode << "), final loss "
                      << format_double4(model.epoch_losses.empty() ? 0.0
                                                                   : model.epoch_losses.back())
                      << ", saved to " << train_out << "\n";
        });

        // ---- cv ----
        auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
        CommonOpts cv_common;
        HpOpts cv_hp;
        struct {
            int k = 7;
            std::string grouping = "patient";
            std::string out;
            std::string report_dir;
        } cv_opts;
        cv_cmd->add_option("--in", cv_common.input, "cohort CSV")->required()
            ->check(CLI::ExistingFile);
        cv_cmd->add_option("--config", cv_common.config_path, "schema config")
            ->check(CLI::ExistingFile);
        cv_cmd->add_option("--features", cv_common.features,
                           "comma-separated groups (G8,G11,G15)");
        cv_cmd->add_option("--mode", cv_common.mode, "comma-separated modes (pairs,triplets)");
        cv_cmd->add_option("--impute", cv_common.impute_policy,
                           "drop-row | forward-fill-then-drop");
        cv_cmd->add_option("--k", cv_opts.k, "fold count (default 7)");
        cv_cmd->add_option("--grouping", cv_opts.grouping, "patient | row");
        cv_cmd->add_option("--seed", cv_common.seed, "master seed");
        cv_cmd->add_option("--jobs", cv_common.jobs, "parallel jobs (default 1)");
        cv_cmd->add_option("--out", cv_opts.out, "report JSON path")->required();
        cv_cmd->add_option("--report-dir", cv_opts.report_dir, "also emit cv_table.csv + manifest");
        cv_hp.add_flags(cv_cmd);
        cv_cmd->callback([&] {
            const auto records = load_records(cv_common);
            const auto seed = require_seed(cv_common.seed);
            const auto grouping = cv_grouping_from_string(cv_opts.grouping);
            const MlpHyperparams hp = cv_hp.build();

            std::vector<CvReport> reports;
            for (const auto& feat : split(cv_common.features, ',')) {
                for (const auto& mode_name : split(cv_common.mode, ',')) {
                    const auto report = cross_validate(
                        records, feature_group(trim(feat)), pair_mode_from_string(trim(mode_name)),
                        hp, cv_opts.k, grouping,
                        derive_seed(seed, "cv/" + trim(feat) + "/" + trim(mode_name)),
                        cv_common.jobs);
                    std::cout << report.config << ": mean_test_mauc="
                              << format_double4(report.mean_test_mauc)
                              << " sd=" << format_double4(report.sd_test_mauc) << " ("
                              << report.valid_folds << "/" << report.k << " folds)\n";
                    reports.push_back(report);
                }
            }
            json out = json::array();
            for (const auto& r : reports) out.push_back(cv_report_to_json(r));
            write_file(cv_opts.out, out.dump(2));
            if (!cv_opts.report_dir.empty()) {
                ReportBundle bundle{cv_opts.report_dir};
                emit_cv_table(bundle, reports);
                bundle.write_manifest();
            }
        });

        // ---- splits ----
        auto* splits_cmd = app.add_subcommand("splits", "repeated random train/test splits");
        CommonOpts splits_common;
        HpOpts splits_hp;
        struct {
            int n = 100;
            double fraction = 0.7;
            std::string out;
        } splits_opts;
        splits_cmd->add_option("--in", splits_common.input, "cohort CSV")->required()
            ->check(CLI::ExistingFile);
        splits_cmd->add_option("--config", splits_common.config_path, "schema config")
            ->check(CLI::ExistingFile);
        splits_cmd->add_option("--features", splits_common.features, "G8 | G11 | G15");
        splits_cmd->add_option("--mode", splits_common.mode, "pairs | triplets");
        splits_cmd->add_option("--impute", splits_common.impute_policy,
                               "drop-row | forward-fill-then-drop");
        splits_cmd->add_option("--n", splits_opts.n, "number of splits (default 100)");
        splits_cmd->add_option("--fraction", splits_opts.fraction,
                               "train fraction (default 0.7)");
        splits_cmd->add_option("--seed", splits_common.seed, "master seed");
        splits_cmd->add_option("--jobs", splits_common.jobs, "parallel jobs");
        splits_cmd->add_option("--out", splits_opts.out, "output directory")->required();
        splits_hp.add_flags(splits_cmd);
        splits_cmd->callback([&] {
            const auto records = load_records(splits_common);
            const auto scores = random_splits(
                records, feature_group(splits_common.features),
                pair_mode_from_string(splits_common.mode), splits_hp.build(), splits_opts.n,
                splits_opts.fraction, require_seed(splits_common.seed), splits_common.jobs);
            ReportBundle bundle{splits_opts.out};
            emit_split_scores(bundle, scores);
            bundle.write_manifest();
            double sum = 0.0;
            int valid = 0;
            for (const auto& s : scores)
                if (s.valid) { sum += s.test_mauc; ++valid; }
            std::cout << valid << "/" << scores.size() << " valid splits, mean test mAUC "
                      << format_double4(valid ? sum / valid : 0.0) << "\n";
        });

        // ---- grid ----
        auto* grid_cmd = app.add_subcommand("grid", "hyperparameter grid search");
        CommonOpts grid_common;
        struct {
            std::string alphas, lrs, hiddens;
            int repeats = 5;
            std::string protocol = "split";
            double fraction = 0.7;
            int k = 7;
            std::string out;
            LbOpts lb;
        } grid_opts;
        grid_cmd->add_option("--in", grid_common.input, "training cohort CSV")->required()
            ->check(CLI::ExistingFile);
        grid_cmd->add_option("--config", grid_common.config_path, "schema config")
            ->check(CLI::ExistingFile);
        grid_cmd->add_option("--features", grid_common.features, "G8 | G11 | G15");
        grid_cmd->add_option("--mode", grid_common.mode, "pairs | triplets");
        grid_cmd->add_option("--impute", grid_common.impute_policy,
                             "drop-row | forward-fill-then-drop");
        grid_cmd->add_option("--alphas", grid_opts.alphas, "comma-separated alpha grid");
        grid_cmd->add_option("--lrs", grid_opts.lrs, "comma-separated learning-rate grid");
        grid_cmd->add_option("--hiddens", grid_opts.hiddens,
                             "semicolon-separated hidden-size grid, e.g. 50;100;64,32");
        grid_cmd->add_option("--repeats", grid_opts.repeats, "runs per configuration (default 5)");
        grid_cmd->add_option("--protocol", grid_opts.protocol, "split | cv | forward");
        grid_cmd->add_option("--fraction", grid_opts.fraction, "train fraction for split protocol");
        grid_cmd->add_option("--k", grid_opts.k, "folds for cv protocol");
        grid_cmd->add_option("--lb2", grid_opts.lb.lb2_path, "LB2 CSV for forward protocol")
            ->check(CLI::ExistingFile);
        grid_cmd->add_option("--lb4", grid_opts.lb.lb4_path, "LB4 CSV for forward protocol")
            ->check(CLI::ExistingFile);
        grid_cmd->add_option("--seed", grid_common.seed, "master seed");
        grid_cmd->add_option("--jobs", grid_common.jobs, "parallel jobs");
        grid_cmd->add_option("--out", grid_opts.out, "output directory")->required();
        grid_cmd->callback([&] {
            const auto records = load_records(grid_common);
            GridProtocol protocol;
            protocol.train_fraction = grid_opts.fraction;
            protocol.k = grid_opts.k;
            if (grid_opts.protocol == "split") protocol.kind = GridProtocol::Kind::Split;
            else if (grid_opts.protocol == "cv") protocol.kind = GridProtocol::Kind::Cv;
            else if (grid_opts.protocol == "forward") {
                protocol.kind = GridProtocol::Kind::Forward;
                if (grid_opts.lb.lb2_path.empty() || grid_opts.lb.lb4_path.empty())
                    throw UsageError("forward protocol requires --lb2 and --lb4");
                const auto schema = load_schema(grid_common.config_path);
                protocol.lb2 = impute(parse_cohort_csv(grid_opts.lb.lb2_path, schema),
                                      impute_policy_from_string(grid_common.impute_policy));
                protocol.lb4 = parse_cohort_csv(grid_opts.lb.lb4_path, schema);
            } else {
                throw UsageError("unknown protocol: " + grid_opts.protocol);
            }
            const auto result = grid_search(
                records, feature_group(grid_common.features),
                pair_mode_from_string(grid_common.mode),
                parse_grid_spec(grid_opts.alphas, grid_opts.lrs, grid_opts.hiddens),
                grid_opts.repeats, protocol, require_seed(grid_common.seed), grid_common.jobs);
            ReportBundle bundle{grid_opts.out};
            emit_grid(bundle, result);
            bundle.write_manifest();
            std::cout << result.total_runs << " runs";
            if (!result.entries.empty() && result.entries.front().ok)
                std::cout << "; best " << result.entries.front().hp.describe() << " mean test mAUC "
                          << format_double4(result.entries.front().mean_test_mauc);
            std::cout << "\n";
        });

        // ---- evaluate ----
        auto* eval_cmd =
            app.add_subcommand("evaluate", "score a trained model against later observations");
        struct {
            std::string model_path, config, impute_policy = "forward-fill-then-drop", out;
            LbOpts lb;
        } eval_opts;
        eval_cmd->add_option("--model", eval_opts.model_path, "trained model file")->required()
            ->check(CLI::ExistingFile);
        eval_cmd->add_option("--config", eval_opts.config, "schema config")
            ->check(CLI::ExistingFile);
        eval_cmd->add_option("--impute", eval_opts.impute_policy,
                             "drop-row | forward-fill-then-drop");
        eval_cmd->add_option("--out", eval_opts.out, "output directory")->required();
        eval_opts.lb.add_flags(eval_cmd, /*lb4_needed=*/true);
        eval_cmd->callback([&] {
            const MlpModel model = load_model(eval_opts.model_path);
            const auto schema = load_schema(eval_opts.config);
            auto [lb2, lb4] = eval_opts.lb.load(
                schema, impute_policy_from_string(eval_opts.impute_policy), true);
            const auto result =
                evaluate_forward(model, lb2, lb4, pair_mode_from_string(model.pair_mode));
            ReportBundle bundle{eval_opts.out};
            emit_forward_eval(bundle, result);
            bundle.write_manifest();
            std::cout << "forward mAUC " << format_double4(result.mauc_score) << " over "
                      << result.evaluated_targets << " targets ("
                      << result.excluded_patients.size() << " patients excluded)\n";
        });

        // ---- forecast ----
        auto* forecast_cmd =
            app.add_subcommand("forecast", "month-by-month probability trajectories");
        struct {
            std::string model_path, config, impute_policy = "forward-fill-then-drop", out;
            int horizon = 84;
            bool svg = false;
            LbOpts lb;
        } fc_opts;
        forecast_cmd->add_option("--model", fc_opts.model_path, "trained model file")->required()
            ->check(CLI::ExistingFile);
        forecast_cmd->add_option("--config", fc_opts.config, "schema config")
            ->check(CLI::ExistingFile);
        forecast_cmd->add_option("--impute", fc_opts.impute_policy,
                                 "drop-row | forward-fill-then-drop");
        forecast_cmd->add_option("--horizon", fc_opts.horizon, "months to forecast (default 84)");
        forecast_cmd->add_flag("--svg", fc_opts.svg, "emit per-patient SVG time courses");
        forecast_cmd->add_option("--out", fc_opts.out, "output directory")->required();
        fc_opts.lb.add_flags(forecast_cmd, /*lb4_needed=*/false);
        forecast_cmd->callback([&] {
            const MlpModel model = load_model(fc_opts.model_path);
            const auto schema = load_schema(fc_opts.config);
            auto [lb2, lb4] = fc_opts.lb.load(
                schema, impute_policy_from_string(fc_opts.impute_policy), false);
            const auto table =
                forecast_monthly(model, lb2, fc_opts.horizon, pair_mode_from_string(model.pair_mode));
            ReportBundle bundle{fc_opts.out, fc_opts.svg};
            if (lb4.empty()) {
                emit_forecast(bundle, table);
            } else {
                const auto severity = most_severe_diagnosis(lb4);
                emit_forecast(bundle, table, &severity);
            }
            bundle.write_manifest();
            std::cout << "forecast " << table.patients.size() << " patients x " << table.horizon
                      << " months (" << table.excluded_patients.size() << " excluded)\n";
        });

        // ---- score ----
        auto* score_cmd = app.add_subcommand("score", "score a predictions CSV");
        struct {
            std::string input;
            bool as_json = false;
        } score_opts;
        score_cmd->add_option("--in", score_opts.input,
                              "CSV with prob_NL,prob_MCI,prob_DEM,actual")
            ->required()
            ->check(CLI::ExistingFile);
        score_cmd->add_flag("--json", score_opts.as_json, "emit JSON instead of CSV");
        score_cmd->callback([&] {
            const auto table = read_csv(score_opts.input);
            const int c_nl = table.column("prob_NL"), c_mci = table.column("prob_MCI"),
                      c_dem = table.column("prob_DEM"), c_actual = table.column("actual");
            if (c_nl < 0 || c_mci < 0 || c_dem < 0 || c_actual < 0)
                throw DataError(score_opts.input +
                                ": expected columns prob_NL,prob_MCI,prob_DEM,actual");
            std::vector<ScoredSample> samples;
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const auto& row = table.rows[r];
                const std::string ctx = "line " + std::to_string(r + 2);
                Eigen::Vector3d p{parse_double(row[static_cast<std::size_t>(c_nl)], ctx),
                                  parse_double(row[static_cast<std::size_t>(c_mci)], ctx),
                                  parse_double(row[static_cast<std::size_t>(c_dem)], ctx)};
                if (std::abs(p.sum() - 1.0) > 1e-6)
                    throw DataError("probabilities at " + ctx + " sum to " +
                                    format_double4(p.sum()) + ", not 1");
                const std::string actual = trim(row[static_cast<std::size_t>(c_actual)]);
                Diagnosis dx;
                try {
                    dx = diagnosis_from_name(actual);
                } catch (const DataError&) {
                    dx = diagnosis_from_ordinal(
                        static_cast<int>(parse_long(actual, ctx + " actual")));
                }
                samples.push_back({p, dx});
            }
            const double m = mauc(samples);
            const auto cm = confusion(samples);
            std::array<std::optional<double>, 3> class_auc;
            for (int c = 0; c < 3; ++c) {
                const auto binary = one_vs_rest(samples, static_cast<Diagnosis>(c));
                std::size_t n_pos = 0;
                for (const auto& b : binary)
                    if (b.positive) ++n_pos;
                if (n_pos > 0 && n_pos < binary.size()) class_auc[static_cast<std::size_t>(c)] = auc_binary(binary);
            }
            if (score_opts.as_json) {
                json out;
                out["mauc"] = m;
                out["n_samples"] = samples.size();
                for (int c = 0; c < 3; ++c)
                    if (class_auc[static_cast<std::size_t>(c)])
                        out["auc"][std::string(diagnosis_name(static_cast<Diagnosis>(c)))] =
                            *class_auc[static_cast<std::size_t>(c)];
                json cmj = json::array();
                for (int r = 0; r < 3; ++r) {
                    json rowj = json::array();
                    for (int c = 0; c < 3; ++c) rowj.push_back(cm.counts(r, c));
                    cmj.push_back(std::move(rowj));
                }
                out["confusion"] = std::move(cmj);
                std::cout << out.dump(2) << "\n";
            } else {
                std::cout << "metric,value\n";
                std::cout << "mauc," << format_double(m) << "\n";
                for (int c = 0; c < 3; ++c)
                    if (class_auc[static_cast<std::size_t>(c)])
                        std::cout << "auc_" << diagnosis_name(static_cast<Diagnosis>(c)) << ","
                                  << format_double(*class_auc[static_cast<std::size_t>(c)]) << "\n";
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        std::cout << "confusion_" << diagnosis_name(static_cast<Diagnosis>(r))
                                  << "_" << diagnosis_name(static_cast<Diagnosis>(c)) << ","
                                  << cm.counts(r, c) << "\n";
            }
        });

        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace adprog::cli
