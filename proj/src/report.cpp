#include "adprog/report.hpp"

#include "adprog/errors.hpp"
#include "adprog/textio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace adprog {

using json = nlohmann::json;

ReportBundle::ReportBundle(std::filesystem::path dir, bool svg)
    : dir_(std::move(dir)), svg_(svg) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw DataError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void ReportBundle::write(const std::string& name, std::string_view content) {
    write_file(dir_ / name, content);
    if (!entries_.count(name)) names_.push_back(name);
    entries_[name] = {fnv1a64(content), content.size()};
}

void ReportBundle::write_manifest() {
    json files = json::array();
    std::vector<std::string> sorted = names_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& name : sorted) {
        const auto& [checksum, bytes] = entries_.at(name);
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(checksum));
        files.push_back({{"name", name}, {"fnv1a64", hex}, {"bytes", bytes}});
    }
    const json manifest = {{"format", "adprog-manifest"}, {"version", 1}, {"files", files}};
    write_file(dir_ / "manifest.json", manifest.dump(2));
}

void emit_cv_table(ReportBundle& bundle, std::span<const CvReport> reports) {
    if (reports.empty()) throw DataError("emit_cv_table requires at least one report");
    std::vector<const CvReport*> ordered;
    for (const auto& r : reports) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(), [](const CvReport* a, const CvReport* b) {
        return a->mean_test_mauc > b->mean_test_mauc;
    });

    std::ostringstream out;
    out << "config,train_mauc,test_mauc,test_sd,valid_folds\n";
    for (const CvReport* r : ordered)
        out << csv_escape(r->config) << ',' << format_double(r->mean_train_mauc) << ','
            << format_double(r->mean_test_mauc) << ',' << format_double(r->sd_test_mauc) << ','
            << r->valid_folds << '\n';
    bundle.write("cv_table.csv", out.str());
}

void emit_split_scores(ReportBundle& bundle, std::span<const SplitScore> scores) {
    std::ostringstream out;
    out << "split,train_mauc,test_mauc,valid,note\n";
    for (const auto& s : scores) {
        out << s.index << ',';
        if (s.valid) out << format_double(s.train_mauc) << ',' << format_double(s.test_mauc);
        else out << ',';
        out << ',' << (s.valid ? "1" : "0") << ',' << csv_escape(s.note) << '\n';
    }
    bundle.write("splits.csv", out.str());
}

void emit_grid(ReportBundle& bundle, const GridResult& result) {
    std::ostringstream out;
    out << "rank,alpha,learning_rate,hidden_sizes,mean_test_mauc,sd_test_mauc,runs,ok,note\n";
    int rank = 1;
    for (const auto& e : result.entries) {
        std::string hidden;
        for (std::size_t i = 0; i < e.hp.hidden_sizes.size(); ++i)
            hidden += (i ? "|" : "") + std::to_string(e.hp.hidden_sizes[i]);
        out << rank++ << ',' << format_double(e.hp.alpha) << ','
            << format_double(e.hp.learning_rate) << ',' << hidden << ','
            << format_double(e.mean_test_mauc) << ',' << format_double(e.sd_test_mauc) << ','
            << e.test_scores.size() << ',' << (e.ok ? "1" : "0") << ',' << csv_escape(e.note)
            << '\n';
    }
    bundle.write("grid.csv", out.str());
}

void emit_confusion(ReportBundle& bundle, const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "actual\\predicted,NL,MCI,DEMENTIA\n";
    for (int r = 0; r < 3; ++r) {
        out << diagnosis_name(static_cast<Diagnosis>(r));
        for (int c = 0; c < 3; ++c) out << ',' << cm.counts(r, c);
        out << '\n';
    }
    bundle.write("confusion.csv", out.str());
}

void emit_roc_curves(ReportBundle& bundle, std::span<const ScoredSample> samples) {
    for (int c = 0; c < 3; ++c) {
        const auto cls = static_cast<Diagnosis>(c);
        const auto binary = one_vs_rest(samples, cls);
        std::size_t n_pos = 0;
        for (const auto& b : binary)
            if (b.positive) ++n_pos;
        if (n_pos == 0 || n_pos == binary.size()) continue; // degenerate class, no curve
        const auto curve = roc_curve(binary);
        const double auc = auc_binary(binary);
        std::ostringstream out;
        out << "fpr,tpr\n";
        for (const auto& [fpr, tpr] : curve)
            out << format_double(fpr) << ',' << format_double(tpr) << '\n';
        out << "# auc," << format_double(auc) << '\n';
        bundle.write("roc_" + std::string(diagnosis_name(cls)) + ".csv", out.str());
    }
}

void emit_forward_eval(ReportBundle& bundle, const ForwardResult& result) {
    std::ostringstream out;
    out << "p_NL,p_MCI,p_DEM,actual\n";
    for (const auto& s : result.samples)
        out << format_double(s.probs[0]) << ',' << format_double(s.probs[1]) << ','
            << format_double(s.probs[2]) << ',' << diagnosis_name(s.actual) << '\n';
    bundle.write("predictions.csv", out.str());

    const auto cm = confusion(result.samples);
    emit_confusion(bundle, cm);
    emit_roc_curves(bundle, result.samples);

    json summary;
    summary["mauc"] = result.mauc_score;
    summary["evaluated_targets"] = result.evaluated_targets;
    summary["excluded_patients"] = result.excluded_patients;
    bundle.write("summary.json", summary.dump(2));
}

std::map<std::string, Diagnosis> most_severe_diagnosis(std::span<const PatientRecord> records) {
    std::map<std::string, Diagnosis> out;
    for (const auto& rec : records)
        for (const auto& exam : rec.exams)
            if (exam.diagnosis) {
                auto it = out.find(rec.id);
                if (it == out.end() || ordinal(*exam.diagnosis) > ordinal(it->second))
                    out[rec.id] = *exam.diagnosis;
            }
    return out;
}

std::string forecast_svg(const PatientForecast& pf, std::optional<Diagnosis> severity) {
    const int width = 720, height = 240, pad = 30;
    const int horizon = static_cast<int>(pf.probs.rows());
    // Border color follows the most severe actual diagnosis:
    // green / yellow / red for NL / MCI / DEMENTIA.
    const char* border = "#888888";
    if (severity) {
        switch (*severity) {
            case Diagnosis::NL: border = "#2ca02c"; break;
            case Diagnosis::MCI: border = "#e6b800"; break;
            case Diagnosis::Dementia: border = "#d62728"; break;
        }
    }
    const char* class_colors[3] = {"#2ca02c", "#e6b800", "#d62728"};

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect x=\"1\" y=\"1\" width=\"" << width - 2 << "\" height=\"" << height - 2
        << "\" fill=\"white\" stroke=\"" << border << "\" stroke-width=\"3\"/>\n"
        << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">"
        << pf.patient_id << "</text>\n";
    const double x_scale = static_cast<double>(width - 2 * pad) / std::max(1, horizon - 1);
    const double y_base = height - pad;
    const double y_scale = height - 2 * pad;
    for (int c = 0; c < 3; ++c) {
        out << "<polyline fill=\"none\" stroke=\"" << class_colors[c]
            << "\" stroke-width=\"1.5\" points=\"";
        for (int t = 0; t < horizon; ++t) {
            const double x = pad + x_scale * t;
            const double y = y_base - y_scale * pf.probs(t, c);
            out << format_double4(x) << ',' << format_double4(y) << ' ';
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void emit_forecast(ReportBundle& bundle, const ForecastTable& table,
                   const std::map<std::string, Diagnosis>* most_severe_actual) {
    std::ostringstream out;
    out << "patient_id,month,p_NL,p_MCI,p_DEM,predicted\n";
    for (const auto& pf : table.patients) {
        for (int t = 0; t < table.horizon; ++t)
            out << csv_escape(pf.patient_id) << ',' << (t + 1) << ','
                << format_double(pf.probs(t, 0)) << ',' << format_double(pf.probs(t, 1)) << ','
                << format_double(pf.probs(t, 2)) << ','
                << diagnosis_name(pf.predicted[static_cast<std::size_t>(t)]) << '\n';
    }
    bundle.write("forecast.csv", out.str());

    if (bundle.svg_enabled()) {
        for (const auto& pf : table.patients) {
            std::optional<Diagnosis> severity;
            if (most_severe_actual) {
                auto it = most_severe_actual->find(pf.patient_id);
                if (it != most_severe_actual->end()) severity = it->second;
            }
            bundle.write("forecast_" + pf.patient_id + ".svg", forecast_svg(pf, severity));
        }
    }
}

} // namespace adprog
