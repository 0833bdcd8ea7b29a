#ifndef ADPROG_REPORT_HPP
#define ADPROG_REPORT_HPP

#include "adprog/eval.hpp"
#include "adprog/metrics.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adprog {

// Deterministic file emission into one output directory. Every file goes
// through write() so the manifest (name, size, checksum) stays complete;
// write_manifest() is called last.
class ReportBundle {
public:
    explicit ReportBundle(std::filesystem::path dir, bool svg = false);

    void write(const std::string& name, std::string_view content);
    void write_manifest(); // manifest.json covering everything written

    const std::filesystem::path& dir() const { return dir_; }
    bool svg_enabled() const { return svg_; }
    const std::vector<std::string>& files() const { return names_; }

private:
    std::filesystem::path dir_;
    bool svg_;
    std::vector<std::string> names_;
    std::map<std::string, std::pair<std::uint64_t, std::size_t>> entries_; // name -> (fnv, bytes)
};

// Table-3 style summary, one row per configuration, descending test mAUC.
void emit_cv_table(ReportBundle& bundle, std::span<const CvReport> reports);

// Per-split score pairs for box plots.
void emit_split_scores(ReportBundle& bundle, std::span<const SplitScore> scores);

// Ranked grid-search table.
void emit_grid(ReportBundle& bundle, const GridResult& result);

void emit_confusion(ReportBundle& bundle, const ConfusionMatrix& cm);

// One ROC file per class (one-vs-rest) from scored samples.
void emit_roc_curves(ReportBundle& bundle, std::span<const ScoredSample> samples);

// Forward-evaluation outputs: per-target predictions plus a JSON summary.
void emit_forward_eval(ReportBundle& bundle, const ForwardResult& result);

// Long-format forecast CSV (patient, month, three probabilities, argmax);
// optional per-patient SVG time courses colored by the most severe actual
// diagnosis when actuals are provided.
void emit_forecast(ReportBundle& bundle, const ForecastTable& table,
                   const std::map<std::string, Diagnosis>* most_severe_actual = nullptr);

// Severity map from LB4 records, for forecast coloring.
std::map<std::string, Diagnosis> most_severe_diagnosis(std::span<const PatientRecord> records);

std::string forecast_svg(const PatientForecast& pf, std::optional<Diagnosis> severity);

} // namespace adprog

#endif
