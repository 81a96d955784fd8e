#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inference.hpp"
#include "measurement.hpp"
#include "simulator.hpp"

namespace bayesperf {

struct AlignmentResult {
    double distance = 0.0;
    std::vector<std::pair<int, int>> path;  // index pairs (i into a, j into b)
};

// Dynamic-time-warping alignment with L1 local cost. Ties between
// predecessors resolve diagonal first, then vertical (advance in a), then
// horizontal. Throws EmptySeriesError.
AlignmentResult dtw_align(const std::vector<double>& a, const std::vector<double>& b);

// Relative error over the DTW-aligned pairs: sum |candidate - reference|
// divided by sum |reference|. Throws ZeroReferenceError when the reference is
// identically zero.
double measurement_error(const std::vector<double>& candidate,
                         const std::vector<double>& reference);

// Replaces values whose robust z-score (median/MAD, centered window clipped
// at the edges) exceeds z_threshold with the window median. window >= 3.
std::vector<double> outlier_drop_baseline(const std::vector<double>& series, int window,
                                          double z_threshold);

extern const char* const kMethodLinux;        // linux_scale
extern const char* const kMethodOutlierDrop;  // outlier_drop
extern const char* const kMethodBayesperf;    // bayesperf
extern const char* const kAggregateRow;       // aggregate
extern const char* const kAggregateSdRow;     // aggregate_sd

struct MethodError {
    std::string event;
    std::string method;
    double error = 0.0;
    double normalized_error = 0.0;
    long n_pairs = 0;
};

struct ErrorReport {
    std::vector<MethodError> rows;
    double normalization = 1.0;
};

// Per-event error of each correction method against ground truth, plus
// unweighted aggregate mean and standard deviation rows per method. The
// candidate series are: pooled linux-scaled means per observed slice, their
// outlier-dropped version, and the posterior point estimates.
ErrorReport build_report(const GroundTruth& truth, const SampleBatch& trace,
                         const std::vector<EventPosterior>& posteriors, int outlier_window,
                         double outlier_z, std::optional<double> normalization);

// Mean per-event error between two independent polling runs of the same
// scenario; used as the run-to-run normalization constant.
double polling_normalization(const SampleBatch& run_a, const SampleBatch& run_b);

extern const char* const kReportCsvHeader;  // event,method,error,normalized_error,n_pairs

std::string report_to_csv(const ErrorReport& report);
ErrorReport report_from_csv(const std::string& content);
void save_report(const ErrorReport& report, const std::string& path);
ErrorReport load_report(const std::string& path);

nlohmann::json report_to_json(const ErrorReport& report);

// Convenience lookup; throws SchemaError when the row is absent.
double report_error(const ErrorReport& report, const std::string& event,
                    const std::string& method);

}  // namespace bayesperf
