#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "io_util.hpp"
#include "log.hpp"

namespace bayesperf {

AlignmentResult dtw_align(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw EmptySeriesError("dtw_align requires non-empty series");
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> cost(n * m);
    std::vector<std::uint8_t> move(n * m);  // 0 diagonal, 1 vertical, 2 horizontal
    auto at = [m](std::size_t i, std::size_t j) { return i * m + j; };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double local = std::abs(a[i] - b[j]);
            if (i == 0 && j == 0) {
                cost[at(i, j)] = local;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            std::uint8_t step = 0;
            if (i > 0 && j > 0) {
                best = cost[at(i - 1, j - 1)];
                step = 0;
            }
            if (i > 0 && cost[at(i - 1, j)] < best) {
                best = cost[at(i - 1, j)];
                step = 1;
            }
            if (j > 0 && cost[at(i, j - 1)] < best) {
                best = cost[at(i, j - 1)];
                step = 2;
            }
            cost[at(i, j)] = best + local;
            move[at(i, j)] = step;
        }
    }

    AlignmentResult result;
    result.distance = cost[at(n - 1, m - 1)];
    std::size_t i = n - 1, j = m - 1;
    result.path.push_back({static_cast<int>(i), static_cast<int>(j)});
    while (i > 0 || j > 0) {
        switch (move[at(i, j)]) {
            case 0: --i; --j; break;
            case 1: --i; break;
            default: --j; break;
        }
        result.path.push_back({static_cast<int>(i), static_cast<int>(j)});
    }
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

double measurement_error(const std::vector<double>& candidate,
                         const std::vector<double>& reference) {
    bool any_nonzero = false;
    for (double r : reference)
        if (r != 0.0) {
            any_nonzero = true;
            break;
        }
    if (!any_nonzero) throw ZeroReferenceError("all reference values are zero");
    const auto alignment = dtw_align(candidate, reference);
    double abs_diff = 0.0, abs_ref = 0.0;
    for (const auto& [i, j] : alignment.path) {
        abs_diff += std::abs(candidate[static_cast<std::size_t>(i)] -
                             reference[static_cast<std::size_t>(j)]);
        abs_ref += std::abs(reference[static_cast<std::size_t>(j)]);
    }
    if (abs_ref == 0.0) throw ZeroReferenceError("aligned reference sums to zero");
    return abs_diff / abs_ref;
}

std::vector<double> outlier_drop_baseline(const std::vector<double>& series, int window,
                                          double z_threshold) {
    if (window < 3) throw SchemaError("outlier window must be >= 3");
    if (z_threshold <= 0) throw SchemaError("z threshold must be > 0");
    const long n = static_cast<long>(series.size());
    std::vector<double> out = series;
    auto median_of = [](std::vector<double> values) {
        std::sort(values.begin(), values.end());
        const std::size_t k = values.size();
        return k % 2 == 1 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
    };
    for (long i = 0; i < n; ++i) {
        const long lo = std::max<long>(0, i - window / 2);
        const long hi = std::min<long>(n, lo + window);
        const long lo2 = std::max<long>(0, hi - window);
        std::vector<double> win(series.begin() + lo2, series.begin() + hi);
        if (win.size() < 3) continue;
        const double med = median_of(win);
        std::vector<double> dev;
        dev.reserve(win.size());
        for (double x : win) dev.push_back(std::abs(x - med));
        const double mad = median_of(dev);
        double z;
        if (mad == 0.0) {
            z = series[static_cast<std::size_t>(i)] == med
                    ? 0.0
                    : std::numeric_limits<double>::infinity();
        } else {
            z = std::abs(series[static_cast<std::size_t>(i)] - med) / (1.4826 * mad);
        }
        if (z > z_threshold) out[static_cast<std::size_t>(i)] = med;
    }
    return out;
}

const char* const kMethodLinux = "linux_scale";
const char* const kMethodOutlierDrop = "outlier_drop";
const char* const kMethodBayesperf = "bayesperf";
const char* const kAggregateRow = "aggregate";
const char* const kAggregateSdRow = "aggregate_sd";

namespace {

std::vector<double> truth_series(const GroundTruth& truth, const std::string& event) {
    std::vector<double> out;
    out.reserve(truth.size());
    for (const auto& slice : truth) {
        const auto it = slice.find(event);
        if (it == slice.end())
            throw SchemaError("event " + event + " missing from ground truth");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

ErrorReport build_report(const GroundTruth& truth, const SampleBatch& trace,
                         const std::vector<EventPosterior>& posteriors, int outlier_window,
                         double outlier_z, std::optional<double> normalization) {
    if (truth.empty()) throw SchemaError("ground truth is empty");
    if (normalization && *normalization <= 0)
        throw SchemaError("normalization constant must be > 0");

    // Per-event series, slice-ordered.
    std::map<std::string, std::vector<double>> linux_series;
    for (const auto& [slice, events] : trace.by_slice) {
        (void)slice;
        for (const auto& [event, indices] : events) {
            if (indices.empty()) continue;
            std::vector<Sample> samples;
            samples.reserve(indices.size());
            for (std::size_t k : indices) samples.push_back(trace.samples[k]);
            linux_series[event].push_back(summarize(samples).mu);
        }
    }
    std::map<std::string, std::vector<double>> posterior_series;
    for (const auto& p : posteriors) posterior_series[p.event].push_back(p.mle);

    std::set<std::string> events;
    for (const auto& [event, s] : linux_series) {
        (void)s;
        events.insert(event);
    }
    for (const auto& [event, s] : posterior_series) {
        (void)s;
        events.insert(event);
    }

    ErrorReport report;
    report.normalization = normalization.value_or(1.0);
    std::map<std::string, std::vector<double>> method_errors;
    std::map<std::string, long> method_pairs;
    auto add_row = [&](const std::string& event, const std::string& method,
                       const std::vector<double>& candidate, const std::vector<double>& ref) {
        const auto alignment = dtw_align(candidate, ref);
        const double error = measurement_error(candidate, ref);
        MethodError row;
        row.event = event;
        row.method = method;
        row.error = error;
        row.normalized_error = error / report.normalization;
        row.n_pairs = static_cast<long>(alignment.path.size());
        method_errors[method].push_back(error);
        method_pairs[method] += row.n_pairs;
        report.rows.push_back(std::move(row));
    };

    for (const auto& event : events) {
        const auto ref = truth_series(truth, event);
        const auto lin_it = linux_series.find(event);
        if (lin_it != linux_series.end()) {
            add_row(event, kMethodLinux, lin_it->second, ref);
            add_row(event, kMethodOutlierDrop,
                    outlier_drop_baseline(lin_it->second, outlier_window, outlier_z), ref);
        }
        const auto post_it = posterior_series.find(event);
        if (post_it != posterior_series.end())
            add_row(event, kMethodBayesperf, post_it->second, ref);
    }

    for (const auto& [method, errors] : method_errors) {
        double mean = 0.0;
        for (double e : errors) mean += e;
        mean /= static_cast<double>(errors.size());
        double sd = 0.0;
        if (errors.size() > 1) {
            for (double e : errors) sd += (e - mean) * (e - mean);
            sd = std::sqrt(sd / static_cast<double>(errors.size() - 1));
        }
        report.rows.push_back({kAggregateRow, method, mean, mean / report.normalization,
                               method_pairs[method]});
        report.rows.push_back({kAggregateSdRow, method, sd, sd / report.normalization, 0});
    }
    return report;
}

double polling_normalization(const SampleBatch& run_a, const SampleBatch& run_b) {
    std::map<std::string, std::vector<double>> series_a, series_b;
    auto collect = [](const SampleBatch& batch, std::map<std::string, std::vector<double>>& out) {
        for (const auto& [slice, events] : batch.by_slice) {
            (void)slice;
            for (const auto& [event, indices] : events)
                for (std::size_t k : indices) out[event].push_back(linux_scale(batch.samples[k]));
        }
    };
    collect(run_a, series_a);
    collect(run_b, series_b);
    double total = 0.0;
    long n = 0;
    for (const auto& [event, sa] : series_a) {
        const auto it = series_b.find(event);
        if (it == series_b.end()) continue;
        total += measurement_error(sa, it->second);
        ++n;
    }
    if (n == 0) throw SchemaError("polling runs share no events");
    return total / static_cast<double>(n);
}

const char* const kReportCsvHeader = "event,method,error,normalized_error,n_pairs";

std::string report_to_csv(const ErrorReport& report) {
    std::ostringstream out;
    out << kReportCsvHeader << "\n";
    for (const auto& row : report.rows)
        out << row.event << "," << row.method << "," << format_double(row.error) << ","
            << format_double(row.normalized_error) << "," << row.n_pairs << "\n";
    return out.str();
}

ErrorReport report_from_csv(const std::string& content) {
    const auto lines = split_lines(content);
    if (lines.empty() || lines[0] != kReportCsvHeader)
        throw ParseError("report csv must start with header '" + std::string(kReportCsvHeader) +
                         "'");
    ErrorReport report;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != 5)
            throw ParseError("report csv line " + std::to_string(i + 1) + ": expected 5 fields");
        MethodError row;
        row.event = fields[0];
        row.method = fields[1];
        row.error = parse_double(fields[2]);
        row.normalized_error = parse_double(fields[3]);
        row.n_pairs = parse_long(fields[4]);
        report.rows.push_back(std::move(row));
    }
    for (const auto& row : report.rows) {
        if (row.normalized_error > 0 && row.error > 0) {
            report.normalization = row.error / row.normalized_error;
            break;
        }
    }
    return report;
}

void save_report(const ErrorReport& report, const std::string& path) {
    write_file(path, report_to_csv(report));
}

ErrorReport load_report(const std::string& path) { return report_from_csv(read_file(path)); }

nlohmann::json report_to_json(const ErrorReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"event", row.event},
                        {"method", row.method},
                        {"error", row.error},
                        {"normalized_error", row.normalized_error},
                        {"n_pairs", row.n_pairs}});
    return {{"normalization", report.normalization}, {"rows", rows}};
}

double report_error(const ErrorReport& report, const std::string& event,
                    const std::string& method) {
    for (const auto& row : report.rows)
        if (row.event == event && row.method == method) return row.error;
    throw SchemaError("no report row for event " + event + ", method " + method);
}

}  // namespace bayesperf
