#include "measurement.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "errors.hpp"
#include "io_util.hpp"

namespace bayesperf {

double linux_scale(double value, double t_enabled, double t_running) {
    if (!(t_enabled > 0.0))
        throw DegenerateTimingError("t_enabled = " + format_double(t_enabled));
    if (!(t_running > 0.0))
        throw DegenerateTimingError("t_running = " + format_double(t_running));
    return value * (t_running / t_enabled);
}

double linux_scale(const Sample& sample) {
    return linux_scale(sample.value, sample.t_enabled, sample.t_running);
}

void SampleBatch::add(Sample sample) {
    by_slice[sample.slice][sample.event].push_back(samples.size());
    samples.push_back(std::move(sample));
}

void SampleBatch::rebuild_index() {
    by_slice.clear();
    for (std::size_t i = 0; i < samples.size(); ++i)
        by_slice[samples[i].slice][samples[i].event].push_back(i);
}

long SampleBatch::max_slice() const {
    long m = -1;
    for (const auto& s : samples) m = std::max(m, s.slice);
    return m;
}

const std::vector<std::size_t>* SampleBatch::indices(long slice, const std::string& event) const {
    const auto sit = by_slice.find(slice);
    if (sit == by_slice.end()) return nullptr;
    const auto eit = sit->second.find(event);
    if (eit == sit->second.end()) return nullptr;
    return &eit->second;
}

void check_batch(const EventCatalog& catalog, const Schedule& schedule, const SampleBatch& batch) {
    for (const auto& s : batch.samples) {
        if (s.slice < 0 || s.slice >= static_cast<long>(schedule.slices.size()))
            throw SchemaError("sample slice " + std::to_string(s.slice) + " out of range");
        const EventDef& def = catalog.event(s.event);
        if (def.kind == EventKind::kFixed) continue;  // fixed events always count
        if (!schedule.slices[s.slice].config.contains_event(s.event))
            throw SchemaError("sample for " + s.event + " in slice " + std::to_string(s.slice) +
                              " which does not schedule it");
    }
}

const char* const kTraceCsvHeader = "slice,event,counter,value,t_enabled,t_running";

std::string trace_to_csv(const SampleBatch& batch) {
    std::string out = kTraceCsvHeader;
    out += '\n';
    for (const auto& s : batch.samples) {
        out += std::to_string(s.slice);
        out += ',';
        out += s.event;
        out += ',';
        out += s.counter.str();
        out += ',';
        out += format_double(s.value);
        out += ',';
        out += format_double(s.t_enabled);
        out += ',';
        out += format_double(s.t_running);
        out += '\n';
    }
    return out;
}

SampleBatch trace_from_csv(const std::string& content) {
    const auto lines = split_lines(content);
    if (lines.empty() || lines[0] != kTraceCsvHeader)
        throw ParseError(std::string("trace CSV must start with header '") + kTraceCsvHeader +
                         "'");
    SampleBatch batch;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != 6)
            throw ParseError("trace line " + std::to_string(i + 1) + ": expected 6 fields");
        const std::string ctx = "trace line " + std::to_string(i + 1);
        Sample s;
        s.slice = parse_long(fields[0], ctx);
        s.event = fields[1];
        s.counter = CounterId::parse(fields[2]);
        s.value = parse_double(fields[3], ctx);
        s.t_enabled = parse_double(fields[4], ctx);
        s.t_running = parse_double(fields[5], ctx);
        batch.add(std::move(s));
    }
    return batch;
}

SampleBatch load_trace(const std::string& path) {
    return trace_from_csv(read_file(path));
}

void save_trace(const SampleBatch& batch, const std::string& path) {
    write_file(path, trace_to_csv(batch));
}

MeasurementSummary summarize_values(const std::vector<double>& linux_scaled) {
    MeasurementSummary m;
    m.n = static_cast<long>(linux_scaled.size());
    if (m.n == 0) return m;
    double sum = 0.0;
    for (double v : linux_scaled) sum += v;
    m.mu = sum / static_cast<double>(m.n);
    if (m.n >= 2) {
        double ss = 0.0;
        for (double v : linux_scaled) ss += (v - m.mu) * (v - m.mu);
        m.s = std::sqrt(ss / static_cast<double>(m.n - 1));
    }
    return m;
}

MeasurementSummary summarize(const std::vector<Sample>& samples) {
    std::vector<double> scaled;
    scaled.reserve(samples.size());
    for (const auto& s : samples) scaled.push_back(linux_scale(s));
    return summarize_values(scaled);
}

double student_t_quantile(double dof, double p) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

StudentTPosterior student_t_posterior(const MeasurementSummary& summary) {
    if (summary.n < 2)
        throw InsufficientSamplesError("need at least 2 samples, got " +
                                       std::to_string(summary.n));
    StudentTPosterior post;
    post.location = summary.mu;
    post.dof = static_cast<double>(summary.n - 1);
    if (summary.s == 0.0) {
        post.scale = 0.0;
        post.point_mass = true;
        return post;
    }
    post.scale = summary.s / std::sqrt(static_cast<double>(summary.n));
    return post;
}

std::pair<double, double> StudentTPosterior::credible_interval(double level) const {
    if (!(level > 0.0 && level < 1.0))
        throw NumericError("credible level must be in (0, 1)");
    if (point_mass) return {location, location};
    const double q = student_t_quantile(dof, 0.5 + level / 2.0);
    return {location - q * scale, location + q * scale};
}

}  // namespace bayesperf
