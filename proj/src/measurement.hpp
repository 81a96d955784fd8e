#pragma once

#include <map>
#include <string>
#include <vector>

#include "event_model.hpp"

namespace bayesperf {

// One counter reading. t_enabled is the time the event's counter was enabled
// while collecting this sample; t_running is the wall time the workload ran
// over the same span (the slice duration in this dataset).
struct Sample {
    long slice = 0;
    std::string event;
    CounterId counter;
    double value = 0.0;
    double t_enabled = 0.0;
    double t_running = 0.0;
};

// Standard multiplexing correction: extrapolates a partially-enabled count to
// the full running time. Throws DegenerateTimingError when either time is
// not strictly positive.
double linux_scale(const Sample& sample);
double linux_scale(double value, double t_enabled, double t_running);

struct SampleBatch {
    std::vector<Sample> samples;

    // slice -> event -> indices into samples, rebuilt on load/append.
    std::map<long, std::map<std::string, std::vector<std::size_t>>> by_slice;

    void add(Sample sample);
    void rebuild_index();
    bool empty() const { return samples.empty(); }
    long max_slice() const;

    const std::vector<std::size_t>* indices(long slice, const std::string& event) const;
};

// Every sample's event must belong to its slice's configuration (fixed events
// count as implicitly configured every slice) and its slice index must be in
// range. Throws SchemaError / UnknownEventError.
void check_batch(const EventCatalog& catalog, const Schedule& schedule, const SampleBatch& batch);

extern const char* const kTraceCsvHeader;  // slice,event,counter,value,t_enabled,t_running

std::string trace_to_csv(const SampleBatch& batch);
SampleBatch trace_from_csv(const std::string& content);
SampleBatch load_trace(const std::string& path);
void save_trace(const SampleBatch& batch, const std::string& path);

// Moment summary of the linux-scaled samples of one (slice, event).
struct MeasurementSummary {
    long n = 0;
    double mu = 0.0;  // mean of linux-scaled values
    double s = 0.0;   // sample standard deviation (n-1 denominator), 0 when n == 1
};

MeasurementSummary summarize(const std::vector<Sample>& samples);
MeasurementSummary summarize_values(const std::vector<double>& linux_scaled);

// Posterior for the underlying per-slice value given n noisy readings:
// location-scale Student-t with location mu, scale s/sqrt(n) and n-1 degrees
// of freedom. Degenerates to a point mass at mu when s == 0.
struct StudentTPosterior {
    double location = 0.0;
    double scale = 0.0;
    double dof = 0.0;
    bool point_mass = false;

    // Central credible interval; {location, location} for a point mass.
    std::pair<double, double> credible_interval(double level = 0.95) const;
};

// Throws InsufficientSamplesError when n < 2.
StudentTPosterior student_t_posterior(const MeasurementSummary& summary);

// Quantile of the standard Student-t distribution (exposed for reuse).
double student_t_quantile(double dof, double p);

}  // namespace bayesperf
