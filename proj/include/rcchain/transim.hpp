#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcchain/chain_detect.hpp"
#include "rcchain/error.hpp"
#include "rcchain/models.hpp"
#include "rcchain/waveform.hpp"

namespace rcchain {

struct SimConfig {
    double step_s = 1e-12;
    double duration_T = 1e-9;
    /// The run starts at -t0. Only the running mean of the port-current model
    /// sees it, and there the source is constant before t = 0, so it has no
    /// effect on results; kept for reporting.
    double t0_offset = 0.0;

    /// floor(T/s) + 1, with T/s rounded when it is within 1e-9 of an integer.
    std::size_t sample_count() const;
    /// Throws PreconditionError unless 0 < step_s <= duration_T, t0 >= 0.
    void validate() const;
};

struct TransientTrace {
    std::vector<double> times;
    std::vector<double> v0;
    std::vector<double> current;
    /// node_voltages[i][k] is V_i at times[k]; filled only on request.
    std::vector<std::vector<double>> node_voltages;
};

/// Uniform chain with generated node names, for sweeps and tests.
Chain make_uniform_chain(std::size_t n, double R, double C);

/// Backward-Euler reference simulation of the chain driven at its port.
/// I(t_k) = sum_i C (V_i(t_k) - V_i(t_{k-1}))/s, I(0) = 0.
TransientTrace simulate_full(const Chain& chain, const WaveformSpec& source, const SimConfig& config,
                             bool record_nodes = false);

/// Source samples on the configuration's time grid.
std::vector<double> sample_source(const WaveformSpec& source, const SimConfig& config);

/// (n+1) C D v - n(n+1)/2 R C^2 D^2 v with backward differences of the three
/// most recent samples v_t, v_{t-s}, v_{t-2s}.
double reduced_current_small(double v_t, double v_t1, double v_t2, std::size_t n, double R, double C,
                             double s);

/// Small time-constant derivative model over the whole grid, backward
/// differences with the t = 0 sample repeated before the start.
TransientTrace simulate_small_tau(std::size_t n, double R, double C, const WaveformSpec& source,
                                  const SimConfig& config);

/// Port-current model, advanced one sample at a time. The running integral
/// of V = V0 - V0(start) uses the right-endpoint rule, matching backward
/// Euler.
class PortCurrentEvaluator {
public:
    PortCurrentEvaluator(double R, double C, double s, double v_start);
    /// Current for the next sample. The first call is t = 0 and returns 0.
    double step(double v0);
    /// d * mean(V) over [-t0, t] so far (V-seconds).
    double integral() const { return integral_; }

private:
    double R_, C_, s_, v_start_;
    double prev_ = 0.0;
    double integral_ = 0.0;
    bool started_ = false;
};

/// Stand-alone form: current at the last sample of `v0_history` (uniform
/// spacing s, first sample at t = 0). O(length); tests use it as an oracle
/// for PortCurrentEvaluator.
double reduced_current_large(const std::vector<double>& v0_history, double R, double C, double s);

class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit of the recurrence on a simulate_full calibration run of
/// `chain` under `source_class`. History before t = 0 is taken as zero on
/// both sides, the same seeding the rollout uses.
/// Throws PreconditionError for m = 0 or m > n, RankDeficientError when the
/// regression matrix loses rank.
RecurrenceModel fit_recurrence(const Chain& chain, const WaveformSpec& source_class, const SimConfig& config,
                               std::size_t m);

struct RecurrenceRollout {
    std::vector<double> current;
    bool diverged = false;  // some |I| hit the 1e6 A clamp
};

RecurrenceRollout rollout_recurrence(const RecurrenceModel& model, const std::vector<double>& v0);

inline constexpr double kRecurrenceClamp = 1e6;

/// Port current of a reduced model on the configuration's grid. `diverged`
/// is set for a recurrence rollout that hit the clamp.
TransientTrace simulate_reduced(const ReducedModel& model, const WaveformSpec& source, const SimConfig& config,
                                bool* diverged = nullptr);

/// CSV "t,v0,current", 17 significant digits.
void write_trace_csv(const TransientTrace& trace, std::ostream& out);
void write_trace_csv(const TransientTrace& trace, const std::string& path);
/// Reads a CSV with a header row. Columns are found by name ("t" or "time",
/// "v0", "current"); missing v0 leaves that vector empty.
TransientTrace read_trace_csv(const std::string& path);

}  // namespace rcchain
