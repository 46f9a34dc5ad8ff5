#include "rcchain/transim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rcchain {

std::string model_name(const ReducedModel& model) {
    struct {
        std::string operator()(const Lumped&) const { return "lumped"; }
        std::string operator()(const HalvedChain&) const { return "halved"; }
        std::string operator()(const PortCurrent&) const { return "portcurrent"; }
        std::string operator()(const RecurrenceModel&) const { return "recurrence"; }
    } visitor;
    return std::visit(visitor, model);
}

std::size_t SimConfig::sample_count() const {
    validate();
    const double r = duration_T / step_s;
    const double nearest = std::round(r);
    const double steps = std::abs(r - nearest) <= 1e-9 * std::max(1.0, r) ? nearest : std::floor(r);
    return static_cast<std::size_t>(steps) + 1;
}

void SimConfig::validate() const {
    if (!(step_s > 0.0) || !(duration_T >= step_s) || !std::isfinite(duration_T))
        throw PreconditionError("simulation needs 0 < step <= duration");
    if (!(t0_offset >= 0.0)) throw PreconditionError("t0 offset must be >= 0");
}

Chain make_uniform_chain(std::size_t n, double R, double C) {
    if (n < 1) throw PreconditionError("chain length n must be >= 1");
    if (!(R > 0.0) || !(C > 0.0)) throw PreconditionError("chain needs R, C > 0");
    Chain c;
    c.port = "p";
    c.n = n;
    c.R = R;
    c.C = C;
    c.capacitor_elements.push_back("cp");
    for (std::size_t i = 1; i <= n; ++i) {
        c.interior.push_back("p_" + std::to_string(i));
        c.resistor_elements.push_back("rp_" + std::to_string(i));
        c.capacitor_elements.push_back("cp_" + std::to_string(i));
    }
    return c;
}

std::vector<double> sample_source(const WaveformSpec& source, const SimConfig& config) {
    const std::size_t count = config.sample_count();
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) v[k] = eval_waveform(source, static_cast<double>(k) * config.step_s);
    return v;
}

namespace {

std::vector<double> time_grid(const SimConfig& config) {
    std::vector<double> t(config.sample_count());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * config.step_s;
    return t;
}

void check_chain(const Chain& chain) {
    if (chain.n < 1) throw PreconditionError("chain length n must be >= 1");
    if (!(chain.R > 0.0) || !(chain.C > 0.0)) throw PreconditionError("chain needs R, C > 0");
}

}  // namespace

TransientTrace simulate_full(const Chain& chain, const WaveformSpec& source, const SimConfig& config,
                             bool record_nodes) {
    check_chain(chain);
    TransientTrace tr;
    tr.times = time_grid(config);
    tr.v0 = sample_source(source, config);
    const std::size_t count = tr.times.size();
    const std::size_t n = chain.n;

    // Backward Euler scaled by s/C: (1 + 2k) V_i - k V_{i-1} - k V_{i+1} = V_i_old,
    // last row (1 + k) V_n - k V_{n-1} = V_n_old, k = s/(RC). The matrix is
    // constant, so its LU factors are computed once.
    const double k = config.step_s / (chain.R * chain.C);
    std::vector<double> upper(n), inv_pivot(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double diag = (i + 1 == n ? 1.0 + k : 1.0 + 2.0 * k);
        const double pivot = i == 0 ? diag : diag + k * upper[i - 1];
        inv_pivot[i] = 1.0 / pivot;
        upper[i] = -k * inv_pivot[i];
    }

    // Node voltages are held as deviations from the initial source value, so a
    // constant source gives exactly zero current.
    const double base = tr.v0[0];
    std::vector<double> v(n, 0.0), rhs(n);
    if (record_nodes) tr.node_voltages.assign(n + 1, std::vector<double>(count));
    tr.current.assign(count, 0.0);
    const double c_over_s = chain.C / config.step_s;
    for (std::size_t step = 0; step < count; ++step) {
        if (step > 0) {
            rhs[0] = (v[0] + k * (tr.v0[step] - base)) * inv_pivot[0];
            for (std::size_t i = 1; i < n; ++i) rhs[i] = (v[i] + k * rhs[i - 1]) * inv_pivot[i];
            double charge = tr.v0[step] - tr.v0[step - 1];
            for (std::size_t i = n; i-- > 0;) {
                const double next = i + 1 < n ? rhs[i + 1] : 0.0;
                rhs[i] -= upper[i] * next;
                charge += rhs[i] - v[i];
            }
            std::swap(v, rhs);
            tr.current[step] = c_over_s * charge;
        }
        if (record_nodes) {
            tr.node_voltages[0][step] = tr.v0[step];
            for (std::size_t i = 0; i < n; ++i) tr.node_voltages[i + 1][step] = base + v[i];
        }
    }
    return tr;
}

double reduced_current_small(double v_t, double v_t1, double v_t2, std::size_t n, double R, double C,
                             double s) {
    const double nn = static_cast<double>(n);
    const double d1 = (v_t - v_t1) / s;
    const double d2 = ((v_t - v_t1) - (v_t1 - v_t2)) / (s * s);
    return (nn + 1.0) * C * d1 - 0.5 * nn * (nn + 1.0) * R * C * C * d2;
}

TransientTrace simulate_small_tau(std::size_t n, double R, double C, const WaveformSpec& source,
                                  const SimConfig& config) {
    check_chain(make_uniform_chain(n, R, C));
    TransientTrace tr;
    tr.times = time_grid(config);
    tr.v0 = sample_source(source, config);
    tr.current.assign(tr.times.size(), 0.0);
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        const double v2 = k >= 2 ? tr.v0[k - 2] : tr.v0[0];
        tr.current[k] = reduced_current_small(tr.v0[k], tr.v0[k - 1], v2, n, R, C, config.step_s);
    }
    return tr;
}

PortCurrentEvaluator::PortCurrentEvaluator(double R, double C, double s, double v_start)
    : R_(R), C_(C), s_(s), v_start_(v_start) {
    if (!(R > 0.0) || !(C > 0.0) || !(s > 0.0)) throw PreconditionError("port-current model needs R, C, s > 0");
}

double PortCurrentEvaluator::step(double v0) {
    if (!started_) {
        started_ = true;
        prev_ = v0;
        return 0.0;
    }
    const double dev = v0 - v_start_;
    integral_ += s_ * dev;
    const double i = C_ * (v0 - prev_) / s_ + dev / R_ - integral_ / (R_ * R_ * C_);
    prev_ = v0;
    return i;
}

double reduced_current_large(const std::vector<double>& v0_history, double R, double C, double s) {
    if (v0_history.empty()) throw PreconditionError("reduced_current_large: empty history");
    PortCurrentEvaluator ev(R, C, s, v0_history.front());
    double i = 0.0;
    for (double v : v0_history) i = ev.step(v);
    return i;
}

RecurrenceModel fit_recurrence(const Chain& chain, const WaveformSpec& source_class, const SimConfig& config,
                               std::size_t m) {
    check_chain(chain);
    if (m == 0) throw PreconditionError("recurrence order m must be >= 1");
    if (m > chain.n) throw PreconditionError("recurrence order m must not exceed n");
    const auto cal = simulate_full(chain, source_class, config);
    const std::size_t rows = cal.times.size();
    const std::size_t cols = 2 * m + 1;
    if (rows < cols) throw PreconditionError("calibration run too short for recurrence order m");

    std::vector<double> dev(rows);
    for (std::size_t j = 0; j < rows; ++j) dev[j] = cal.v0[j] - cal.v0[0];

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    for (std::size_t j = 0; j < rows; ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        y(r) = cal.current[j];
        for (std::size_t k = 1; k <= m; ++k)
            if (j >= k) A(r, static_cast<Eigen::Index>(k - 1)) = cal.current[j - k];
        for (std::size_t k = 0; k <= m; ++k)
            if (j >= k) A(r, static_cast<Eigen::Index>(m + k)) = dev[j - k];
    }
    Eigen::VectorXd scale = A.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < scale.size(); ++c)
        if (scale(c) == 0.0)
            throw RankDeficientError("fit_recurrence: regression column " + std::to_string(c) +
                                     " is zero; the calibration source does not excite order m = " +
                                     std::to_string(m) + ", try a smaller m");
    const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
    if (qr.rank() < static_cast<Eigen::Index>(cols))
        throw RankDeficientError("fit_recurrence: regression matrix has rank " + std::to_string(qr.rank()) +
                                 " < " + std::to_string(cols) + "; try a smaller m");
    const Eigen::VectorXd coef = qr.solve(y).cwiseQuotient(scale);

    RecurrenceModel model;
    model.m = m;
    for (std::size_t k = 0; k < m; ++k) model.gamma.push_back(coef(static_cast<Eigen::Index>(k)));
    for (std::size_t k = 0; k <= m; ++k) model.beta.push_back(coef(static_cast<Eigen::Index>(m + k)));
    const Eigen::VectorXd resid = A * coef - y;
    model.rms_residual = std::sqrt(resid.squaredNorm() / static_cast<double>(rows));
    return model;
}

RecurrenceRollout rollout_recurrence(const RecurrenceModel& model, const std::vector<double>& v0) {
    if (model.m == 0 || model.gamma.size() != model.m || model.beta.size() != model.m + 1)
        throw PreconditionError("recurrence model needs m >= 1, m gammas and m+1 betas");
    RecurrenceRollout out;
    out.current.assign(v0.size(), 0.0);
    if (v0.empty()) return out;
    const double v_start = v0.front();
    for (std::size_t j = 0; j < v0.size(); ++j) {
        double i = 0.0;
        for (std::size_t k = 1; k <= model.m && k <= j; ++k) i += model.gamma[k - 1] * out.current[j - k];
        for (std::size_t k = 0; k <= model.m && k <= j; ++k) i += model.beta[k] * (v0[j - k] - v_start);
        if (!(std::abs(i) <= kRecurrenceClamp)) {
            out.diverged = true;
            i = std::isnan(i) ? kRecurrenceClamp : std::copysign(kRecurrenceClamp, i);
        }
        out.current[j] = i;
    }
    return out;
}

TransientTrace simulate_reduced(const ReducedModel& model, const WaveformSpec& source, const SimConfig& config,
                                bool* diverged) {
    if (diverged) *diverged = false;
    if (const auto* h = std::get_if<HalvedChain>(&model))
        return simulate_full(make_uniform_chain(h->m, h->R, h->C_each), source, config);

    TransientTrace tr;
    tr.times = time_grid(config);
    tr.v0 = sample_source(source, config);
    const std::size_t count = tr.times.size();
    const double s = config.step_s;
    tr.current.assign(count, 0.0);
    if (const auto* l = std::get_if<Lumped>(&model)) {
        for (std::size_t k = 1; k < count; ++k) tr.current[k] = l->C_total * (tr.v0[k] - tr.v0[k - 1]) / s;
    } else if (const auto* p = std::get_if<PortCurrent>(&model)) {
        PortCurrentEvaluator ev(p->R, p->C, s, tr.v0.front());
        for (std::size_t k = 0; k < count; ++k) tr.current[k] = ev.step(tr.v0[k]);
    } else {
        auto roll = rollout_recurrence(std::get<RecurrenceModel>(model), tr.v0);
        tr.current = std::move(roll.current);
        if (diverged) *diverged = roll.diverged;
    }
    return tr;
}

void write_trace_csv(const TransientTrace& trace, std::ostream& out) {
    out << "t,v0,current\n";
    char buf[96];
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        const double v = k < trace.v0.size() ? trace.v0[k] : 0.0;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", trace.times[k], v, trace.current[k]);
        out << buf;
    }
}

void write_trace_csv(const TransientTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    write_trace_csv(trace, f);
    if (!f) throw Error("write failed: " + path);
}

TransientTrace read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
        }
        return out;
    };
    std::string line;
    if (!std::getline(f, line)) throw Error(path + ": empty trace file");
    std::map<std::string, std::size_t> col;
    const auto header = split(line);
    for (std::size_t i = 0; i < header.size(); ++i) col[to_lower(header[i])] = i;
    const auto find = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
        for (const char* nm : names)
            if (auto it = col.find(nm); it != col.end()) return it->second;
        return std::nullopt;
    };
    const auto tc = find({"t", "time"});
    const auto ic = find({"current", "i"});
    const auto vc = find({"v0"});
    if (!tc || !ic) throw Error(path + ": trace needs columns t and current");

    TransientTrace tr;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split(line);
        auto num = [&](std::size_t c) {
            if (c >= cells.size()) throw ParseError(lineno, path + ": missing column");
            try {
                std::size_t used = 0;
                const double v = std::stod(cells[c], &used);
                if (used != cells[c].size()) throw std::invalid_argument("trailing");
                return v;
            } catch (const std::exception&) {
                throw ParseError(lineno, path + ": bad number '" + cells[c] + "'");
            }
        };
        tr.times.push_back(num(*tc));
        tr.current.push_back(num(*ic));
        if (vc) tr.v0.push_back(num(*vc));
    }
    return tr;
}

}  // namespace rcchain
