#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "icstb/core/time.hpp"
#include "icstb/modbus/flow.hpp"

namespace icstb::ids {

using modbus::FlowKey;

// Externally observable packet metadata only: arrival time + flow identity.
// Detectors never see plant ground truth.
struct Arrival {
    SimTime t{};
    FlowKey flow;
};

enum class Detector : std::uint8_t { iat, dtmc };
inline const char* detector_name(Detector d) { return d == Detector::iat ? "iat" : "dtmc"; }

enum class Reason : std::uint8_t { below_bound, above_bound, unseen_transition, rare_transition };
inline const char* reason_name(Reason r) {
    switch (r) {
        case Reason::below_bound: return "below_bound";
        case Reason::above_bound: return "above_bound";
        case Reason::unseen_transition: return "unseen_transition";
        case Reason::rare_transition: return "rare_transition";
    }
    return "?";
}

struct Alert {
    SimTime t{};
    FlowKey flow;
    Detector detector = Detector::iat;
    Reason reason = Reason::below_bound;
};

// -- inter-arrival-time detector ---------------------------------------------

struct IatBounds {
    double lower_s = 0.0;
    double upper_s = 0.0;
    std::uint64_t samples = 0;
};

struct IatModel {
    std::map<FlowKey, IatBounds> flows;
    std::vector<FlowKey> excluded; // flows with too few training samples

    double width(const FlowKey& k) const {
        auto it = flows.find(k);
        if (it == flows.end()) throw std::out_of_range("flow not modeled: " + k.str());
        return it->second.upper_s - it->second.lower_s;
    }
};

struct IatParams {
    std::uint64_t min_samples = 100;
    double tolerance = 0.10;          // bounds = [(1-tol)*min, (1+tol)*max]
    double cooldown_s = 1.0;          // alert dedup per (flow, detector)
};

inline IatModel train_iat(const std::vector<Arrival>& trace, const IatParams& p = {}) {
    std::map<FlowKey, std::pair<double, double>> minmax; // per flow
    std::map<FlowKey, std::uint64_t> counts;
    std::map<FlowKey, SimTime> last;
    for (const auto& a : trace) {
        auto it = last.find(a.flow);
        if (it != last.end()) {
            double iat = (a.t - it->second).seconds();
            auto& mm = minmax.try_emplace(a.flow, iat, iat).first->second;
            mm.first = std::min(mm.first, iat);
            mm.second = std::max(mm.second, iat);
            ++counts[a.flow];
        }
        last[a.flow] = a.t;
    }
    IatModel m;
    for (const auto& [flow, mm] : minmax) {
        if (counts[flow] < p.min_samples) {
            m.excluded.push_back(flow);
            continue;
        }
        m.flows[flow] = IatBounds{(1.0 - p.tolerance) * mm.first,
                                  (1.0 + p.tolerance) * mm.second, counts[flow]};
    }
    return m;
}

inline std::vector<Alert> detect_iat(const IatModel& model, const std::vector<Arrival>& trace,
                                     const IatParams& p = {}) {
    std::vector<Alert> alerts;
    std::map<FlowKey, SimTime> last;
    std::map<FlowKey, SimTime> cooldown_until;
    const SimTime cd = SimTime::from_seconds(p.cooldown_s);
    for (const auto& a : trace) {
        auto mit = model.flows.find(a.flow);
        if (mit == model.flows.end()) { // unmodeled flows are ignored
            last[a.flow] = a.t;
            continue;
        }
        auto it = last.find(a.flow);
        if (it != last.end()) {
            double iat = (a.t - it->second).seconds();
            std::optional<Reason> r;
            if (iat < mit->second.lower_s) r = Reason::below_bound;
            else if (iat > mit->second.upper_s) r = Reason::above_bound;
            if (r) {
                auto cit = cooldown_until.find(a.flow);
                if (cit == cooldown_until.end() || a.t >= cit->second) {
                    alerts.push_back(Alert{a.t, a.flow, Detector::iat, *r});
                    cooldown_until[a.flow] = a.t + cd;
                }
            }
        }
        last[a.flow] = a.t;
    }
    return alerts;
}

// -- DTMC detector -------------------------------------------------------------

struct DtmcParams {
    double p_min = 1e-4;
    double cooldown_s = 1.0;
};

// DTMC state: the message class of a FlowKey, i.e. (function code, direction).
using MsgClass = std::pair<std::uint8_t, modbus::Dir>;
inline MsgClass msg_class_of(const FlowKey& k) { return {k.fc, k.dir}; }

struct DtmcModel {
    // state -> next state -> empirical probability
    std::map<MsgClass, std::map<MsgClass, double>> transitions;
    std::map<MsgClass, std::uint64_t> state_visits;
    // Effective rare-transition threshold, clamped at build time so no
    // training transition falls below it (keeps training replay alert-free).
    double p_min_effective = 1e-4;

    bool row_stochastic(double tol = 1e-9) const {
        for (const auto& [s, row] : transitions) {
            double sum = 0.0;
            for (const auto& [t, p] : row) sum += p;
            if (std::abs(sum - 1.0) > tol) return false;
        }
        return true;
    }
};

inline DtmcModel train_dtmc(const std::vector<Arrival>& trace, const DtmcParams& p = {}) {
    if (trace.empty()) throw std::invalid_argument("train_dtmc: empty trace");
    DtmcModel m;
    std::map<MsgClass, std::map<MsgClass, std::uint64_t>> counts;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        ++counts[msg_class_of(trace[i].flow)][msg_class_of(trace[i + 1].flow)];
        ++m.state_visits[msg_class_of(trace[i].flow)];
    }
    double min_prob = 1.0;
    for (const auto& [s, row] : counts) {
        double total = static_cast<double>(m.state_visits[s]);
        for (const auto& [t, c] : row) {
            double prob = static_cast<double>(c) / total;
            m.transitions[s][t] = prob;
            min_prob = std::min(min_prob, prob);
        }
    }
    m.p_min_effective = std::min(p.p_min, min_prob);
    return m;
}

inline std::vector<Alert> detect_dtmc(const DtmcModel& model, const std::vector<Arrival>& trace,
                                      const DtmcParams& p = {}) {
    std::vector<Alert> alerts;
    std::map<FlowKey, SimTime> cooldown_until;
    const SimTime cd = SimTime::from_seconds(p.cooldown_s);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        const MsgClass from = msg_class_of(trace[i].flow);
        const MsgClass to = msg_class_of(trace[i + 1].flow);
        std::optional<Reason> r;
        auto sit = model.transitions.find(from);
        if (sit == model.transitions.end()) {
            r = Reason::unseen_transition;
        } else {
            auto tit = sit->second.find(to);
            if (tit == sit->second.end()) r = Reason::unseen_transition;
            else if (tit->second < model.p_min_effective) r = Reason::rare_transition;
        }
        if (r) {
            const SimTime t = trace[i + 1].t;
            const FlowKey& alert_flow = trace[i + 1].flow;
            auto cit = cooldown_until.find(alert_flow);
            if (cit == cooldown_until.end() || t >= cit->second) {
                alerts.push_back(Alert{t, alert_flow, Detector::dtmc, *r});
                cooldown_until[alert_flow] = t + cd;
            }
        }
    }
    return alerts;
}

// -- evaluation -----------------------------------------------------------------

struct GroundTruth {
    SimTime start{};
    SimTime end{};
    std::string label;
};

struct EvalReport {
    std::uint64_t attacks_total = 0;
    std::uint64_t attacks_detected = 0;
    std::uint64_t false_alert_count = 0;
    std::vector<double> detection_latency_s; // NaN when undetected
    std::vector<bool> detected;
};

// An attack counts as detected when any alert lands inside its grace-extended
// window; alerts outside every window are false alerts.
inline EvalReport evaluate(const std::vector<Alert>& alerts,
                           std::vector<GroundTruth> windows, double grace_s = 5.0) {
    std::sort(windows.begin(), windows.end(),
              [](const GroundTruth& a, const GroundTruth& b) { return a.start < b.start; });
    for (std::size_t i = 0; i + 1 < windows.size(); ++i)
        if (windows[i].end > windows[i + 1].start)
            throw std::invalid_argument("evaluate: ground-truth windows overlap");

    const SimTime grace = SimTime::from_seconds(grace_s);
    EvalReport r;
    r.attacks_total = windows.size();
    r.detected.assign(windows.size(), false);
    r.detection_latency_s.assign(windows.size(), std::nan(""));

    for (const auto& a : alerts) {
        bool inside = false;
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (a.t >= windows[i].start && a.t <= windows[i].end + grace) {
                inside = true;
                if (!r.detected[i]) {
                    r.detected[i] = true;
                    r.detection_latency_s[i] = (a.t - windows[i].start).seconds();
                }
                break;
            }
        }
        if (!inside) ++r.false_alert_count;
    }
    for (bool d : r.detected)
        if (d) ++r.attacks_detected;
    return r;
}

// Fraction of 1 s bins of [t0, t1] containing at least one alert.
inline double alert_active_fraction(const std::vector<Alert>& alerts, SimTime t0, SimTime t1) {
    if (t1 <= t0) return 0.0;
    std::int64_t bins = (t1 - t0).ns / 1'000'000'000LL + 1;
    std::vector<bool> hit(static_cast<std::size_t>(bins), false);
    for (const auto& a : alerts) {
        if (a.t < t0 || a.t > t1) continue;
        hit[static_cast<std::size_t>((a.t - t0).ns / 1'000'000'000LL)] = true;
    }
    std::int64_t n = 0;
    for (bool b : hit) n += b ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(bins);
}

} // namespace icstb::ids
