#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icstb/channel/channel.hpp"
#include "icstb/core/engine.hpp"
#include "icstb/modbus/modbus.hpp"
#include "icstb/net/devices.hpp"
#include "icstb/net/network.hpp"

namespace icstb::attack {

enum class Kind { dos, mitm, injection, suppression, jam };

inline const char* kind_name(Kind k) {
    switch (k) {
        case Kind::dos: return "dos";
        case Kind::mitm: return "mitm";
        case Kind::injection: return "injection";
        case Kind::suppression: return "suppression";
        case Kind::jam: return "jam";
    }
    return "?";
}

struct AttackSpec {
    Kind kind = Kind::dos;
    std::vector<net::TimeWindow> windows;

    // DoS
    double dos_rate_pps = 2000.0;
    std::string dos_target = net::ep::plc_a;
    std::string dos_identity = net::ep::hmi;
    // MitM
    SimTime mitm_delay = SimTime::from_ms(8);
    // Injection: replay offsets within each window
    std::vector<double> injection_offsets_s{1.0, 2.5, 4.0};
    // Suppression
    std::string suppress_endpoint = net::ep::plc_a;
};

// Default five-variant schedule: starts 200..1000 s, durations 5..80 s.
inline std::vector<net::TimeWindow> default_variant_windows() {
    std::vector<net::TimeWindow> w;
    const double starts[] = {200, 400, 600, 800, 1000};
    const double durations[] = {5, 10, 20, 40, 80};
    for (int i = 0; i < 5; ++i)
        w.push_back({SimTime::from_seconds(starts[i]),
                     SimTime::from_seconds(starts[i] + durations[i])});
    return w;
}

struct GroundTruthWindow {
    Kind kind;
    SimTime start{};
    SimTime end{};
};

// Installs the configured attacks into the network/channel and drives the
// time-scheduled ones. Zero-length windows leave the run trace-identical to
// benign: nothing is scheduled and no shared randomness is consumed.
class Adversary {
public:
    Adversary(Engine& eng, net::Network& net, io::EventSink events)
        : eng_(eng), net_(net), events_(std::move(events)) {}

    const std::vector<GroundTruthWindow>& ground_truth() const { return truth_; }

    void install(const AttackSpec& spec) {
        switch (spec.kind) {
            case Kind::dos: install_dos(spec); break;
            case Kind::mitm: install_mitm(spec); break;
            case Kind::injection: install_injection(spec); break;
            case Kind::suppression: install_suppression(spec); break;
            case Kind::jam: break; // jammers are configured on the channel directly
        }
        for (const auto& w : spec.windows) {
            if (w.end <= w.start) continue;
            truth_.push_back({spec.kind, w.start, w.end});
            schedule_window_events(spec.kind, w);
        }
    }

private:
    void schedule_window_events(Kind k, const net::TimeWindow& w) {
        if (!events_) return;
        const char* name = kind_name(k);
        eng_.schedule(w.start, "attack.window", [this, name, w] {
            events_(io::EventRecord{w.start, "attack_start", std::string("{\"kind\":\"") + name + "\"}"});
        });
        eng_.schedule(w.end, "attack.window", [this, name, w] {
            events_(io::EventRecord{w.end, "attack_end", std::string("{\"kind\":\"") + name + "\"}"});
        });
    }

    // Flood of replayed read requests carrying the HMI's identity, injected
    // from the attacker's position.
    void install_dos(const AttackSpec& spec) {
        capture_read_req(spec.dos_identity, spec.dos_target);
        for (const auto& w : spec.windows) {
            if (w.end <= w.start) continue;
            const std::int64_t gap_ns =
                static_cast<std::int64_t>(1e9 / spec.dos_rate_pps + 0.5);
            eng_.schedule(w.start, "attack.dos", [this, w, gap_ns] { dos_tick(w, gap_ns); });
        }
    }

    void dos_tick(const net::TimeWindow& w, std::int64_t gap_ns) {
        const SimTime now = eng_.now();
        if (now >= w.end) return;
        if (captured_read_) send_replay(*captured_read_);
        SimTime next = now + SimTime::from_ns(gap_ns);
        if (next < w.end)
            eng_.schedule(next, "attack.dos", [this, w, gap_ns] { dos_tick(w, gap_ns); });
    }

    // Rewrites belt stop commands to keep-moving on the PLC_B -> motion
    // controller flow; every intercepted packet pays the relay delay.
    void install_mitm(const AttackSpec& spec) {
        net::MitmRule rule;
        rule.src = net::ep::plc_b;
        rule.dst = net::ep::motion_controller;
        rule.fc = 0x06;
        rule.rewrite_addr = net::reg::motion_cmd;
        rule.rewrite_from = 0;
        rule.rewrite_to = 2;
        rule.processing_delay = spec.mitm_delay;
        for (const auto& w : spec.windows)
            if (w.end > w.start) rule.windows.push_back(w);
        if (!rule.windows.empty()) net_.add_mitm(rule);
    }

    // Replays a captured legitimate open-valve frame byte-identically.
    void install_injection(const AttackSpec& spec) {
        capture_valve_open();
        for (const auto& w : spec.windows) {
            if (w.end <= w.start) continue;
            for (double off : spec.injection_offsets_s) {
                SimTime t = w.start + SimTime::from_seconds(off);
                if (t >= w.end) continue;
                eng_.schedule(t, "attack.inject", [this] {
                    if (!captured_open_) {
                        if (events_)
                            events_(io::EventRecord{eng_.now(), "inject_skipped",
                                                    "{\"reason\":\"no captured frame\"}"});
                        return;
                    }
                    send_replay(*captured_open_);
                });
            }
        }
    }

    void install_suppression(const AttackSpec& spec) {
        net::SuppressionRule rule;
        rule.endpoint = spec.suppress_endpoint;
        for (const auto& w : spec.windows)
            if (w.end > w.start) rule.windows.push_back(w);
        if (!rule.windows.empty()) net_.add_suppression(rule);
    }

    void capture_read_req(const std::string& src, const std::string& dst) {
        if (read_tap_installed_) return;
        read_tap_installed_ = true;
        net_.add_send_tap([this, src, dst](const channel::TxMessage& m) {
            if (captured_read_) return;
            if (m.src == src && m.dst == dst && m.dir == modbus::Dir::request &&
                m.cls == "fc03_req")
                captured_read_ = m;
        });
    }

    void capture_valve_open() {
        if (open_tap_installed_) return;
        open_tap_installed_ = true;
        net_.add_send_tap([this](const channel::TxMessage& m) {
            if (captured_open_) return;
            if (m.src == net::ep::plc_a && m.dst == net::ep::output_valve &&
                m.dir == modbus::Dir::request && m.cls == "fc05_req") {
                auto dec = modbus::decode(m.payload, m.dir);
                if (dec.status != modbus::DecodeStatus::ok) return;
                const auto* w = std::get_if<modbus::WriteSingleCoilReq>(&dec.frame.pdu);
                if (w && w->on) captured_open_ = m;
            }
        });
    }

    void send_replay(channel::TxMessage m) {
        m.radio_src = net::ep::attacker;
        net_.send_raw(std::move(m));
    }

    Engine& eng_;
    net::Network& net_;
    io::EventSink events_;
    std::vector<GroundTruthWindow> truth_;
    std::optional<channel::TxMessage> captured_read_;
    std::optional<channel::TxMessage> captured_open_;
    bool read_tap_installed_ = false;
    bool open_tap_installed_ = false;
};

// Duty-cycled jammer schedule within a window.
struct JamScenario {
    bool enabled = false;
    double tx_power_dbm = 30.0;
    bool directed = false;
    channel::Position position{51.0, 10.0, 2.0}; // just outside the hall
    double duty_on_s = 5.5;
    double duty_off_s = 4.5;
    double start_s = 0.0;
    double end_s = -1.0; // -1: run end
};

inline channel::JammerEntry build_jammer(const JamScenario& j, double run_duration_s) {
    channel::JammerEntry e;
    e.src.pos = j.position;
    e.src.tx_power_dbm = j.tx_power_dbm;
    e.src.directed = j.directed;
    double end = j.end_s < 0 ? run_duration_s : j.end_s;
    double t = j.start_s;
    while (t < end) {
        double on_end = std::min(t + j.duty_on_s, end);
        e.on_intervals.push_back({SimTime::from_seconds(t), SimTime::from_seconds(on_end)});
        t += j.duty_on_s + j.duty_off_s;
    }
    return e;
}

} // namespace icstb::attack
