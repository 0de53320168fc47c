#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "icstb/channel/link.hpp"
#include "icstb/core/engine.hpp"
#include "icstb/io/records.hpp"
#include "icstb/modbus/modbus.hpp"

namespace icstb::channel {

struct TxMessage {
    std::uint64_t msg_id = 0;
    std::string src;        // claimed source endpoint (spoofable identity)
    std::string dst;
    std::string radio_src;  // physical transmitter (usually == src)
    std::uint32_t wire_size = 0;
    std::string cls;
    std::uint16_t tid = 0;
    modbus::Dir dir = modbus::Dir::request;
    modbus::Bytes payload;
};

struct TransmissionOutcome {
    bool delivered = false;
    double total_delay_s = 0.0;
    int retx_count = 0;
    const char* drop_reason = nullptr; // nullptr | "max_retx" | "suppressed" | "queue_full"
};

// Delivery of one copy at the destination (dup = copy after the first).
using DeliverFn = std::function<void(const TxMessage&, SimTime t_recv, bool dup)>;
// Radio airtime notification for passive observers.
using ActivityFn = std::function<void(const NodeRadio&, SimTime start, SimTime end)>;

class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(const TxMessage& m) = 0;
    virtual const char* kind() const = 0;
};

struct WiredParams {
    double rate_bps = 100e6;       // 100 Mbit/s Ethernet
    SimTime propagation = SimTime::from_us(2);
    std::size_t queue_cap = 100;   // egress packets, drop-tail
};

// Switched Ethernet stand-in: per-source serialization at line rate plus a
// fixed propagation delay. Loss only via egress queue overflow.
class WiredTransport : public Transport {
public:
    WiredTransport(Engine& eng, const WiredParams& p, DeliverFn deliver, io::PacketSink sink)
        : eng_(eng), p_(p), deliver_(std::move(deliver)), sink_(std::move(sink)) {}

    const char* kind() const override { return "wired"; }

    void send(const TxMessage& m) override {
        const SimTime now = eng_.now();
        auto& q = egress_[m.radio_src];
        while (!q.empty() && q.front() <= now) q.pop_front();
        if (q.size() >= p_.queue_cap) {
            emit_drop(m, now, "queue_full");
            return;
        }
        SimTime start = q.empty() ? now : q.back();
        if (start < now) start = now;
        SimTime done = start + serialization_time(m.wire_size);
        q.push_back(done);
        SimTime arrive = done + p_.propagation;
        eng_.schedule(arrive, "wired.deliver", [this, m, now, arrive] {
            io::PacketRecord r;
            r.msg_id = m.msg_id;
            r.t_send = now;
            r.t_recv = arrive;
            r.delivered = true;
            r.src = m.src;
            r.dst = m.dst;
            r.size = m.wire_size;
            r.cls = m.cls;
            r.tid = m.tid;
            if (sink_) sink_(r);
            deliver_(m, arrive, false);
        });
    }

    SimTime serialization_time(std::uint32_t bytes) const {
        double s = static_cast<double>(bytes) * 8.0 / p_.rate_bps;
        return SimTime::from_seconds(s);
    }

private:
    void emit_drop(const TxMessage& m, SimTime now, const char* why) {
        io::PacketRecord r;
        r.msg_id = m.msg_id;
        r.t_send = now;
        r.delivered = false;
        r.src = m.src;
        r.dst = m.dst;
        r.size = m.wire_size;
        r.cls = m.cls;
        r.tid = m.tid;
        r.drop = why;
        if (sink_) sink_(r);
    }

    Engine& eng_;
    WiredParams p_;
    DeliverFn deliver_;
    io::PacketSink sink_;
    std::map<std::string, std::deque<SimTime>> egress_;
};

struct CellularParams {
    SimTime slot = SimTime::from_ns(125'000); // 120 kHz numerology
    int max_attempts = 4;                     // first try + up to 3 retransmissions
    std::size_t queue_cap = 100;              // per-UE egress, drop-tail
    // HARQ feedback decodes at an offset from the data SINR; lost feedback on
    // a delivered attempt causes a duplicate retransmission.
    double feedback_margin_db = -8.0;
    // Beam/link failure recovery: a UE that has seen only fully-failed
    // messages for at least this long (and at least recovery_min_drops of
    // them) backs off before trying again. Short fading blips stay below the
    // window; a sustained outage (jamming) triggers it.
    int recovery_min_drops = 3;
    SimTime recovery_fail_window = SimTime::from_ms(300);
    SimTime recovery_backoff = SimTime::from_ms(1000);
};

struct JammerEntry {
    JamSource src;
    std::vector<std::pair<SimTime, SimTime>> on_intervals;
    std::string name = "jammer";

    bool active_at(SimTime t) const {
        for (const auto& [a, b] : on_intervals)
            if (t >= a && t < b) return true;
        return false;
    }
};

// Shared mmWave uplink: every message rides one radio hop from its sender UE
// to the gNB (the gNB->destination leg is abstracted). One transmission per
// slot network-wide, granted in request order; HARQ retransmits failed
// attempts up to the attempt budget, and a delivered attempt whose feedback
// is lost is retransmitted too, duplicating the delivery.
class CellularTransport : public Transport {
public:
    CellularTransport(Engine& eng, const CellularParams& p, LinkBudget budget,
                      NodeRadio gnb, DeliverFn deliver, io::PacketSink sink)
        : eng_(eng), p_(p), budget_(std::move(budget)), gnb_(std::move(gnb)),
          deliver_(std::move(deliver)), sink_(std::move(sink)) {}

    const char* kind() const override { return "5g"; }

    void register_radio(const NodeRadio& r) { radios_[r.name] = r; }
    const NodeRadio& radio(const std::string& name) const {
        auto it = radios_.find(name);
        if (it == radios_.end())
            throw std::logic_error("cellular: unregistered endpoint radio: " + name);
        return it->second;
    }
    const NodeRadio& gnb() const { return gnb_; }

    LinkBudget& budget() { return budget_; }
    const LinkBudget& budget() const { return budget_; }

    void add_jammer(JammerEntry j) { jammers_.push_back(std::move(j)); }
    void set_activity_hook(ActivityFn f) { activity_ = std::move(f); }

    std::vector<JamSource> active_jammers(SimTime t) const {
        std::vector<JamSource> out;
        for (const auto& j : jammers_)
            if (j.active_at(t)) out.push_back(j.src);
        return out;
    }

    // SINR of an uplink from `name` as of time t (diagnostics and tests).
    double uplink_sinr_db(const std::string& name, SimTime t) const {
        return budget_.sinr_db(radio(name), gnb_, active_jammers(t), t);
    }

    void send(const TxMessage& m) override {
        const NodeRadio& r = radio(m.radio_src); // hard fault if unregistered
        (void)r;
        auto& ue = ues_[m.radio_src];
        const SimTime now = eng_.now();
        if (ue.queue.size() >= p_.queue_cap) {
            emit(m, now, SimTime{}, false, 0, false, NAN, "queue_full");
            return;
        }
        ue.queue.push_back(Pending{m, now, 0, false});
        if (!ue.in_service) begin_service(m.radio_src);
    }

private:
    struct Pending {
        TxMessage m;
        SimTime enqueued;
        int attempt = 0;
        bool delivered_once = false;
    };
    struct UeState {
        std::deque<Pending> queue;
        bool in_service = false;
        int drop_run_count = 0;
        SimTime drop_run_start{0};
        SimTime recovery_until{0};
    };

    void begin_service(const std::string& src) {
        auto& ue = ues_[src];
        if (ue.queue.empty()) { ue.in_service = false; return; }
        ue.in_service = true;
        if (ue.recovery_until > eng_.now()) {
            eng_.schedule(ue.recovery_until, "5g.recovery", [this, src] {
                auto& u = ues_[src];
                if (u.queue.empty()) { u.in_service = false; return; }
                start_head(src);
            });
            return;
        }
        start_head(src);
    }

    void start_head(const std::string& src) {
        double wait_s = eng_.rng().stream("channel.sched").uniform(0.0, p_.slot.seconds());
        SimTime ready = eng_.now() + SimTime::from_seconds(wait_s);
        book_attempt(src, ready);
    }

    void book_attempt(const std::string& src, SimTime ready) {
        eng_.schedule(ready, "5g.grant", [this, src] {
            SimTime slot_start = next_free_ > eng_.now() ? next_free_ : eng_.now();
            next_free_ = slot_start + p_.slot;
            if (activity_) {
                auto& ue = ues_[src];
                if (!ue.queue.empty())
                    activity_(radio(src), slot_start, slot_start + p_.slot);
            }
            eng_.schedule(slot_start + p_.slot, "5g.attempt",
                          [this, src] { resolve_attempt(src); });
        });
    }

    void resolve_attempt(const std::string& src) {
        auto& ue = ues_[src];
        if (ue.queue.empty()) { ue.in_service = false; return; }
        Pending& head = ue.queue.front();
        const SimTime now = eng_.now();

        double sinr = uplink_sinr_db(src, now);
        double p_err = budget_.per(sinr);
        auto& per_stream = eng_.rng().stream("channel.per");
        bool data_ok = !per_stream.bernoulli(p_err);

        if (data_ok) {
            emit(head.m, head.enqueued, now, true, head.attempt, head.delivered_once, sinr, nullptr);
            deliver_(head.m, now, head.delivered_once);
            head.delivered_once = true;
            bool ack_ok = !per_stream.bernoulli(budget_.per(sinr + p_.feedback_margin_db));
            if (ack_ok || head.attempt + 1 >= p_.max_attempts) {
                finish_head(src, true);
                return;
            }
        } else if (head.attempt + 1 >= p_.max_attempts) {
            if (!head.delivered_once)
                emit(head.m, head.enqueued, now, false, head.attempt, false, sinr, "max_retx");
            finish_head(src, head.delivered_once);
            return;
        }
        ++head.attempt;
        book_attempt(src, now);
    }

    void finish_head(const std::string& src, bool delivered) {
        auto& ue = ues_[src];
        ue.queue.pop_front();
        if (delivered) {
            ue.drop_run_count = 0;
        } else {
            if (ue.drop_run_count == 0) ue.drop_run_start = eng_.now();
            ++ue.drop_run_count;
            if (ue.drop_run_count >= p_.recovery_min_drops &&
                eng_.now() - ue.drop_run_start >= p_.recovery_fail_window)
                ue.recovery_until = eng_.now() + p_.recovery_backoff;
        }
        begin_service(src);
    }

    void emit(const TxMessage& m, SimTime t_send, SimTime t_recv, bool delivered,
              int attempt, bool dup, double sinr, const char* drop) {
        io::PacketRecord r;
        r.msg_id = m.msg_id;
        r.t_send = t_send;
        r.t_recv = t_recv;
        r.delivered = delivered;
        r.src = m.src;
        r.dst = m.dst;
        r.size = m.wire_size;
        r.cls = m.cls;
        r.tid = m.tid;
        r.retx = static_cast<std::uint8_t>(attempt);
        r.dup = dup;
        r.sinr_db = sinr;
        r.drop = drop;
        if (sink_) sink_(r);
    }

    Engine& eng_;
    CellularParams p_;
    LinkBudget budget_;
    NodeRadio gnb_;
    DeliverFn deliver_;
    io::PacketSink sink_;
    ActivityFn activity_;
    std::map<std::string, NodeRadio> radios_;
    std::map<std::string, UeState> ues_;
    std::vector<JammerEntry> jammers_;
    SimTime next_free_{0};
};

} // namespace icstb::channel
