#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "icstb/channel/channel.hpp"
#include "icstb/core/engine.hpp"
#include "icstb/io/records.hpp"
#include "icstb/modbus/flow.hpp"
#include "icstb/modbus/modbus.hpp"

namespace icstb::net {

using channel::TxMessage;

// L2/IP/TCP framing overhead added to the Modbus ADU for wire sizing.
inline constexpr std::uint32_t kFrameOverheadBytes = 54;

struct TimeWindow {
    SimTime start{};
    SimTime end{};
    bool contains(SimTime t) const { return t >= start && t < end; }
};

// Interface block: all traffic from AND to the endpoint is dropped while a
// window is active.
struct SuppressionRule {
    std::string endpoint;
    std::vector<TimeWindow> windows;
    bool active_at(SimTime t) const {
        for (const auto& w : windows)
            if (w.contains(t)) return true;
        return false;
    }
};

// On-path interception of one request flow: every packet of the flow takes the
// relay's processing delay; matching stop commands are rewritten in flight.
struct MitmRule {
    std::string src;
    std::string dst;
    std::uint8_t fc = 0x06;
    std::uint16_t rewrite_addr = 0;
    std::uint16_t rewrite_from = 0; // stop
    std::uint16_t rewrite_to = 2;   // keep moving
    SimTime processing_delay = SimTime::from_ms(8);
    std::vector<TimeWindow> windows;
    std::uint64_t rewrites = 0;
    std::uint64_t forwarded = 0;

    bool matches_flow(const TxMessage& m) const {
        return m.src == src && m.dst == dst && m.dir == modbus::Dir::request;
    }
    bool active_at(SimTime t) const {
        for (const auto& w : windows)
            if (w.contains(t)) return true;
        return false;
    }
};

class DeviceEndpoint {
public:
    virtual ~DeviceEndpoint() = default;
    virtual const std::string& endpoint_name() const = 0;
    virtual void deliver(const TxMessage& m, SimTime t, bool dup) = 0;
};

// Message routing between devices over the configured transport, with the
// insider's on-path capabilities (suppression, MitM) applied at the edges.
class Network {
public:
    Network(Engine& eng, io::PacketSink sink) : eng_(eng), sink_(std::move(sink)) {}

    void set_transport(std::unique_ptr<channel::Transport> t) { transport_ = std::move(t); }
    channel::Transport* transport() { return transport_.get(); }

    void attach(DeviceEndpoint* d) { devices_[d->endpoint_name()] = d; }

    void add_suppression(SuppressionRule r) { suppression_.push_back(std::move(r)); }
    void add_mitm(MitmRule r) { mitm_.push_back(std::move(r)); }
    std::vector<MitmRule>& mitm_rules() { return mitm_; }

    using TapFn = std::function<void(const TxMessage&)>;
    void add_send_tap(TapFn f) { taps_.push_back(std::move(f)); }

    std::uint16_t next_tid(const std::string& src) {
        return tid_counters_[src]++; // wraps mod 2^16 by type
    }

    struct SendArgs {
        std::string src;       // claimed identity
        std::string dst;
        std::string radio_src; // physical sender, defaults to src
        std::uint8_t unit_id = 1;
        std::uint16_t tid = 0;
        modbus::Pdu pdu;
    };

    void send(SendArgs a) {
        TxMessage m;
        m.src = a.src;
        m.dst = a.dst;
        m.radio_src = a.radio_src.empty() ? a.src : a.radio_src;
        m.tid = a.tid;
        m.dir = modbus::pdu_dir(a.pdu);
        modbus::MbapFrame f;
        f.transaction_id = a.tid;
        f.unit_id = a.unit_id;
        f.pdu = std::move(a.pdu);
        m.payload = modbus::encode(f);
        m.wire_size = kFrameOverheadBytes + static_cast<std::uint32_t>(m.payload.size());
        m.cls = modbus::msg_class(static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), m.dir);
        send_raw(std::move(m));
    }

    // Pre-encoded path used for byte-identical replays.
    void send_raw(TxMessage m) {
        m.msg_id = next_msg_id_++;
        const SimTime now = eng_.now();
        for (auto& tap : taps_) tap(m);

        if (is_suppressed(m.radio_src, now) || is_suppressed(m.dst, now)) {
            emit_suppressed(m, now);
            return;
        }

        for (auto& rule : mitm_) {
            if (rule.matches_flow(m) && rule.active_at(now)) {
                TxMessage relayed = m;
                maybe_rewrite(rule, relayed);
                ++rule.forwarded;
                eng_.schedule(now + rule.processing_delay, "mitm.relay",
                              [this, relayed] { transport_->send(relayed); });
                return;
            }
        }
        transport_->send(m);
    }

    // Transport delivery callback: hand the frame to the destination device.
    void on_delivered(const TxMessage& m, SimTime t, bool dup) {
        auto it = devices_.find(m.dst);
        if (it != devices_.end()) it->second->deliver(m, t, dup);
    }

    bool is_suppressed(const std::string& endpoint, SimTime t) const {
        for (const auto& r : suppression_)
            if (r.endpoint == endpoint && r.active_at(t)) return true;
        return false;
    }

private:
    void maybe_rewrite(MitmRule& rule, TxMessage& m) {
        auto dec = modbus::decode(m.payload, m.dir);
        if (dec.status != modbus::DecodeStatus::ok) return;
        auto* w = std::get_if<modbus::WriteSingleRegisterReq>(&dec.frame.pdu);
        if (!w || static_cast<std::uint8_t>(modbus::pdu_fc(dec.frame.pdu)) != rule.fc) return;
        if (w->addr != rule.rewrite_addr || w->value != rule.rewrite_from) return;
        w->value = rule.rewrite_to;
        m.payload = modbus::encode(dec.frame);
        ++rule.rewrites;
    }

    void emit_suppressed(const TxMessage& m, SimTime now) {
        io::PacketRecord r;
        r.msg_id = m.msg_id;
        r.t_send = now;
        r.delivered = false;
        r.src = m.src;
        r.dst = m.dst;
        r.size = m.wire_size;
        r.cls = m.cls;
        r.tid = m.tid;
        r.drop = "suppressed";
        if (sink_) sink_(r);
    }

    Engine& eng_;
    io::PacketSink sink_;
    std::unique_ptr<channel::Transport> transport_;
    std::map<std::string, DeviceEndpoint*> devices_;
    std::vector<SuppressionRule> suppression_;
    std::vector<MitmRule> mitm_;
    std::vector<TapFn> taps_;
    std::map<std::string, std::uint16_t> tid_counters_;
    std::uint64_t next_msg_id_ = 1;
};

} // namespace icstb::net
