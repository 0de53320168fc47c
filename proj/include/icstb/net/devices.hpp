#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "icstb/core/engine.hpp"
#include "icstb/io/records.hpp"
#include "icstb/modbus/flow.hpp"
#include "icstb/net/network.hpp"
#include "icstb/plant/plant.hpp"

namespace icstb::net {

// Endpoint names used in flow keys, traces and configs.
namespace ep {
inline constexpr const char* plc_a = "plc_a";
inline constexpr const char* plc_b = "plc_b";
inline constexpr const char* hmi = "hmi";
inline constexpr const char* tank_level = "tank_level";
inline constexpr const char* bottle_level = "bottle_level";
inline constexpr const char* bottle_present = "bottle_present";
inline constexpr const char* leak = "leak";
inline constexpr const char* input_valve = "input_valve";
inline constexpr const char* output_valve = "output_valve";
inline constexpr const char* motion_controller = "motion_controller";
inline constexpr const char* attacker = "attacker";
} // namespace ep

// Default register map (documented in the README).
namespace reg {
// PLC_A holding registers
inline constexpr std::uint16_t a_tank_mm = 0;
inline constexpr std::uint16_t a_bottle_fill = 1; // 1e-4 m3 units
inline constexpr std::uint16_t a_present = 2;
inline constexpr std::uint16_t a_leak = 3;
inline constexpr std::uint16_t a_halted = 4;
inline constexpr std::uint16_t operator_halt = 10;
// PLC_B holding registers
inline constexpr std::uint16_t b_present = 0;
inline constexpr std::uint16_t b_fill_complete = 1;
inline constexpr std::uint16_t b_belt_cmd = 2;
inline constexpr std::uint16_t b_halted = 4;
inline constexpr std::uint16_t speed_phase = 11; // 1 = half, 2 = normal
// Actuators
inline constexpr std::uint16_t valve_coil = 0;
inline constexpr std::uint16_t motion_cmd = 0; // 0 stop, 1 half, 2 normal
} // namespace reg

inline std::uint16_t scale_tank_mm(double h_m) {
    double v = std::round(h_m * 1000.0);
    return static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
}
inline std::uint16_t scale_fill_units(double m3) {
    double v = std::round(m3 * 10000.0);
    return static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
}

struct DeviceTimings {
    SimTime control_period = SimTime::from_ms(40);
    SimTime publish_period = SimTime::from_ms(40);
    SimTime hmi_poll_period = SimTime::from_ms(100);
    SimTime hmi_timeout = SimTime::from_ms(200); // 2x poll period
    SimTime t_safe = SimTime::from_ms(500);
    SimTime plc_proc = SimTime::from_us(400);
    SimTime sensor_proc = SimTime::from_us(50);
    SimTime actuator_proc = SimTime::from_us(50);
    SimTime hmi_proc = SimTime::from_us(200);
    SimTime plc_phase = SimTime::from_ms(20);
    SimTime plc_b_phase = SimTime::from_ms(32);
    SimTime hmi_phase = SimTime::from_ms(10);
    SimTime sensor_stagger = SimTime::from_ms(8);
    double target_fill_m3 = 0.25;
    double tank_low_m = 3.0;
    double tank_high_m = 7.0;
    // Device-side watchdogs: an actuator that stops hearing from its PLC
    // reverts to the safe state. The conveyor watchdog is tight (moving
    // machinery); the stay-put valves tolerate longer silence.
    SimTime motion_failsafe = SimTime::from_ms(1000);
    SimTime valve_failsafe = SimTime::from_ms(4000);
};

// Single-server message processing: one frame at a time, fixed service time.
// Congestion (e.g. a request flood) shows up as inbox backlog and stale data.
class DeviceBase : public DeviceEndpoint {
public:
    DeviceBase(Engine& eng, Network& net, std::string name, SimTime t_proc,
               io::EventSink events)
        : eng_(eng), net_(net), name_(std::move(name)), t_proc_(t_proc),
          events_(std::move(events)) {}

    const std::string& endpoint_name() const override { return name_; }

    virtual void start() {}

    void deliver(const TxMessage& m, SimTime, bool) override {
        inbox_.push_back(m);
        if (!processing_) {
            processing_ = true;
            schedule_next();
        }
    }

    std::size_t inbox_backlog() const { return inbox_.size(); }
    std::uint64_t orphan_count() const { return reqlog_.orphan_count(); }

protected:
    virtual void handle_request(const modbus::MbapFrame& f, const TxMessage& m) = 0;
    virtual void handle_response(const modbus::MbapFrame& f, const TxMessage& m) {
        (void)f;
        reqlog_.match_response(f.transaction_id, f.unit_id,
                               static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)));
        (void)m;
    }

    void schedule_next() {
        if (inbox_.empty()) {
            processing_ = false;
            return;
        }
        TxMessage m = std::move(inbox_.front());
        inbox_.pop_front();
        eng_.schedule_in(t_proc_, name_ + ".proc", [this, m = std::move(m)] {
            auto dec = modbus::decode(m.payload, m.dir);
            if (dec.status == modbus::DecodeStatus::ok) {
                if (m.dir == modbus::Dir::request) handle_request(dec.frame, m);
                else handle_response(dec.frame, m);
            }
            schedule_next();
        });
    }

    std::uint16_t send_request(const std::string& dst, modbus::Pdu pdu) {
        std::uint16_t tid = net_.next_tid(name_);
        reqlog_.record_request(tid, 1, static_cast<std::uint8_t>(modbus::pdu_fc(pdu)), dst,
                               eng_.now());
        net_.send({name_, dst, name_, 1, tid, std::move(pdu)});
        return tid;
    }

    void send_response(const TxMessage& req, modbus::Pdu pdu) {
        net_.send({name_, req.src, name_, 1, req.tid, std::move(pdu)});
    }

    void log_event(const std::string& kind, std::string detail = {}) {
        if (events_) events_(io::EventRecord{eng_.now(), kind, std::move(detail)});
    }

    Engine& eng_;
    Network& net_;
    std::string name_;
    SimTime t_proc_;
    io::EventSink events_;
    std::deque<TxMessage> inbox_;
    bool processing_ = false;
    modbus::RequestLog reqlog_;
};

// -- sensors ---------------------------------------------------------------

struct SensorTarget {
    std::string plc;
    std::uint16_t reg_addr = 0;
};

class SensorDevice : public DeviceBase {
public:
    SensorDevice(Engine& eng, Network& net, plant::Plant& plant, plant::SensorId sid,
                 std::vector<SensorTarget> targets, const DeviceTimings& t,
                 SimTime publish_phase, io::EventSink events)
        : DeviceBase(eng, net, plant::sensor_name(sid), t.sensor_proc, std::move(events)),
          plant_(plant), sid_(sid), targets_(std::move(targets)), timings_(t),
          phase_(publish_phase) {}

    void start() override {
        std::uint64_t gen = gen_;
        eng_.schedule(phase_, name_ + ".publish", [this, gen] { publish(gen); });
    }

    void publish(std::uint64_t gen) {
        if (gen != gen_) return; // superseded by an edge push
        send_reading();
        eng_.schedule_in(timings_.publish_period, name_ + ".publish",
                         [this, gen] { publish(gen); });
    }

    // Invoked by the plant driver on boolean edges. The push restarts the
    // periodic cadence so consecutive publishes are never closer than a tick.
    void push_now() {
        send_reading();
        std::uint64_t gen = ++gen_;
        eng_.schedule_in(timings_.publish_period, name_ + ".publish",
                         [this, gen] { publish(gen); });
    }

    void send_reading() {
        for (const auto& tgt : targets_) {
            auto r = plant_.read_sensor(sid_, eng_.now());
            std::uint16_t value = 0;
            switch (sid_) {
                case plant::SensorId::tank_level: value = scale_tank_mm(r.value); break;
                case plant::SensorId::bottle_level: value = scale_fill_units(r.value); break;
                case plant::SensorId::bottle_present:
                case plant::SensorId::leak: value = r.value != 0.0 ? 1 : 0; break;
                case plant::SensorId::belt_encoder:
                    value = static_cast<std::uint16_t>(std::round(std::max(r.value, 0.0) * 1000.0));
                    break;
            }
            send_request(tgt.plc, modbus::WriteSingleRegisterReq{tgt.reg_addr, value});
        }
    }

protected:
    void handle_request(const modbus::MbapFrame& f, const TxMessage& m) override {
        send_response(m, modbus::ExceptionResp{static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), 1});
    }

private:
    plant::Plant& plant_;
    plant::SensorId sid_;
    std::vector<SensorTarget> targets_;
    DeviceTimings timings_;
    SimTime phase_{};
    std::uint64_t gen_ = 0;
};

// -- actuators ---------------------------------------------------------------

class ValveActuator : public DeviceBase {
public:
    enum class Which { input, output };

    ValveActuator(Engine& eng, Network& net, plant::Plant& plant, Which which,
                  const DeviceTimings& t, io::EventSink events)
        : DeviceBase(eng, net,
                     which == Which::input ? ep::input_valve : ep::output_valve,
                     t.actuator_proc, std::move(events)),
          plant_(plant), which_(which), failsafe_after_(t.valve_failsafe) {}

    void start() override {
        eng_.schedule_in(failsafe_after_, name_ + ".watchdog", [this] { watchdog(); });
    }

protected:
    void handle_request(const modbus::MbapFrame& f, const TxMessage& m) override {
        if (const auto* w = std::get_if<modbus::WriteSingleCoilReq>(&f.pdu)) {
            last_cmd_rx_ = eng_.now();
            auto res = which_ == Which::input ? plant_.set_input_valve(w->on)
                                              : plant_.set_output_valve(w->on);
            if (res.changed)
                log_event("valve", std::string("{\"endpoint\":\"") + name_ + "\",\"open\":" +
                                       (w->on ? "true" : "false") + "}");
            send_response(m, modbus::WriteSingleCoilResp{w->addr, w->on});
            return;
        }
        send_response(m, modbus::ExceptionResp{static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), 1});
    }

private:
    void watchdog() {
        if (eng_.now() - last_cmd_rx_ > failsafe_after_) {
            bool was_open = which_ == Which::input ? plant_.input_valve_open()
                                                   : plant_.output_valve_open();
            if (was_open) {
                if (which_ == Which::input) plant_.set_input_valve(false);
                else plant_.set_output_valve(false);
                log_event("failsafe", std::string("{\"endpoint\":\"") + name_ + "\"}");
            }
        }
        eng_.schedule_in(SimTime::from_ms(100), name_ + ".watchdog", [this] { watchdog(); });
    }

    plant::Plant& plant_;
    Which which_;
    SimTime failsafe_after_;
    SimTime last_cmd_rx_{0};
};

class MotionActuator : public DeviceBase {
public:
    MotionActuator(Engine& eng, Network& net, plant::Plant& plant, const DeviceTimings& t,
                   io::EventSink events)
        : DeviceBase(eng, net, ep::motion_controller, t.actuator_proc, std::move(events)),
          plant_(plant), failsafe_after_(t.motion_failsafe) {}

    void start() override {
        eng_.schedule_in(failsafe_after_, name_ + ".watchdog", [this] { watchdog(); });
    }

protected:
    void handle_request(const modbus::MbapFrame& f, const TxMessage& m) override {
        if (const auto* w = std::get_if<modbus::WriteSingleRegisterReq>(&f.pdu)) {
            last_cmd_rx_ = eng_.now();
            plant::BeltMode before = plant_.belt_mode();
            auto res = plant_.set_belt_code(w->value);
            if (!res.accepted) {
                log_event("belt_cmd_rejected", "{\"value\":" + std::to_string(w->value) + "}");
                send_response(m, modbus::ExceptionResp{0x06, 3});
                return;
            }
            if (res.changed)
                log_event("belt_mode", std::string("{\"mode\":\"") +
                                           plant::belt_mode_name(plant_.belt_mode()) +
                                           "\",\"was\":\"" + plant::belt_mode_name(before) + "\"}");
            send_response(m, modbus::WriteSingleRegisterResp{w->addr, w->value});
            return;
        }
        send_response(m, modbus::ExceptionResp{static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), 1});
    }

private:
    void watchdog() {
        if (eng_.now() - last_cmd_rx_ > failsafe_after_ &&
            plant_.belt_mode() != plant::BeltMode::stopped) {
            plant_.set_belt(plant::BeltMode::stopped);
            log_event("failsafe", "{\"endpoint\":\"motion_controller\"}");
        }
        eng_.schedule_in(SimTime::from_ms(100), name_ + ".watchdog", [this] { watchdog(); });
    }

    plant::Plant& plant_;
    SimTime failsafe_after_;
    SimTime last_cmd_rx_{0};
};

// -- PLC control laws (pure, unit-testable) ----------------------------------

struct PlcADecision {
    bool output_open = false;
    bool input_open = false;
    bool fill_complete = false;
};

class PlcALogic {
public:
    PlcALogic(double target_fill_m3, double low_m, double high_m)
        : target_(target_fill_m3), low_(low_m), high_(high_m) {}

    PlcADecision decide(double tank_m, bool present, double fill_m3, bool halted) {
        if (tank_m < low_) input_latch_ = true;
        else if (tank_m >= high_) input_latch_ = false;
        if (present && fill_m3 >= target_) fill_complete_ = true;
        if (!present) fill_complete_ = false;
        PlcADecision d;
        d.fill_complete = fill_complete_;
        if (!halted) {
            d.output_open = present && !fill_complete_;
            d.input_open = input_latch_;
        }
        return d;
    }

    bool input_latch() const { return input_latch_; }

private:
    double target_, low_, high_;
    bool input_latch_ = false;
    bool fill_complete_ = false;
};

// Belt command for the current state; halts dominate, a bottle being filled
// holds the belt, otherwise run at the operator's phase speed.
inline std::uint16_t plc_b_belt_command(bool present, bool fill_complete, bool halted,
                                        std::uint16_t speed_phase) {
    if (halted) return 0;
    if (present && !fill_complete) return 0;
    return speed_phase == 1 ? 1 : 2;
}

// -- PLCs --------------------------------------------------------------------

class PlcA : public DeviceBase {
public:
    PlcA(Engine& eng, Network& net, const DeviceTimings& t, io::EventSink events)
        : DeviceBase(eng, net, ep::plc_a, t.plc_proc, std::move(events)), timings_(t),
          logic_(t.target_fill_m3, t.tank_low_m, t.tank_high_m) {}

    void start() override {
        eng_.schedule(timings_.plc_phase, name_ + ".cycle", [this] { cycle(); });
    }

    bool safety_halted() const { return safety_halted_; }
    std::uint64_t safety_halt_count() const { return safety_halt_count_; }
    std::uint64_t valve_cmds_issued() const { return valve_cmds_issued_; }
    SimTime last_sensor_rx() const { return last_sensor_rx_; }
    std::uint16_t reg(std::uint16_t addr) const {
        auto it = regs_.find(addr);
        return it == regs_.end() ? 0 : it->second;
    }

    void cycle() {
        const SimTime now = eng_.now();
        bool stale = (now - last_sensor_rx_) > timings_.t_safe;
        if (stale && !safety_halted_) {
            safety_halted_ = true;
            ++safety_halt_count_;
            log_event("safety_halt", "{\"endpoint\":\"plc_a\",\"on\":true}");
        } else if (!stale && safety_halted_) {
            safety_halted_ = false;
            log_event("safety_halt", "{\"endpoint\":\"plc_a\",\"on\":false}");
        }
        bool halted = safety_halted_ || regs_[reg::operator_halt] != 0;
        regs_[reg::a_halted] = halted ? 1 : 0;

        auto d = logic_.decide(regs_[reg::a_tank_mm] / 1000.0, regs_[reg::a_present] != 0,
                               regs_[reg::a_bottle_fill] / 10000.0, halted);

        send_request(ep::output_valve, modbus::WriteSingleCoilReq{reg::valve_coil, d.output_open});
        send_request(ep::input_valve, modbus::WriteSingleCoilReq{reg::valve_coil, d.input_open});
        send_request(ep::plc_b, modbus::WriteSingleRegisterReq{reg::b_fill_complete,
                                                               d.fill_complete ? std::uint16_t{1}
                                                                               : std::uint16_t{0}});
        valve_cmds_issued_ += 2;
        eng_.schedule_in(timings_.control_period, name_ + ".cycle", [this] { cycle(); });
    }

protected:
    void handle_request(const modbus::MbapFrame& f, const TxMessage& m) override {
        if (const auto* w = std::get_if<modbus::WriteSingleRegisterReq>(&f.pdu)) {
            regs_[w->addr] = w->value;
            if (w->addr <= reg::a_leak) last_sensor_rx_ = eng_.now();
            send_response(m, modbus::WriteSingleRegisterResp{w->addr, w->value});
            return;
        }
        if (const auto* r = std::get_if<modbus::ReadHoldingRegistersReq>(&f.pdu)) {
            modbus::ReadHoldingRegistersResp resp;
            for (std::uint16_t i = 0; i < r->count; ++i) resp.values.push_back(reg(r->addr + i));
            send_response(m, resp);
            return;
        }
        send_response(m, modbus::ExceptionResp{static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), 1});
    }

private:
    DeviceTimings timings_;
    PlcALogic logic_;
    std::map<std::uint16_t, std::uint16_t> regs_;
    SimTime last_sensor_rx_{0};
    bool safety_halted_ = false;
    std::uint64_t safety_halt_count_ = 0;
    std::uint64_t valve_cmds_issued_ = 0;
};

class PlcB : public DeviceBase {
public:
    PlcB(Engine& eng, Network& net, const DeviceTimings& t, io::EventSink events)
        : DeviceBase(eng, net, ep::plc_b, t.plc_proc, std::move(events)), timings_(t) {
        regs_[reg::speed_phase] = 2;
    }

    void start() override {
        eng_.schedule(timings_.plc_b_phase, name_ + ".cycle", [this] { cycle(); });
    }

    bool safety_halted() const { return safety_halted_; }
    std::uint64_t safety_halt_count() const { return safety_halt_count_; }
    std::uint64_t stop_commands() const { return stop_transitions_; }
    std::uint16_t reg(std::uint16_t addr) const {
        auto it = regs_.find(addr);
        return it == regs_.end() ? 0 : it->second;
    }

    void cycle() {
        const SimTime now = eng_.now();
        bool stale = (now - last_sensor_rx_) > timings_.t_safe;
        if (stale && !safety_halted_) {
            safety_halted_ = true;
            ++safety_halt_count_;
            log_event("safety_halt", "{\"endpoint\":\"plc_b\",\"on\":true}");
        } else if (!stale && safety_halted_) {
            safety_halted_ = false;
            log_event("safety_halt", "{\"endpoint\":\"plc_b\",\"on\":false}");
        }
        bool halted = safety_halted_ || regs_[reg::operator_halt] != 0;
        regs_[reg::b_halted] = halted ? 1 : 0;

        std::uint16_t cmd = plc_b_belt_command(regs_[reg::b_present] != 0,
                                               regs_[reg::b_fill_complete] != 0, halted,
                                               regs_[reg::speed_phase]);
        if (cmd == 0 && regs_[reg::b_belt_cmd] != 0) ++stop_transitions_;
        regs_[reg::b_belt_cmd] = cmd;
        send_request(ep::motion_controller, modbus::WriteSingleRegisterReq{reg::motion_cmd, cmd});
        eng_.schedule_in(timings_.control_period, name_ + ".cycle", [this] { cycle(); });
    }

protected:
    void handle_request(const modbus::MbapFrame& f, const TxMessage& m) override {
        if (const auto* w = std::get_if<modbus::WriteSingleRegisterReq>(&f.pdu)) {
            regs_[w->addr] = w->value;
            if (w->addr == reg::b_present) last_sensor_rx_ = eng_.now();
            send_response(m, modbus::WriteSingleRegisterResp{w->addr, w->value});
            return;
        }
        if (const auto* r = std::get_if<modbus::ReadHoldingRegistersReq>(&f.pdu)) {
            modbus::ReadHoldingRegistersResp resp;
            for (std::uint16_t i = 0; i < r->count; ++i) resp.values.push_back(reg(r->addr + i));
            send_response(m, resp);
            return;
        }
        send_response(m, modbus::ExceptionResp{static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), 1});
    }

private:
    DeviceTimings timings_;
    std::map<std::uint16_t, std::uint16_t> regs_;
    SimTime last_sensor_rx_{0};
    bool safety_halted_ = false;
    std::uint64_t safety_halt_count_ = 0;
    std::uint64_t stop_transitions_ = 0;
};

// -- HMI ----------------------------------------------------------------------

struct OperatorCmd {
    SimTime t{};
    enum class Kind { halt, resume_half, normal_speed } kind = Kind::halt;
};

class Hmi : public DeviceBase {
public:
    Hmi(Engine& eng, Network& net, const DeviceTimings& t, std::vector<OperatorCmd> script,
        io::EventSink events)
        : DeviceBase(eng, net, ep::hmi, t.hmi_proc, std::move(events)), timings_(t),
          script_(std::move(script)) {}

    void start() override {
        // The two PLCs are polled on the same period but half a period apart.
        eng_.schedule(timings_.hmi_phase, name_ + ".poll_a", [this] { poll_loop(ep::plc_a); });
        eng_.schedule(timings_.hmi_phase + SimTime{timings_.hmi_poll_period.ns / 2},
                      name_ + ".poll_b", [this] { poll_loop(ep::plc_b); });
        for (const auto& cmd : script_)
            eng_.schedule(cmd.t, name_ + ".operator", [this, cmd] { run_operator_cmd(cmd); });
    }

    std::uint64_t timeout_count() const { return timeouts_; }
    const std::vector<std::pair<SimTime, std::string>>& timeout_log() const { return timeout_log_; }

    void poll_loop(const std::string& plc) {
        poll_one(plc, false);
        eng_.schedule_in(timings_.hmi_poll_period, name_ + ".poll_" + plc,
                         [this, plc] { poll_loop(plc); });
    }

protected:
    void handle_request(const modbus::MbapFrame& f, const TxMessage& m) override {
        send_response(m, modbus::ExceptionResp{static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)), 1});
    }

    void handle_response(const modbus::MbapFrame& f, const TxMessage& m) override {
        auto res = reqlog_.match_response(f.transaction_id, f.unit_id,
                                          static_cast<std::uint8_t>(modbus::pdu_fc(f.pdu)));
        if (res.matched) pending_.erase(f.transaction_id);
        (void)m;
    }

private:
    void poll_one(const std::string& plc, bool is_retry) {
        std::uint16_t tid = send_request(plc, modbus::ReadHoldingRegistersReq{0, 5});
        pending_[tid] = plc;
        eng_.schedule_in(timings_.hmi_timeout, name_ + ".deadline", [this, tid, plc, is_retry] {
            auto it = pending_.find(tid);
            if (it != pending_.end()) {
                ++timeouts_;
                timeout_log_.emplace_back(eng_.now(), plc);
                log_event("hmi_timeout", "{\"plc\":\"" + plc + "\"}");
                pending_.erase(it);
                // one immediate re-read per missed poll
                if (!is_retry) poll_one(plc, true);
            }
        });
    }

    void run_operator_cmd(const OperatorCmd& cmd) {
        using K = OperatorCmd::Kind;
        switch (cmd.kind) {
            case K::halt:
                send_request(ep::plc_a, modbus::WriteSingleRegisterReq{reg::operator_halt, 1});
                send_request(ep::plc_b, modbus::WriteSingleRegisterReq{reg::operator_halt, 1});
                log_event("operator_cmd", "{\"cmd\":\"halt\"}");
                break;
            case K::resume_half:
                send_request(ep::plc_b, modbus::WriteSingleRegisterReq{reg::speed_phase, 1});
                send_request(ep::plc_a, modbus::WriteSingleRegisterReq{reg::operator_halt, 0});
                send_request(ep::plc_b, modbus::WriteSingleRegisterReq{reg::operator_halt, 0});
                log_event("operator_cmd", "{\"cmd\":\"resume_half\"}");
                break;
            case K::normal_speed:
                send_request(ep::plc_b, modbus::WriteSingleRegisterReq{reg::speed_phase, 2});
                log_event("operator_cmd", "{\"cmd\":\"normal_speed\"}");
                break;
        }
    }

    DeviceTimings timings_;
    std::vector<OperatorCmd> script_;
    std::map<std::uint16_t, std::string> pending_;
    std::uint64_t timeouts_ = 0;
    std::vector<std::pair<SimTime, std::string>> timeout_log_;
};

// -- plant driver --------------------------------------------------------------

// Ticks the plant, pushes boolean sensor edges, emits the decimated plant
// timeline and spill/bottle events.
class PlantDriver {
public:
    PlantDriver(Engine& eng, plant::Plant& plant, io::EventSink events,
                io::LineFile* plant_csv, SimTime run_end)
        : eng_(eng), plant_(plant), events_(std::move(events)), csv_(plant_csv),
          run_end_(run_end) {
        tick_ = SimTime::from_seconds(plant.config().tick_s);
    }

    void set_edge_sensors(SensorDevice* present, SensorDevice* leak) {
        present_sensor_ = present;
        leak_sensor_ = leak;
    }

    void start() {
        if (csv_) csv_->write("t_s,tank_h_m,belt_speed_mps,spill_total_m3\n");
        eng_.schedule(SimTime{0}, "plant.tick", [this] { tick(); });
    }

    void tick() {
        const SimTime now = eng_.now();
        if (now.ns % 100'000'000 == 0 && csv_) write_csv_row(now);

        bool present_before = plant_.bottle_under_valve() != nullptr;
        bool leak_before = plant_.spill_flow() > 0.0;
        std::uint64_t removed_before = plant_.bottles_removed();

        plant_.step(now);
        if (std::abs(plant_.mass_balance_error()) > 1e-9)
            throw std::logic_error("plant mass-conservation violated at t=" +
                                   std::to_string(now.seconds()));

        bool present_now = plant_.bottle_under_valve() != nullptr;
        bool leak_now = plant_.spill_flow() > 0.0;
        if (present_now != present_before && present_sensor_) present_sensor_->push_now();
        if (leak_now != leak_before) {
            if (leak_sensor_) leak_sensor_->push_now();
            if (events_)
                events_(io::EventRecord{now, leak_now ? "spill_start" : "spill_end", {}});
        }
        if (plant_.bottles_removed() != removed_before) {
            exit_times_.push_back(now);
            if (events_) events_(io::EventRecord{now, "bottle_exit", {}});
        }

        SimTime next = now + tick_;
        if (next <= run_end_)
            eng_.schedule(next, "plant.tick", [this] { tick(); });
    }

    const std::vector<SimTime>& exit_times() const { return exit_times_; }

private:
    void write_csv_row(SimTime now) {
        std::string line;
        io::jsonfmt::append_double(line, now.seconds());
        line += ',';
        io::jsonfmt::append_double(line, plant_.tank_level());
        line += ',';
        io::jsonfmt::append_double(line, plant_.belt_speed());
        line += ',';
        io::jsonfmt::append_double(line, plant_.spilled_total());
        line += '\n';
        csv_->write(line);
    }

    Engine& eng_;
    plant::Plant& plant_;
    io::EventSink events_;
    io::LineFile* csv_;
    SimTime run_end_;
    SimTime tick_{};
    SensorDevice* present_sensor_ = nullptr;
    SensorDevice* leak_sensor_ = nullptr;
    std::vector<SimTime> exit_times_;
};

} // namespace icstb::net
