#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "icstb/core/rng.hpp"
#include "icstb/core/time.hpp"

namespace icstb::plant {

struct PlantConfig {
    double tank_area_m2 = 1.0;
    double tank_capacity_m = 10.0;
    double tank_initial_m = 5.0;
    double inflow_m3s = 0.2;          // when input valve open
    double cda_m2 = 0.01;             // discharge coefficient * orifice area
    double gravity = 9.81;

    double bottle_capacity_m3 = 0.27;
    double bottle_spacing_m = 2.0;
    double capture_window_m = 0.05;   // bottle counts as "under valve" within +/- this
    double belt_speed_mps = 1.0;      // normal speed; half speed is exactly half
    double entry_offset_m = -4.0;     // bottles spawn behind this point
    double exit_offset_m = 3.0;       // bottles leave the model past this point
    double first_bottle_offset_m = -0.3;

    double sensor_noise_frac = 0.005; // +/-0.5% uniform on analog sensors
    bool noise_enabled = true;

    double tick_s = 0.001;
    double spill_merge_gap_s = 1.0;
};

enum class BeltMode : std::uint8_t { stopped, half, normal };

inline const char* belt_mode_name(BeltMode m) {
    switch (m) {
        case BeltMode::stopped: return "stopped";
        case BeltMode::half: return "half";
        case BeltMode::normal: return "normal";
    }
    return "?";
}

struct Bottle {
    double offset_m = 0.0; // relative to the filling station, 0 = under valve
    double fill_m3 = 0.0;
};

struct SpillEvent {
    SimTime start{};
    SimTime end{};
    double volume_m3 = 0.0;
};

enum class SensorId { tank_level, bottle_level, bottle_present, leak, belt_encoder };

inline const char* sensor_name(SensorId s) {
    switch (s) {
        case SensorId::tank_level: return "tank_level";
        case SensorId::bottle_level: return "bottle_level";
        case SensorId::bottle_present: return "bottle_present";
        case SensorId::leak: return "leak";
        case SensorId::belt_encoder: return "belt_encoder";
    }
    return "?";
}

struct SensorReading {
    SensorId id{};
    double value = 0.0;
    SimTime t{};
};

// Fixed-tick (default 1 ms) integration of the bottle-filling plant: tank with
// Torricelli outflow, conveyor moving a bottle train, spill ledger. Explicit
// Euler is adequate at these rates; the drain-time oracle in the tests pins
// the discretization error against the closed-form solution.
class Plant {
public:
    Plant(const PlantConfig& cfg, RngHub* rng) : cfg_(cfg), rng_(rng) {
        tank_h_ = cfg.tank_initial_m;
        bottles_.push_back(Bottle{cfg.first_bottle_offset_m, 0.0});
        backfill_train();
    }

    const PlantConfig& config() const { return cfg_; }

    double torricelli_outflow(double head_m) const {
        return head_m <= 0.0 ? 0.0 : cfg_.cda_m2 * std::sqrt(2.0 * cfg_.gravity * head_m);
    }

    // -- actuators ---------------------------------------------------------

    struct ApplyResult {
        bool accepted = false;
        bool changed = false;
    };

    ApplyResult set_input_valve(bool open) {
        ApplyResult r{true, input_open_ != open};
        input_open_ = open;
        return r;
    }
    ApplyResult set_output_valve(bool open) {
        ApplyResult r{true, output_open_ != open};
        output_open_ = open;
        return r;
    }
    ApplyResult set_belt(BeltMode m) {
        ApplyResult r{true, belt_mode_ != m};
        if (r.changed) ++belt_transitions_;
        belt_mode_ = m;
        return r;
    }
    // Command codes as they arrive off the wire; invalid codes are rejected
    // without touching state (mirrors a malformed write).
    ApplyResult set_belt_code(std::uint16_t code) {
        switch (code) {
            case 0: return set_belt(BeltMode::stopped);
            case 1: return set_belt(BeltMode::half);
            case 2: return set_belt(BeltMode::normal);
            default: ++rejected_commands_; return {false, false};
        }
    }

    bool input_valve_open() const { return input_open_; }
    bool output_valve_open() const { return output_open_; }
    BeltMode belt_mode() const { return belt_mode_; }
    double belt_speed() const {
        switch (belt_mode_) {
            case BeltMode::stopped: return 0.0;
            case BeltMode::half: return cfg_.belt_speed_mps * 0.5;
            case BeltMode::normal: return cfg_.belt_speed_mps;
        }
        return 0.0;
    }
    std::uint64_t belt_transitions() const { return belt_transitions_; }
    std::uint64_t rejected_commands() const { return rejected_commands_; }

    // -- dynamics ----------------------------------------------------------

    void step(SimTime now) {
        const double dt = cfg_.tick_s;
        const double area = cfg_.tank_area_m2;

        // Inflow, saturating at tank capacity (excess overflows the tank).
        double v_in = input_open_ ? cfg_.inflow_m3s * dt : 0.0;
        double space = (cfg_.tank_capacity_m - tank_h_) * area;
        double v_in_tank = std::min(v_in, std::max(space, 0.0));
        double tank_overflow = v_in - v_in_tank;

        // Torricelli outflow, limited by what the tank holds.
        double v_out = output_open_ ? torricelli_outflow(tank_h_) * dt : 0.0;
        v_out = std::min(v_out, tank_h_ * area + v_in_tank);

        tank_h_ += (v_in_tank - v_out) / area;
        if (tank_h_ < 0.0) tank_h_ = 0.0;

        // Outflow routing decided by bottle presence at tick start: all to the
        // bottle, or all to the spill ledger.
        double spill = tank_overflow;
        double to_bottle = 0.0;
        Bottle* under = bottle_under_valve();
        if (under && v_out > 0.0) {
            double room = cfg_.bottle_capacity_m3 - under->fill_m3;
            to_bottle = std::min(v_out, std::max(room, 0.0));
            under->fill_m3 += to_bottle;
            spill += v_out - to_bottle; // bottle overflow
        } else {
            spill += v_out;
        }
        inflow_total_ += v_in;
        outflow_total_ += v_out;

        spill_flow_m3s_ = spill / dt;
        if (spill > 0.0) {
            spilled_total_ += spill;
            record_spill(now, spill);
        }

        // Conveyor.
        double v = belt_speed();
        if (v > 0.0) {
            double ds = v * dt;
            belt_position_ += ds;
            for (auto& b : bottles_) b.offset_m += ds;
        } else {
            stationary_time_s_ += dt;
            ++stationary_ticks_;
        }
        ++total_ticks_;

        // Retire bottles past the exit, keep the train backfilled.
        while (!bottles_.empty() && bottles_.front().offset_m > cfg_.exit_offset_m) {
            removed_fill_total_ += bottles_.front().fill_m3;
            ++bottles_removed_;
            bottles_.pop_front();
        }
        backfill_train();
    }

    // -- sensors -----------------------------------------------------------

    SensorReading read_sensor(SensorId id, SimTime t) {
        SensorReading r{id, 0.0, t};
        switch (id) {
            case SensorId::tank_level: r.value = noisy("sensor.tank_level", tank_h_); break;
            case SensorId::bottle_level: {
                const Bottle* b = bottle_under_valve();
                r.value = noisy("sensor.bottle_level", b ? b->fill_m3 : 0.0);
                break;
            }
            case SensorId::bottle_present: r.value = bottle_under_valve() ? 1.0 : 0.0; break;
            case SensorId::leak: r.value = spill_flow_m3s_ > 0.0 ? 1.0 : 0.0; break;
            case SensorId::belt_encoder: r.value = noisy("sensor.belt_encoder", belt_speed()); break;
        }
        return r;
    }

    // -- state access ------------------------------------------------------

    double tank_level() const { return tank_h_; }
    double belt_position() const { return belt_position_; }
    double stationary_time_s() const { return stationary_time_s_; }
    std::uint64_t stationary_ticks() const { return stationary_ticks_; }
    std::uint64_t total_ticks() const { return total_ticks_; }
    double spill_flow() const { return spill_flow_m3s_; }
    double spilled_total() const { return spilled_total_; }
    const std::deque<Bottle>& bottles() const { return bottles_; }
    std::uint64_t bottles_removed() const { return bottles_removed_; }

    const Bottle* bottle_under_valve() const {
        for (const auto& b : bottles_)
            if (std::abs(b.offset_m) <= cfg_.capture_window_m) return &b;
        return nullptr;
    }
    Bottle* bottle_under_valve() {
        for (auto& b : bottles_)
            if (std::abs(b.offset_m) <= cfg_.capture_window_m) return &b;
        return nullptr;
    }

    // Mass ledger for the conservation invariant: initial volume + total
    // inflow == tank + bottles (train and removed) + spilled.
    double mass_balance_error() const {
        double bottles_now = 0.0;
        for (const auto& b : bottles_) bottles_now += b.fill_m3;
        double lhs = cfg_.tank_initial_m * cfg_.tank_area_m2 + inflow_total_;
        double rhs = tank_h_ * cfg_.tank_area_m2 + bottles_now + removed_fill_total_ + spilled_total_;
        return lhs - rhs;
    }

    struct SpillReport {
        std::uint64_t count = 0;
        double total_volume_m3 = 0.0;
        std::vector<SpillEvent> events;
    };

    // Maximal spill intervals, gaps shorter than the merge gap fused.
    SpillReport spill_report() const {
        SpillReport r;
        r.events = spill_events_;
        r.count = spill_events_.size();
        r.total_volume_m3 = spilled_total_;
        return r;
    }

    using SpillHook = std::function<void(bool /*started*/, SimTime, double /*volume so far*/)>;
    void set_spill_hook(SpillHook h) { spill_hook_ = std::move(h); }

private:
    double noisy(const char* stream, double value) {
        if (!cfg_.noise_enabled || !rng_) return value;
        double eps = rng_->stream(stream).uniform(-cfg_.sensor_noise_frac, cfg_.sensor_noise_frac);
        return value * (1.0 + eps);
    }

    void record_spill(SimTime now, double volume) {
        const SimTime gap = SimTime::from_seconds(cfg_.spill_merge_gap_s);
        if (!spill_events_.empty() && now - spill_events_.back().end < gap) {
            spill_events_.back().end = now;
            spill_events_.back().volume_m3 += volume;
        } else {
            spill_events_.push_back(SpillEvent{now, now, volume});
            if (spill_hook_) spill_hook_(true, now, volume);
        }
    }

    void backfill_train() {
        while (bottles_.back().offset_m - cfg_.bottle_spacing_m >= cfg_.entry_offset_m)
            bottles_.push_back(Bottle{bottles_.back().offset_m - cfg_.bottle_spacing_m, 0.0});
    }

    PlantConfig cfg_;
    RngHub* rng_ = nullptr;

    double tank_h_ = 0.0;
    bool input_open_ = false;
    bool output_open_ = false;
    BeltMode belt_mode_ = BeltMode::normal;
    std::uint64_t belt_transitions_ = 0;
    std::uint64_t rejected_commands_ = 0;

    double belt_position_ = 0.0;
    double stationary_time_s_ = 0.0;
    std::uint64_t stationary_ticks_ = 0;
    std::uint64_t total_ticks_ = 0;
    std::deque<Bottle> bottles_;
    std::uint64_t bottles_removed_ = 0;

    double inflow_total_ = 0.0;
    double outflow_total_ = 0.0;
    double removed_fill_total_ = 0.0;
    double spilled_total_ = 0.0;
    double spill_flow_m3s_ = 0.0;
    std::vector<SpillEvent> spill_events_;
    SpillHook spill_hook_;
};

} // namespace icstb::plant
