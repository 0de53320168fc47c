#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icstb/attack/adversary.hpp"
#include "icstb/attack/spectrum.hpp"
#include "icstb/channel/channel.hpp"
#include "icstb/core/digest.hpp"
#include "icstb/core/engine.hpp"
#include "icstb/io/records.hpp"
#include "icstb/io/scenario.hpp"
#include "icstb/net/devices.hpp"
#include "icstb/net/network.hpp"
#include "icstb/plant/plant.hpp"

namespace icstb::sim {

using nlohmann::json;

struct Welford {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double stddev() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
};

struct RunMetrics {
    // process
    std::uint64_t spill_count = 0;
    double spill_volume_m3 = 0.0;
    double longest_spill_s = 0.0;
    double stationary_fraction = 0.0;
    std::uint64_t safety_halts = 0;
    std::uint64_t hmi_timeouts = 0;
    std::uint64_t orphan_responses = 0;
    std::uint64_t bottles_filled = 0;
    double cycle_median_s = 0.0;
    // network
    std::uint64_t delivered = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t drops_max_retx = 0;
    std::uint64_t drops_queue_full = 0;
    std::uint64_t drops_suppressed = 0;
    std::uint64_t retx_delivered_total = 0;
    double retx_per_s = 0.0;
    double jitter_s = 0.0;             // std of one-way delay, first deliveries
    double mean_delay_s = 0.0;
    std::map<std::string, double> flow_jitter_s;

    json to_json() const {
        json j;
        j["spill_count"] = spill_count;
        j["spill_volume_m3"] = spill_volume_m3;
        j["longest_spill_s"] = longest_spill_s;
        j["stationary_fraction"] = stationary_fraction;
        j["safety_halts"] = safety_halts;
        j["hmi_timeouts"] = hmi_timeouts;
        j["orphan_responses"] = orphan_responses;
        j["bottles_filled"] = bottles_filled;
        j["cycle_median_s"] = cycle_median_s;
        j["delivered"] = delivered;
        j["duplicates"] = duplicates;
        j["drops_max_retx"] = drops_max_retx;
        j["drops_queue_full"] = drops_queue_full;
        j["drops_suppressed"] = drops_suppressed;
        j["retx_delivered_total"] = retx_delivered_total;
        j["retx_per_s"] = retx_per_s;
        j["jitter_s"] = jitter_s;
        j["mean_delay_s"] = mean_delay_s;
        json fj = json::object();
        for (const auto& [k, v] : flow_jitter_s) fj[k] = v;
        j["flow_jitter_s"] = fj;
        return j;
    }
};

struct RunResult {
    std::string out_dir;
    RunMetrics metrics;
    std::string packets_digest;
    std::string plant_digest;
};

// One fully-wired scenario execution: builds the plant, devices, transport and
// attacks from the config, runs the event loop and emits the trace files.
class Simulation {
public:
    Simulation(io::ScenarioConfig cfg, std::string out_dir)
        : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)), eng_(cfg_.seed) {
        std::filesystem::create_directories(out_dir_);
        build();
    }

    Engine& engine() { return eng_; }
    plant::Plant& plant() { return *plant_; }
    net::PlcA& plc_a() { return *plc_a_; }
    net::PlcB& plc_b() { return *plc_b_; }
    net::Hmi& hmi() { return *hmi_; }
    const io::ScenarioConfig& config() const { return cfg_; }

    RunResult run() {
        const SimTime end = SimTime::from_seconds(cfg_.duration_s);
        driver_->start();
        for (auto& s : sensors_) s->start();
        for (auto& a : actuators_) a->start();
        plc_a_->start();
        plc_b_->start();
        hmi_->start();
        eng_.run_until(end);
        return finalize();
    }

private:
    void build() {
        packets_path_ = out_dir_ + "/packets.jsonl";
        packets_file_.open(packets_path_);
        events_path_ = out_dir_ + "/events.jsonl";
        events_file_.open(events_path_);
        plant_csv_path_ = out_dir_ + "/plant.csv";
        plant_csv_.open(plant_csv_path_);

        io::PacketSink sink = [this](const io::PacketRecord& r) { on_packet(r); };
        io::EventSink events = [this](const io::EventRecord& r) {
            events_file_.write(io::to_jsonl(r));
        };

        plant_ = std::make_unique<plant::Plant>(cfg_.plant, &eng_.rng());
        net_ = std::make_unique<net::Network>(eng_, sink);

        const SimTime run_end = SimTime::from_seconds(cfg_.duration_s);
        if (cfg_.deployment == io::Deployment::wired) {
            channel::WiredParams wp;
            wp.rate_bps = cfg_.channel.wired_rate_bps;
            wp.propagation = SimTime::from_seconds(cfg_.channel.wired_prop_us * 1e-6);
            wp.queue_cap = static_cast<std::size_t>(cfg_.channel.wired_queue_cap);
            net_->set_transport(std::make_unique<channel::WiredTransport>(
                eng_, wp,
                [this](const channel::TxMessage& m, SimTime t, bool dup) {
                    net_->on_delivered(m, t, dup);
                },
                sink));
        } else {
            channel::LinkBudgetParams bp;
            bp.f_ghz = cfg_.channel.f_ghz;
            bp.noise_floor_dbm = cfg_.channel.noise_floor_dbm;
            bp.extra_noise_db =
                cfg_.deployment == io::Deployment::fiveg_dc ? cfg_.channel.dc_extra_noise_db : 0.0;
            bp.shadow_sigma_db = cfg_.channel.shadow_sigma_db;
            bp.shadowing_enabled = cfg_.channel.shadowing_enabled;
            bp.per_alpha = cfg_.channel.per_alpha;
            bp.per_beta_db = cfg_.channel.per_beta_db;
            bp.seed = cfg_.seed;

            channel::CellularParams cp;
            cp.slot = SimTime::from_seconds(cfg_.channel.slot_us * 1e-6);
            cp.max_attempts = cfg_.channel.max_attempts;
            cp.queue_cap = static_cast<std::size_t>(cfg_.channel.ue_queue_cap);
            cp.recovery_min_drops = cfg_.channel.recovery_min_drops;
            cp.recovery_fail_window = SimTime::from_seconds(cfg_.channel.recovery_fail_window_s);
            cp.recovery_backoff = SimTime::from_seconds(cfg_.channel.recovery_backoff_s);
            cp.feedback_margin_db = cfg_.channel.feedback_margin_db;

            channel::NodeRadio gnb;
            gnb.name = "gnb";
            gnb.pos = cfg_.channel.gnb_pos;
            gnb.tx_power_dbm = cfg_.channel.gnb_power_dbm;
            gnb.antenna_n = cfg_.channel.gnb_antenna;
            gnb.role = channel::RadioRole::gnb;

            auto cell = std::make_unique<channel::CellularTransport>(
                eng_, cp, channel::LinkBudget(bp), gnb,
                [this](const channel::TxMessage& m, SimTime t, bool dup) {
                    net_->on_delivered(m, t, dup);
                },
                sink);
            for (const auto& [name, pos] : cfg_.channel.positions) {
                channel::NodeRadio r;
                r.name = name;
                r.pos = pos;
                r.tx_power_dbm = cfg_.channel.ue_power_dbm;
                r.antenna_n = cfg_.channel.ue_antenna;
                r.role = channel::RadioRole::ue;
                cell->register_radio(r);
            }
            if (cfg_.jam.enabled) {
                auto jam = attack::build_jammer(cfg_.jam, cfg_.duration_s);
                jammer_ = jam;
                cell->add_jammer(jam);
            }
            if (cfg_.monitor.enabled) {
                monitor_ = std::make_unique<attack::SpectrumMonitor>(
                    cfg_.monitor.position, cfg_.channel.f_ghz, cfg_.channel.noise_floor_dbm,
                    SimTime::from_seconds(cfg_.monitor.cadence_ms * 1e-3), run_end);
                cell->set_activity_hook(
                    [this](const channel::NodeRadio& r, SimTime a, SimTime b) {
                        monitor_->on_transmission(r, a, b);
                    });
            }
            cellular_ = cell.get();
            net_->set_transport(std::move(cell));
        }

        const auto& t = cfg_.devices;
        plc_a_ = std::make_unique<net::PlcA>(eng_, *net_, t, events);
        plc_b_ = std::make_unique<net::PlcB>(eng_, *net_, t, events);
        hmi_ = std::make_unique<net::Hmi>(eng_, *net_, t, cfg_.effective_script(), events);

        const SimTime stag = t.sensor_stagger;
        sensors_.push_back(std::make_unique<net::SensorDevice>(
            eng_, *net_, *plant_, plant::SensorId::tank_level,
            std::vector<net::SensorTarget>{{net::ep::plc_a, net::reg::a_tank_mm}}, t,
            SimTime{0}, events));
        sensors_.push_back(std::make_unique<net::SensorDevice>(
            eng_, *net_, *plant_, plant::SensorId::bottle_level,
            std::vector<net::SensorTarget>{{net::ep::plc_a, net::reg::a_bottle_fill}}, t,
            stag, events));
        auto present = std::make_unique<net::SensorDevice>(
            eng_, *net_, *plant_, plant::SensorId::bottle_present,
            std::vector<net::SensorTarget>{{net::ep::plc_a, net::reg::a_present},
                                           {net::ep::plc_b, net::reg::b_present}},
            t, SimTime{2 * stag.ns}, events);
        auto leak = std::make_unique<net::SensorDevice>(
            eng_, *net_, *plant_, plant::SensorId::leak,
            std::vector<net::SensorTarget>{{net::ep::plc_a, net::reg::a_leak}}, t,
            SimTime{3 * stag.ns}, events);
        present_sensor_ = present.get();
        leak_sensor_ = leak.get();
        sensors_.push_back(std::move(present));
        sensors_.push_back(std::move(leak));

        actuators_.push_back(std::make_unique<net::ValveActuator>(
            eng_, *net_, *plant_, net::ValveActuator::Which::input, t, events));
        actuators_.push_back(std::make_unique<net::ValveActuator>(
            eng_, *net_, *plant_, net::ValveActuator::Which::output, t, events));
        actuators_.push_back(
            std::make_unique<net::MotionActuator>(eng_, *net_, *plant_, t, events));

        net_->attach(plc_a_.get());
        net_->attach(plc_b_.get());
        net_->attach(hmi_.get());
        for (auto& s : sensors_) net_->attach(s.get());
        for (auto& a : actuators_) net_->attach(a.get());

        driver_ = std::make_unique<net::PlantDriver>(eng_, *plant_, events, &plant_csv_, run_end);
        driver_->set_edge_sensors(present_sensor_, leak_sensor_);

        adversary_ = std::make_unique<attack::Adversary>(eng_, *net_, events);
        for (const auto& spec : cfg_.attacks) adversary_->install(spec);
    }

    void on_packet(const io::PacketRecord& r) {
        packets_file_.write(io::to_jsonl(r));
        if (r.delivered) {
            if (r.dup) {
                ++m_.duplicates;
            } else {
                ++m_.delivered;
                m_.retx_delivered_total += r.retx;
                double delay = (r.t_recv - r.t_send).seconds();
                delay_.add(delay);
                flow_delay_[r.src + ">" + r.dst + ":" + r.cls].add(delay);
            }
        } else if (r.drop) {
            if (std::string_view(r.drop) == "max_retx") ++m_.drops_max_retx;
            else if (std::string_view(r.drop) == "queue_full") ++m_.drops_queue_full;
            else if (std::string_view(r.drop) == "suppressed") ++m_.drops_suppressed;
        }
    }

    RunResult finalize() {
        auto spills = plant_->spill_report();
        m_.spill_count = spills.count;
        m_.spill_volume_m3 = spills.total_volume_m3;
        for (const auto& e : spills.events)
            m_.longest_spill_s = std::max(m_.longest_spill_s, (e.end - e.start).seconds());
        m_.stationary_fraction = plant_->total_ticks() > 0
                                     ? static_cast<double>(plant_->stationary_ticks()) /
                                           static_cast<double>(plant_->total_ticks())
                                     : 0.0;
        m_.safety_halts = plc_a_->safety_halt_count() + plc_b_->safety_halt_count();
        m_.hmi_timeouts = hmi_->timeout_count();
        m_.orphan_responses = hmi_->orphan_count() + plc_a_->orphan_count() +
                              plc_b_->orphan_count();
        for (auto& s : sensors_) m_.orphan_responses += s->orphan_count();
        m_.bottles_filled = plant_->bottles_removed();
        m_.cycle_median_s = cycle_median();
        m_.jitter_s = delay_.stddev();
        m_.mean_delay_s = delay_.mean;
        m_.retx_per_s = cfg_.duration_s > 0
                            ? static_cast<double>(m_.retx_delivered_total) / cfg_.duration_s
                            : 0.0;
        for (const auto& [k, w] : flow_delay_) m_.flow_jitter_s[k] = w.stddev();

        packets_file_.close();
        events_file_.close();
        plant_csv_.close();

        if (monitor_) {
            if (jammer_) monitor_->add_jammer(*jammer_);
            io::LineFile f(out_dir_ + "/spectrum.csv");
            f.write("t_s,power_dbm\n");
            auto samples = monitor_->samples_dbm();
            double dt = monitor_->cadence_s();
            std::string line;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                line.clear();
                io::jsonfmt::append_double(line, static_cast<double>(i) * dt);
                line += ',';
                io::jsonfmt::append_double(line, samples[i]);
                line += '\n';
                f.write(line);
            }
            f.close();
        }

        {
            std::ofstream cf(out_dir_ + "/config.json");
            cf << io::to_json(cfg_).dump(2) << "\n";
        }
        {
            json gt = json::array();
            for (const auto& w : adversary_->ground_truth())
                gt.push_back(json{{"kind", attack::kind_name(w.kind)},
                                  {"start_ns", w.start.ns},
                                  {"end_ns", w.end.ns}});
            std::ofstream gf(out_dir_ + "/ground_truth.json");
            gf << gt.dump(2) << "\n";
        }
        {
            std::ofstream mf(out_dir_ + "/metrics.json");
            mf << m_.to_json().dump(2) << "\n";
        }

        RunResult res;
        res.out_dir = out_dir_;
        res.metrics = m_;
        res.packets_digest = digest_hex(digest_file(packets_path_));
        res.plant_digest = digest_hex(digest_file(plant_csv_path_));
        {
            json man;
            man["schema_version"] = io::kSchemaVersion;
            man["name"] = cfg_.name;
            man["deployment"] = io::deployment_name(cfg_.deployment);
            man["seed"] = cfg_.seed;
            man["duration_s"] = cfg_.duration_s;
            man["config_digest"] = io::config_digest(cfg_);
            man["packets_digest"] = res.packets_digest;
            man["plant_digest"] = res.plant_digest;
            std::ofstream out(out_dir_ + "/manifest.json");
            out << man.dump(2) << "\n";
        }
        return res;
    }

    double cycle_median() const {
        // Bottle cycle ground truth: median interval between bottle exits.
        return cycle_median_from(driver_->exit_times());
    }

public:
    static double cycle_median_from(const std::vector<SimTime>& exits) {
        if (exits.size() < 3) return 0.0;
        std::vector<double> iv;
        for (std::size_t i = 1; i < exits.size(); ++i)
            iv.push_back((exits[i] - exits[i - 1]).seconds());
        std::sort(iv.begin(), iv.end());
        return iv[iv.size() / 2];
    }

private:
    io::ScenarioConfig cfg_;
    std::string out_dir_;
    Engine eng_;

    std::unique_ptr<plant::Plant> plant_;
    std::unique_ptr<net::Network> net_;
    channel::CellularTransport* cellular_ = nullptr;
    std::unique_ptr<net::PlcA> plc_a_;
    std::unique_ptr<net::PlcB> plc_b_;
    std::unique_ptr<net::Hmi> hmi_;
    std::vector<std::unique_ptr<net::SensorDevice>> sensors_;
    std::vector<std::unique_ptr<net::DeviceBase>> actuators_;
    net::SensorDevice* present_sensor_ = nullptr;
    net::SensorDevice* leak_sensor_ = nullptr;
    std::unique_ptr<net::PlantDriver> driver_;
    std::unique_ptr<attack::Adversary> adversary_;
    std::unique_ptr<attack::SpectrumMonitor> monitor_;
    std::optional<channel::JammerEntry> jammer_;

    std::string packets_path_, events_path_, plant_csv_path_;
    io::LineFile packets_file_, events_file_, plant_csv_;
    RunMetrics m_;
    Welford delay_;
    std::map<std::string, Welford> flow_delay_;
};

} // namespace icstb::sim
