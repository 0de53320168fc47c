#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "icstb/attack/adversary.hpp"
#include "icstb/channel/channel.hpp"
#include "icstb/core/digest.hpp"
#include "icstb/net/devices.hpp"
#include "icstb/plant/plant.hpp"

namespace icstb::io {

using nlohmann::json;

enum class Deployment { wired, fiveg_gc, fiveg_dc };

inline const char* deployment_name(Deployment d) {
    switch (d) {
        case Deployment::wired: return "wired";
        case Deployment::fiveg_gc: return "5g_gc";
        case Deployment::fiveg_dc: return "5g_dc";
    }
    return "?";
}

inline Deployment deployment_from(const std::string& s) {
    if (s == "wired") return Deployment::wired;
    if (s == "5g_gc") return Deployment::fiveg_gc;
    if (s == "5g_dc") return Deployment::fiveg_dc;
    throw std::invalid_argument("unknown deployment: " + s);
}

struct ChannelConfig {
    double noise_floor_dbm = -84.0;
    double dc_extra_noise_db = 28.0;
    double per_alpha = 1.0;
    double per_beta_db = 5.0;
    double f_ghz = 28.0;
    double shadow_sigma_db = 4.3;
    bool shadowing_enabled = true;
    double gnb_power_dbm = 34.0;
    int gnb_antenna = 8;
    double ue_power_dbm = 23.0;
    int ue_antenna = 2;
    channel::Position gnb_pos{40.0, 10.0, 9.5};
    double slot_us = 125.0;
    int max_attempts = 4;
    int ue_queue_cap = 100;
    int recovery_min_drops = 3;
    double recovery_fail_window_s = 0.3;
    double recovery_backoff_s = 5.0;
    double feedback_margin_db = -8.0;
    double wired_rate_bps = 100e6;
    double wired_prop_us = 2.0;
    int wired_queue_cap = 100;
    std::map<std::string, channel::Position> positions; // endpoint UE placement
};

// Factory hall 50x20x10 m, gNB under the roof, control loop clustered near it,
// supervisory endpoints (leak sensor, HMI) and the insider's radio farther out.
inline std::map<std::string, channel::Position> default_positions() {
    using net::ep::attacker;
    return {
        {net::ep::plc_a, {40, 6, 1}},
        {net::ep::plc_b, {40, 14, 1}},
        {net::ep::tank_level, {37, 10, 1}},
        {net::ep::bottle_level, {43, 10, 1}},
        {net::ep::bottle_present, {40, 10, 1}},
        {net::ep::leak, {0.5, 19.5, 1}},
        {net::ep::input_valve, {38, 8, 1}},
        {net::ep::output_valve, {42, 8, 1}},
        {net::ep::motion_controller, {42, 12, 1}},
        {net::ep::hmi, {36, 14, 1}},
        {attacker, {6, 10, 1}},
    };
}

struct MonitorConfig {
    bool enabled = false;
    channel::Position position{55.0, 10.0, 1.5}; // outside the hall
    double cadence_ms = 1.0;
};

struct ScenarioConfig {
    std::string name = "benign";
    Deployment deployment = Deployment::wired;
    double duration_s = 1200.0;
    std::uint64_t seed = 1;
    plant::PlantConfig plant;
    net::DeviceTimings devices;
    ChannelConfig channel;
    std::vector<attack::AttackSpec> attacks;
    attack::JamScenario jam;
    MonitorConfig monitor;
    bool default_operator_script = true;
    std::vector<net::OperatorCmd> script; // used when default_operator_script == false

    ScenarioConfig() { channel.positions = default_positions(); }

    std::vector<net::OperatorCmd> effective_script() const {
        if (!default_operator_script) return script;
        using K = net::OperatorCmd::Kind;
        return {{SimTime::from_s(600), K::halt},
                {SimTime::from_s(660), K::resume_half},
                {SimTime::from_s(780), K::normal_speed}};
    }
};

// ---- JSON (strict: unknown keys are rejected) --------------------------------

namespace cfg_detail {

struct KeyChecker {
    const json& j;
    std::string scope;
    std::set<std::string> known;
    std::vector<std::string>& errors;

    bool has(const std::string& k) {
        known.insert(k);
        return j.contains(k);
    }
    template <typename T>
    void get(const std::string& k, T& out) {
        if (has(k)) {
            try {
                out = j.at(k).get<T>();
            } catch (const std::exception& e) {
                errors.push_back(scope + k + ": " + e.what());
            }
        }
    }
    void finish() {
        if (!j.is_object()) {
            errors.push_back(scope + ": expected an object");
            return;
        }
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!known.count(it.key())) errors.push_back("unknown key: " + scope + it.key());
    }
};

inline channel::Position pos_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("position must be [x,y,z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
inline json pos_to(const channel::Position& p) { return json::array({p.x, p.y, p.z}); }

} // namespace cfg_detail

inline json to_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["deployment"] = deployment_name(c.deployment);
    j["duration_s"] = c.duration_s;
    j["seed"] = c.seed;

    json p;
    p["tank_area_m2"] = c.plant.tank_area_m2;
    p["tank_capacity_m"] = c.plant.tank_capacity_m;
    p["tank_initial_m"] = c.plant.tank_initial_m;
    p["inflow_m3s"] = c.plant.inflow_m3s;
    p["cda_m2"] = c.plant.cda_m2;
    p["gravity"] = c.plant.gravity;
    p["bottle_capacity_m3"] = c.plant.bottle_capacity_m3;
    p["bottle_spacing_m"] = c.plant.bottle_spacing_m;
    p["capture_window_m"] = c.plant.capture_window_m;
    p["belt_speed_mps"] = c.plant.belt_speed_mps;
    p["sensor_noise_frac"] = c.plant.sensor_noise_frac;
    p["noise_enabled"] = c.plant.noise_enabled;
    p["tick_s"] = c.plant.tick_s;
    p["spill_merge_gap_s"] = c.plant.spill_merge_gap_s;
    j["plant"] = p;

    json d;
    d["control_period_ms"] = c.devices.control_period.ns / 1e6;
    d["publish_period_ms"] = c.devices.publish_period.ns / 1e6;
    d["hmi_poll_period_ms"] = c.devices.hmi_poll_period.ns / 1e6;
    d["hmi_timeout_ms"] = c.devices.hmi_timeout.ns / 1e6;
    d["t_safe_ms"] = c.devices.t_safe.ns / 1e6;
    d["plc_proc_us"] = c.devices.plc_proc.ns / 1e3;
    d["sensor_proc_us"] = c.devices.sensor_proc.ns / 1e3;
    d["actuator_proc_us"] = c.devices.actuator_proc.ns / 1e3;
    d["hmi_proc_us"] = c.devices.hmi_proc.ns / 1e3;
    d["plc_phase_ms"] = c.devices.plc_phase.ns / 1e6;
    d["hmi_phase_ms"] = c.devices.hmi_phase.ns / 1e6;
    d["plc_b_phase_ms"] = c.devices.plc_b_phase.ns / 1e6;
    d["sensor_stagger_ms"] = c.devices.sensor_stagger.ns / 1e6;
    d["motion_failsafe_ms"] = c.devices.motion_failsafe.ns / 1e6;
    d["valve_failsafe_ms"] = c.devices.valve_failsafe.ns / 1e6;
    d["target_fill_m3"] = c.devices.target_fill_m3;
    d["tank_low_m"] = c.devices.tank_low_m;
    d["tank_high_m"] = c.devices.tank_high_m;
    j["devices"] = d;

    json ch;
    ch["noise_floor_dbm"] = c.channel.noise_floor_dbm;
    ch["dc_extra_noise_db"] = c.channel.dc_extra_noise_db;
    ch["per_alpha"] = c.channel.per_alpha;
    ch["per_beta_db"] = c.channel.per_beta_db;
    ch["f_ghz"] = c.channel.f_ghz;
    ch["shadow_sigma_db"] = c.channel.shadow_sigma_db;
    ch["shadowing_enabled"] = c.channel.shadowing_enabled;
    ch["gnb_power_dbm"] = c.channel.gnb_power_dbm;
    ch["gnb_antenna"] = c.channel.gnb_antenna;
    ch["ue_power_dbm"] = c.channel.ue_power_dbm;
    ch["ue_antenna"] = c.channel.ue_antenna;
    ch["gnb_pos"] = cfg_detail::pos_to(c.channel.gnb_pos);
    ch["slot_us"] = c.channel.slot_us;
    ch["max_attempts"] = c.channel.max_attempts;
    ch["ue_queue_cap"] = c.channel.ue_queue_cap;
    ch["recovery_min_drops"] = c.channel.recovery_min_drops;
    ch["recovery_fail_window_s"] = c.channel.recovery_fail_window_s;
    ch["recovery_backoff_s"] = c.channel.recovery_backoff_s;
    ch["feedback_margin_db"] = c.channel.feedback_margin_db;
    ch["wired_rate_bps"] = c.channel.wired_rate_bps;
    ch["wired_prop_us"] = c.channel.wired_prop_us;
    ch["wired_queue_cap"] = c.channel.wired_queue_cap;
    json posj = json::object();
    for (const auto& [name, pos] : c.channel.positions) posj[name] = cfg_detail::pos_to(pos);
    ch["positions"] = posj;
    j["channel"] = ch;

    json attacks = json::array();
    for (const auto& a : c.attacks) {
        json aj;
        aj["kind"] = attack::kind_name(a.kind);
        json ws = json::array();
        for (const auto& w : a.windows)
            ws.push_back(json::array({w.start.seconds(), (w.end - w.start).seconds()}));
        aj["windows"] = ws;
        if (a.kind == attack::Kind::dos) {
            aj["rate_pps"] = a.dos_rate_pps;
            aj["target"] = a.dos_target;
            aj["identity"] = a.dos_identity;
        } else if (a.kind == attack::Kind::mitm) {
            aj["processing_delay_ms"] = a.mitm_delay.ns / 1e6;
        } else if (a.kind == attack::Kind::injection) {
            aj["fire_offsets_s"] = a.injection_offsets_s;
        } else if (a.kind == attack::Kind::suppression) {
            aj["endpoint"] = a.suppress_endpoint;
        }
        attacks.push_back(aj);
    }
    j["attacks"] = attacks;

    json jam;
    jam["enabled"] = c.jam.enabled;
    jam["power_dbm"] = c.jam.tx_power_dbm;
    jam["directed"] = c.jam.directed;
    jam["position"] = cfg_detail::pos_to(c.jam.position);
    jam["duty_on_s"] = c.jam.duty_on_s;
    jam["duty_off_s"] = c.jam.duty_off_s;
    jam["start_s"] = c.jam.start_s;
    jam["end_s"] = c.jam.end_s;
    j["jam"] = jam;

    json mon;
    mon["enabled"] = c.monitor.enabled;
    mon["position"] = cfg_detail::pos_to(c.monitor.position);
    mon["cadence_ms"] = c.monitor.cadence_ms;
    j["spectrum_monitor"] = mon;

    if (c.default_operator_script) {
        j["operator_script"] = "default";
    } else {
        json s = json::array();
        for (const auto& cmd : c.script) {
            const char* k = cmd.kind == net::OperatorCmd::Kind::halt ? "halt"
                            : cmd.kind == net::OperatorCmd::Kind::resume_half ? "resume_half"
                                                                              : "normal_speed";
            s.push_back(json{{"t_s", cmd.t.seconds()}, {"cmd", k}});
        }
        j["operator_script"] = s;
    }
    return j;
}

struct ConfigError : std::runtime_error {
    std::vector<std::string> problems;
    explicit ConfigError(std::vector<std::string> p)
        : std::runtime_error("invalid scenario config:\n  " + join(p)), problems(std::move(p)) {}
    static std::string join(const std::vector<std::string>& p) {
        std::string s;
        for (const auto& e : p) {
            if (!s.empty()) s += "\n  ";
            s += e;
        }
        return s;
    }
};

inline ScenarioConfig from_json(const json& j) {
    std::vector<std::string> errors;
    ScenarioConfig c;
    using cfg_detail::KeyChecker;

    KeyChecker top{j, "", {}, errors};
    top.get("name", c.name);
    if (top.has("deployment")) {
        try {
            c.deployment = deployment_from(j.at("deployment").get<std::string>());
        } catch (const std::exception& e) {
            errors.push_back(e.what());
        }
    }
    top.get("duration_s", c.duration_s);
    top.get("seed", c.seed);

    if (top.has("plant")) {
        KeyChecker k{j.at("plant"), "plant.", {}, errors};
        k.get("tank_area_m2", c.plant.tank_area_m2);
        k.get("tank_capacity_m", c.plant.tank_capacity_m);
        k.get("tank_initial_m", c.plant.tank_initial_m);
        k.get("inflow_m3s", c.plant.inflow_m3s);
        k.get("cda_m2", c.plant.cda_m2);
        k.get("gravity", c.plant.gravity);
        k.get("bottle_capacity_m3", c.plant.bottle_capacity_m3);
        k.get("bottle_spacing_m", c.plant.bottle_spacing_m);
        k.get("capture_window_m", c.plant.capture_window_m);
        k.get("belt_speed_mps", c.plant.belt_speed_mps);
        k.get("sensor_noise_frac", c.plant.sensor_noise_frac);
        k.get("noise_enabled", c.plant.noise_enabled);
        k.get("tick_s", c.plant.tick_s);
        k.get("spill_merge_gap_s", c.plant.spill_merge_gap_s);
        k.finish();
    }

    if (top.has("devices")) {
        KeyChecker k{j.at("devices"), "devices.", {}, errors};
        double v;
        auto ms = [&](const char* key, SimTime& out) {
            if (k.has(key)) { v = k.j.at(key).get<double>(); out = SimTime::from_seconds(v / 1e3); }
        };
        auto us = [&](const char* key, SimTime& out) {
            if (k.has(key)) { v = k.j.at(key).get<double>(); out = SimTime::from_seconds(v / 1e6); }
        };
        ms("control_period_ms", c.devices.control_period);
        ms("publish_period_ms", c.devices.publish_period);
        ms("hmi_poll_period_ms", c.devices.hmi_poll_period);
        ms("hmi_timeout_ms", c.devices.hmi_timeout);
        ms("t_safe_ms", c.devices.t_safe);
        us("plc_proc_us", c.devices.plc_proc);
        us("sensor_proc_us", c.devices.sensor_proc);
        us("actuator_proc_us", c.devices.actuator_proc);
        us("hmi_proc_us", c.devices.hmi_proc);
        ms("plc_phase_ms", c.devices.plc_phase);
        ms("hmi_phase_ms", c.devices.hmi_phase);
        ms("plc_b_phase_ms", c.devices.plc_b_phase);
        ms("sensor_stagger_ms", c.devices.sensor_stagger);
        ms("motion_failsafe_ms", c.devices.motion_failsafe);
        ms("valve_failsafe_ms", c.devices.valve_failsafe);
        k.get("target_fill_m3", c.devices.target_fill_m3);
        k.get("tank_low_m", c.devices.tank_low_m);
        k.get("tank_high_m", c.devices.tank_high_m);
        k.finish();
    }

    if (top.has("channel")) {
        KeyChecker k{j.at("channel"), "channel.", {}, errors};
        k.get("noise_floor_dbm", c.channel.noise_floor_dbm);
        k.get("dc_extra_noise_db", c.channel.dc_extra_noise_db);
        k.get("per_alpha", c.channel.per_alpha);
        k.get("per_beta_db", c.channel.per_beta_db);
        k.get("f_ghz", c.channel.f_ghz);
        k.get("shadow_sigma_db", c.channel.shadow_sigma_db);
        k.get("shadowing_enabled", c.channel.shadowing_enabled);
        k.get("gnb_power_dbm", c.channel.gnb_power_dbm);
        k.get("gnb_antenna", c.channel.gnb_antenna);
        k.get("ue_power_dbm", c.channel.ue_power_dbm);
        k.get("ue_antenna", c.channel.ue_antenna);
        if (k.has("gnb_pos")) {
            try { c.channel.gnb_pos = cfg_detail::pos_from(k.j.at("gnb_pos")); }
            catch (const std::exception& e) { errors.push_back(std::string("channel.gnb_pos: ") + e.what()); }
        }
        k.get("slot_us", c.channel.slot_us);
        k.get("max_attempts", c.channel.max_attempts);
        k.get("ue_queue_cap", c.channel.ue_queue_cap);
        k.get("recovery_min_drops", c.channel.recovery_min_drops);
        k.get("recovery_fail_window_s", c.channel.recovery_fail_window_s);
        k.get("recovery_backoff_s", c.channel.recovery_backoff_s);
        k.get("feedback_margin_db", c.channel.feedback_margin_db);
        k.get("wired_rate_bps", c.channel.wired_rate_bps);
        k.get("wired_prop_us", c.channel.wired_prop_us);
        k.get("wired_queue_cap", c.channel.wired_queue_cap);
        if (k.has("positions")) {
            const json& pj = k.j.at("positions");
            if (!pj.is_object()) {
                errors.push_back("channel.positions: expected an object");
            } else {
                for (auto it = pj.begin(); it != pj.end(); ++it) {
                    try { c.channel.positions[it.key()] = cfg_detail::pos_from(it.value()); }
                    catch (const std::exception& e) {
                        errors.push_back("channel.positions." + it.key() + ": " + e.what());
                    }
                }
            }
        }
        k.finish();
    }

    if (top.has("attacks")) {
        const json& aj = j.at("attacks");
        if (!aj.is_array()) errors.push_back("attacks: expected an array");
        else {
            for (const auto& a : aj) {
                attack::AttackSpec spec;
                KeyChecker k{a, "attacks[].", {}, errors};
                std::string kind;
                k.get("kind", kind);
                if (kind == "dos") spec.kind = attack::Kind::dos;
                else if (kind == "mitm") spec.kind = attack::Kind::mitm;
                else if (kind == "injection") spec.kind = attack::Kind::injection;
                else if (kind == "suppression") spec.kind = attack::Kind::suppression;
                else errors.push_back("attacks[].kind: unknown kind '" + kind + "'");
                if (k.has("windows")) {
                    for (const auto& w : k.j.at("windows")) {
                        double start = w.at(0).get<double>();
                        double dur = w.at(1).get<double>();
                        spec.windows.push_back({SimTime::from_seconds(start),
                                                SimTime::from_seconds(start + dur)});
                    }
                } else {
                    spec.windows = attack::default_variant_windows();
                }
                k.get("rate_pps", spec.dos_rate_pps);
                k.get("target", spec.dos_target);
                k.get("identity", spec.dos_identity);
                if (k.has("processing_delay_ms"))
                    spec.mitm_delay = SimTime::from_seconds(a.at("processing_delay_ms").get<double>() / 1e3);
                k.get("fire_offsets_s", spec.injection_offsets_s);
                k.get("endpoint", spec.suppress_endpoint);
                k.finish();
                c.attacks.push_back(std::move(spec));
            }
        }
    }

    if (top.has("jam")) {
        KeyChecker k{j.at("jam"), "jam.", {}, errors};
        k.get("enabled", c.jam.enabled);
        k.get("power_dbm", c.jam.tx_power_dbm);
        k.get("directed", c.jam.directed);
        if (k.has("position")) {
            try { c.jam.position = cfg_detail::pos_from(k.j.at("position")); }
            catch (const std::exception& e) { errors.push_back(std::string("jam.position: ") + e.what()); }
        }
        k.get("duty_on_s", c.jam.duty_on_s);
        k.get("duty_off_s", c.jam.duty_off_s);
        k.get("start_s", c.jam.start_s);
        k.get("end_s", c.jam.end_s);
        k.finish();
    }

    if (top.has("spectrum_monitor")) {
        KeyChecker k{j.at("spectrum_monitor"), "spectrum_monitor.", {}, errors};
        k.get("enabled", c.monitor.enabled);
        if (k.has("position")) {
            try { c.monitor.position = cfg_detail::pos_from(k.j.at("position")); }
            catch (const std::exception& e) {
                errors.push_back(std::string("spectrum_monitor.position: ") + e.what());
            }
        }
        k.get("cadence_ms", c.monitor.cadence_ms);
        k.finish();
    }

    if (top.has("operator_script")) {
        const json& s = j.at("operator_script");
        if (s.is_string() && s.get<std::string>() == "default") {
            c.default_operator_script = true;
        } else if (s.is_array()) {
            c.default_operator_script = false;
            for (const auto& e : s) {
                net::OperatorCmd cmd;
                cmd.t = SimTime::from_seconds(e.at("t_s").get<double>());
                std::string kind = e.at("cmd").get<std::string>();
                if (kind == "halt") cmd.kind = net::OperatorCmd::Kind::halt;
                else if (kind == "resume_half") cmd.kind = net::OperatorCmd::Kind::resume_half;
                else if (kind == "normal_speed") cmd.kind = net::OperatorCmd::Kind::normal_speed;
                else errors.push_back("operator_script: unknown cmd '" + kind + "'");
                c.script.push_back(cmd);
            }
        } else {
            errors.push_back("operator_script: expected \"default\" or an array");
        }
    }
    top.finish();

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

inline ScenarioConfig parse_config(const std::string& text) {
    return from_json(json::parse(text));
}

// Semantic digest: canonical dump of the resolved config (seed excluded so the
// same scenario under different seeds shares a config identity; the manifest
// carries the seed separately).
inline std::string config_digest(const ScenarioConfig& c) {
    json j = to_json(c);
    j.erase("seed");
    return digest_hex(digest_string(j.dump()));
}

// "a.b.c=value" overrides applied to the JSON form.
inline json apply_override(json j, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key.path=value: " + kv);
    std::string path = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (...) {
        parsed = value; // raw string
    }
    json* cur = &j;
    std::size_t pos = 0;
    while (true) {
        auto dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (dot == std::string::npos) {
            (*cur)[key] = parsed;
            break;
        }
        cur = &((*cur)[key]);
        pos = dot + 1;
    }
    return j;
}

} // namespace icstb::io
