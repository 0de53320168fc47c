#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "icstb/ids/ids.hpp"
#include "icstb/sim/simulation.hpp"

namespace icstb::sim {

// ---- packets.jsonl loading (fixed field order written by this artifact) -----

inline std::optional<std::string> extract_string(const std::string& line, const char* key) {
    std::string pat = std::string("\"") + key + "\":\"";
    auto p = line.find(pat);
    if (p == std::string::npos) return std::nullopt;
    p += pat.size();
    auto e = line.find('"', p);
    if (e == std::string::npos) return std::nullopt;
    return line.substr(p, e - p);
}

inline std::optional<std::int64_t> extract_int(const std::string& line, const char* key) {
    std::string pat = std::string("\"") + key + "\":";
    auto p = line.find(pat);
    if (p == std::string::npos) return std::nullopt;
    p += pat.size();
    if (line.compare(p, 4, "null") == 0) return std::nullopt;
    return std::strtoll(line.c_str() + p, nullptr, 10);
}

inline modbus::FlowKey flow_from_parts(const std::string& src, const std::string& dst,
                                       const std::string& cls) {
    modbus::FlowKey k;
    k.src = src;
    k.dst = dst;
    k.fc = static_cast<std::uint8_t>(std::strtol(cls.substr(2, 2).c_str(), nullptr, 16));
    k.dir = cls.size() > 5 && cls.compare(5, 3, "req") == 0 ? modbus::Dir::request
                                                            : modbus::Dir::response;
    return k;
}

// Delivered packet arrivals (what a passive network monitor sees), time-sorted.
inline std::vector<ids::Arrival> load_arrivals(const std::string& packets_path) {
    std::ifstream in(packets_path);
    if (!in) throw std::runtime_error("cannot open " + packets_path);
    std::vector<ids::Arrival> out;
    std::string line;
    while (std::getline(in, line)) {
        auto tr = extract_int(line, "tr");
        if (!tr) continue;
        auto src = extract_string(line, "src");
        auto dst = extract_string(line, "dst");
        auto cls = extract_string(line, "cls");
        if (!src || !dst || !cls || cls->size() < 8) continue;
        out.push_back(ids::Arrival{SimTime::from_ns(*tr), flow_from_parts(*src, *dst, *cls)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ids::Arrival& a, const ids::Arrival& b) { return a.t < b.t; });
    return out;
}

inline std::vector<ids::GroundTruth> load_ground_truth(const std::string& run_dir) {
    std::ifstream in(run_dir + "/ground_truth.json");
    if (!in) throw std::runtime_error("missing ground_truth.json in " + run_dir);
    json j = json::parse(in);
    std::vector<ids::GroundTruth> out;
    for (const auto& w : j)
        out.push_back(ids::GroundTruth{SimTime::from_ns(w.at("start_ns").get<std::int64_t>()),
                                       SimTime::from_ns(w.at("end_ns").get<std::int64_t>()),
                                       w.at("kind").get<std::string>()});
    return out;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing file: " + path);
    return json::parse(in);
}

// ---- scenario builders -------------------------------------------------------

inline io::ScenarioConfig make_benign(io::Deployment d, std::uint64_t seed) {
    io::ScenarioConfig c;
    c.name = std::string(io::deployment_name(d)) + "_benign";
    c.deployment = d;
    c.seed = seed;
    c.monitor.enabled = (d != io::Deployment::wired);
    return c;
}

inline io::ScenarioConfig make_attack_run(io::Deployment d, attack::Kind k, std::uint64_t seed) {
    io::ScenarioConfig c;
    c.name = std::string(io::deployment_name(d)) + "_" + attack::kind_name(k);
    c.deployment = d;
    c.seed = seed;
    attack::AttackSpec spec;
    spec.kind = k;
    spec.windows = attack::default_variant_windows();
    c.attacks.push_back(spec);
    return c;
}

struct SweepOptions {
    double power_min_dbm = 0.0;
    double power_max_dbm = 70.0;
    double power_step_db = 2.5;
    double duration_s = 300.0;
    std::uint64_t seed = 1;
};

inline io::ScenarioConfig make_sweep_point(std::optional<bool> directed, double power_dbm,
                                           const SweepOptions& o) {
    io::ScenarioConfig c;
    c.deployment = io::Deployment::fiveg_gc;
    c.duration_s = o.duration_s;
    c.seed = o.seed;
    c.default_operator_script = false;
    c.script.clear();
    if (directed) {
        std::ostringstream name;
        name << (*directed ? "jam_directed_" : "jam_undirected_") << power_dbm;
        c.name = name.str();
        c.jam.enabled = true;
        c.jam.directed = *directed;
        c.jam.tx_power_dbm = power_dbm;
    } else {
        c.name = "jam_baseline";
        c.jam.enabled = false;
    }
    return c;
}

// ---- parallel batch runner -----------------------------------------------------

struct Job {
    io::ScenarioConfig cfg;
    std::string out_dir;
};

inline std::vector<RunResult> run_jobs(std::vector<Job> jobs, int workers) {
    std::vector<RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            Simulation sim(jobs[i].cfg, jobs[i].out_dir);
            results[i] = sim.run();
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return results;
}

// ---- matrix: benign + 4 attack kinds x 3 deployments -----------------------------

inline const std::vector<io::Deployment>& matrix_deployments() {
    static const std::vector<io::Deployment> d{io::Deployment::wired, io::Deployment::fiveg_gc,
                                               io::Deployment::fiveg_dc};
    return d;
}

inline const std::vector<attack::Kind>& matrix_attacks() {
    static const std::vector<attack::Kind> k{attack::Kind::dos, attack::Kind::injection,
                                             attack::Kind::mitm, attack::Kind::suppression};
    return k;
}

inline std::string run_dir_name(io::Deployment d, const std::string& scenario) {
    return std::string(io::deployment_name(d)) + "_" + scenario;
}

inline json run_matrix(const std::string& out_root, std::uint64_t seed, int workers) {
    std::filesystem::create_directories(out_root);
    std::vector<Job> jobs;
    for (auto d : matrix_deployments()) {
        jobs.push_back({make_benign(d, seed), out_root + "/" + run_dir_name(d, "benign")});
        for (auto k : matrix_attacks())
            jobs.push_back({make_attack_run(d, k, seed),
                            out_root + "/" + run_dir_name(d, attack::kind_name(k))});
    }
    auto results = run_jobs(std::move(jobs), workers);

    json summary;
    std::ostringstream csv;
    csv << "deployment,benign,dos,injection,mitm,suppression\n";
    std::size_t idx = 0;
    for (auto d : matrix_deployments()) {
        json row;
        csv << io::deployment_name(d);
        const char* scen_names[] = {"benign", "dos", "injection", "mitm", "suppression"};
        for (int s = 0; s < 5; ++s) {
            const auto& r = results[idx++];
            row[scen_names[s]] = {{"spills", r.metrics.spill_count},
                                  {"spill_volume_m3", r.metrics.spill_volume_m3},
                                  {"longest_spill_s", r.metrics.longest_spill_s},
                                  {"safety_halts", r.metrics.safety_halts},
                                  {"hmi_timeouts", r.metrics.hmi_timeouts},
                                  {"stationary_fraction", r.metrics.stationary_fraction},
                                  {"out_dir", r.out_dir}};
            csv << "," << r.metrics.spill_count;
        }
        csv << "\n";
        summary[io::deployment_name(d)] = row;
    }
    {
        std::ofstream f(out_root + "/tab2.csv");
        f << csv.str();
    }
    {
        std::ofstream f(out_root + "/matrix_summary.json");
        f << summary.dump(2) << "\n";
    }
    return summary;
}

// ---- IDS pipeline -----------------------------------------------------------------

struct IdsRowResult {
    std::string row;
    std::string detector;
    std::uint64_t attacks_total = 0;
    std::uint64_t attacks_detected = 0;
    std::uint64_t false_alerts = 0;
    double benign_alert_fraction = 0.0;
};

inline void write_alerts_csv(const std::string& path,
                             const std::vector<std::pair<std::string, std::vector<ids::Alert>>>& runs) {
    std::ofstream f(path);
    f << "run,t_s,flow,detector,reason\n";
    for (const auto& [run, alerts] : runs)
        for (const auto& a : alerts)
            f << run << "," << a.t.seconds() << "," << a.flow.str() << ","
              << ids::detector_name(a.detector) << "," << ids::reason_name(a.reason) << "\n";
}

// Train on one deployment's benign run, evaluate on another's attack runs +
// benign trace; the five rows mirror the cross-channel deployment study.
inline json ids_pipeline(const std::string& matrix_root, const std::string& out_dir,
                         const std::string& detector_filter = "both") {
    std::filesystem::create_directories(out_dir);

    struct Row {
        const char* name;
        io::Deployment train;
        io::Deployment eval;
    };
    const Row rows[] = {
        {"wired", io::Deployment::wired, io::Deployment::wired},
        {"5g_gc", io::Deployment::fiveg_gc, io::Deployment::fiveg_gc},
        {"5g_dc", io::Deployment::fiveg_dc, io::Deployment::fiveg_dc},
        {"gc_on_dc", io::Deployment::fiveg_gc, io::Deployment::fiveg_dc},
        {"dc_on_gc", io::Deployment::fiveg_dc, io::Deployment::fiveg_gc},
    };

    // Cache arrivals per run dir.
    std::map<std::string, std::vector<ids::Arrival>> cache;
    auto arrivals_for = [&](const std::string& dir) -> const std::vector<ids::Arrival>& {
        auto it = cache.find(dir);
        if (it == cache.end())
            it = cache.emplace(dir, load_arrivals(matrix_root + "/" + dir + "/packets.jsonl")).first;
        return it->second;
    };

    json report;
    report["rows"] = json::array();
    json widths = json::object(); // per-deployment IAT bound widths, for model study

    std::map<io::Deployment, ids::IatModel> iat_models;
    std::map<io::Deployment, ids::DtmcModel> dtmc_models;
    for (auto d : matrix_deployments()) {
        const auto& train = arrivals_for(run_dir_name(d, "benign"));
        iat_models[d] = ids::train_iat(train);
        dtmc_models[d] = ids::train_dtmc(train);
        json w = json::object();
        for (const auto& [flow, b] : iat_models[d].flows)
            w[flow.str()] = b.upper_s - b.lower_s;
        widths[io::deployment_name(d)] = w;
    }
    report["iat_bound_widths"] = widths;

    for (const auto& row : rows) {
        for (const std::string det : {"iat", "dtmc"}) {
            if (detector_filter != "both" && detector_filter != det) continue;
            IdsRowResult rr;
            rr.row = row.name;
            rr.detector = det;
            std::vector<std::pair<std::string, std::vector<ids::Alert>>> alert_runs;

            for (auto k : matrix_attacks()) {
                std::string dirname = run_dir_name(row.eval, attack::kind_name(k));
                const auto& trace = arrivals_for(dirname);
                std::vector<ids::Alert> alerts =
                    det == "iat" ? ids::detect_iat(iat_models[row.train], trace)
                                 : ids::detect_dtmc(dtmc_models[row.train], trace);
                auto gt_raw = load_ground_truth(matrix_root + "/" + dirname);
                auto ev = ids::evaluate(alerts, gt_raw);
                rr.attacks_total += ev.attacks_total;
                rr.attacks_detected += ev.attacks_detected;
                rr.false_alerts += ev.false_alert_count;
                alert_runs.emplace_back(dirname, std::move(alerts));
            }
            {
                std::string dirname = run_dir_name(row.eval, "benign");
                const auto& trace = arrivals_for(dirname);
                std::vector<ids::Alert> alerts =
                    det == "iat" ? ids::detect_iat(iat_models[row.train], trace)
                                 : ids::detect_dtmc(dtmc_models[row.train], trace);
                if (!trace.empty())
                    rr.benign_alert_fraction =
                        ids::alert_active_fraction(alerts, trace.front().t, trace.back().t);
                alert_runs.emplace_back(dirname, std::move(alerts));
            }
            write_alerts_csv(out_dir + "/alerts_" + det + "_" + row.name + ".csv", alert_runs);
            report["rows"].push_back(json{{"row", rr.row},
                                          {"detector", rr.detector},
                                          {"attacks_total", rr.attacks_total},
                                          {"attacks_detected", rr.attacks_detected},
                                          {"false_alerts", rr.false_alerts},
                                          {"benign_alert_fraction", rr.benign_alert_fraction}});
        }
    }
    {
        std::ofstream f(out_dir + "/ids_report.json");
        f << report.dump(2) << "\n";
    }
    return report;
}

// ---- jam sweep -----------------------------------------------------------------

inline json jam_sweep(const std::string& out_root, const SweepOptions& o, int workers) {
    std::filesystem::create_directories(out_root + "/runs");
    std::vector<Job> jobs;
    std::vector<std::string> labels;
    jobs.push_back({make_sweep_point(std::nullopt, 0.0, o), out_root + "/runs/baseline"});
    labels.push_back("none,0");
    for (bool directed : {true, false}) {
        for (double p = o.power_min_dbm; p <= o.power_max_dbm + 1e-9; p += o.power_step_db) {
            std::ostringstream dir;
            dir << out_root << "/runs/" << (directed ? "directed" : "undirected") << "_" << p;
            jobs.push_back({make_sweep_point(directed, p, o), dir.str()});
            std::ostringstream lab;
            lab << (directed ? "directed" : "undirected") << "," << p;
            labels.push_back(lab.str());
        }
    }
    auto results = run_jobs(std::move(jobs), workers);

    std::ofstream csv(out_root + "/curves.csv");
    csv << "mode,power_dbm,jitter_s,retx_per_s,halting_fraction,delivered,drops\n";
    json rows = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& m = results[i].metrics;
        std::uint64_t drops = m.drops_max_retx + m.drops_queue_full + m.drops_suppressed;
        csv << labels[i] << "," << m.jitter_s << "," << m.retx_per_s << ","
            << m.stationary_fraction << "," << m.delivered << "," << drops << "\n";
        auto comma = labels[i].find(',');
        rows.push_back(json{{"mode", labels[i].substr(0, comma)},
                            {"power_dbm", std::stod(labels[i].substr(comma + 1))},
                            {"jitter_s", m.jitter_s},
                            {"retx_per_s", m.retx_per_s},
                            {"halting_fraction", m.stationary_fraction},
                            {"delivered", m.delivered},
                            {"drops", drops}});
    }
    json out;
    out["rows"] = rows;
    {
        std::ofstream f(out_root + "/sweep_summary.json");
        f << out.dump(2) << "\n";
    }
    return out;
}

// First grid power where the metric reaches the threshold (linear interpolation
// between the bracketing grid points).
inline double threshold_crossing(const std::vector<std::pair<double, double>>& curve,
                                 double threshold) {
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].second >= threshold) {
            if (i == 0) return curve[0].first;
            double x0 = curve[i - 1].first, y0 = curve[i - 1].second;
            double x1 = curve[i].first, y1 = curve[i].second;
            if (y1 == y0) return x1;
            return x0 + (threshold - y0) * (x1 - x0) / (y1 - y0);
        }
    }
    return std::nan("");
}

// ---- report -------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline json make_report(const std::string& root, std::ostream& text) {
    std::vector<CheckResult> checks;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass, detail});
    };

    // Matrix-driven checks.
    try {
        json m = load_json_file(root + "/matrix/matrix_summary.json");
        auto spills = [&](const char* dep, const char* scen) {
            return m.at(dep).at(scen).at("spills").get<std::uint64_t>();
        };
        bool benign_zero = spills("wired", "benign") == 0 && spills("5g_gc", "benign") == 0 &&
                           spills("5g_dc", "benign") == 0;
        add("benign_row_zero_spills", benign_zero,
            "wired=" + std::to_string(spills("wired", "benign")) +
                " gc=" + std::to_string(spills("5g_gc", "benign")) +
                " dc=" + std::to_string(spills("5g_dc", "benign")));
        std::uint64_t sw = spills("wired", "suppression"), sg = spills("5g_gc", "suppression"),
                      sd = spills("5g_dc", "suppression");
        add("suppression_equal_and_nonzero", sw == sg && sg == sd && sw >= 1,
            "wired=" + std::to_string(sw) + " gc=" + std::to_string(sg) + " dc=" + std::to_string(sd));
        std::uint64_t mw = spills("wired", "mitm"), mg = spills("5g_gc", "mitm"),
                      md = spills("5g_dc", "mitm");
        add("mitm_dc_amplified", md >= mg && mg == mw && mw >= 1,
            "wired=" + std::to_string(mw) + " gc=" + std::to_string(mg) + " dc=" + std::to_string(md));
        std::uint64_t dw = spills("wired", "dos"), dg = spills("5g_gc", "dos");
        bool dc_disrupted = m.at("5g_dc").at("dos").at("safety_halts").get<std::uint64_t>() >= 1 ||
                            m.at("5g_dc").at("dos").at("longest_spill_s").get<double>() >= 1.0;
        add("dos_wired_gc_clean_dc_disrupted", dw == 0 && dg == 0 && dc_disrupted,
            "wired=" + std::to_string(dw) + " gc=" + std::to_string(dg) +
                " dc_halts=" + m.at("5g_dc").at("dos").at("safety_halts").dump() +
                " dc_longest_spill=" + m.at("5g_dc").at("dos").at("longest_spill_s").dump());
    } catch (const std::exception& e) {
        add("matrix_outputs_present", false, e.what());
    }

    // IDS-driven checks.
    try {
        json r = load_json_file(root + "/ids/ids_report.json");
        auto row = [&](const std::string& name, const std::string& det) -> json {
            for (const auto& x : r.at("rows"))
                if (x.at("row") == name && x.at("detector") == det) return x;
            throw std::runtime_error("ids row missing: " + name + "/" + det);
        };
        auto fp = [&](const std::string& n) { return row(n, "iat").at("false_alerts").get<std::uint64_t>(); };
        bool fp_order = fp("wired") == 0 && fp("wired") <= fp("5g_gc") && fp("5g_gc") <= fp("5g_dc");
        add("iat_false_alert_ordering", fp_order,
            "wired=" + std::to_string(fp("wired")) + " gc=" + std::to_string(fp("5g_gc")) +
                " dc=" + std::to_string(fp("5g_dc")));
        auto wi = row("wired", "iat");
        bool det80 = wi.at("attacks_detected").get<double>() >=
                     0.8 * wi.at("attacks_total").get<double>();
        add("iat_wired_detection_rate", det80, wi.dump());
        bool dtmc_fewer = row("wired", "dtmc").at("attacks_detected").get<std::uint64_t>() <
                          wi.at("attacks_detected").get<std::uint64_t>();
        add("dtmc_detects_fewer_than_iat_on_wired", dtmc_fewer,
            "dtmc=" + row("wired", "dtmc").at("attacks_detected").dump() +
                " iat=" + wi.at("attacks_detected").dump());
        double frac = row("gc_on_dc", "iat").at("benign_alert_fraction").get<double>();
        add("gc_model_on_dc_overwhelmed", frac > 0.5, "benign_alert_fraction=" + std::to_string(frac));
        bool cross = row("dc_on_gc", "iat").at("false_alerts").get<std::uint64_t>() <
                     row("5g_dc", "iat").at("false_alerts").get<std::uint64_t>();
        add("dc_model_on_gc_fewer_false_alerts", cross,
            "dc_on_gc=" + row("dc_on_gc", "iat").at("false_alerts").dump() +
                " dc_on_dc=" + row("5g_dc", "iat").at("false_alerts").dump());
        // width_DC > width_GC on every flow modeled in both
        const json& wgc = r.at("iat_bound_widths").at("5g_gc");
        const json& wdc = r.at("iat_bound_widths").at("5g_dc");
        bool widths_ok = true;
        std::string bad;
        for (auto it = wgc.begin(); it != wgc.end(); ++it) {
            if (!wdc.contains(it.key())) continue;
            if (!(wdc.at(it.key()).get<double>() > it.value().get<double>())) {
                widths_ok = false;
                bad = it.key();
                break;
            }
        }
        add("iat_bound_width_dc_exceeds_gc", widths_ok, widths_ok ? "all flows" : "flow " + bad);
    } catch (const std::exception& e) {
        add("ids_outputs_present", false, e.what());
    }

    // Sweep-driven checks.
    try {
        json s = load_json_file(root + "/sweep/sweep_summary.json");
        std::vector<std::pair<double, double>> jit_d, jit_u, halt_d, halt_u, retx_d;
        double baseline_halt = std::nan("");
        for (const auto& x : s.at("rows")) {
            std::string mode = x.at("mode");
            double p = x.at("power_dbm").get<double>();
            if (mode == "none") baseline_halt = x.at("halting_fraction").get<double>();
            if (mode == "directed") {
                jit_d.push_back({p, x.at("jitter_s").get<double>()});
                halt_d.push_back({p, x.at("halting_fraction").get<double>()});
                retx_d.push_back({p, x.at("retx_per_s").get<double>()});
            } else if (mode == "undirected") {
                jit_u.push_back({p, x.at("jitter_s").get<double>()});
                halt_u.push_back({p, x.at("halting_fraction").get<double>()});
            }
        }
        auto sortc = [](auto& v) {
            std::sort(v.begin(), v.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
        };
        sortc(jit_d); sortc(jit_u); sortc(halt_d); sortc(halt_u); sortc(retx_d);

        add("baseline_halting_fraction", std::abs(baseline_halt - 0.55) <= 0.10,
            "baseline=" + std::to_string(baseline_halt));
        double jd = threshold_crossing(jit_d, 0.010), ju = threshold_crossing(jit_u, 0.010);
        bool jitter_gap = !std::isnan(jd) && !std::isnan(ju) && jd < ju &&
                          std::abs((ju - jd) - 25.0) <= 3.0;
        add("jitter_crossing_gap", jitter_gap,
            "directed=" + std::to_string(jd) + " undirected=" + std::to_string(ju));
        double hd = threshold_crossing(halt_d, 0.80), hu = threshold_crossing(halt_u, 0.80);
        bool halt_gap = !std::isnan(hd) && !std::isnan(hu) && hd < hu &&
                        std::abs((hu - hd) - 25.0) <= 3.0;
        add("halting_crossing_gap", halt_gap,
            "directed=" + std::to_string(hd) + " undirected=" + std::to_string(hu));
        std::size_t peak = 0;
        for (std::size_t i = 0; i < retx_d.size(); ++i)
            if (retx_d[i].second > retx_d[peak].second) peak = i;
        bool interior = !retx_d.empty() && peak > 0 && peak + 1 < retx_d.size();
        add("retx_curve_interior_maximum", interior,
            retx_d.empty() ? "no data" : "peak_at=" + std::to_string(retx_d[peak].first) + " dBm");
    } catch (const std::exception& e) {
        add("sweep_outputs_present", false, e.what());
    }

    bool all = true;
    json out;
    out["checks"] = json::array();
    for (const auto& c : checks) {
        all = all && c.pass;
        out["checks"].push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        text << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  (" << c.detail << ")\n";
    }
    out["all_pass"] = all;
    text << (all ? "RESULT: all checks passed\n" : "RESULT: some checks failed\n");
    return out;
}

} // namespace icstb::sim
