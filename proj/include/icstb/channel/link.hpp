#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "icstb/core/rng.hpp"
#include "icstb/core/time.hpp"

namespace icstb::channel {

struct Position {
    double x = 0, y = 0, z = 0;
};

inline double distance_m(const Position& a, const Position& b) {
    double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

enum class RadioRole : std::uint8_t { gnb, ue, jammer, monitor };

inline double beamforming_gain_db(int antenna_n) {
    return 10.0 * std::log10(static_cast<double>(antenna_n) * antenna_n);
}

struct NodeRadio {
    std::string name;
    Position pos;
    double tx_power_dbm = 23.0;
    int antenna_n = 2; // n x n array
    RadioRole role = RadioRole::ue;

    double gain_db() const { return beamforming_gain_db(antenna_n); }
};

// 3GPP indoor-factory LoS closed form.
inline double path_loss_db(double d_m, double f_ghz) {
    if (d_m <= 0.0) throw std::logic_error("path_loss: distance must be positive");
    return 31.84 + 21.5 * std::log10(d_m) + 19.0 * std::log10(f_ghz);
}

inline double db_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_db(double mw) { return 10.0 * std::log10(mw); }

struct JamSource {
    Position pos;
    double tx_power_dbm = 0.0;
    bool directed = false; // beam aimed at the protected receiver
};

// Spatial coupling of a jammer into a link: a 4x4 array aimed at the receiver
// contributes its full beamforming gain; an undirected emitter is seen off-beam
// by the 8x8 receiver and pays a fixed spatial-rejection penalty.
inline constexpr double kDirectedJamGainDb = 12.04;   // 10*log10(16), aligned
inline constexpr double kUndirectedJamPenaltyDb = -13.0;

struct LinkBudgetParams {
    double f_ghz = 28.0;                // band n257
    double noise_floor_dbm = -84.0;
    double extra_noise_db = 0.0;        // degraded-channel knob
    double shadow_sigma_db = 4.3;
    SimTime shadow_coherence = SimTime::from_ms(100);
    double per_alpha = 1.0;             // logistic steepness, 1/dB
    double per_beta_db = 5.0;           // logistic midpoint
    std::uint64_t seed = 0;
    bool shadowing_enabled = true;
};

// Link-budget calculator. Shadowing is a pure function of (seed, node pair,
// coherence interval), so the set of callers and their ordering cannot change
// the draws.
class LinkBudget {
public:
    explicit LinkBudget(const LinkBudgetParams& p = {}) : p_(p) {}

    const LinkBudgetParams& params() const { return p_; }
    void set_extra_noise_db(double v) { p_.extra_noise_db = v; }

    double shadow_db(const std::string& a, const std::string& b, SimTime t) const {
        if (!p_.shadowing_enabled) return 0.0;
        std::uint64_t pair_key = fnv1a64(a) ^ (splitmix64(fnv1a64(b)));
        std::int64_t interval = t.ns / p_.shadow_coherence.ns;
        return keyed_normal(p_.seed, "channel.shadow", pair_key, interval, 0.0, p_.shadow_sigma_db);
    }

    // Received power of tx at rx including beamforming on both ends.
    double rx_power_dbm(const NodeRadio& tx, const NodeRadio& rx, SimTime t) const {
        double pl = path_loss_db(distance_m(tx.pos, rx.pos), p_.f_ghz) + shadow_db(tx.name, rx.name, t);
        return tx.tx_power_dbm + tx.gain_db() + rx.gain_db() - pl;
    }

    double jam_rx_power_dbm(const JamSource& j, const NodeRadio& rx, SimTime t,
                            const std::string& jam_name = "jammer") const {
        double g = j.directed ? kDirectedJamGainDb : kUndirectedJamPenaltyDb;
        double pl = path_loss_db(distance_m(j.pos, rx.pos), p_.f_ghz) + shadow_db(jam_name, rx.name, t);
        return j.tx_power_dbm + g - pl;
    }

    double noise_plus_interference_dbm(const NodeRadio& rx, const std::vector<JamSource>& jams,
                                       SimTime t) const {
        double total_mw = db_to_mw(p_.noise_floor_dbm + p_.extra_noise_db);
        for (const auto& j : jams) total_mw += db_to_mw(jam_rx_power_dbm(j, rx, t));
        return mw_to_db(total_mw);
    }

    double sinr_db(const NodeRadio& tx, const NodeRadio& rx, const std::vector<JamSource>& jams,
                   SimTime t) const {
        return rx_power_dbm(tx, rx, t) - noise_plus_interference_dbm(rx, jams, t);
    }

    // Logistic SINR -> packet error rate abstraction (the artifact's PHY boundary).
    double per(double sinr_db_value) const {
        return 1.0 / (1.0 + std::exp(p_.per_alpha * (sinr_db_value - p_.per_beta_db)));
    }

private:
    LinkBudgetParams p_;
};

// Plain dB/dBm ledger arithmetic on stated component values (kept separate
// from NodeRadio so tests can pin the arithmetic with literal inputs).
inline double sinr_from_budget_db(double ptx_dbm, double gtx_db, double grx_db,
                                  double pl_db, double noise_dbm,
                                  double interference_dbm = -INFINITY) {
    double denom_mw = db_to_mw(noise_dbm);
    if (interference_dbm > -INFINITY) denom_mw += db_to_mw(interference_dbm);
    return ptx_dbm + gtx_db + grx_db - pl_db - mw_to_db(denom_mw);
}

} // namespace icstb::channel
