#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icstb/channel/channel.hpp"
#include "icstb/channel/link.hpp"
#include "icstb/core/time.hpp"

namespace icstb::attack {

// Passive spectrum analyzer outside the facility: integrates the received
// power of every radio transmission (and active jammer) into a fixed-cadence
// power series. Draws nothing from the simulation's random streams and emits
// no traffic, so its presence cannot perturb any other trace record.
class SpectrumMonitor {
public:
    SpectrumMonitor(channel::Position pos, double f_ghz, double noise_floor_dbm,
                    SimTime cadence, SimTime duration)
        : pos_(pos), f_ghz_(f_ghz), noise_floor_dbm_(noise_floor_dbm), cadence_(cadence) {
        std::size_t n = static_cast<std::size_t>(duration.ns / cadence.ns) + 1;
        bins_mw_.assign(n, 0.0);
    }

    // Channel activity hook: one radio transmission occupying [start, end).
    void on_transmission(const channel::NodeRadio& tx, SimTime start, SimTime end) {
        // Off-beam observer: the transmit beam points at the gNB, so the
        // monitor sees the signal without the array gain.
        double prx_dbm = tx.tx_power_dbm - channel::path_loss_db(
                                               channel::distance_m(tx.pos, pos_), f_ghz_);
        add_interval(prx_dbm, start, end);
    }

    // Jammer airtime, added per duty interval.
    void add_jammer(const channel::JammerEntry& j) {
        for (const auto& [a, b] : j.on_intervals) {
            double prx_dbm = j.src.tx_power_dbm -
                             channel::path_loss_db(channel::distance_m(j.src.pos, pos_), f_ghz_);
            add_interval(prx_dbm, a, b);
        }
    }

    // Aggregate received power per bin, noise floor included.
    std::vector<double> samples_dbm() const {
        std::vector<double> out(bins_mw_.size());
        double noise_mw = channel::db_to_mw(noise_floor_dbm_);
        for (std::size_t i = 0; i < bins_mw_.size(); ++i)
            out[i] = channel::mw_to_db(noise_mw + bins_mw_[i]);
        return out;
    }

    double cadence_s() const { return cadence_.seconds(); }

private:
    void add_interval(double prx_dbm, SimTime start, SimTime end) {
        if (end <= start) return;
        double mw = channel::db_to_mw(prx_dbm);
        std::int64_t c = cadence_.ns;
        for (std::int64_t b = start.ns / c; b * c < end.ns; ++b) {
            if (b < 0 || static_cast<std::size_t>(b) >= bins_mw_.size()) break;
            std::int64_t lo = std::max(start.ns, b * c);
            std::int64_t hi = std::min(end.ns, (b + 1) * c);
            bins_mw_[static_cast<std::size_t>(b)] +=
                mw * static_cast<double>(hi - lo) / static_cast<double>(c);
        }
    }

    channel::Position pos_;
    double f_ghz_;
    double noise_floor_dbm_;
    SimTime cadence_;
    std::vector<double> bins_mw_;
};

struct CycleEstimate {
    bool found = false;
    double period_s = 0.0;
    double peak_correlation = 0.0;
};

// Dominant process-cycle period from a spectrum power series: autocorrelation
// over lags in [0.5 s, 60 s]. The series is re-binned to 200 ms (a common
// multiple of the 40/100 ms message cadences, which flattens the message-rate
// combs the lag window would otherwise pick up) and mean-removed; the peak
// must clear 3x the autocorrelation noise floor.
inline CycleEstimate infer_cycle(const std::vector<double>& samples_dbm, double cadence_s,
                                 double lag_min_s = 0.5, double lag_max_s = 60.0) {
    CycleEstimate est;
    const double bin_s = 0.2;
    std::size_t per_bin = static_cast<std::size_t>(std::max(1.0, std::round(bin_s / cadence_s)));
    std::vector<double> binned;
    binned.reserve(samples_dbm.size() / per_bin + 1);
    for (std::size_t i = 0; i + per_bin <= samples_dbm.size(); i += per_bin) {
        double acc = 0.0;
        for (std::size_t j = 0; j < per_bin; ++j)
            acc += std::pow(10.0, samples_dbm[i + j] / 10.0);
        binned.push_back(acc / static_cast<double>(per_bin));
    }
    const std::size_t n = binned.size();
    if (n < 20) return est;

    double mean = 0.0;
    for (double v : binned) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : binned) v -= mean;

    double energy = 0.0;
    for (double v : binned) energy += v * v;
    if (energy <= 0.0) return est;

    const double eff_bin_s = cadence_s * static_cast<double>(per_bin);
    std::size_t lag_lo = static_cast<std::size_t>(std::ceil(lag_min_s / eff_bin_s));
    std::size_t lag_hi = std::min(static_cast<std::size_t>(lag_max_s / eff_bin_s), n / 2);
    if (lag_lo < 1 || lag_lo >= lag_hi) return est;

    std::vector<double> ac(lag_hi + 1, 0.0);
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += binned[i] * binned[i + lag];
        ac[lag] = s / energy;
    }

    std::size_t peak = lag_lo;
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag)
        if (ac[lag] > ac[peak]) peak = lag;

    // Noise floor: spread of the autocorrelation away from the peak.
    double sum = 0.0, sum2 = 0.0;
    std::size_t cnt = 0;
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
        if (lag + 5 >= peak && lag <= peak + 5) continue;
        sum += ac[lag];
        sum2 += ac[lag] * ac[lag];
        ++cnt;
    }
    if (cnt < 8) return est;
    double m = sum / static_cast<double>(cnt);
    double var = sum2 / static_cast<double>(cnt) - m * m;
    double floor = std::sqrt(std::max(var, 0.0));

    est.peak_correlation = ac[peak];
    if (ac[peak] < 3.0 * floor || ac[peak] < 0.05) return est;

    // Parabolic refinement around the discrete peak.
    double refined = static_cast<double>(peak);
    if (peak > lag_lo && peak < lag_hi) {
        double y0 = ac[peak - 1], y1 = ac[peak], y2 = ac[peak + 1];
        double denom = y0 - 2.0 * y1 + y2;
        if (std::abs(denom) > 1e-12) refined += 0.5 * (y0 - y2) / denom;
    }
    est.found = true;
    est.period_s = refined * eff_bin_s;
    return est;
}

} // namespace icstb::attack
