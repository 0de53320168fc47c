#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "icstb/core/rng.hpp"
#include "icstb/core/time.hpp"

namespace icstb {

struct SimEvent {
    SimTime fire_at;
    std::uint64_t seq = 0;        // assigned by the engine, FIFO tie-break
    std::string target;           // component label, for trace hooks
    std::function<void()> action;
};

// Single-threaded discrete-event engine. Events execute in strict
// (fire_at, seq) order; scheduling in the past is a programming error.
class Engine {
public:
    explicit Engine(std::uint64_t root_seed = 0) : rng_(root_seed) {}

    SimTime now() const { return now_; }
    RngHub& rng() { return rng_; }

    using TraceHook = std::function<void(const SimEvent&)>;
    void set_trace_hook(TraceHook h) { trace_hook_ = std::move(h); }

    void schedule(SimTime fire_at, std::string target, std::function<void()> action) {
        if (fire_at < now_)
            throw std::logic_error("Engine::schedule: event in the past (target=" + target + ")");
        queue_.push(Entry{fire_at, next_seq_++, std::move(target), std::move(action)});
    }

    void schedule_in(SimTime delay, std::string target, std::function<void()> action) {
        schedule(now_ + delay, std::move(target), std::move(action));
    }

    // Fires every event with fire_at <= t_end, leaves now() == t_end.
    std::uint64_t run_until(SimTime t_end) {
        std::uint64_t fired = 0;
        while (!queue_.empty() && queue_.top().fire_at <= t_end) {
            Entry e = queue_.top();
            queue_.pop();
            assert(e.fire_at >= now_ && "event queue produced out-of-order event");
            now_ = e.fire_at;
            if (trace_hook_) {
                SimEvent ev{e.fire_at, e.seq, e.target, nullptr};
                trace_hook_(ev);
            }
            e.action();
            ++fired;
        }
        if (t_end > now_) now_ = t_end;
        return fired;
    }

    bool empty() const { return queue_.empty(); }

private:
    struct Entry {
        SimTime fire_at;
        std::uint64_t seq;
        std::string target;
        std::function<void()> action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.fire_at.ns != b.fire_at.ns) return a.fire_at.ns > b.fire_at.ns;
            return a.seq > b.seq;
        }
    };

    SimTime now_{0};
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    RngHub rng_;
    TraceHook trace_hook_;
};

} // namespace icstb
