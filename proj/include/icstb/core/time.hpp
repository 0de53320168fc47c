#pragma once

#include <cstdint>
#include <compare>

namespace icstb {

// Simulation time as integer nanoseconds. All periods used by the testbed
// (1 ms ticks, 0.125 ms slots, 40/100 ms cadences) are exactly representable,
// so event ordering never depends on floating-point rounding.
struct SimTime {
    std::int64_t ns = 0;

    constexpr auto operator<=>(const SimTime&) const = default;

    static constexpr SimTime from_ns(std::int64_t v) { return {v}; }
    static constexpr SimTime from_us(std::int64_t v) { return {v * 1'000}; }
    static constexpr SimTime from_ms(std::int64_t v) { return {v * 1'000'000}; }
    static constexpr SimTime from_s(std::int64_t v) { return {v * 1'000'000'000}; }

    // Rounded conversion for config values given in (possibly fractional) seconds.
    static constexpr SimTime from_seconds(double s) {
        double ns_d = s * 1e9;
        return {static_cast<std::int64_t>(ns_d < 0 ? ns_d - 0.5 : ns_d + 0.5)};
    }

    constexpr double seconds() const { return static_cast<double>(ns) * 1e-9; }

    constexpr SimTime operator+(SimTime o) const { return {ns + o.ns}; }
    constexpr SimTime operator-(SimTime o) const { return {ns - o.ns}; }
    constexpr SimTime& operator+=(SimTime o) { ns += o.ns; return *this; }
};

constexpr SimTime operator*(std::int64_t k, SimTime t) { return {k * t.ns}; }

} // namespace icstb
