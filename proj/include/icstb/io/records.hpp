#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "icstb/core/time.hpp"

namespace icstb::io {

inline constexpr int kSchemaVersion = 1;

// One record per transmission copy: a delivered copy or a terminal drop.
// Field order and types are fixed; see the schema reference in the README.
struct PacketRecord {
    std::uint64_t msg_id = 0;
    SimTime t_send{};
    SimTime t_recv{};       // valid only when delivered
    bool delivered = false;
    std::string src;        // claimed source endpoint (spoofable)
    std::string dst;
    std::uint32_t size = 0; // wire bytes
    std::string cls;        // message class, e.g. "fc03_req"
    std::uint16_t tid = 0;
    std::uint8_t retx = 0;  // attempt index of this copy (0 = first try)
    bool dup = false;       // true for copies after the first delivery
    double sinr_db = NAN;   // NaN on wired links -> null
    const char* drop = nullptr; // "max_retx" | "suppressed" | "queue_full"
};

struct EventRecord {
    SimTime t{};
    std::string kind;
    std::string detail; // pre-rendered JSON object (may be empty)
};

namespace jsonfmt {
inline void append_int(std::string& out, std::int64_t v) {
    char buf[24];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}
inline void append_double(std::string& out, double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}
inline void append_escaped(std::string& out, const std::string& s) {
    out.push_back('"');
    for (char c : s) {
        if (c == '"' || c == '\\') { out.push_back('\\'); out.push_back(c); }
        else out.push_back(c);
    }
    out.push_back('"');
}
} // namespace jsonfmt

inline std::string to_jsonl(const PacketRecord& p) {
    std::string o;
    o.reserve(192);
    o += "{\"v\":";
    jsonfmt::append_int(o, kSchemaVersion);
    o += ",\"msg\":";
    jsonfmt::append_int(o, static_cast<std::int64_t>(p.msg_id));
    o += ",\"ts\":";
    jsonfmt::append_int(o, p.t_send.ns);
    o += ",\"tr\":";
    if (p.delivered) jsonfmt::append_int(o, p.t_recv.ns); else o += "null";
    o += ",\"src\":";
    jsonfmt::append_escaped(o, p.src);
    o += ",\"dst\":";
    jsonfmt::append_escaped(o, p.dst);
    o += ",\"size\":";
    jsonfmt::append_int(o, p.size);
    o += ",\"cls\":";
    jsonfmt::append_escaped(o, p.cls);
    o += ",\"tid\":";
    jsonfmt::append_int(o, p.tid);
    o += ",\"retx\":";
    jsonfmt::append_int(o, p.retx);
    o += ",\"dup\":";
    o += p.dup ? "1" : "0";
    o += ",\"sinr\":";
    if (std::isnan(p.sinr_db)) o += "null"; else jsonfmt::append_double(o, p.sinr_db);
    o += ",\"drop\":";
    if (p.drop) { o += '"'; o += p.drop; o += '"'; } else o += "null";
    o += "}\n";
    return o;
}

inline std::string to_jsonl(const EventRecord& e) {
    std::string o;
    o.reserve(96);
    o += "{\"v\":";
    jsonfmt::append_int(o, kSchemaVersion);
    o += ",\"t\":";
    jsonfmt::append_int(o, e.t.ns);
    o += ",\"kind\":";
    jsonfmt::append_escaped(o, e.kind);
    if (!e.detail.empty()) {
        o += ",\"detail\":";
        o += e.detail;
    }
    o += "}\n";
    return o;
}

class LineFile {
public:
    LineFile() = default;
    explicit LineFile(const std::string& path) { open(path); }
    void open(const std::string& path) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }
    bool is_open() const { return out_.is_open(); }
    void write(const std::string& line) { out_.write(line.data(), static_cast<std::streamsize>(line.size())); }
    void close() { if (out_.is_open()) out_.close(); }

private:
    std::ofstream out_;
};

using PacketSink = std::function<void(const PacketRecord&)>;
using EventSink = std::function<void(const EventRecord&)>;

} // namespace icstb::io
