#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "icstb/core/time.hpp"
#include "icstb/modbus/modbus.hpp"

namespace icstb::modbus {

// Flow identity used consistently by the traffic traces and the detectors:
// (source endpoint, destination endpoint, function code, direction). The
// finest keying derivable from the wire without payload semantics.
struct FlowKey {
    std::string src;
    std::string dst;
    std::uint8_t fc = 0;
    Dir dir = Dir::request;

    auto tie() const { return std::tie(src, dst, fc, dir); }
    bool operator==(const FlowKey& o) const { return tie() == o.tie(); }
    bool operator<(const FlowKey& o) const { return tie() < o.tie(); }

    std::string str() const {
        char fcbuf[3];
        fcbuf[0] = "0123456789abcdef"[(fc >> 4) & 0xf];
        fcbuf[1] = "0123456789abcdef"[fc & 0xf];
        fcbuf[2] = 0;
        return src + ">" + dst + ":fc" + fcbuf + (dir == Dir::request ? ":req" : ":rsp");
    }
};

// Message class string as it appears in packet records.
inline std::string msg_class(std::uint8_t fc, Dir dir) {
    char fcbuf[3];
    fcbuf[0] = "0123456789abcdef"[(fc >> 4) & 0xf];
    fcbuf[1] = "0123456789abcdef"[fc & 0xf];
    fcbuf[2] = 0;
    return std::string("fc") + fcbuf + (dir == Dir::request ? "_req" : "_rsp");
}

// Request/response bookkeeping per requester. A response matches the oldest
// pending request with equal (transaction_id, unit_id, function code);
// anything else (duplicates, replays, injected responses) is an orphan.
class RequestLog {
public:
    struct Pending {
        SimTime sent_at;
        std::string responder;
    };

    void record_request(std::uint16_t tid, std::uint8_t unit, std::uint8_t fc,
                        const std::string& responder, SimTime t) {
        pending_[key(tid, unit, fc)].push_back(Pending{t, responder});
    }

    struct MatchResult {
        bool matched = false;
        SimTime request_sent_at{};
    };

    MatchResult match_response(std::uint16_t tid, std::uint8_t unit, std::uint8_t fc) {
        auto it = pending_.find(key(tid, unit, fc & 0x7f));
        if (it == pending_.end() || it->second.empty()) {
            ++orphans_;
            return {};
        }
        MatchResult r{true, it->second.front().sent_at};
        it->second.erase(it->second.begin());
        if (it->second.empty()) pending_.erase(it);
        return r;
    }

    std::uint64_t orphan_count() const { return orphans_; }

    std::size_t pending_count() const {
        std::size_t n = 0;
        for (const auto& [k, v] : pending_) n += v.size();
        return n;
    }

private:
    static std::uint64_t key(std::uint16_t tid, std::uint8_t unit, std::uint8_t fc) {
        return (static_cast<std::uint64_t>(tid) << 16) |
               (static_cast<std::uint64_t>(unit) << 8) | fc;
    }
    std::map<std::uint64_t, std::vector<Pending>> pending_;
    std::uint64_t orphans_ = 0;
};

} // namespace icstb::modbus
