#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace icstb::modbus {

using Bytes = std::vector<std::uint8_t>;

enum class Fc : std::uint8_t {
    read_holding_registers = 0x03,
    write_single_coil      = 0x05,
    write_single_register  = 0x06,
};

enum class Dir : std::uint8_t { request, response };

struct ReadHoldingRegistersReq {
    std::uint16_t addr = 0;
    std::uint16_t count = 1; // 1..125
    bool operator==(const ReadHoldingRegistersReq&) const = default;
};
struct ReadHoldingRegistersResp {
    std::vector<std::uint16_t> values;
    bool operator==(const ReadHoldingRegistersResp&) const = default;
};
struct WriteSingleRegisterReq {
    std::uint16_t addr = 0;
    std::uint16_t value = 0;
    bool operator==(const WriteSingleRegisterReq&) const = default;
};
struct WriteSingleRegisterResp {
    std::uint16_t addr = 0;
    std::uint16_t value = 0;
    bool operator==(const WriteSingleRegisterResp&) const = default;
};
struct WriteSingleCoilReq {
    std::uint16_t addr = 0;
    bool on = false; // wire value 0xFF00 / 0x0000
    bool operator==(const WriteSingleCoilReq&) const = default;
};
struct WriteSingleCoilResp {
    std::uint16_t addr = 0;
    bool on = false;
    bool operator==(const WriteSingleCoilResp&) const = default;
};
struct ExceptionResp {
    std::uint8_t function = 0; // original fc; encoded as fc | 0x80
    std::uint8_t code = 1;
    bool operator==(const ExceptionResp&) const = default;
};

using Pdu = std::variant<ReadHoldingRegistersReq, ReadHoldingRegistersResp,
                         WriteSingleRegisterReq, WriteSingleRegisterResp,
                         WriteSingleCoilReq, WriteSingleCoilResp, ExceptionResp>;

struct MbapFrame {
    std::uint16_t transaction_id = 0;
    std::uint16_t protocol_id = 0; // always 0 on the wire
    std::uint8_t unit_id = 0;
    Pdu pdu;
    bool operator==(const MbapFrame&) const = default;
};

inline Fc pdu_fc(const Pdu& p) {
    struct V {
        Fc operator()(const ReadHoldingRegistersReq&) const { return Fc::read_holding_registers; }
        Fc operator()(const ReadHoldingRegistersResp&) const { return Fc::read_holding_registers; }
        Fc operator()(const WriteSingleRegisterReq&) const { return Fc::write_single_register; }
        Fc operator()(const WriteSingleRegisterResp&) const { return Fc::write_single_register; }
        Fc operator()(const WriteSingleCoilReq&) const { return Fc::write_single_coil; }
        Fc operator()(const WriteSingleCoilResp&) const { return Fc::write_single_coil; }
        Fc operator()(const ExceptionResp& e) const { return static_cast<Fc>(e.function); }
    };
    return std::visit(V{}, p);
}

inline Dir pdu_dir(const Pdu& p) {
    struct V {
        Dir operator()(const ReadHoldingRegistersReq&) const { return Dir::request; }
        Dir operator()(const ReadHoldingRegistersResp&) const { return Dir::response; }
        Dir operator()(const WriteSingleRegisterReq&) const { return Dir::request; }
        Dir operator()(const WriteSingleRegisterResp&) const { return Dir::response; }
        Dir operator()(const WriteSingleCoilReq&) const { return Dir::request; }
        Dir operator()(const WriteSingleCoilResp&) const { return Dir::response; }
        Dir operator()(const ExceptionResp&) const { return Dir::response; }
    };
    return std::visit(V{}, p);
}

namespace detail {
inline void put_u16(Bytes& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
}
inline std::uint16_t get_u16(const Bytes& b, std::size_t off) {
    return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}
} // namespace detail

inline std::size_t encoded_pdu_size(const Pdu& p) {
    struct V {
        std::size_t operator()(const ReadHoldingRegistersReq&) const { return 5; }
        std::size_t operator()(const ReadHoldingRegistersResp& r) const { return 2 + 2 * r.values.size(); }
        std::size_t operator()(const WriteSingleRegisterReq&) const { return 5; }
        std::size_t operator()(const WriteSingleRegisterResp&) const { return 5; }
        std::size_t operator()(const WriteSingleCoilReq&) const { return 5; }
        std::size_t operator()(const WriteSingleCoilResp&) const { return 5; }
        std::size_t operator()(const ExceptionResp&) const { return 2; }
    };
    return std::visit(V{}, p);
}

// Big-endian Modbus/TCP layout. Invariant violations are caller bugs.
inline Bytes encode(const MbapFrame& f) {
    if (f.protocol_id != 0)
        throw std::logic_error("modbus::encode: protocol_id must be 0");
    if (const auto* r = std::get_if<ReadHoldingRegistersReq>(&f.pdu)) {
        if (r->count < 1 || r->count > 125)
            throw std::logic_error("modbus::encode: register count out of range");
    }
    if (const auto* r = std::get_if<ReadHoldingRegistersResp>(&f.pdu)) {
        if (r->values.empty() || r->values.size() > 125)
            throw std::logic_error("modbus::encode: response register count out of range");
    }

    Bytes out;
    out.reserve(7 + encoded_pdu_size(f.pdu));
    detail::put_u16(out, f.transaction_id);
    detail::put_u16(out, 0);
    detail::put_u16(out, static_cast<std::uint16_t>(1 + encoded_pdu_size(f.pdu)));
    out.push_back(f.unit_id);

    struct V {
        Bytes& out;
        void operator()(const ReadHoldingRegistersReq& p) const {
            out.push_back(0x03);
            detail::put_u16(out, p.addr);
            detail::put_u16(out, p.count);
        }
        void operator()(const ReadHoldingRegistersResp& p) const {
            out.push_back(0x03);
            out.push_back(static_cast<std::uint8_t>(2 * p.values.size()));
            for (std::uint16_t v : p.values) detail::put_u16(out, v);
        }
        void operator()(const WriteSingleRegisterReq& p) const {
            out.push_back(0x06);
            detail::put_u16(out, p.addr);
            detail::put_u16(out, p.value);
        }
        void operator()(const WriteSingleRegisterResp& p) const {
            out.push_back(0x06);
            detail::put_u16(out, p.addr);
            detail::put_u16(out, p.value);
        }
        void operator()(const WriteSingleCoilReq& p) const {
            out.push_back(0x05);
            detail::put_u16(out, p.addr);
            detail::put_u16(out, p.on ? 0xFF00 : 0x0000);
        }
        void operator()(const WriteSingleCoilResp& p) const {
            out.push_back(0x05);
            detail::put_u16(out, p.addr);
            detail::put_u16(out, p.on ? 0xFF00 : 0x0000);
        }
        void operator()(const ExceptionResp& p) const {
            out.push_back(static_cast<std::uint8_t>(p.function | 0x80));
            out.push_back(p.code);
        }
    };
    std::visit(V{out}, f.pdu);

    // Internal consistency: total bytes == 6 + length field.
    if (out.size() != 6u + detail::get_u16(out, 4))
        throw std::logic_error("modbus::encode: length bookkeeping bug");
    return out;
}

enum class DecodeStatus { ok, incomplete, malformed };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::malformed;
    MbapFrame frame;
    std::size_t needed = 0;   // bytes required, when incomplete
    std::string error;        // reason, when malformed
};

inline DecodeResult decode_incomplete(std::size_t needed) {
    DecodeResult r;
    r.status = DecodeStatus::incomplete;
    r.needed = needed;
    return r;
}
inline DecodeResult decode_malformed(std::string why) {
    DecodeResult r;
    r.status = DecodeStatus::malformed;
    r.error = std::move(why);
    return r;
}

// Exact inverse of encode on valid input. fc05/fc06 requests and responses
// share a wire layout, so the transport direction disambiguates them.
inline DecodeResult decode(const Bytes& b, Dir dir = Dir::request) {
    if (b.size() < 8) return decode_incomplete(8);
    const std::uint16_t tid = detail::get_u16(b, 0);
    const std::uint16_t pid = detail::get_u16(b, 2);
    const std::uint16_t len = detail::get_u16(b, 4);
    if (pid != 0) return decode_malformed("protocol_id != 0");
    if (len < 2) return decode_malformed("length too small");
    if (b.size() < 6u + len) return decode_incomplete(6u + len);
    if (b.size() > 6u + len) return decode_malformed("trailing bytes beyond MBAP length");

    MbapFrame f;
    f.transaction_id = tid;
    f.unit_id = b[6];
    const std::uint8_t fc = b[7];
    const std::size_t pdu_len = len - 1u; // bytes after unit_id

    if (fc & 0x80) {
        if (pdu_len != 2) return decode_malformed("exception PDU length mismatch");
        ExceptionResp e;
        e.function = fc & 0x7f;
        e.code = b[8];
        switch (e.function) {
            case 0x03: case 0x05: case 0x06: break;
            default: return decode_malformed("exception for unknown function code");
        }
        f.pdu = e;
        return {DecodeStatus::ok, f, 0, {}};
    }

    switch (fc) {
        case 0x03:
            if (dir == Dir::request) {
                if (pdu_len != 5) return decode_malformed("fc03 request length mismatch");
                ReadHoldingRegistersReq p;
                p.addr = detail::get_u16(b, 8);
                p.count = detail::get_u16(b, 10);
                if (p.count < 1 || p.count > 125) return decode_malformed("fc03 count out of range");
                f.pdu = p;
            } else {
                if (pdu_len < 2) return decode_malformed("fc03 response length mismatch");
                const std::uint8_t byte_count = b[8];
                if (byte_count % 2 != 0 || byte_count == 0) return decode_malformed("fc03 odd byte count");
                if (pdu_len != 2u + byte_count) return decode_malformed("fc03 response length mismatch");
                ReadHoldingRegistersResp p;
                p.values.reserve(byte_count / 2u);
                for (std::size_t i = 0; i < byte_count / 2u; ++i)
                    p.values.push_back(detail::get_u16(b, 9 + 2 * i));
                f.pdu = p;
            }
            break;
        case 0x05: {
            if (pdu_len != 5) return decode_malformed("fc05 length mismatch");
            const std::uint16_t val = detail::get_u16(b, 10);
            if (val != 0xFF00 && val != 0x0000) return decode_malformed("fc05 coil value not FF00/0000");
            if (dir == Dir::request) {
                WriteSingleCoilReq p;
                p.addr = detail::get_u16(b, 8);
                p.on = (val == 0xFF00);
                f.pdu = p;
            } else {
                WriteSingleCoilResp p;
                p.addr = detail::get_u16(b, 8);
                p.on = (val == 0xFF00);
                f.pdu = p;
            }
            break;
        }
        case 0x06: {
            if (pdu_len != 5) return decode_malformed("fc06 length mismatch");
            if (dir == Dir::request) {
                WriteSingleRegisterReq p;
                p.addr = detail::get_u16(b, 8);
                p.value = detail::get_u16(b, 10);
                f.pdu = p;
            } else {
                WriteSingleRegisterResp p;
                p.addr = detail::get_u16(b, 8);
                p.value = detail::get_u16(b, 10);
                f.pdu = p;
            }
            break;
        }
        default:
            return decode_malformed("unknown function code");
    }
    return {DecodeStatus::ok, f, 0, {}};
}

} // namespace icstb::modbus
