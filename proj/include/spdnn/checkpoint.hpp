#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "network.hpp"

namespace spdnn {

/**
 * Model checkpoint, version 1.  Little-endian throughout:
 *
 *   bytes 0..7    magic "SPDNNET1"
 *   u32           format version (1)
 *   u32           reserved (0)
 *   u32 + bytes   activation id
 *   u32           width count, then u64 widths
 *   f64 B, f64 F  class bounds
 *   u8            sparsity present flag, then u64 S
 *   u64           max width N
 *   u64           theta length, then f64 entries in vectorization order
 *   u32 + bytes   free-form training metadata (UTF-8, typically JSON)
 */
struct Checkpoint {
    NetworkParams params;
    ClassConstraints constraints;
    std::string metadata;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw runtime_failure("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<unsigned char>(buf[pos++]);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace detail

inline constexpr char checkpoint_magic[8] = {'S', 'P', 'D', 'N', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t checkpoint_version = 1;

inline std::string encode_checkpoint(const Checkpoint& ck) {
    ck.params.arch.validate();
    if (ck.params.theta.size() != ck.params.arch.params())
        throw invalid_argument_error("checkpoint: theta length mismatch");
    std::string out;
    out.append(checkpoint_magic, 8);
    detail::put_u32(out, checkpoint_version);
    detail::put_u32(out, 0);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.params.arch.activation.size()));
    out.append(ck.params.arch.activation);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.params.arch.widths.size()));
    for (std::size_t w : ck.params.arch.widths) detail::put_u64(out, w);
    detail::put_f64(out, ck.constraints.weight_bound);
    detail::put_f64(out, ck.constraints.output_bound);
    out.push_back(ck.constraints.sparsity ? 1 : 0);
    detail::put_u64(out, ck.constraints.sparsity ? *ck.constraints.sparsity : 0);
    detail::put_u64(out, ck.constraints.max_width);
    detail::put_u64(out, ck.params.theta.size());
    for (double v : ck.params.theta) detail::put_f64(out, v);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.metadata.size()));
    out.append(ck.metadata);
    return out;
}

inline Checkpoint decode_checkpoint(const std::string& buf) {
    detail::ByteReader rd{buf};
    std::string magic = rd.bytes(8);
    if (std::memcmp(magic.data(), checkpoint_magic, 8) != 0)
        throw runtime_failure("checkpoint: bad magic");
    std::uint32_t version = rd.u32();
    if (version != checkpoint_version)
        throw runtime_failure("checkpoint: unsupported version " + std::to_string(version));
    rd.u32(); // reserved
    Checkpoint ck;
    std::string act = rd.bytes(rd.u32());
    std::uint32_t nw = rd.u32();
    if (nw < 2 || nw > 1u << 20) throw runtime_failure("checkpoint: implausible width count");
    Widths widths(nw);
    for (auto& w : widths) w = static_cast<std::size_t>(rd.u64());
    ck.constraints.weight_bound = rd.f64();
    ck.constraints.output_bound = rd.f64();
    bool has_s = rd.u8() != 0;
    std::uint64_t s = rd.u64();
    if (has_s) ck.constraints.sparsity = static_cast<std::size_t>(s);
    ck.constraints.max_width = static_cast<std::size_t>(rd.u64());
    std::uint64_t tl = rd.u64();
    Architecture arch(widths, act);
    if (tl != arch.params()) throw runtime_failure("checkpoint: theta length inconsistent with widths");
    std::vector<double> theta(tl);
    for (auto& v : theta) v = rd.f64();
    ck.params = NetworkParams(std::move(arch), std::move(theta));
    ck.metadata = rd.bytes(rd.u32());
    if (rd.pos != buf.size()) throw runtime_failure("checkpoint: trailing bytes");
    return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw runtime_failure("cannot open " + path + " for writing");
    std::string buf = encode_checkpoint(ck);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw runtime_failure("write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw runtime_failure("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_checkpoint(buf);
}

} // namespace spdnn
