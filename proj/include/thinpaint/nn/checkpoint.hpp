#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "thinpaint/core/error.hpp"

namespace thinpaint::nn {

// Tensor container: magic "TSIN", u32 LE version, u32 LE entry count, then per
// entry: u32 LE name length, UTF-8 name, u32 LE rank, u32 LE dims, raw f32 LE data.

constexpr std::uint32_t kContainerVersion = 1;

enum class CheckpointFault { bad_magic, version_mismatch, truncated, config_mismatch };

class CheckpointError : public DataError {
public:
    CheckpointError(CheckpointFault fault, const std::string& what)
        : DataError(what), fault_(fault) {}
    CheckpointFault fault() const { return fault_; }

private:
    CheckpointFault fault_;
};

struct ContainerEntry {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : b_(bytes), path_(path) {}

    std::uint32_t u32() {
        if (pos_ + 4 > b_.size())
            throw CheckpointError(CheckpointFault::truncated,
                                  "container truncated: '" + path_ + "'");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<std::uint8_t>(b_[pos_ + i]);
        pos_ += 4;
        return v;
    }

    std::string bytes(std::size_t n) {
        if (pos_ + n > b_.size())
            throw CheckpointError(CheckpointFault::truncated,
                                  "container truncated: '" + path_ + "'");
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::vector<float> floats(std::size_t n) {
        if (pos_ + 4 * n > b_.size())
            throw CheckpointError(CheckpointFault::truncated,
                                  "container truncated: '" + path_ + "'");
        std::vector<float> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t bits = 0;
            for (int k = 3; k >= 0; --k)
                bits = (bits << 8) | static_cast<std::uint8_t>(b_[pos_ + 4 * i + k]);
            out[i] = std::bit_cast<float>(bits);
        }
        pos_ += 4 * n;
        return out;
    }

private:
    const std::string& b_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline void write_container(const std::string& path, const std::vector<ContainerEntry>& entries) {
    std::string out;
    out += "TSIN";
    detail::put_u32(out, kContainerVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        detail::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out += e.name;
        detail::put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
        for (auto d : e.dims) detail::put_u32(out, d);
        if (e.data.size() != e.element_count())
            throw DataError("write_container: entry '" + e.name + "' data does not match dims");
        for (float f : e.data) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_container: cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write_container: write failed for '" + path + "'");
}

inline std::vector<ContainerEntry> read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_container: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::Reader r(bytes, path);
    if (r.bytes(4) != "TSIN")
        throw CheckpointError(CheckpointFault::bad_magic, "bad container: '" + path + "'");
    const std::uint32_t version = r.u32();
    if (version != kContainerVersion)
        throw CheckpointError(CheckpointFault::version_mismatch,
                              "container version mismatch in '" + path + "': got " +
                                  std::to_string(version) + ", expected " +
                                  std::to_string(kContainerVersion));
    const std::uint32_t count = r.u32();
    std::vector<ContainerEntry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ContainerEntry e;
        const std::uint32_t name_len = r.u32();
        e.name = r.bytes(name_len);
        const std::uint32_t rank = r.u32();
        e.dims.resize(rank);
        for (auto& d : e.dims) d = r.u32();
        e.data = r.floats(e.element_count());
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Pack 64-bit words into float entries bit-for-bit (two f32 words per u64). Raw
/// byte round-trips through the container preserve the exact patterns.
inline std::vector<float> pack_u64s(const std::vector<std::uint64_t>& words) {
    std::vector<float> out;
    out.reserve(2 * words.size());
    for (auto w : words) {
        out.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(w & 0xffffffffull)));
        out.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(w >> 32)));
    }
    return out;
}

inline std::vector<std::uint64_t> unpack_u64s(const std::vector<float>& data) {
    if (data.size() % 2 != 0) throw DataError("unpack_u64s: odd word count");
    std::vector<std::uint64_t> out;
    out.reserve(data.size() / 2);
    for (std::size_t i = 0; i < data.size(); i += 2) {
        const auto lo = static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(data[i]));
        const auto hi = static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(data[i + 1]));
        out.push_back(lo | (hi << 32));
    }
    return out;
}

} // namespace thinpaint::nn
