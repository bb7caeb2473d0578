#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "densecrab/error.hpp"

// Little-endian primitives shared by the binary artifact formats.

namespace densecrab::binio {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {
        static_cast<char>(v & 0xff),
        static_cast<char>((v >> 8) & 0xff),
        static_cast<char>((v >> 16) & 0xff),
        static_cast<char>((v >> 24) & 0xff),
    };
    out.write(bytes, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    write_u32(out, static_cast<std::uint32_t>(v & 0xffffffffull));
    write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32(std::ostream& out, float v) {
    write_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) fail(ErrKind::truncated, std::string("truncated while reading ") + what);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
    const std::uint64_t lo = read_u32(in, what);
    const std::uint64_t hi = read_u32(in, what);
    return lo | (hi << 32);
}

inline float read_f32(std::istream& in, const char* what) {
    return std::bit_cast<float>(read_u32(in, what));
}

inline std::string read_string(std::istream& in, const char* what) {
    const std::uint32_t len = read_u32(in, what);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint32_t>(in.gcount()) != len) {
        fail(ErrKind::truncated, std::string("truncated while reading ") + what);
    }
    return s;
}

}  // namespace densecrab::binio
