#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace heatlab {

enum class ErrorCode {
    invalid_argument,
    parse,
    numeric,
    io,
    out_of_regime,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// FNV-1a, used for content hashes of forms and configs (not cryptographic).
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), seed);
}

std::string format_double(double v);
std::string hex64(std::uint64_t v);

}  // namespace heatlab
