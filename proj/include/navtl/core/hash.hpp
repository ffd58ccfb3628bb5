#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace navtl {

// 64-bit FNV-1a.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void update(const void* data, std::size_t n) noexcept {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kPrime;
        }
    }
    void update(std::string_view s) noexcept { update(s.data(), s.size()); }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    Fnv1a64 h;
    h.update(s);
    return h.digest();
}

/// Derives an independent seed for a named sub-task (e.g. a pipeline cell).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
    Fnv1a64 h;
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(seed >> (8 * i));
    h.update(bytes, 8);
    h.update(label);
    return h.digest();
}

}  // namespace navtl
