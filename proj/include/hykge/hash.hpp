#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hykge {

// 64-bit FNV-1a. Stable across platforms and runs; used for cache keys and
// fixture lookup, never for security.
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    Fnv1a& update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= kPrime;
        }
        return *this;
    }

    Fnv1a& update_u64(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<unsigned char>(v >> (8 * i));
            state_ *= kPrime;
        }
        return *this;
    }

    // Length-prefixed so that ("ab","c") and ("a","bc") hash differently.
    Fnv1a& update_field(std::string_view bytes) noexcept {
        update_u64(bytes.size());
        return update(bytes);
    }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view bytes) noexcept { return Fnv1a{}.update(bytes).digest(); }

std::string to_hex(std::uint64_t v);

}  // namespace hykge
