#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dacc/common/error.hpp"

namespace dacc {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string to_hex(ByteView data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline Bytes from_hex(std::string_view hex)
{
    if (hex.starts_with("0x") || hex.starts_with("0X"))
        hex.remove_prefix(2);
    if (hex.size() % 2 != 0)
        throw DecodeError("hex string has odd length");
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw DecodeError(std::string("invalid hex digit '") + c + "'");
    };
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    return out;
}

/// Fixed-width byte string with a tag so hashes, addresses and nonces do not mix.
template <std::size_t N, typename Tag>
struct FixedBytes {
    static constexpr std::size_t size_bytes = N;
    std::array<std::uint8_t, N> bytes{};

    constexpr auto operator<=>(const FixedBytes&) const = default;

    static FixedBytes from_span(ByteView data)
    {
        if (data.size() != N)
            throw InvalidArgument("expected " + std::to_string(N) + " bytes, got " + std::to_string(data.size()));
        FixedBytes out;
        std::copy(data.begin(), data.end(), out.bytes.begin());
        return out;
    }

    static FixedBytes from_hex(std::string_view hex) { return from_span(dacc::from_hex(hex)); }

    std::string hex() const { return to_hex(bytes); }
    ByteView view() const noexcept { return bytes; }
    const std::uint8_t* data() const noexcept { return bytes.data(); }
    std::uint8_t* data() noexcept { return bytes.data(); }
    static constexpr std::size_t size() noexcept { return N; }

    bool is_zero() const noexcept
    {
        return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
    }
};

struct HashTag;
struct AddressTag;
struct NonceTag;

using Hash32 = FixedBytes<32, HashTag>;
using Address = FixedBytes<20, AddressTag>;
using Nonce = FixedBytes<32, NonceTag>;

/// Big-endian canonical writer. Variable-length fields are u32 length-prefixed.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v)
    {
        buf_.push_back(v);
        return *this;
    }
    ByteWriter& u32(std::uint32_t v)
    {
        for (int shift = 24; shift >= 0; shift -= 8)
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
        return *this;
    }
    ByteWriter& u64(std::uint64_t v)
    {
        for (int shift = 56; shift >= 0; shift -= 8)
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
        return *this;
    }
    ByteWriter& boolean(bool v) { return u8(v ? 1 : 0); }
    ByteWriter& raw(ByteView v)
    {
        buf_.insert(buf_.end(), v.begin(), v.end());
        return *this;
    }
    template <std::size_t N, typename Tag>
    ByteWriter& fixed(const FixedBytes<N, Tag>& v)
    {
        return raw(v.bytes);
    }
    ByteWriter& bytes(ByteView v)
    {
        if (v.size() > UINT32_MAX)
            throw InvalidArgument("field too long for canonical encoding");
        u32(static_cast<std::uint32_t>(v.size()));
        return raw(v);
    }
    ByteWriter& str(std::string_view s) { return bytes(as_bytes(s)); }

    const Bytes& buffer() const& noexcept { return buf_; }
    Bytes take() && noexcept { return std::move(buf_); }

private:
    Bytes buf_;
};

class ByteReader {
public:
    explicit ByteReader(ByteView data) noexcept : data_(data) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32()
    {
        auto s = take(4);
        std::uint32_t v = 0;
        for (auto b : s) v = (v << 8) | b;
        return v;
    }
    std::uint64_t u64()
    {
        auto s = take(8);
        std::uint64_t v = 0;
        for (auto b : s) v = (v << 8) | b;
        return v;
    }
    bool boolean()
    {
        auto v = u8();
        if (v > 1) throw DecodeError("invalid boolean byte");
        return v == 1;
    }
    ByteView raw(std::size_t n) { return take(n); }
    template <typename Fixed>
    Fixed fixed()
    {
        return Fixed::from_span(take(Fixed::size_bytes));
    }
    Bytes bytes()
    {
        auto n = u32();
        auto s = take(n);
        return {s.begin(), s.end()};
    }
    std::string str()
    {
        auto n = u32();
        auto s = take(n);
        return {reinterpret_cast<const char*>(s.data()), s.size()};
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool done() const noexcept { return pos_ == data_.size(); }
    void expect_done() const
    {
        if (!done()) throw DecodeError("trailing bytes after canonical value");
    }

private:
    ByteView take(std::size_t n)
    {
        if (data_.size() - pos_ < n)
            throw DecodeError("unexpected end of encoded data");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

/// Left-pads an address into a 32-byte word (log topics, storage keys).
inline Hash32 address_word(const Address& a)
{
    Hash32 out;
    std::copy(a.bytes.begin(), a.bytes.end(), out.bytes.begin() + 12);
    return out;
}

inline Hash32 u64_word(std::uint64_t v)
{
    Hash32 out;
    for (int i = 0; i < 8; ++i)
        out.bytes[31 - i] = static_cast<std::uint8_t>(v >> (8 * i));
    return out;
}

inline std::uint64_t word_u64(const Hash32& w)
{
    std::uint64_t v = 0;
    for (int i = 24; i < 32; ++i) v = (v << 8) | w.bytes[i];
    return v;
}

} // namespace dacc
