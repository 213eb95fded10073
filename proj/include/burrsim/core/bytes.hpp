#pragma once

#include "burrsim/core/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace burrsim {

static_assert(std::endian::native == std::endian::little, "burrsim wire/file formats assume a little-endian host");

// Append-only little-endian encoder.
class ByteWriter {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value)
    {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    // u16 length prefix followed by raw UTF-8 bytes.
    void put_string16(std::string_view s)
    {
        require(s.size() <= 0xFFFF, "string too long for u16 length prefix");
        put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    [[nodiscard]] std::size_t size() const noexcept { return buf_.size(); }
    [[nodiscard]] std::vector<std::uint8_t>& bytes() noexcept { return buf_; }
    [[nodiscard]] std::vector<std::uint8_t> take() && { return std::move(buf_); }

    template <typename T>
    void patch(std::size_t offset, T value)
    {
        std::memcpy(buf_.data() + offset, &value, sizeof(T));
    }

private:
    std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian decoder. Over-reads raise `overrun_kind`.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, ErrorKind overrun_kind = ErrorKind::Truncated)
        : data_(data), overrun_kind_(overrun_kind)
    {
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get()
    {
        need(sizeof(T));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::span<const std::uint8_t> get_bytes(std::size_t n)
    {
        need(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::string get_string16()
    {
        const auto n = get<std::uint16_t>();
        auto b = get_bytes(n);
        return {reinterpret_cast<const char*>(b.data()), b.size()};
    }

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
    [[nodiscard]] bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const
    {
        if (data_.size() - pos_ < n) {
            fail(overrun_kind_, "unexpected end of data: need " + std::to_string(n) + " bytes at offset " +
                                    std::to_string(pos_) + ", have " + std::to_string(data_.size() - pos_));
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    ErrorKind overrun_kind_;
};

} // namespace burrsim
