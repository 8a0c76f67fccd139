#pragma once

#include "ovseg/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Little-endian encoding helpers shared by every on-disk format. Readers
// report failures with the file path and byte offset.
namespace ovseg::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never observe
// a half-written file.
void write_file(const std::filesystem::path& path, std::string_view bytes);

class ByteWriter {
public:
    void magic(std::string_view four) { bytes_.append(four.substr(0, 4)); }
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { raw(&v, sizeof v); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i32(std::int32_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    // u32 length prefix followed by the bytes.
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.append(s);
    }
    void pad_to(std::size_t alignment) {
        while (bytes_.size() % alignment != 0) bytes_.push_back('\0');
    }

    const std::string& bytes() const { return bytes_; }
    std::string take() { return std::move(bytes_); }

private:
    void raw(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }

    std::string bytes_;
};

class ByteReader {
public:
    ByteReader(std::string bytes, std::string source) : bytes_(std::move(bytes)), source_(std::move(source)) {}

    static ByteReader open(const std::filesystem::path& path) { return {read_file(path), path.string()}; }

    // Checks the 4-byte magic and the u32 version that follows it.
    void header(std::string_view magic, std::uint32_t version) {
        const std::size_t at = offset_;
        need(4);
        if (std::string_view(bytes_).substr(offset_, 4) != magic) {
            fail_at(at, "bad magic, expected '" + std::string(magic) + "'");
        }
        offset_ += 4;
        const std::size_t vat = offset_;
        if (const auto v = u32(); v != version) {
            fail_at(vat, "unsupported version " + std::to_string(v) + ", expected " + std::to_string(version));
        }
    }

    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint16_t u16() { return get<std::uint16_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int32_t i32() { return get<std::int32_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = bytes_.substr(offset_, n);
        offset_ += n;
        return s;
    }
    void skip_padding(std::size_t alignment) {
        while (offset_ % alignment != 0) {
            if (u8() != 0) fail_at(offset_ - 1, "non-zero padding");
        }
    }

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return bytes_.size() - offset_; }
    const std::string& source() const { return source_; }
    void expect_end() const {
        if (offset_ != bytes_.size()) fail_at(offset_, std::to_string(remaining()) + " trailing bytes");
    }

    [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
        fail(ErrorCode::Format, source_ + ": offset " + std::to_string(at) + ": " + what);
    }

private:
    void need(std::size_t n) const {
        if (n > bytes_.size() - offset_) {
            fail_at(offset_, "truncated: need " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                                 " left");
        }
    }
    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + offset_, sizeof(T));
        offset_ += sizeof(T);
        return v;
    }

    std::string bytes_;
    std::string source_;
    std::size_t offset_ = 0;
};

}  // namespace ovseg::io
