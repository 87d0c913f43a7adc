#pragma once

#include "stlfer/tensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stlfer {

/// Little-endian binary buffer writer. All multi-byte values are encoded
/// explicitly byte-by-byte so files are identical across platforms.
class BinaryWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v);
    void f64_array(const double* p, std::size_t n);
    void str(std::string_view s);
    void tensor(const Tensor& t);
    void raw(const void* p, std::size_t n);

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

    /// Writes the buffer to `path` atomically enough for our purposes
    /// (truncate + write + flush). Throws std::runtime_error on failure.
    void save(const std::string& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader over an in-memory byte buffer; every read throws
/// std::runtime_error("truncated ...") past the end instead of reading junk.
class BinaryReader {
public:
    explicit BinaryReader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}

    /// Loads the whole file; throws std::runtime_error when unreadable.
    static BinaryReader from_file(const std::string& path);

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64();
    void f64_array(double* p, std::size_t n);
    std::string str();
    Tensor tensor();

    bool at_end() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const;

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Versioned model container. Every persisted artifact (autoencoder, encoder,
// classifier, feature matrix) starts with the same header: an 8-byte magic,
// a format version, and a kind tag naming what follows.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kModelMagic = "STLFMDL0";
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model_header(BinaryWriter& w, std::string_view kind);

/// Validates magic and version, returns the kind tag. Bad magic and
/// unsupported versions raise distinct std::runtime_error messages.
std::string read_model_header(BinaryReader& r);

/// Throws std::runtime_error when the kind tag is not the expected one.
void require_kind(const std::string& got, std::string_view want);

}  // namespace stlfer
