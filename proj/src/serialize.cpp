#include "stlfer/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stlfer {

void BinaryWriter::raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
}

void BinaryWriter::u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    raw(b, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    raw(b, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::f64_array(const double* p, std::size_t n) {
    std::size_t off = buf_.size();
    buf_.resize(off + 8 * n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t v = std::bit_cast<std::uint64_t>(p[i]);
        for (int k = 0; k < 8; ++k) {
            buf_[off + 8 * i + static_cast<std::size_t>(k)] =
                static_cast<std::uint8_t>(v >> (8 * k));
        }
    }
}

void BinaryWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
}

void BinaryWriter::tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) i32(t.dim(i));
    f64_array(t.data(), t.size());
}

void BinaryWriter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

BinaryReader BinaryReader::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::uint8_t> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw std::runtime_error("read failed: " + path);
    return BinaryReader(std::move(bytes));
}

void BinaryReader::need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw std::runtime_error("truncated model file");
}

std::uint8_t BinaryReader::u8() {
    need(1);
    return buf_[pos_++];
}

std::uint32_t BinaryReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
}

std::uint64_t BinaryReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 8;
    return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::f64_array(double* p, std::size_t n) {
    need(8 * n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) {
            v |= static_cast<std::uint64_t>(buf_[pos_ + 8 * i + static_cast<std::size_t>(k)])
                 << (8 * k);
        }
        p[i] = std::bit_cast<double>(v);
    }
    pos_ += 8 * n;
}

std::string BinaryReader::str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
}

Tensor BinaryReader::tensor() {
    std::uint32_t rank = u32();
    if (rank > 8) throw std::runtime_error("corrupt tensor record: rank " + std::to_string(rank));
    std::vector<int> shape(rank);
    for (auto& d : shape) d = i32();
    Tensor t(shape);
    f64_array(t.data(), t.size());
    return t;
}

void write_model_header(BinaryWriter& w, std::string_view kind) {
    w.raw(kModelMagic.data(), kModelMagic.size());
    w.u32(kModelFormatVersion);
    w.str(kind);
}

std::string read_model_header(BinaryReader& r) {
    char magic[8];
    for (auto& c : magic) c = static_cast<char>(r.u8());
    if (std::string_view(magic, 8) != kModelMagic)
        throw std::runtime_error("not a model file (bad magic)");
    std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw std::runtime_error("unsupported model format version " + std::to_string(version) +
                                 " (expected " + std::to_string(kModelFormatVersion) + ")");
    return r.str();
}

void require_kind(const std::string& got, std::string_view want) {
    if (got != want)
        throw std::runtime_error("model kind mismatch: file holds '" + got + "', expected '" +
                                 std::string(want) + "'");
}

}  // namespace stlfer
