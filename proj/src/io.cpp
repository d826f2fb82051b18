#include "saw/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace saw::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_bytes(std::ofstream& f, const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::ifstream& f, void* p, std::size_t n, const char* what) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n)
        throw TruncatedError(std::string("truncated file while reading ") + what);
}

template <typename T>
void put_le(std::ofstream& f, T v) {
    put_bytes(f, &v, sizeof(T));
}

template <typename T>
T get_le(std::ifstream& f, const char* what) {
    T v;
    get_bytes(f, &v, sizeof(T), what);
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    return f;
}

void check_magic(std::ifstream& f, const char expect[4], const std::string& path) {
    char magic[4];
    get_bytes(f, magic, 4, "magic");
    if (std::memcmp(magic, expect, 4) != 0)
        throw BadMagicError("bad magic in " + path + ": expected " +
                            std::string(expect, 4));
}

void check_version(std::ifstream& f) {
    const auto ver = get_le<std::uint16_t>(f, "version");
    if (ver != kFormatVersion)
        throw VersionError("unsupported format version " + std::to_string(ver));
}

void write_payload_f32(std::ofstream& f, const std::vector<double>& values) {
    std::vector<float> buf(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) buf[i] = static_cast<float>(values[i]);
    put_bytes(f, buf.data(), buf.size() * sizeof(float));
}

// Validates the header's claimed payload size against the actual file size
// before anything is allocated.
void check_payload_size(const std::filesystem::path& path, std::size_t header_bytes,
                        std::size_t count) {
    const auto file_size = std::filesystem::file_size(path);
    const std::size_t expected = header_bytes + count * sizeof(float);
    if (file_size < expected)
        throw TruncatedError("payload shorter than header claims in " + path.string());
    if (file_size > expected)
        throw TruncatedError("payload longer than header claims in " + path.string());
}

void read_payload_f32(std::ifstream& f, std::vector<double>& values, std::size_t count) {
    std::vector<float> buf(count);
    get_bytes(f, buf.data(), count * sizeof(float), "payload");
    values.resize(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = static_cast<double>(buf[i]);
}

}  // namespace

void write_volume(const Volume& v, const std::filesystem::path& path) {
    auto f = open_out(path);
    put_bytes(f, "SAWV", 4);
    put_le<std::uint16_t>(f, kFormatVersion);
    for (int a = 0; a < 3; ++a) put_le<std::uint32_t>(f, static_cast<std::uint32_t>(v.dims[a]));
    for (int a = 0; a < 3; ++a) put_le<double>(f, v.voxel_size[a]);
    write_payload_f32(f, v.values);
    if (!f) throw IoError("write failed: " + path.string());
}

Volume read_volume(const std::filesystem::path& path) {
    auto f = open_in(path);
    check_magic(f, "SAWV", path.string());
    check_version(f);
    Volume v;
    std::size_t count = 1;
    for (int a = 0; a < 3; ++a) {
        const auto d = get_le<std::uint32_t>(f, "dims");
        if (d == 0) throw HeaderError("zero dimension in " + path.string());
        v.dims[a] = static_cast<int>(d);
        count *= d;
    }
    for (int a = 0; a < 3; ++a) {
        v.voxel_size[a] = get_le<double>(f, "voxel sizes");
        if (!(v.voxel_size[a] > 0.0))
            throw HeaderError("non-positive voxel size in " + path.string());
    }
    check_payload_size(path, 42, count);
    read_payload_f32(f, v.values, count);
    return v;
}

void write_sinogram(const Sinogram& s, const std::filesystem::path& path) {
    auto f = open_out(path);
    put_bytes(f, "SAWS", 4);
    put_le<std::uint16_t>(f, kFormatVersion);
    put_le<std::uint32_t>(f, static_cast<std::uint32_t>(s.num_views));
    put_le<std::uint32_t>(f, static_cast<std::uint32_t>(s.detector_rows));
    put_le<std::uint32_t>(f, static_cast<std::uint32_t>(s.detector_cols));
    write_payload_f32(f, s.values);
    if (!f) throw IoError("write failed: " + path.string());
}

Sinogram read_sinogram(const std::filesystem::path& path) {
    auto f = open_in(path);
    check_magic(f, "SAWS", path.string());
    check_version(f);
    Sinogram s;
    const auto views = get_le<std::uint32_t>(f, "num_views");
    const auto rows = get_le<std::uint32_t>(f, "detector_rows");
    const auto cols = get_le<std::uint32_t>(f, "detector_cols");
    if (views == 0 || rows == 0 || cols == 0)
        throw HeaderError("zero dimension in " + path.string());
    s.num_views = static_cast<int>(views);
    s.detector_rows = static_cast<int>(rows);
    s.detector_cols = static_cast<int>(cols);
    const std::size_t count = static_cast<std::size_t>(views) * rows * cols;
    check_payload_size(path, 18, count);
    read_payload_f32(f, s.values, count);
    return s;
}

}  // namespace saw::io
