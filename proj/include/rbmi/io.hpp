#pragma once

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/model.hpp"

// On-disk formats. All multi-byte integers and floats are little-endian
// regardless of host; IDX image archives are the exception (that format
// stores its header big-endian). Readers fail loudly: bad magic, version
// mismatch, truncation, and checksum mismatch are all hard errors.

namespace rbmi {

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace io {

// ---- byte-level helpers ----------------------------------------------------

inline void put_u8(std::string& out, std::uint8_t x) { out.push_back(static_cast<char>(x)); }

inline void put_u16(std::string& out, std::uint16_t x) {
    out.push_back(static_cast<char>(x & 0xff));
    out.push_back(static_cast<char>((x >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t x) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((x >> s) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t x) {
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((x >> s) & 0xff));
}

inline void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

/// Cursor over an in-memory buffer; every read checks bounds and reports the
/// offending byte offset.
class Reader {
  public:
    explicit Reader(const std::string& data) : data_(data) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void need(std::size_t count, const char* what) const {
        if (pos_ + count > data_.size())
            throw std::runtime_error(std::string("truncated input: need ") + std::to_string(count) +
                                     " bytes for " + what + " at offset " +
                                     std::to_string(pos_) + ", have " +
                                     std::to_string(data_.size() - pos_));
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t x = 0;
        for (int s = 0; s < 16; s += 8) x |= static_cast<std::uint16_t>(u8(what)) << s;
        return x;
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t x = 0;
        for (int s = 0; s < 32; s += 8) x |= static_cast<std::uint32_t>(u8(what)) << s;
        return x;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t x = 0;
        for (int s = 0; s < 64; s += 8) x |= static_cast<std::uint64_t>(u8(what)) << s;
        return x;
    }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::string bytes(std::size_t count, const char* what) {
        need(count, what);
        std::string s = data_.substr(pos_, count);
        pos_ += count;
        return s;
    }

  private:
    const std::string& data_;
    std::size_t pos_ = 0;
};

// ---- varints and checksum --------------------------------------------------

inline void put_varint(std::string& out, std::uint64_t x) {
    while (x >= 0x80) {
        put_u8(out, static_cast<std::uint8_t>(x) | 0x80);
        x >>= 7;
    }
    put_u8(out, static_cast<std::uint8_t>(x));
}

inline std::uint64_t get_varint(Reader& r, const char* what) {
    std::uint64_t x = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        const std::uint8_t byte = r.u8(what);
        x |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
        if ((byte & 0x80) == 0) return x;
    }
    throw std::runtime_error(std::string("malformed varint for ") + what);
}

inline std::uint32_t crc32(const std::string& data) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xffffffffu;
    for (unsigned char byte : data) c = table[(c ^ byte) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

// ---- whole-file helpers ----------------------------------------------------

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw std::runtime_error("read failed: " + path);
    return data;
}

}  // namespace io

// ---- checkpoint ------------------------------------------------------------

struct Checkpoint {
    RbmParams params;
    std::uint64_t seed = 0;
    std::uint32_t epoch = 0;
};

inline std::string serialize_checkpoint(const RbmParams& p, std::uint64_t seed,
                                        std::uint32_t epoch) {
    p.validate();
    std::string out;
    out += "RBMC";
    io::put_u32(out, 1);  // version
    io::put_u32(out, static_cast<std::uint32_t>(p.n()));
    io::put_u32(out, static_cast<std::uint32_t>(p.m()));
    io::put_u64(out, seed);
    io::put_u32(out, epoch);
    for (Eigen::Index i = 0; i < p.n(); ++i) io::put_f64(out, p.b[i]);
    for (Eigen::Index j = 0; j < p.m(); ++j) io::put_f64(out, p.c[j]);
    for (Eigen::Index i = 0; i < p.n(); ++i)
        for (Eigen::Index j = 0; j < p.m(); ++j) io::put_f64(out, p.W(i, j));
    return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& data) {
    io::Reader r(data);
    if (r.bytes(4, "magic") != "RBMC") throw std::runtime_error("checkpoint: bad magic");
    const std::uint32_t version = r.u32("version");
    if (version != 1)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ck;
    const std::uint32_t n = r.u32("n");
    const std::uint32_t m = r.u32("m");
    ck.seed = r.u64("seed");
    ck.epoch = r.u32("epoch");
    ck.params.b.resize(n);
    ck.params.c.resize(m);
    ck.params.W.resize(n, m);
    for (std::uint32_t i = 0; i < n; ++i) ck.params.b[i] = r.f64("b");
    for (std::uint32_t j = 0; j < m; ++j) ck.params.c[j] = r.f64("c");
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < m; ++j) ck.params.W(i, j) = r.f64("W");
    if (r.remaining() != 0)
        throw std::runtime_error("checkpoint: trailing bytes at offset " +
                                 std::to_string(r.offset()));
    ck.params.validate();
    return ck;
}

inline void write_checkpoint(const std::string& path, const RbmParams& p, std::uint64_t seed,
                             std::uint32_t epoch) {
    io::write_file(path, serialize_checkpoint(p, seed, epoch));
}

inline Checkpoint read_checkpoint(const std::string& path) {
    return deserialize_checkpoint(io::read_file(path));
}

// ---- incomplete-dataset container -------------------------------------------

// Layout: 16-byte header (magic "RBMI", version u16, flags u16, n u32, N u32),
// then an optional provenance block (flag bit 0), then per observation a
// varint count, delta-encoded observed indices (first absolute, then gaps-1),
// and bit-packed values LSB-first. A crc32 over everything after the header
// is appended when flag bit 1 is set; it is set whenever the file carries any
// payload, so an empty dataset without provenance is exactly the header.

namespace io {
inline constexpr std::uint16_t kDatasetHasProvenance = 1u << 0;
inline constexpr std::uint16_t kDatasetHasCrc = 1u << 1;
}  // namespace io

inline std::string serialize_incomplete(const IncompleteDataset& ds) {
    ds.validate();
    std::string body;
    if (ds.provenance.present) {
        io::put_varint(body, ds.provenance.source.size());
        body += ds.provenance.source;
        io::put_f64(body, ds.provenance.threshold);
        io::put_f64(body, ds.provenance.p);
        io::put_u64(body, ds.provenance.mask_seed);
    }
    for (const auto& obs : ds.observations) {
        io::put_varint(body, obs.observed.size());
        std::uint32_t prev = 0;
        for (std::size_t k = 0; k < obs.observed.size(); ++k) {
            if (k == 0)
                io::put_varint(body, obs.observed[0]);
            else
                io::put_varint(body, obs.observed[k] - prev - 1);
            prev = obs.observed[k];
        }
        std::uint8_t acc = 0;
        int filled = 0;
        for (std::size_t k = 0; k < obs.values.size(); ++k) {
            acc |= static_cast<std::uint8_t>(obs.values[k] << filled);
            if (++filled == 8) {
                io::put_u8(body, acc);
                acc = 0;
                filled = 0;
            }
        }
        if (filled > 0) io::put_u8(body, acc);
    }

    std::uint16_t flags = 0;
    if (ds.provenance.present) flags |= io::kDatasetHasProvenance;
    if (!body.empty()) flags |= io::kDatasetHasCrc;

    std::string out;
    out += "RBMI";
    io::put_u16(out, 1);  // version
    io::put_u16(out, flags);
    io::put_u32(out, static_cast<std::uint32_t>(ds.n));
    io::put_u32(out, static_cast<std::uint32_t>(ds.observations.size()));
    out += body;
    if (flags & io::kDatasetHasCrc) io::put_u32(out, io::crc32(body));
    return out;
}

inline IncompleteDataset deserialize_incomplete(const std::string& data) {
    io::Reader r(data);
    if (r.bytes(4, "magic") != "RBMI") throw std::runtime_error("dataset: bad magic");
    const std::uint16_t version = r.u16("version");
    if (version != 1)
        throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
    const std::uint16_t flags = r.u16("flags");
    if (flags & ~(io::kDatasetHasProvenance | io::kDatasetHasCrc))
        throw std::runtime_error("dataset: unknown flags");
    IncompleteDataset ds;
    ds.n = static_cast<int>(r.u32("n"));
    const std::uint32_t count = r.u32("N");

    if (flags & io::kDatasetHasCrc) {
        if (r.remaining() < 4) throw std::runtime_error("dataset: missing checksum");
        const std::string body = data.substr(16, data.size() - 20);
        io::Reader tail(data);
        tail.bytes(data.size() - 4, "body");
        const std::uint32_t stored = tail.u32("crc");
        if (io::crc32(body) != stored) throw std::runtime_error("dataset: checksum mismatch");
    }

    const std::size_t payload_end = data.size() - ((flags & io::kDatasetHasCrc) ? 4 : 0);
    if (flags & io::kDatasetHasProvenance) {
        ds.provenance.present = true;
        const std::uint64_t len = io::get_varint(r, "provenance source length");
        ds.provenance.source = r.bytes(len, "provenance source");
        ds.provenance.threshold = r.f64("provenance threshold");
        ds.provenance.p = r.f64("provenance p");
        ds.provenance.mask_seed = r.u64("provenance mask seed");
    }
    ds.observations.reserve(count);
    for (std::uint32_t mu = 0; mu < count; ++mu) {
        IncompleteObservation obs;
        const std::uint64_t k = io::get_varint(r, "observation count");
        obs.observed.resize(k);
        std::uint32_t prev = 0;
        for (std::uint64_t t = 0; t < k; ++t) {
            const std::uint64_t delta = io::get_varint(r, "observed index");
            const std::uint64_t idx = (t == 0) ? delta : prev + 1 + delta;
            if (idx >= static_cast<std::uint64_t>(ds.n))
                throw std::runtime_error("dataset: observed index out of range at offset " +
                                         std::to_string(r.offset()));
            obs.observed[t] = static_cast<std::uint32_t>(idx);
            prev = static_cast<std::uint32_t>(idx);
        }
        obs.values.resize(k);
        std::uint8_t acc = 0;
        int filled = 8;
        for (std::uint64_t t = 0; t < k; ++t) {
            if (filled == 8) {
                acc = r.u8("packed values");
                filled = 0;
            }
            obs.values[t] = (acc >> filled) & 1;
            ++filled;
        }
        ds.observations.push_back(std::move(obs));
    }
    if (r.offset() != payload_end)
        throw std::runtime_error("dataset: trailing bytes at offset " + std::to_string(r.offset()));
    ds.validate();
    return ds;
}

inline void save_incomplete(const std::string& path, const IncompleteDataset& ds) {
    io::write_file(path, serialize_incomplete(ds));
}

inline IncompleteDataset load_incomplete(const std::string& path) {
    return deserialize_incomplete(io::read_file(path));
}

// ---- IDX image archives ------------------------------------------------------

/// Images as rows; pixel values 0..255.
using ImageMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reads an IDX archive of unsigned-byte images (the handwritten-digit
/// archive layout): big-endian header 0x00000803, count, rows, cols, then
/// raw pixels. Returns count x (rows*cols).
inline ImageMatrix load_idx_images(const std::string& path) {
    const std::string data = io::read_file(path);
    auto be32 = [&](std::size_t off, const char* what) -> std::uint32_t {
        if (off + 4 > data.size())
            throw std::runtime_error("idx: truncated " + std::string(what) + " at offset " +
                                     std::to_string(off));
        return (static_cast<std::uint32_t>(static_cast<unsigned char>(data[off])) << 24) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(data[off + 1])) << 16) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(data[off + 2])) << 8) |
               static_cast<std::uint32_t>(static_cast<unsigned char>(data[off + 3]));
    };
    const std::uint32_t magic = be32(0, "magic");
    if (magic != 0x00000803u)
        throw std::runtime_error("idx: bad magic (expected 0x00000803 image archive)");
    const std::uint32_t count = be32(4, "image count");
    const std::uint32_t rows = be32(8, "row count");
    const std::uint32_t cols = be32(12, "column count");
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    const std::size_t expected = 16 + static_cast<std::size_t>(count) * pixels;
    if (data.size() < expected)
        throw std::runtime_error("idx: truncated payload, need " + std::to_string(expected) +
                                 " bytes, have " + std::to_string(data.size()) +
                                 " (payload starts at offset 16)");
    if (data.size() > expected)
        throw std::runtime_error("idx: trailing bytes at offset " + std::to_string(expected));
    ImageMatrix out(count, static_cast<Eigen::Index>(pixels));
    std::memcpy(out.data(), data.data() + 16, static_cast<std::size_t>(count) * pixels);
    return out;
}

/// Round-trip writer for the same layout.
inline void save_idx_images(const std::string& path, const ImageMatrix& images, std::uint32_t rows,
                            std::uint32_t cols) {
    if (static_cast<std::size_t>(rows) * cols != static_cast<std::size_t>(images.cols()))
        throw std::invalid_argument("save_idx_images: rows*cols must equal image width");
    std::string out;
    auto put_be32 = [&](std::uint32_t x) {
        out.push_back(static_cast<char>((x >> 24) & 0xff));
        out.push_back(static_cast<char>((x >> 16) & 0xff));
        out.push_back(static_cast<char>((x >> 8) & 0xff));
        out.push_back(static_cast<char>(x & 0xff));
    };
    put_be32(0x00000803u);
    put_be32(static_cast<std::uint32_t>(images.rows()));
    put_be32(rows);
    put_be32(cols);
    out.append(reinterpret_cast<const char*>(images.data()),
               static_cast<std::size_t>(images.rows()) * static_cast<std::size_t>(images.cols()));
    io::write_file(path, out);
}

/// pixel > threshold -> 1, else 0.
inline std::vector<VectorXd> binarize(const ImageMatrix& images, double threshold = 127.5) {
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(images.rows()));
    for (Eigen::Index r = 0; r < images.rows(); ++r) {
        VectorXd v(images.cols());
        for (Eigen::Index c = 0; c < images.cols(); ++c)
            v[c] = static_cast<double>(images(r, c)) > threshold ? 1.0 : 0.0;
        out.push_back(std::move(v));
    }
    return out;
}

/// Plain-text interchange for binary matrices: one row per line, comma
/// separated 0/1 entries. The normalized import path for datasets that do
/// not ship as IDX archives.
inline std::vector<VectorXd> load_binary_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<VectorXd> rows;
    std::string line;
    std::size_t lineno = 0;
    Eigen::Index width = -1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            const std::string tok = line.substr(start, comma - start);
            if (tok == "0")
                vals.push_back(0.0);
            else if (tok == "1")
                vals.push_back(1.0);
            else
                throw std::runtime_error("binary csv: line " + std::to_string(lineno) +
                                         ": entry '" + tok + "' is not 0 or 1");
            start = comma + 1;
        }
        VectorXd v(static_cast<Eigen::Index>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
        if (width < 0) width = v.size();
        if (v.size() != width)
            throw std::runtime_error("binary csv: line " + std::to_string(lineno) +
                                     ": ragged row width");
        rows.push_back(std::move(v));
    }
    return rows;
}

// ---- binary matrix dump (sample outputs) -------------------------------------

/// Magic "RBMM", version u16, rows u32, cols u32, then one byte per entry in
/// row-major order. Used by the `sample` subcommand.
inline std::string serialize_binary_matrix(const std::vector<VectorXd>& rows) {
    std::string out;
    out += "RBMM";
    io::put_u16(out, 1);
    io::put_u32(out, static_cast<std::uint32_t>(rows.size()));
    const Eigen::Index cols = rows.empty() ? 0 : rows[0].size();
    io::put_u32(out, static_cast<std::uint32_t>(cols));
    for (const auto& v : rows) {
        if (v.size() != cols) throw std::invalid_argument("binary matrix: ragged rows");
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v[i] != 0.0 && v[i] != 1.0)
                throw std::invalid_argument("binary matrix: entries must be 0 or 1");
            io::put_u8(out, static_cast<std::uint8_t>(v[i]));
        }
    }
    return out;
}

inline std::vector<VectorXd> deserialize_binary_matrix(const std::string& data) {
    io::Reader r(data);
    if (r.bytes(4, "magic") != "RBMM") throw std::runtime_error("binary matrix: bad magic");
    if (r.u16("version") != 1) throw std::runtime_error("binary matrix: unsupported version");
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    std::vector<VectorXd> out;
    out.reserve(rows);
    for (std::uint32_t k = 0; k < rows; ++k) {
        VectorXd v(cols);
        for (std::uint32_t i = 0; i < cols; ++i) {
            const std::uint8_t byte = r.u8("matrix entry");
            if (byte > 1) throw std::runtime_error("binary matrix: entry not 0/1");
            v[static_cast<Eigen::Index>(i)] = byte;
        }
        out.push_back(std::move(v));
    }
    if (r.remaining() != 0)
        throw std::runtime_error("binary matrix: trailing bytes at offset " +
                                 std::to_string(r.offset()));
    return out;
}

}  // namespace rbmi
