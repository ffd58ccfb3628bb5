#pragma once

// Checkpoint layout (all integers little-endian):
//   "NAVTL1"                      6-byte magic, last byte is the format version
//   u64  spec digest              FNV-1a 64 of canonical_text(spec)
//   u32  record count
//   per record:
//     u32 name length, name bytes ("<layer>.weight" / "<layer>.bias")
//     u32 rank, rank x u32 dims
//     float32 payload, little-endian

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/nn/network.hpp"

namespace navtl::nn {

inline constexpr std::array<char, 6> kCheckpointMagic{'N', 'A', 'V', 'T', 'L', '1'};

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
    }
    void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    const std::vector<char>& buffer() const { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
    }
    std::vector<char> data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<char> serialize_checkpoint(const Network& net) {
    detail::ByteWriter w;
    w.bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
    w.u64(net.digest());
    std::uint32_t records = 0;
    for (const auto& p : net.params())
        if (!p.empty()) records += 2;
    w.u32(records);
    const auto& layers = net.spec().layers;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& p = net.params()[i];
        if (p.empty()) continue;
        for (int part = 0; part < 2; ++part) {
            const Tensor& t = part == 0 ? p.weight : p.bias;
            const std::string name = layers[i].name + (part == 0 ? ".weight" : ".bias");
            w.u32(std::uint32_t(name.size()));
            w.bytes(name.data(), name.size());
            w.u32(std::uint32_t(t.rank()));
            for (auto d : t.shape()) w.u32(std::uint32_t(d));
            for (float f : t.values()) w.f32(f);
        }
    }
    return w.buffer();
}

inline void save_checkpoint(const Network& net, const std::string& path) {
    const auto bytes = serialize_checkpoint(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw Error("failed writing " + path);
}

/// Restores weights into `net`, which must have been built from the same spec.
inline void deserialize_checkpoint(std::vector<char> bytes, Network& net) {
    detail::ByteReader r(std::move(bytes));
    const std::string magic = r.str(kCheckpointMagic.size());
    if (magic.compare(0, 5, "NAVTL") != 0) throw FormatError("not a checkpoint (bad magic header)");
    if (magic[5] != kCheckpointMagic[5])
        throw VersionError(std::string("checkpoint format version ") + magic[5] + " is not supported (expected " +
                           kCheckpointMagic[5] + ")");
    const std::uint64_t digest = r.u64();
    const std::uint32_t records = r.u32();

    const auto& layers = net.spec().layers;
    std::vector<LayerParams> loaded(layers.size());
    std::uint32_t expected = 0;
    for (const auto& p : net.params())
        if (!p.empty()) expected += 2;
    if (records != expected || digest != net.digest())
        throw ShapeError("checkpoint was written for a different network spec (" + std::to_string(records) +
                         " tensors, spec digest " + std::to_string(digest) + "; expected " +
                         std::to_string(expected) + " tensors, digest " + std::to_string(net.digest()) +
                         "); check resolution and action count");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (net.params()[i].empty()) continue;
        for (int part = 0; part < 2; ++part) {
            const Tensor& ref = part == 0 ? net.params()[i].weight : net.params()[i].bias;
            const std::string want = layers[i].name + (part == 0 ? ".weight" : ".bias");
            const std::string name = r.str(r.u32());
            if (name != want) throw ShapeError("checkpoint tensor '" + name + "' where '" + want + "' was expected");
            Shape shape(r.u32());
            for (auto& d : shape) d = r.u32();
            if (shape != ref.shape())
                throw ShapeError("checkpoint tensor " + name + " has shape " + shape_str(shape) + ", spec needs " +
                                 shape_str(ref.shape()));
            std::vector<float> data(shape_size(shape));
            for (auto& f : data) f = r.f32();
            (part == 0 ? loaded[i].weight : loaded[i].bias) = Tensor(shape, std::move(data));
        }
    }
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint records");
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (!loaded[i].empty()) net.params()[i] = std::move(loaded[i]);
}

inline std::vector<char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Loads a checkpoint for `spec`. Throws FormatError / VersionError on a bad
/// header or truncated file and ShapeError when the file does not fit `spec`.
inline Network load_checkpoint(const std::string& path, const NetworkSpec& spec) {
    Network net(spec);
    deserialize_checkpoint(read_file_bytes(path), net);
    return net;
}

}  // namespace navtl::nn
