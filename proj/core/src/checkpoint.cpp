#include "edlm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace edlm {

namespace {

constexpr char kMagic[8] = {'E', 'D', 'L', 'M', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

/// Sequential little-endian reader over a byte buffer; any overrun means the
/// file was truncated.
struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("corrupt checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::uint32_t crc_of(const std::string& payload) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size())));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    check_params_match(ckpt.spec, ckpt.params);

    std::string payload;
    const std::string spec_text = spec_to_text(ckpt.spec);
    put_u32(payload, static_cast<std::uint32_t>(spec_text.size()));
    payload += spec_text;
    put_u32(payload, ckpt.epochs_completed);
    put_u64(payload, ckpt.seed);
    put_f64(payload, ckpt.final_loss);

    // Parameter tensors in layer order, weights then bias, 32-bit LE floats.
    for (const auto& lp : ckpt.params.layers) {
        if (lp.empty()) continue;
        put_u64(payload, lp.weights.size());
        for (std::size_t i = 0; i < lp.weights.size(); ++i) put_f32(payload, lp.weights[i]);
        put_u64(payload, lp.bias.size());
        for (std::size_t i = 0; i < lp.bias.size(); ++i) put_f32(payload, lp.bias[i]);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    std::string head;
    put_u32(head, kCheckpointVersion);
    put_u32(head, crc_of(payload));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed while writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing checkpoint file: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw IoError("corrupt checkpoint: bad magic in " + path);
    Reader reader{buf, sizeof(kMagic)};
    const std::uint32_t version = reader.u32();
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
    const std::uint32_t stored_crc = reader.u32();
    const std::string payload = buf.substr(reader.pos);
    if (crc_of(payload) != stored_crc)
        throw IoError("corrupt checkpoint: CRC mismatch in " + path);

    Reader body{payload, 0};
    Checkpoint ckpt;
    const std::uint32_t spec_len = body.u32();
    ckpt.spec = spec_from_text(body.bytes(spec_len));
    ckpt.epochs_completed = body.u32();
    ckpt.seed = body.u64();
    ckpt.final_loss = body.f64();

    const auto shapes = parameter_shapes(ckpt.spec);
    for (const auto& [wshape, bshape] : shapes) {
        LayerParams<float> lp;
        if (!wshape.empty()) {
            lp.weights = Tensor<float>(wshape);
            const std::uint64_t wcount = body.u64();
            if (wcount != lp.weights.size())
                throw IoError("checkpoint parameters inconsistent with its network shape: "
                              "expected " + std::to_string(lp.weights.size()) +
                              " weights, file has " + std::to_string(wcount));
            for (std::size_t i = 0; i < lp.weights.size(); ++i) lp.weights[i] = body.f32();
            lp.bias = Tensor<float>(bshape);
            const std::uint64_t bcount = body.u64();
            if (bcount != lp.bias.size())
                throw IoError("checkpoint parameters inconsistent with its network shape: "
                              "expected " + std::to_string(lp.bias.size()) +
                              " biases, file has " + std::to_string(bcount));
            for (std::size_t i = 0; i < lp.bias.size(); ++i) lp.bias[i] = body.f32();
        }
        ckpt.params.layers.push_back(std::move(lp));
    }
    if (body.pos != payload.size())
        throw IoError("corrupt checkpoint: trailing bytes in " + path);
    return ckpt;
}

}  // namespace edlm
