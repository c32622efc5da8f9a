#include "capq/he_backend.hpp"

#include "capq/binio.hpp"
#include "capq/ckks/backend.hpp"
#include "capq/error.hpp"
#include "capq/sim_backend.hpp"

namespace capq {

std::vector<std::uint8_t> CipherVector::serialize() const {
    ByteWriter w;
    w.magic("CVCT");
    w.u8(1);
    w.u8(backend_id);
    w.u8(static_cast<std::uint8_t>(packing));
    w.u8(0);
    w.u32(dim);
    w.u64(fingerprint);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.bytes(payload);
    return w.data();
}

CipherVector CipherVector::parse(std::span<const std::uint8_t> data) {
    ByteReader r(data, "CipherVector");
    r.expect_magic("CVCT");
    if (std::uint8_t v = r.u8(); v != 1) r.fail("unsupported version " + std::to_string(v));
    CipherVector ct;
    ct.backend_id = r.u8();
    std::uint8_t packing = r.u8();
    if (packing > 1) r.fail("invalid packing tag");
    ct.packing = static_cast<Packing>(packing);
    if (r.u8() != 0) r.fail("nonzero reserved byte");
    ct.dim = r.u32();
    ct.fingerprint = r.u64();
    std::uint32_t len = r.u32();
    if (len > r.remaining()) r.fail("payload length exceeds input");
    ct.payload.resize(len);
    r.bytes(ct.payload);
    r.expect_end();
    return ct;
}

std::vector<std::uint8_t> CipherScore::serialize() const {
    ByteWriter w;
    w.magic("CSCT");
    w.u8(1);
    w.u8(backend_id);
    w.u8(0);
    w.u8(0);
    w.u64(fingerprint);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.bytes(payload);
    return w.data();
}

CipherScore CipherScore::parse(std::span<const std::uint8_t> data) {
    ByteReader r(data, "CipherScore");
    r.expect_magic("CSCT");
    if (std::uint8_t v = r.u8(); v != 1) r.fail("unsupported version " + std::to_string(v));
    CipherScore cs;
    cs.backend_id = r.u8();
    if (r.u8() != 0 || r.u8() != 0) r.fail("nonzero reserved byte");
    cs.fingerprint = r.u64();
    std::uint32_t len = r.u32();
    if (len > r.remaining()) r.fail("payload length exceeds input");
    cs.payload.resize(len);
    r.bytes(cs.payload);
    r.expect_end();
    return cs;
}

std::unique_ptr<HeBackend> make_backend(const std::string& name) {
    if (name == "sim") return std::make_unique<SimBackend>();
    if (name == "ckks_lite") return std::make_unique<CkksBackend>(HeParams::defaults());
    throw_param("unknown backend '" + name + "', expected 'sim' or 'ckks_lite'");
}

}  // namespace capq
