#include "crowdscore/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>

#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

std::string hex_encode(const unsigned char* bytes, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[bytes[i] >> 4]);
        out.push_back(digits[bytes[i] & 0x0f]);
    }
    return out;
}

struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

CtxPtr new_sha256_ctx() {
    CtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 initialization failed");
    return ctx;
}

std::string finish(CtxPtr ctx) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
        throw IoError("sha256 finalization failed");
    return hex_encode(md.data(), len);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    auto ctx = new_sha256_ctx();
    EVP_DigestUpdate(ctx.get(), data.data(), data.size());
    return finish(std::move(ctx));
}

std::string sha256_hex(const std::vector<std::string_view>& parts) {
    auto ctx = new_sha256_ctx();
    for (const auto& part : parts) {
        std::uint64_t len = part.size();
        unsigned char prefix[8];
        for (int i = 0; i < 8; ++i) prefix[i] = static_cast<unsigned char>(len >> (8 * i));
        EVP_DigestUpdate(ctx.get(), prefix, sizeof(prefix));
        EVP_DigestUpdate(ctx.get(), part.data(), part.size());
    }
    return finish(std::move(ctx));
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);
    auto ctx = new_sha256_ctx();
    std::array<char, 65536> buf;
    while (in.read(buf.data(), buf.size()) || in.gcount() > 0)
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    return finish(std::move(ctx));
}

}  // namespace crowdscore
