#include "stepgan/hash.hpp"

#include <openssl/evp.h>

#include "stepgan/error.hpp"

namespace stepgan {

Sha256Digest sha256(std::span<const std::uint8_t> bytes) {
    Sha256Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
        throw Error("SHA-256 digest failed");
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    const auto d = sha256({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    return to_hex(d);
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(kDigits[b >> 4]);
        s.push_back(kDigits[b & 0xf]);
    }
    return s;
}

}  // namespace stepgan
