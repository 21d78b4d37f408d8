#include "heatperim/hash.hpp"

#include <openssl/evp.h>

#include <array>

namespace heatperim {

std::string sha256Hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::Numerical, "sha256: digest computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string vectorHash(const Vector& v) {
    return sha256Hex(std::string_view(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size()));
}

}  // namespace heatperim
