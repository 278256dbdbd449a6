// SPDX-License-Identifier: Apache-2.0
#include "ihs/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <system_error>

#include "ihs/error.hpp"

namespace ihs {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Ingest: return "ingest";
        case ErrorKind::Config: return "config";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Format: return "format";
        case ErrorKind::Corruption: return "corruption";
        case ErrorKind::Lookup: return "lookup";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Digest sha256(std::string_view bytes) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        fail(ErrorKind::Io, "sha256 computation failed");
    }
    return out;
}

std::string to_hex(const Digest& digest) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : digest) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0x0f]);
    }
    return s;
}

Digest digest_from_hex(std::string_view hex) {
    if (hex.size() != 64) fail(ErrorKind::Format, "sha256 digest must be 64 hex characters");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        fail(ErrorKind::Format, std::string("invalid hex character '") + c + "' in digest");
    };
    Digest out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorKind::Io, "read failed: " + path.string());
    return std::move(ss).str();
}

std::string sha256_file_hex(const std::filesystem::path& path) {
    return to_hex(sha256(read_file(path)));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            fail(ErrorKind::Io, "write failed: " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot move file into place: " + path.string());
    }
}

}  // namespace ihs
