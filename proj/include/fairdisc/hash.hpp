#pragma once

#include <cstdint>
#include <string>

namespace fairdisc {

// Streaming SHA-256, used for dataset provenance hashes.
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }

    // Finalizes and returns the lowercase hex digest; the object must not be
    // updated afterwards.
    std::string hex_digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
    std::uint64_t total_ = 0;
    bool done_ = false;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

// Throws IoError if the file cannot be read.
std::string sha256_file(const std::string& path);

} // namespace fairdisc
