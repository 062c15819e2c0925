#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace edh {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);

// SHA-1 over "blob <size>\0<content>", i.e. the object id git assigns to a
// file with this content.
std::string git_blob_sha1(std::string_view content);

std::string read_file(const std::string& path);

}  // namespace edh
