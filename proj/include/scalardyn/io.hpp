#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scalardyn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `content` to a temporary sibling, then renames over `path`, so a
/// reader never observes a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

std::string to_hex(std::uint64_t value);

}  // namespace scalardyn
