#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace alst {

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t n);
void write_file_text(const std::filesystem::path& path, const std::string& text);
std::uint64_t hash_file(const std::filesystem::path& path);

// "name<TAB>fnv64hex" per line for every regular file under dir (sorted
// relative paths), excluding the hash file itself.
void write_tree_hashes(const std::filesystem::path& dir,
                       const std::string& filename = "hashes.txt");

// Byte-compare two directory trees; returns a description of the first
// difference, or the empty string when identical.
std::string compare_trees(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace alst
