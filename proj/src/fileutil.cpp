#include "alst/fileutil.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "alst/errors.hpp"
#include "alst/rng.hpp"

namespace alst {

namespace fs = std::filesystem;

std::vector<unsigned char> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

std::string read_file_text(const fs::path& path) {
  auto b = read_file_bytes(path);
  return std::string(b.begin(), b.end());
}

void write_file_bytes(const fs::path& path, const void* data, std::size_t n) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("short write to " + path.string());
}

void write_file_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, text.data(), text.size());
}

std::uint64_t hash_file(const fs::path& path) {
  auto b = read_file_bytes(path);
  return fnv1a64(b.data(), b.size());
}

namespace {
std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), dir));
  std::sort(rel.begin(), rel.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return rel;
}
}  // namespace

void write_tree_hashes(const fs::path& dir, const std::string& filename) {
  std::string out;
  for (const fs::path& rel : sorted_files(dir)) {
    if (rel.filename() == filename) continue;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(hash_file(dir / rel)));
    out += rel.generic_string();
    out += '\t';
    out += hex;
    out += '\n';
  }
  write_file_text(dir / filename, out);
}

std::string compare_trees(const fs::path& a, const fs::path& b) {
  auto fa = sorted_files(a);
  auto fb = sorted_files(b);
  if (fa != fb) return "file lists differ";
  for (const fs::path& rel : fa) {
    if (read_file_bytes(a / rel) != read_file_bytes(b / rel))
      return "content differs: " + rel.generic_string();
  }
  return "";
}

}  // namespace alst
