#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cfbench {

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string name;
  std::string url;
  std::string sha256;
};

// JSON array of {name, url, sha256} objects.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Downloads url into cache_dir (file name from the manifest entry name or
// the URL basename) unless a cached copy already matches the digest, then
// verifies the SHA-256. Throws on network failure or digest mismatch.
std::filesystem::path fetch_dataset(const std::string& url, const std::string& expected_sha256,
                                    const std::filesystem::path& cache_dir,
                                    const std::string& file_name = "");

}  // namespace cfbench
