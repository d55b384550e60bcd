#include "cfbench/fetch.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace cfbench {

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr)) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for hashing: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return sha256_hex(bytes.data(), bytes.size());
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw std::runtime_error("manifest must be a JSON array of entries");
  std::vector<ManifestEntry> entries;
  for (const auto& item : j) {
    ManifestEntry e;
    e.name = item.at("name").get<std::string>();
    e.url = item.at("url").get<std::string>();
    e.sha256 = item.at("sha256").get<std::string>();
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// scheme://authority/path -> (scheme://authority, /path)
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::runtime_error("URL lacks a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::filesystem::path fetch_dataset(const std::string& url, const std::string& expected_sha256,
                                    const std::filesystem::path& cache_dir,
                                    const std::string& file_name) {
  const std::string want = lower(expected_sha256);
  if (want.size() != 64 || want.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw std::runtime_error("expected checksum is not a SHA-256 hex digest: " + expected_sha256);
  }

  std::string name = file_name;
  if (name.empty()) {
    const auto [_, path] = split_url(url);
    const auto slash = path.find_last_of('/');
    name = path.substr(slash + 1);
    if (name.empty()) name = want.substr(0, 12);
  }

  std::filesystem::create_directories(cache_dir);
  const std::filesystem::path target = cache_dir / name;
  if (std::filesystem::exists(target) && sha256_file(target) == want) {
    return target;  // cache hit, no network touch
  }

  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  client.set_follow_location(true);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  const httplib::Result res = client.Get(path);
  if (!res) {
    throw std::runtime_error("network failure fetching " + url + ": " +
                             httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw std::runtime_error("HTTP " + std::to_string(res->status) + " fetching " + url);
  }

  const std::string got = sha256_hex(res->body.data(), res->body.size());
  if (got != want) {
    throw std::runtime_error("checksum mismatch for " + url + ": expected " + want + ", got " +
                             got + " (upstream data corrupted or changed)");
  }
  std::ofstream out(target, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cache file: " + target.string());
  out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
  return target;
}

}  // namespace cfbench
