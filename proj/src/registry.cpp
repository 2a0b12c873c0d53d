#include "tabbench/registry.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <curl/curl.h>
#include <openssl/evp.h>

#include "tabbench/errors.hpp"

namespace fs = std::filesystem;

namespace tabbench::data {

namespace {

std::vector<std::string> split_field(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string url_basename(const std::string& url) {
  auto pos = url.find_last_of('/');
  return pos == std::string::npos ? url : url.substr(pos + 1);
}

std::size_t curl_write_cb(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
  auto* out = static_cast<std::ofstream*>(userdata);
  out->write(ptr, static_cast<std::streamsize>(size * nmemb));
  return size * nmemb;
}

struct FileLock {
  explicit FileLock(const std::string& path) {
    fd = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd >= 0) ::flock(fd, LOCK_EX);
  }
  ~FileLock() {
    if (fd >= 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
    }
  }
  int fd = -1;
};

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FetchError("cannot open for hashing: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof b, "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

std::string http_get_to_file(const std::string& url, const std::string& dest) {
  CURL* curl = curl_easy_init();
  if (!curl) throw FetchError("curl init failed");
  std::ofstream out(dest, std::ios::binary);
  if (!out) throw FetchError("cannot write: " + dest);
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_MAXREDIRS, 10L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, curl_write_cb);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 30L);
  CURLcode rc = curl_easy_perform(curl);
  long status = 0;
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
  curl_easy_cleanup(curl);
  out.close();
  if (rc != CURLE_OK) {
    fs::remove(dest);
    throw FetchError("download failed (" + std::string(curl_easy_strerror(rc)) + ", http " +
                     std::to_string(status) + "): " + url);
  }
  return dest;
}

Registry Registry::from_text(const std::string& text) {
  Registry reg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = split_field(t, '|');
    if (f.size() < 7) throw ConfigError("manifest line needs 7+ fields: " + t);
    DatasetEntry e;
    e.name = f[0];
    e.url = f[1];
    e.sha256 = f[2];
    e.format = f[3];
    e.delimiter = f[4].empty() ? ',' : f[4][0];
    e.has_header = f[5] == "header";
    e.target = f[6];
    if (f.size() > 7 && !f[7].empty()) e.drop_columns = split_field(f[7], ',');
    if (f.size() > 8 && !f[8].empty()) e.drop_target_levels = split_field(f[8], ',');
    reg.entries_[e.name] = std::move(e);
  }
  return reg;
}

Registry Registry::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

Registry Registry::standard() {
  if (const char* env = std::getenv("TABBENCH_MANIFEST")) return from_file(env);
  if (fs::exists("data/datasets.manifest")) return from_file("data/datasets.manifest");
#ifdef TABBENCH_DATA_DIR
  return from_file(std::string(TABBENCH_DATA_DIR) + "/datasets.manifest");
#else
  throw ConfigError("no dataset manifest found; set TABBENCH_MANIFEST");
#endif
}

const DatasetEntry& Registry::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown dataset: " + name);
  return it->second;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::string default_cache_dir() {
  if (const char* env = std::getenv("TABBENCH_CACHE_DIR")) return env;
  const char* home = std::getenv("HOME");
  return std::string(home ? home : ".") + "/.cache/tabbench";
}

std::string Registry::fetch(const std::string& name, const std::string& cache_dir,
                            bool offline) const {
  const DatasetEntry& e = entry(name);
  if (const char* env = std::getenv("TABBENCH_OFFLINE")) {
    if (std::string(env) == "1") offline = true;
  }
  fs::create_directories(cache_dir);
  FileLock lock((fs::path(cache_dir) / ".lock").string());

  const std::string dest = (fs::path(cache_dir) / (name + "_" + url_basename(e.url))).string();
  if (!fs::exists(dest)) {
    if (offline) throw FetchError("offline and not cached: " + name);
    const std::string tmp = dest + ".part";
    http_get_to_file(e.url, tmp);
    fs::rename(tmp, dest);
  }
  if (!e.sha256.empty()) {
    const std::string got = sha256_file(dest);
    if (got != e.sha256) {
      throw IntegrityError("checksum mismatch for " + name + ": expected " + e.sha256 +
                           ", got " + got);
    }
  }
  return dest;
}

DataTable Registry::load(const std::string& name, const std::string& cache_dir,
                         bool offline) const {
  const DatasetEntry& e = entry(name);
  const std::string path = fetch(name, cache_dir, offline);
  LoadOptions opt;
  opt.arff = e.format == "arff";
  opt.csv.delimiter = e.delimiter;
  opt.csv.has_header = e.has_header;
  opt.drop_columns = e.drop_columns;
  opt.drop_target_levels = e.drop_target_levels;
  return data::load_csv(path, e.target, opt);
}

}  // namespace tabbench::data
