#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "anensolar/error.hpp"

namespace anensolar::cli {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(Errc::io_failure, "SHA-256 unavailable");
    }
  }

  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
      out += digits[md[k] >> 4];
      out += digits[md[k] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string display_path(const std::filesystem::path& p, const std::filesystem::path& base) {
  const auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void record_manifest(const std::filesystem::path& output, const std::string& command,
                     const nlohmann::json& config,
                     const std::vector<std::filesystem::path>& inputs,
                     const std::vector<std::filesystem::path>& outputs) {
  const auto path = output / "manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (std::ifstream in(path); in) {
    manifest = nlohmann::json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) manifest = nlohmann::json::object();
  }
  nlohmann::json entry;
  entry["config_sha256"] = sha256_hex(config.dump());
  entry["inputs"] = nlohmann::json::object();
  for (const auto& p : inputs) entry["inputs"][display_path(p, output)] = sha256_file(p);
  entry["outputs"] = nlohmann::json::object();
  for (const auto& p : outputs) entry["outputs"][display_path(p, output)] = sha256_file(p);
  manifest[command] = entry;
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace anensolar::cli
