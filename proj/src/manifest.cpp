#include "iae/manifest.hpp"

#include <openssl/evp.h>

#include <array>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(io::read_file(path)); }

nlohmann::json Manifest::to_json() const {
  return {{"format", "iae-manifest"}, {"version", 1},          {"command", command},
          {"config", config},         {"inputs", inputs},      {"artifacts", artifacts}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "iae-manifest") throw InputError("not an iae-manifest document");
  if (j.value("version", 0) != 1) throw InputError("unsupported manifest version");
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config").get<std::string>();
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  return m;
}

void Manifest::save(const std::filesystem::path& run_dir) const {
  io::write_file(run_dir / "manifest.json", to_json().dump(2) + "\n");
}

Manifest Manifest::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void record_artifacts(Manifest& manifest, const std::filesystem::path& run_dir,
                      std::initializer_list<std::filesystem::path> files) {
  for (const auto& f : files) manifest.artifacts[f.generic_string()] = sha256_file(run_dir / f);
}

void record_input(Manifest& manifest, const std::filesystem::path& path) {
  manifest.inputs[path.generic_string()] = sha256_file(path);
}

}  // namespace iae
