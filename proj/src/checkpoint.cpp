#include "iae/checkpoint.hpp"

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

nlohmann::json tensors_to_json(const TensorMap& tensors) {
  nlohmann::json doc;
  doc["format"] = "iae-tensors";
  doc["version"] = kCheckpointVersion;
  nlohmann::json& out = doc["tensors"];
  out = nlohmann::json::object();
  for (const auto& [name, t] : tensors) {
    if (!t.all_finite()) throw NumericError("checkpoint: tensor '" + name + "' is not finite");
    out[name] = {{"shape", t.shape()},
                 {"values", std::vector<double>(t.values().begin(), t.values().end())}};
  }
  return doc;
}

TensorMap tensors_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "iae-tensors") {
    throw InputError("checkpoint: not an iae-tensors document");
  }
  const int version = doc.value("version", 0);
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported version " + std::to_string(version));
  }
  TensorMap tensors;
  for (const auto& [name, entry] : doc.at("tensors").items()) {
    try {
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      auto values = entry.at("values").get<std::vector<double>>();
      tensors.emplace(name, Tensor(std::move(shape), std::move(values)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("checkpoint: tensor '" + name + "': " + e.what());
    }
  }
  return tensors;
}

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors) {
  io::write_file(path, tensors_to_json(tensors).dump() + "\n");
}

TensorMap load_tensors(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("checkpoint " + path.string() + ": " + e.what());
  }
  return tensors_from_json(doc);
}

}  // namespace iae
