#include "tagsum/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

#include "tagsum/binary_io.hpp"

namespace tagsum::model {

void save_checkpoint(const std::filesystem::path& manifest, const ModelParams& params,
                     const CheckpointInfo& info) {
  std::filesystem::path sidecar = manifest;
  sidecar.replace_extension(".bin");

  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["E"] = params.dims.emb_dim;
  j["H"] = params.dims.hidden_dim;
  j["A"] = params.dims.attn_dim;
  j["K"] = params.dims.num_topics;
  j["V"] = params.dims.vocab_size;
  j["switch_hidden"] = params.dims.switch_hidden;
  j["mode"] = to_string(info.mode);
  j["use_coverage"] = info.use_coverage;
  j["epoch"] = info.epoch;
  j["vocab"] = info.vocab_file;
  j["topic_model"] = info.topic_model_file;
  j["data_file"] = sidecar.filename().string();

  std::vector<char> bytes;
  nlohmann::ordered_json arrays = nlohmann::ordered_json::array();
  for (const auto& [name, t] : params.named()) {
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["shape"] = t->shape();
    entry["offset"] = bytes.size();
    io::append_f64_le(bytes, t->values());
    arrays.push_back(entry);
  }
  j["arrays"] = arrays;

  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + manifest.string());
  out << j.dump(2) << '\n';
  io::write_file(sidecar, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot read checkpoint " + manifest.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  const int version = j.value("format_version", 0);
  if (version != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint " + manifest.string() + ": format_version " +
                             std::to_string(version) + " is not supported (expected " +
                             std::to_string(kCheckpointFormatVersion) + ")");

  ModelDims dims;
  dims.emb_dim = j.at("E").get<std::size_t>();
  dims.hidden_dim = j.at("H").get<std::size_t>();
  dims.attn_dim = j.at("A").get<std::size_t>();
  dims.num_topics = j.at("K").get<std::size_t>();
  dims.vocab_size = j.at("V").get<std::size_t>();
  dims.switch_hidden = j.at("switch_hidden").get<std::size_t>();

  Checkpoint ck;
  ck.info.mode = parse_mode(j.at("mode").get<std::string>());
  ck.info.use_coverage = j.at("use_coverage").get<bool>();
  ck.info.epoch = j.value("epoch", 0);
  ck.info.vocab_file = j.value("vocab", std::string());
  ck.info.topic_model_file = j.value("topic_model", std::string());
  ck.params = ModelParams::zeros(dims);

  const auto bytes = io::read_file(manifest.parent_path() / j.at("data_file").get<std::string>());
  std::map<std::string, nlohmann::json> index;
  for (const auto& entry : j.at("arrays")) index[entry.at("name").get<std::string>()] = entry;
  for (auto& [name, t] : ck.params.named()) {
    auto it = index.find(name);
    if (it == index.end())
      throw std::runtime_error("checkpoint " + manifest.string() + ": missing array " + name);
    const auto shape = it->second.at("shape").get<ad::Shape>();
    if (shape != t->shape())
      throw std::runtime_error("checkpoint " + manifest.string() + ": array " + name + " has shape " +
                               ad::to_string(shape) + ", expected " + ad::to_string(t->shape()));
    const std::size_t offset = it->second.at("offset").get<std::size_t>();
    if (offset + 8 * t->size() > bytes.size())
      throw std::runtime_error("checkpoint " + manifest.string() + ": array " + name +
                               " runs past the end of the data file");
    const auto values = io::decode_f64_le(bytes.data() + offset, t->size());
    std::copy(values.begin(), values.end(), t->mutable_values().begin());
  }
  return ck;
}

}  // namespace tagsum::model
