#include "lma4rec/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <boost/crc.hpp>

#include "lma4rec/error.hpp"

namespace lma4rec::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"num_heads", c.num_heads},
          {"num_blocks", c.num_blocks},
          {"max_len", c.max_len},
          {"attention_dropout", c.attention_dropout},
          {"embedding_dropout", c.embedding_dropout},
          {"lbd_init_keep", c.lbd_init_keep},
          {"use_lbd", c.use_lbd},
          {"layer_norm_eps", c.layer_norm_eps}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.num_blocks = j.at("num_blocks").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.attention_dropout = j.at("attention_dropout").get<double>();
  c.embedding_dropout = j.at("embedding_dropout").get<double>();
  c.lbd_init_keep = j.at("lbd_init_keep").get<double>();
  c.use_lbd = j.at("use_lbd").get<bool>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.validate();
  return c;
}

namespace {

template <typename T>
void append_pod(std::string& out, const T& value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T read_pod(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::uint32_t crc32(const char* data, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SasrecParams& params, const nlohmann::json& metadata) {
  const auto tensors = params.tensors();
  const auto names = params.tensor_names();
  nlohmann::json header;
  header["format"] = "lma4rec-checkpoint";
  header["config"] = config_to_json(params.config);
  header["num_items"] = params.num_items;
  header["tensors"] = nlohmann::json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    header["tensors"].push_back({{"name", names[i]}, {"shape", tensors[i].shape()}});
  }
  header["gate_logits"] = nlohmann::json::array();
  for (const auto& g : params.gates) header["gate_logits"].push_back(g.logits);
  header["metadata"] = metadata;
  const std::string header_text = header.dump();

  std::string body;
  append_pod(body, static_cast<std::uint64_t>(header_text.size()));
  body += header_text;
  for (const auto& t : tensors) {
    for (double v : t.data()) append_pod(body, v);
  }

  std::string file(kCheckpointMagic, sizeof(kCheckpointMagic));
  append_pod(file, kCheckpointVersion);
  file += body;
  append_pod(file, crc32(body.data(), body.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (file.size() < sizeof(kCheckpointMagic) + 4 + 8 + 4 ||
      std::memcmp(file.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw FormatError(path.string() + " is not an lma4rec checkpoint");
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = read_pod<std::uint32_t>(file, pos);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body_begin = pos;
  const std::size_t body_end = file.size() - 4;
  std::size_t crc_pos = body_end;
  const auto stored_crc = read_pod<std::uint32_t>(file, crc_pos);
  if (crc32(file.data() + body_begin, body_end - body_begin) != stored_crc) {
    throw FormatError("checkpoint " + path.string() + " is corrupted (checksum mismatch)");
  }
  const auto header_len = read_pod<std::uint64_t>(file, pos);
  if (pos + header_len > body_end) throw FormatError("checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(file.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;
  if (header.value("format", "") != "lma4rec-checkpoint") throw FormatError("checkpoint header has wrong format tag");

  Checkpoint ck;
  try {
    const ModelConfig config = config_from_json(header.at("config"));
    const std::size_t num_items = header.at("num_items").get<std::size_t>();
    Rng rng(0);
    ck.params = SasrecParams::init(config, num_items, rng);
    auto tensors = ck.params.tensors();
    const auto& entries = header.at("tensors");
    if (entries.size() != tensors.size()) throw FormatError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto shape = entries[i].at("shape").get<ad::Shape>();
      if (shape != tensors[i].shape()) {
        throw FormatError("checkpoint tensor " + entries[i].at("name").get<std::string>() + " has shape " +
                          ad::to_string(shape) + ", expected " + ad::to_string(tensors[i].shape()));
      }
      auto values = tensors[i].mutable_data();
      for (double& v : values) {
        if (pos + sizeof(double) > body_end) throw FormatError("checkpoint values truncated");
        v = read_pod<double>(file, pos);
      }
    }
    const auto& logits = header.at("gate_logits");
    if (logits.size() != ck.params.gates.size()) throw FormatError("checkpoint gate count mismatch");
    for (std::size_t c = 0; c < logits.size(); ++c) {
      auto l = logits[c].get<std::vector<double>>();
      if (l.size() != ck.params.gates[c].width()) throw FormatError("checkpoint gate width mismatch");
      ck.params.gates[c].logits = std::move(l);
    }
    ck.metadata = header.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  if (pos != body_end) throw FormatError("checkpoint has trailing bytes");
  return ck;
}

}  // namespace lma4rec::model
