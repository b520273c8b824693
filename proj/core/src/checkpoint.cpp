#include "flowpat/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "flowpat/errors.hpp"
#include "flowpat/models/baselines.hpp"
#include "flowpat/models/senet.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace flowpat::models {

namespace {
constexpr const char* kFormatTag = "flowpat-checkpoint";

SENetConfig senet_config_from_json(const nlohmann::json& j) {
  SENetConfig c;
  c.kernel_size = j.value("kernel_size", c.kernel_size);
  c.block_stages = j.value("block_stages", c.block_stages);
  c.width_ratio = j.value("width_ratio", c.width_ratio);
  c.use_batch_norm = j.value("use_batch_norm", c.use_batch_norm);
  c.use_dropout = j.value("use_dropout", c.use_dropout);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.se_reduction = j.value("se_reduction", c.se_reduction);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.channels_per_width = j.value("channels_per_width", c.channels_per_width);
  c.blocks_per_stage = j.value("blocks_per_stage", c.blocks_per_stage);
  c.stem_downsample = j.value("stem_downsample", c.stem_downsample);
  c.use_se = j.value("use_se", c.use_se);
  return c;
}
}  // namespace

nlohmann::json senet_config_to_json(const SENetConfig& c) {
  return {{"kernel_size", c.kernel_size},
          {"block_stages", c.block_stages},
          {"width_ratio", c.width_ratio},
          {"use_batch_norm", c.use_batch_norm},
          {"use_dropout", c.use_dropout},
          {"dropout_rate", c.dropout_rate},
          {"se_reduction", c.se_reduction},
          {"num_classes", c.num_classes},
          {"channels_per_width", c.channels_per_width},
          {"blocks_per_stage", c.blocks_per_stage},
          {"stem_downsample", c.stem_downsample},
          {"use_se", c.use_se}};
}

void save_checkpoint(nn::Module& model, const std::string& model_type,
                     const nlohmann::json& arch_config,
                     const nlohmann::json& meta,
                     const std::filesystem::path& path) {
  const auto entries = model.state();
  nlohmann::json header;
  header["format"] = kFormatTag;
  header["version"] = kCheckpointVersion;
  header["model_type"] = model_type;
  header["arch"] = arch_config;
  header["meta"] = meta;
  nlohmann::json jentries = nlohmann::json::array();
  for (const auto& e : entries)
    jentries.push_back(
        {{"name", e.name}, {"shape", e.shape}, {"param", e.is_param}});
  header["entries"] = jentries;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << header.dump() << '\n';
  for (const auto& e : entries)
    out.write(reinterpret_cast<const char*>(e.data->data()),
              static_cast<std::streamsize>(e.data->size() * sizeof(double)));
  if (!out) throw DataError("short write to checkpoint: " + path.string());
}

bool is_deep_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line)) return false;
  return line.find(kFormatTag) != std::string::npos;
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw DataError("checkpoint header missing: " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("invalid checkpoint header in " + path.string() + ": " +
                    ex.what());
  }
  if (header.value("format", "") != kFormatTag)
    throw DataError("not a checkpoint file: " + path.string());
  if (header.value("version", 0) != kCheckpointVersion)
    throw DataError("unsupported checkpoint version in " + path.string());

  LoadedModel lm;
  lm.model_type = header.at("model_type").get<std::string>();
  lm.arch_config = header.value("arch", nlohmann::json::object());
  lm.meta = header.value("meta", nlohmann::json::object());

  if (lm.model_type == "senet1d") {
    lm.module = std::make_unique<SENet1d>(senet_config_from_json(lm.arch_config),
                                          /*seed=*/0);
  } else if (lm.model_type == "cnn1d") {
    lm.module = build_cnn1d(0);
  } else if (lm.model_type == "mlp") {
    lm.module = build_mlp(0);
  } else {
    throw DataError("unknown deep model type \"" + lm.model_type + "\" in " +
                    path.string());
  }

  const auto entries = lm.module->state();
  const auto& jentries = header.at("entries");
  if (jentries.size() != entries.size())
    throw DataError("checkpoint entry count mismatch in " + path.string());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto stored_shape = jentries[i].at("shape").get<nn::Shape>();
    if (jentries[i].at("name").get<std::string>() != entries[i].name ||
        stored_shape != entries[i].shape)
      throw DataError("checkpoint entry \"" + entries[i].name +
                      "\" does not match the architecture in " + path.string());
    in.read(reinterpret_cast<char*>(entries[i].data->data()),
            static_cast<std::streamsize>(entries[i].data->size() *
                                         sizeof(double)));
    if (!in)
      throw DataError("checkpoint truncated at entry \"" + entries[i].name +
                      "\": " + path.string());
  }
  return lm;
}

}  // namespace flowpat::models
