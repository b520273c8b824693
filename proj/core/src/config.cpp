#include "flowpat/config.hpp"

#include <charconv>
#include <fstream>

#include "flowpat/errors.hpp"

namespace flowpat::pipeline {

namespace {

nlohmann::json dips_to_json(const synth::PeriodicDipParams& p) {
  return {{"base_v", p.base_v},
          {"dip_v", p.dip_v},
          {"duty_min", p.duty_min},
          {"duty_max", p.duty_max},
          {"period_scale_s", p.period_scale_s},
          {"period_min_s", p.period_min_s},
          {"period_max_s", p.period_max_s},
          {"noise_sigma_v", p.noise_sigma_v}};
}

void dips_from_json(const nlohmann::json& j, synth::PeriodicDipParams& p) {
  p.base_v = j.at("base_v").get<double>();
  p.dip_v = j.at("dip_v").get<double>();
  p.duty_min = j.at("duty_min").get<double>();
  p.duty_max = j.at("duty_max").get<double>();
  p.period_scale_s = j.at("period_scale_s").get<double>();
  p.period_min_s = j.at("period_min_s").get<double>();
  p.period_max_s = j.at("period_max_s").get<double>();
  p.noise_sigma_v = j.at("noise_sigma_v").get<double>();
}

nlohmann::json slug_to_json(const synth::SlugParams& p) {
  return {{"plateau_v", p.plateau_v},
          {"trough_v", p.trough_v},
          {"duty_min", p.duty_min},
          {"duty_max", p.duty_max},
          {"period_scale_s", p.period_scale_s},
          {"period_min_s", p.period_min_s},
          {"period_max_s", p.period_max_s},
          {"period_jitter_frac", p.period_jitter_frac},
          {"plateau_noise_sigma_v", p.plateau_noise_sigma_v},
          {"trough_noise_sigma_v", p.trough_noise_sigma_v}};
}

void slug_from_json(const nlohmann::json& j, synth::SlugParams& p) {
  p.plateau_v = j.at("plateau_v").get<double>();
  p.trough_v = j.at("trough_v").get<double>();
  p.duty_min = j.at("duty_min").get<double>();
  p.duty_max = j.at("duty_max").get<double>();
  p.period_scale_s = j.at("period_scale_s").get<double>();
  p.period_min_s = j.at("period_min_s").get<double>();
  p.period_max_s = j.at("period_max_s").get<double>();
  p.period_jitter_frac = j.at("period_jitter_frac").get<double>();
  p.plateau_noise_sigma_v = j.at("plateau_noise_sigma_v").get<double>();
  p.trough_noise_sigma_v = j.at("trough_noise_sigma_v").get<double>();
}

nlohmann::json wave_to_json(const synth::WaveParams& p) {
  return {{"base_v", p.base_v},
          {"wave_freq_min_hz", p.wave_freq_min_hz},
          {"wave_freq_max_hz", p.wave_freq_max_hz},
          {"wave_amp_v", p.wave_amp_v},
          {"noise_sigma_v", p.noise_sigma_v}};
}

void wave_from_json(const nlohmann::json& j, synth::WaveParams& p) {
  p.base_v = j.at("base_v").get<double>();
  p.wave_freq_min_hz = j.at("wave_freq_min_hz").get<double>();
  p.wave_freq_max_hz = j.at("wave_freq_max_hz").get<double>();
  p.wave_amp_v = j.at("wave_amp_v").get<double>();
  p.noise_sigma_v = j.at("noise_sigma_v").get<double>();
}

const char* const kModelTypes[] = {"senet1d",       "cnn1d",
                                   "mlp",           "decision_tree",
                                   "random_forest", "svm"};

}  // namespace

void RunConfig::validate() const {
  if (synth.experiments_per_row == 0)
    throw ConfigError("synth.experiments_per_row must be >= 1");
  synth.signal.validate();
  if (split.train_per_pattern == 0 || split.eval_per_pattern == 0)
    throw ConfigError("split quotas must be >= 1");
  if (split.window_len == 0) throw ConfigError("split.window_len must be >= 1");
  bool known = false;
  for (const char* t : kModelTypes)
    if (model.type == t) known = true;
  if (!known) throw ConfigError("unknown model.type \"" + model.type + "\"");
  if (model.pca_components > split.window_len)
    throw ConfigError("model.pca_components exceeds the window length");
  model.senet.validate();
  if (train.epochs == 0 || train.batch_size == 0)
    throw ConfigError("train.epochs and train.batch_size must be >= 1");
  if (train.optimizer.lr <= 0.0) throw ConfigError("train.lr must be positive");
  if (predict.stride == 0) throw ConfigError("predict.stride must be >= 1");
  if (psd.segment_len == 0 || psd.overlap >= psd.segment_len)
    throw ConfigError("psd.overlap must be smaller than psd.segment_len");
  if (psd.cumulative_fraction <= 0.0 || psd.cumulative_fraction > 1.0)
    throw ConfigError("psd.cumulative_fraction must lie in (0,1]");
  if (psd.sampling_margin_k < 2.0 || psd.sampling_margin_k > 3.0)
    throw ConfigError("psd.sampling_margin_k must lie in [2,3]");
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["synth"] = {
      {"experiments_per_row", c.synth.experiments_per_row},
      {"duration_s", c.synth.signal.duration_s},
      {"sample_rate_hz", c.synth.signal.sample_rate_hz},
      {"inclination_level_v_per_deg", c.synth.signal.inclination_level_v_per_deg},
      {"velocity_noise_gain", c.synth.signal.velocity_noise_gain},
      {"u_os_level_v_per_mps", c.synth.signal.u_os_level_v_per_mps},
      {"dispersed_bubble",
       {{"base_v", c.synth.signal.dispersed_bubble.base_v},
        {"noise_sigma_v", c.synth.signal.dispersed_bubble.noise_sigma_v}}},
      {"plug", dips_to_json(c.synth.signal.plug)},
      {"elongated_bubble", dips_to_json(c.synth.signal.elongated_bubble)},
      {"slug", slug_to_json(c.synth.signal.slug)},
      {"slug_churn",
       {{"skeleton", slug_to_json(c.synth.signal.slug_churn.skeleton)},
        {"broadband_sigma_v", c.synth.signal.slug_churn.broadband_sigma_v},
        {"osc_freq_min_hz", c.synth.signal.slug_churn.osc_freq_min_hz},
        {"osc_freq_max_hz", c.synth.signal.slug_churn.osc_freq_max_hz},
        {"osc_amp_v", c.synth.signal.slug_churn.osc_amp_v}}},
      {"annular", wave_to_json(c.synth.signal.annular)},
      {"stratified_wavy", wave_to_json(c.synth.signal.stratified_wavy)}};
  j["split"] = {{"protocol", std::string(to_string(c.split.protocol))},
                {"train_per_pattern", c.split.train_per_pattern},
                {"eval_per_pattern", c.split.eval_per_pattern},
                {"window_len", c.split.window_len}};
  j["model"] = {
      {"type", c.model.type},
      {"pca_components", c.model.pca_components},
      {"senet",
       {{"kernel_size", c.model.senet.kernel_size},
        {"block_stages", c.model.senet.block_stages},
        {"width_ratio", c.model.senet.width_ratio},
        {"use_batch_norm", c.model.senet.use_batch_norm},
        {"use_dropout", c.model.senet.use_dropout},
        {"dropout_rate", c.model.senet.dropout_rate},
        {"se_reduction", c.model.senet.se_reduction},
        {"num_classes", c.model.senet.num_classes},
        {"channels_per_width", c.model.senet.channels_per_width},
        {"blocks_per_stage", c.model.senet.blocks_per_stage},
        {"stem_downsample", c.model.senet.stem_downsample},
        {"use_se", c.model.senet.use_se}}},
      {"forest",
       {{"n_trees", c.model.forest.n_trees},
        {"features_per_split", c.model.forest.features_per_split},
        {"bootstrap", c.model.forest.bootstrap},
        {"max_depth", c.model.forest.max_depth ? *c.model.forest.max_depth : 0}}},
      {"tree", {{"max_depth", c.model.tree.max_depth ? *c.model.tree.max_depth : 0}}},
      {"svm", {{"c", c.model.svm.c}, {"epochs", c.model.svm.epochs}}}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.optimizer.lr},
                {"beta1", c.train.optimizer.beta1},
                {"beta2", c.train.optimizer.beta2},
                {"eps", c.train.optimizer.eps},
                {"weight_decay", c.train.optimizer.weight_decay}};
  j["predict"] = {{"stride", c.predict.stride}};
  j["psd"] = {{"n_points", c.psd.n_points},
              {"segment_len", c.psd.segment_len},
              {"overlap", c.psd.overlap},
              {"cumulative_fraction", c.psd.cumulative_fraction},
              {"sampling_margin_k", c.psd.sampling_margin_k}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<std::size_t>();

  const auto& s = j.at("synth");
  c.synth.experiments_per_row = s.at("experiments_per_row").get<std::size_t>();
  c.synth.signal.seed = c.seed;
  c.synth.signal.duration_s = s.at("duration_s").get<double>();
  c.synth.signal.sample_rate_hz = s.at("sample_rate_hz").get<double>();
  c.synth.signal.inclination_level_v_per_deg =
      s.at("inclination_level_v_per_deg").get<double>();
  c.synth.signal.velocity_noise_gain =
      s.at("velocity_noise_gain").get<double>();
  c.synth.signal.u_os_level_v_per_mps =
      s.at("u_os_level_v_per_mps").get<double>();
  c.synth.signal.dispersed_bubble.base_v =
      s.at("dispersed_bubble").at("base_v").get<double>();
  c.synth.signal.dispersed_bubble.noise_sigma_v =
      s.at("dispersed_bubble").at("noise_sigma_v").get<double>();
  dips_from_json(s.at("plug"), c.synth.signal.plug);
  dips_from_json(s.at("elongated_bubble"), c.synth.signal.elongated_bubble);
  slug_from_json(s.at("slug"), c.synth.signal.slug);
  slug_from_json(s.at("slug_churn").at("skeleton"),
                 c.synth.signal.slug_churn.skeleton);
  c.synth.signal.slug_churn.broadband_sigma_v =
      s.at("slug_churn").at("broadband_sigma_v").get<double>();
  c.synth.signal.slug_churn.osc_freq_min_hz =
      s.at("slug_churn").at("osc_freq_min_hz").get<double>();
  c.synth.signal.slug_churn.osc_freq_max_hz =
      s.at("slug_churn").at("osc_freq_max_hz").get<double>();
  c.synth.signal.slug_churn.osc_amp_v =
      s.at("slug_churn").at("osc_amp_v").get<double>();
  wave_from_json(s.at("annular"), c.synth.signal.annular);
  wave_from_json(s.at("stratified_wavy"), c.synth.signal.stratified_wavy);

  const auto& sp = j.at("split");
  c.split.protocol = parse_protocol(sp.at("protocol").get<std::string>());
  c.split.train_per_pattern = sp.at("train_per_pattern").get<std::size_t>();
  c.split.eval_per_pattern = sp.at("eval_per_pattern").get<std::size_t>();
  c.split.window_len = sp.at("window_len").get<std::size_t>();

  const auto& m = j.at("model");
  c.model.type = m.at("type").get<std::string>();
  c.model.pca_components = m.at("pca_components").get<std::size_t>();
  const auto& sn = m.at("senet");
  c.model.senet.kernel_size = sn.at("kernel_size").get<std::size_t>();
  c.model.senet.block_stages = sn.at("block_stages").get<std::size_t>();
  c.model.senet.width_ratio = sn.at("width_ratio").get<std::size_t>();
  c.model.senet.use_batch_norm = sn.at("use_batch_norm").get<bool>();
  c.model.senet.use_dropout = sn.at("use_dropout").get<bool>();
  c.model.senet.dropout_rate = sn.at("dropout_rate").get<double>();
  c.model.senet.se_reduction = sn.at("se_reduction").get<std::size_t>();
  c.model.senet.num_classes = sn.at("num_classes").get<std::size_t>();
  c.model.senet.channels_per_width =
      sn.at("channels_per_width").get<std::size_t>();
  c.model.senet.blocks_per_stage = sn.at("blocks_per_stage").get<std::size_t>();
  c.model.senet.stem_downsample = sn.at("stem_downsample").get<bool>();
  c.model.senet.use_se = sn.at("use_se").get<bool>();
  const auto& fo = m.at("forest");
  c.model.forest.n_trees = fo.at("n_trees").get<std::size_t>();
  c.model.forest.features_per_split =
      fo.at("features_per_split").get<std::size_t>();
  c.model.forest.bootstrap = fo.at("bootstrap").get<bool>();
  const auto fo_depth = fo.at("max_depth").get<std::size_t>();
  c.model.forest.max_depth =
      fo_depth == 0 ? std::nullopt : std::optional<std::size_t>(fo_depth);
  const auto tree_depth = m.at("tree").at("max_depth").get<std::size_t>();
  c.model.tree.max_depth =
      tree_depth == 0 ? std::nullopt : std::optional<std::size_t>(tree_depth);
  c.model.svm.c = m.at("svm").at("c").get<double>();
  c.model.svm.epochs = m.at("svm").at("epochs").get<std::size_t>();

  const auto& t = j.at("train");
  c.train.epochs = t.at("epochs").get<std::size_t>();
  c.train.batch_size = t.at("batch_size").get<std::size_t>();
  c.train.optimizer.lr = t.at("lr").get<double>();
  c.train.optimizer.beta1 = t.at("beta1").get<double>();
  c.train.optimizer.beta2 = t.at("beta2").get<double>();
  c.train.optimizer.eps = t.at("eps").get<double>();
  c.train.optimizer.weight_decay = t.at("weight_decay").get<double>();

  c.predict.stride = j.at("predict").at("stride").get<std::size_t>();

  const auto& ps = j.at("psd");
  c.psd.n_points = ps.at("n_points").get<std::size_t>();
  c.psd.segment_len = ps.at("segment_len").get<std::size_t>();
  c.psd.overlap = ps.at("overlap").get<std::size_t>();
  c.psd.cumulative_fraction = ps.at("cumulative_fraction").get<double>();
  c.psd.sampling_margin_k = ps.at("sampling_margin_k").get<double>();

  c.validate();
  return c;
}

namespace {

bool compatible_types(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void merge_into(nlohmann::json& base, const nlohmann::json& user,
                const std::string& path) {
  if (!user.is_object())
    throw ConfigError("config: expected an object at \"" +
                      (path.empty() ? "<root>" : path) + "\"");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key()))
      throw ConfigError("config: unknown key \"" + key_path + "\"");
    nlohmann::json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_into(slot, it.value(), key_path);
    } else {
      if (!compatible_types(slot, it.value()))
        throw ConfigError("config: wrong type for \"" + key_path + "\"");
      slot = it.value();
    }
  }
}

void apply_override(nlohmann::json& base, const std::string& dotted,
                    const std::string& value) {
  nlohmann::json* slot = &base;
  std::size_t pos = 0;
  while (true) {
    const auto dot = dotted.find('.', pos);
    const std::string key = dotted.substr(pos, dot - pos);
    if (!slot->is_object() || !slot->contains(key))
      throw ConfigError("config: unknown override key \"" + dotted + "\"");
    slot = &(*slot)[key];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (slot->is_object())
    throw ConfigError("config: override \"" + dotted + "\" names a group");
  if (slot->is_string()) {
    *slot = value;
  } else if (slot->is_boolean()) {
    if (value == "true" || value == "1")
      *slot = true;
    else if (value == "false" || value == "0")
      *slot = false;
    else
      throw ConfigError("config: expected a boolean for \"" + dotted + "\"");
  } else if (slot->is_number_unsigned()) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
      throw ConfigError("config: expected an unsigned integer for \"" + dotted +
                        "\"");
    *slot = v;
  } else {
    double v = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
      throw ConfigError("config: expected a number for \"" + dotted + "\"");
    *slot = v;
  }
}

}  // namespace

RunConfig load_config(
    const std::filesystem::path* config_file,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  nlohmann::json merged = to_json(RunConfig{});
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw ConfigError("cannot open config file: " + config_file->string());
    nlohmann::json user;
    try {
      in >> user;
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("invalid config JSON in " + config_file->string() +
                        ": " + ex.what());
    }
    merge_into(merged, user, "");
  }
  for (const auto& [key, value] : overrides) apply_override(merged, key, value);
  return config_from_json(merged);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a_hex(to_json(cfg).dump());
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

}  // namespace flowpat::pipeline
