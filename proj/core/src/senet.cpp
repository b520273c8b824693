#include "flowpat/models/senet.hpp"

#include <algorithm>
#include <string>

#include "flowpat/errors.hpp"

namespace flowpat::models {

using nn::Tensor;

void SENetConfig::validate() const {
  if (kernel_size < 2)
    throw ConfigError("senet: kernel_size must be >= 2, got " +
                      std::to_string(kernel_size));
  if (block_stages < 1) throw ConfigError("senet: block_stages must be >= 1");
  if (width_ratio < 1) throw ConfigError("senet: width_ratio must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("senet: dropout_rate must lie in [0,1), got " +
                      std::to_string(dropout_rate));
  if (se_reduction < 1) throw ConfigError("senet: se_reduction must be >= 1");
  if (num_classes < 2) throw ConfigError("senet: num_classes must be >= 2");
  if (channels_per_width < 1)
    throw ConfigError("senet: channels_per_width must be >= 1");
  if (blocks_per_stage < 1)
    throw ConfigError("senet: blocks_per_stage must be >= 1");
}

SEBlock::SEBlock(std::size_t channels, std::size_t reduction, Rng& rng)
    : fc1_(channels, std::max<std::size_t>(1, channels / reduction), rng),
      fc2_(std::max<std::size_t>(1, channels / reduction), channels, rng) {}

Tensor SEBlock::forward(const Tensor& x) {
  if (mode_ == Mode::Identity) return x;
  Tensor s = nn::global_avg_pool1d(x);          // squeeze: [B,C]
  Tensor h = nn::swish(fc1_.forward(s));        // excitation bottleneck
  Tensor gate = nn::sigmoid(fc2_.forward(h));   // per-channel gate in (0,1)
  return nn::channel_scale(x, gate);
}

void SEBlock::collect_parameters(std::vector<Tensor>& out) {
  fc1_.collect_parameters(out);
  fc2_.collect_parameters(out);
}

void SEBlock::collect_state(const std::string& prefix,
                            std::vector<nn::StateEntry>& out) {
  fc1_.collect_state(prefix + "fc1.", out);
  fc2_.collect_state(prefix + "fc2.", out);
}

BasicBlock1d::BasicBlock1d(std::size_t in_channels, std::size_t out_channels,
                           std::size_t kernel, std::size_t stride,
                           const SENetConfig& cfg, Rng& rng)
    : conv1_(in_channels, out_channels, kernel, stride, rng),
      conv2_(out_channels, out_channels, kernel, 1, rng) {
  if (cfg.use_batch_norm) {
    bn1_ = std::make_unique<nn::BatchNorm1d>(out_channels);
    bn2_ = std::make_unique<nn::BatchNorm1d>(out_channels);
  }
  if (in_channels != out_channels || stride != 1)
    proj_ = std::make_unique<nn::Conv1d>(in_channels, out_channels, 1, stride,
                                         rng);
  if (cfg.use_se)
    se_ = std::make_unique<SEBlock>(out_channels, cfg.se_reduction, rng);
}

Tensor BasicBlock1d::forward(const Tensor& x) {
  Tensor h = conv1_.forward(x);
  if (bn1_) h = bn1_->forward(h);
  h = nn::swish(h);
  h = conv2_.forward(h);
  if (bn2_) h = bn2_->forward(h);
  if (se_) h = se_->forward(h);
  Tensor skip = proj_ ? proj_->forward(x) : x;
  return nn::swish(nn::add(h, skip));
}

void BasicBlock1d::set_training(bool t) {
  Module::set_training(t);
  conv1_.set_training(t);
  conv2_.set_training(t);
  if (bn1_) bn1_->set_training(t);
  if (bn2_) bn2_->set_training(t);
  if (proj_) proj_->set_training(t);
  if (se_) se_->set_training(t);
}

void BasicBlock1d::collect_parameters(std::vector<Tensor>& out) {
  conv1_.collect_parameters(out);
  if (bn1_) bn1_->collect_parameters(out);
  conv2_.collect_parameters(out);
  if (bn2_) bn2_->collect_parameters(out);
  if (se_) se_->collect_parameters(out);
  if (proj_) proj_->collect_parameters(out);
}

void BasicBlock1d::collect_state(const std::string& prefix,
                                 std::vector<nn::StateEntry>& out) {
  conv1_.collect_state(prefix + "conv1.", out);
  if (bn1_) bn1_->collect_state(prefix + "bn1.", out);
  conv2_.collect_state(prefix + "conv2.", out);
  if (bn2_) bn2_->collect_state(prefix + "bn2.", out);
  if (se_) se_->collect_state(prefix + "se.", out);
  if (proj_) proj_->collect_state(prefix + "proj.", out);
}

SENet1d::SENet1d(const SENetConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      stem_([&] {
        Rng rng(derive_seed(seed, {0x5E0}));
        return nn::Conv1d(1, cfg.channels_per_width * cfg.width_ratio,
                          cfg.kernel_size, cfg.stem_downsample ? 2 : 1, rng);
      }()),
      head_([&] {
        // Placeholder; re-initialized below once widths are known.
        Rng rng(derive_seed(seed, {0x4EAD}));
        return nn::Linear(1, 1, rng);
      }()) {
  const std::size_t base = cfg_.channels_per_width * cfg_.width_ratio;
  if (cfg_.use_batch_norm) stem_bn_ = std::make_unique<nn::BatchNorm1d>(base);
  if (cfg_.stem_downsample) stem_pool_ = std::make_unique<nn::MaxPool1d>(2);

  std::size_t in_ch = base;
  for (std::size_t s = 0; s < cfg_.block_stages; ++s) {
    const std::size_t out_ch = base << s;
    for (std::size_t b = 0; b < cfg_.blocks_per_stage; ++b) {
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      Rng rng(derive_seed(seed, {0xB10C, s, b}));
      blocks_.push_back(std::make_unique<BasicBlock1d>(
          in_ch, out_ch, cfg_.kernel_size, stride, cfg_, rng));
      in_ch = out_ch;
    }
  }
  if (cfg_.use_dropout)
    dropout_ = std::make_unique<nn::Dropout>(cfg_.dropout_rate,
                                             derive_seed(seed, {0xD80}));
  Rng head_rng(derive_seed(seed, {0x4EAD}));
  head_ = nn::Linear(in_ch, cfg_.num_classes, head_rng);
}

Tensor SENet1d::forward(const Tensor& x) {
  if (x.shape().size() != 3 || x.dim(1) != 1)
    throw ConfigError("senet: input must be [B,1,L], got " +
                      nn::shape_str(x.shape()));
  Tensor h = stem_.forward(x);
  if (stem_bn_) h = stem_bn_->forward(h);
  h = nn::swish(h);
  if (stem_pool_) h = stem_pool_->forward(h);
  for (auto& b : blocks_) h = b->forward(h);
  h = nn::global_avg_pool1d(h);
  if (dropout_) h = dropout_->forward(h);
  return head_.forward(h);
}

void SENet1d::set_training(bool t) {
  Module::set_training(t);
  stem_.set_training(t);
  if (stem_bn_) stem_bn_->set_training(t);
  for (auto& b : blocks_) b->set_training(t);
  if (dropout_) dropout_->set_training(t);
  head_.set_training(t);
}

void SENet1d::collect_parameters(std::vector<Tensor>& out) {
  stem_.collect_parameters(out);
  if (stem_bn_) stem_bn_->collect_parameters(out);
  for (auto& b : blocks_) b->collect_parameters(out);
  head_.collect_parameters(out);
}

void SENet1d::collect_state(const std::string& prefix,
                            std::vector<nn::StateEntry>& out) {
  stem_.collect_state(prefix + "stem.", out);
  if (stem_bn_) stem_bn_->collect_state(prefix + "stem_bn.", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i]->collect_state(prefix + "block" + std::to_string(i) + ".", out);
  head_.collect_state(prefix + "head.", out);
}

void SENet1d::set_se_mode(SEBlock::Mode m) {
  for (auto& b : blocks_)
    if (b->se()) b->se()->set_mode(m);
}

std::vector<SEBlock*> SENet1d::se_blocks() {
  std::vector<SEBlock*> out;
  for (auto& b : blocks_)
    if (b->se()) out.push_back(b->se());
  return out;
}

std::unique_ptr<SENet1d> build_senet(const SENetConfig& cfg,
                                     std::uint64_t seed) {
  return std::make_unique<SENet1d>(cfg, seed);
}

}  // namespace flowpat::models
