#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowpat/ops.hpp"
#include "flowpat/tensor.hpp"

namespace flowpat::nn {

// Named view of one parameter or buffer, in declaration order; the
// checkpoint format serializes these blocks directly.
struct StateEntry {
  std::string name;
  bool is_param = true;
  Shape shape;
  std::vector<double>* data = nullptr;
};

class Module {
 public:
  virtual ~Module() = default;

  virtual Tensor forward(const Tensor& x) = 0;

  virtual void set_training(bool t) { training_ = t; }
  bool training() const { return training_; }

  virtual void collect_parameters(std::vector<Tensor>& /*out*/) {}
  virtual void collect_state(const std::string& /*prefix*/,
                             std::vector<StateEntry>& /*out*/) {}

  std::vector<Tensor> parameters() {
    std::vector<Tensor> out;
    collect_parameters(out);
    return out;
  }
  std::vector<StateEntry> state() {
    std::vector<StateEntry> out;
    collect_state("", out);
    return out;
  }
  std::size_t parameter_count();

 protected:
  bool training_ = true;
};

// Fan-in scaled uniform init, U(-1/sqrt(fan_in), +1/sqrt(fan_in)), for both
// weights and biases.
Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng);

class Conv1d : public Module {
 public:
  // Same-padding by default: pad_left=(k-1)/2, pad_right=k-1-pad_left, so
  // stride 1 preserves length for odd and even kernels alike.
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, Rng& rng);

  Tensor forward(const Tensor& x) override;
  void collect_parameters(std::vector<Tensor>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateEntry>& out) override;

  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }

 private:
  Tensor w_, b_;
  std::size_t stride_, pad_l_, pad_r_;
};

class Linear : public Module {
 public:
  Linear(std::size_t in, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x) override;
  void collect_parameters(std::vector<Tensor>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateEntry>& out) override;

  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }

 private:
  Tensor w_, b_;
};

class BatchNorm1d : public Module {
 public:
  explicit BatchNorm1d(std::size_t channels, double momentum = 0.1,
                       double eps = 1e-5);

  Tensor forward(const Tensor& x) override;
  void collect_parameters(std::vector<Tensor>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateEntry>& out) override;

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  const std::vector<double>& running_mean() const { return running_mean_; }
  const std::vector<double>& running_var() const { return running_var_; }

 private:
  Tensor gamma_, beta_;
  std::vector<double> running_mean_, running_var_;
  double momentum_, eps_;
};

class Dropout : public Module {
 public:
  Dropout(double rate, std::uint64_t seed);
  Tensor forward(const Tensor& x) override;

 private:
  double rate_;
  Rng rng_;
};

class MaxPool1d : public Module {
 public:
  explicit MaxPool1d(std::size_t k = 2) : k_(k) {}
  Tensor forward(const Tensor& x) override { return max_pool1d(x, k_); }

 private:
  std::size_t k_;
};

class GlobalAvgPool1d : public Module {
 public:
  Tensor forward(const Tensor& x) override { return global_avg_pool1d(x); }
};

enum class Activation { Relu, Sigmoid, Swish };

class Act : public Module {
 public:
  explicit Act(Activation kind) : kind_(kind) {}
  Tensor forward(const Tensor& x) override;

 private:
  Activation kind_;
};

class Flatten : public Module {
 public:
  Tensor forward(const Tensor& x) override { return flatten(x); }
};

class Sequential : public Module {
 public:
  Sequential() = default;

  template <typename M, typename... Args>
  M* emplace(Args&&... args) {
    auto m = std::make_unique<M>(std::forward<Args>(args)...);
    M* raw = m.get();
    children_.push_back(std::move(m));
    return raw;
  }
  void append(std::unique_ptr<Module> m) { children_.push_back(std::move(m)); }

  Tensor forward(const Tensor& x) override;
  void set_training(bool t) override;
  void collect_parameters(std::vector<Tensor>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateEntry>& out) override;

  std::size_t size() const { return children_.size(); }
  Module* child(std::size_t i) { return children_[i].get(); }

 private:
  std::vector<std::unique_ptr<Module>> children_;
};

}  // namespace flowpat::nn
