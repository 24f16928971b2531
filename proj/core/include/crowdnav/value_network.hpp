#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crowdnav/geometry.hpp"

namespace crowdnav {

/// Layer widths of the attention-pooled value approximator. Each list holds
/// output widths; input widths follow from the state layout.
///
///   embedding: (robot ⊕ human) 12 -> ... -> E        ReLU throughout
///   attention: (embedding ⊕ mean embedding) 2E -> ... -> 1   ReLU hidden, linear score
///   feature:   E -> ... -> F                          ReLU hidden, linear output
///   value:     (robot ⊕ crowd) 5+F -> ... -> 1        ReLU hidden, linear output
struct NetworkShape {
  std::vector<int> embedding{150, 100};
  std::vector<int> attention{100, 100, 1};
  std::vector<int> feature{50};
  std::vector<int> value{150, 100, 100, 1};

  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
};

/// One entry per parameter tensor, aligned with ValueNetwork::tensors().
struct GradientBuffer {
  std::vector<Eigen::MatrixXd> grads;

  void set_zero();
  double max_abs() const;
};

/// Joint states packed for batched evaluation. Humans of each sample are put
/// in a canonical order so results do not depend on input ordering.
struct PackedBatch {
  Eigen::MatrixXd robot;          // B x 5
  Eigen::MatrixXd pairs;          // H x 12, rows [robot(5), human(7)]
  std::vector<Eigen::Index> offsets;  // B + 1 row offsets into `pairs`

  static PackedBatch pack(std::span<const JointState> states);
  static PackedBatch pack(std::span<const JointState* const> states);
  Eigen::Index size() const { return robot.rows(); }
};

class ValueNetwork {
 public:
  ValueNetwork() : ValueNetwork(NetworkShape{}, 0) {}
  /// Weights and biases uniform in +-1/sqrt(fan_in).
  ValueNetwork(NetworkShape shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  std::size_t parameter_count() const;

  /// Zeroes the weights and bias of the final value layer.
  void zero_output_layer();

  double forward(const JointState& joint) const;
  Eigen::VectorXd forward(const PackedBatch& batch) const;

  /// Mean squared error over the batch and its exact gradient.
  double backward(const PackedBatch& batch, const Eigen::VectorXd& targets, GradientBuffer& grads) const;
  /// Squared error (V(joint) - target)^2 and its exact gradient.
  double backward(const JointState& joint, double target, GradientBuffer& grads) const;

  GradientBuffer make_gradient_buffer() const;

  void save(std::ostream& out) const;
  static ValueNetwork load(std::istream& in, const std::string& source = "<stream>");
  void save_file(const std::string& path) const;
  static ValueNetwork load_file(const std::string& path);

  bool operator==(const ValueNetwork& other) const;

 private:
  struct Mlp {
    std::size_t first_tensor = 0;  // weight, bias pairs
    std::size_t layers = 0;
    bool last_relu = false;
  };
  struct MlpCache {
    std::vector<Eigen::MatrixXd> activations;  // [input, layer outputs...]
  };
  struct Cache;

  void add_mlp(Mlp& mlp, const std::string& prefix, int input, const std::vector<int>& widths, bool last_relu);
  void mlp_forward(const Mlp& mlp, Eigen::MatrixXd input, MlpCache& cache) const;
  Eigen::MatrixXd mlp_backward(const Mlp& mlp, const MlpCache& cache, Eigen::MatrixXd d_out, GradientBuffer& grads,
                               bool want_input_grad) const;
  void forward_impl(const PackedBatch& batch, Cache& cache) const;

  NetworkShape shape_;
  std::uint64_t seed_ = 0;
  std::vector<Tensor> tensors_;
  Mlp embedding_;
  Mlp attention_;
  Mlp feature_;
  Mlp value_;
};

/// SGD with classical momentum: v <- mu * v + g; w <- w - lr * v.
class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void step(ValueNetwork& net, const GradientBuffer& grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  double momentum() const { return momentum_; }
  void reset() { velocity_.clear(); }

 private:
  double lr_;
  double momentum_;
  std::vector<Eigen::MatrixXd> velocity_;
};

/// Deep copy of `live` for fixed-target bootstrapping.
inline ValueNetwork sync_target(const ValueNetwork& live) { return live; }

}  // namespace crowdnav
