#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "crowdnav/errors.hpp"
#include "crowdnav/value_network.hpp"
#include "support.hpp"

namespace crowdnav {
namespace {

using test::random_joint;
using test::reference_forward;

NetworkShape small_shape() {
  NetworkShape s;
  s.embedding = {16, 12};
  s.attention = {10, 1};
  s.feature = {8};
  s.value = {14, 9, 1};
  return s;
}

TEST(ValueNetwork, ParameterLayout) {
  const ValueNetwork net;
  // 12*150+150 + 150*100+100 | 200*100+100 + 100*100+100 + 100+1 | 100*50+50 | 55*150+150 + 150*100+100 + 100*100+100 + 101
  const std::size_t expected = (1950 + 15100) + (20100 + 10100 + 101) + 5050 + (8400 + 15100 + 10100 + 101);
  EXPECT_EQ(net.parameter_count(), expected);
  EXPECT_EQ(net.tensors().front().name, "embedding.0.weight");
  EXPECT_EQ(net.tensors().back().name, "value.3.bias");
}

TEST(ValueNetwork, InitWithinFanInBounds) {
  const ValueNetwork net(NetworkShape{}, 5);
  for (std::size_t i = 0; i < net.tensors().size(); i += 2) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.tensors()[i].value.rows()));
    EXPECT_LE(net.tensors()[i].value.cwiseAbs().maxCoeff(), bound);
    EXPECT_LE(net.tensors()[i + 1].value.cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(ValueNetwork(NetworkShape{}, 5), net);
  EXPECT_FALSE(ValueNetwork(NetworkShape{}, 6) == net);
}

TEST(ValueNetwork, ZeroHeadGivesZero) {
  ValueNetwork net(NetworkShape{}, 1);
  net.zero_output_layer();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(net.forward(random_joint(rng, i % 6)), 0.0);
}

TEST(ValueNetwork, PermutationInvariantBitExact) {
  const ValueNetwork net(NetworkShape{}, 2);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto joint = random_joint(rng, 5);
    const double base = net.forward(joint);
    for (int p = 0; p < 5; ++p) {
      std::shuffle(joint.humans.begin(), joint.humans.end(), rng);
      EXPECT_EQ(net.forward(joint), base);
    }
  }
}

TEST(ValueNetwork, MatchesIndependentReferencePass) {
  for (std::uint64_t seed : {3u, 4u}) {
    const ValueNetwork net(NetworkShape{}, seed);
    std::mt19937_64 rng(seed);
    for (int trial = 0; trial < 30; ++trial) {
      const auto joint = random_joint(rng, trial % 7);
      EXPECT_NEAR(net.forward(joint), reference_forward(net, joint), 1e-10);
    }
  }
}

TEST(ValueNetwork, BatchedForwardMatchesSingle) {
  const ValueNetwork net(NetworkShape{}, 6);
  std::mt19937_64 rng(6);
  std::vector<JointState> joints;
  for (int i = 0; i < 17; ++i) joints.push_back(random_joint(rng, i % 6));
  const Eigen::VectorXd batch = net.forward(PackedBatch::pack(joints));
  for (std::size_t i = 0; i < joints.size(); ++i) {
    EXPECT_NEAR(batch(static_cast<Eigen::Index>(i)), net.forward(joints[i]), 1e-12);
  }
}

TEST(ValueNetwork, EmptySceneUsesZeroCrowdFeature) {
  const ValueNetwork net(small_shape(), 7);
  std::mt19937_64 rng(7);
  const auto joint = random_joint(rng, 0);
  EXPECT_NEAR(net.forward(joint), reference_forward(net, joint), 1e-12);
}

TEST(ValueNetwork, ForwardIsPure) {
  const ValueNetwork net(NetworkShape{}, 8);
  const ValueNetwork copy = net;
  std::mt19937_64 rng(8);
  const auto joint = random_joint(rng, 3);
  const double a = net.forward(joint);
  EXPECT_EQ(net.forward(joint), a);
  EXPECT_EQ(net, copy);
}

TEST(Backward, TargetEqualsPredictionGivesZero) {
  const ValueNetwork net(small_shape(), 9);
  std::mt19937_64 rng(9);
  const auto joint = random_joint(rng, 3);
  auto grads = net.make_gradient_buffer();
  EXPECT_EQ(net.backward(joint, net.forward(joint), grads), 0.0);
  EXPECT_EQ(grads.max_abs(), 0.0);
}

TEST(Backward, LossIsQuadraticInResidual) {
  const ValueNetwork net(small_shape(), 10);
  std::mt19937_64 rng(10);
  const auto joint = random_joint(rng, 2);
  const double v = net.forward(joint);
  auto grads = net.make_gradient_buffer();
  const double l1 = net.backward(joint, v - 0.3, grads);
  const double l2 = net.backward(joint, v - 0.6, grads);
  EXPECT_NEAR(l2, 4 * l1, 1e-12);
  EXPECT_NEAR(l1, 0.09, 1e-12);
}

TEST(Backward, MatchesCentralFiniteDifferences) {
  const ValueNetwork base(NetworkShape{}, 11);
  std::mt19937_64 rng(11);
  const double worst = test::max_fd_relative_error(base, rng, 20, 50);
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, BatchLossIsMeanOfSampleLosses) {
  const ValueNetwork net(small_shape(), 12);
  std::mt19937_64 rng(12);
  std::vector<JointState> joints;
  Eigen::VectorXd targets(6);
  for (int i = 0; i < 6; ++i) {
    joints.push_back(random_joint(rng, i));
    targets(i) = 0.1 * i;
  }
  auto batch_grads = net.make_gradient_buffer();
  const double batch_loss = net.backward(PackedBatch::pack(joints), targets, batch_grads);
  double sum = 0.0;
  auto single = net.make_gradient_buffer();
  auto total = net.make_gradient_buffer();
  for (int i = 0; i < 6; ++i) {
    sum += net.backward(joints[static_cast<std::size_t>(i)], targets(i), single);
    for (std::size_t t = 0; t < total.grads.size(); ++t) total.grads[t] += single.grads[t] / 6.0;
  }
  EXPECT_NEAR(batch_loss, sum / 6.0, 1e-12);
  for (std::size_t t = 0; t < total.grads.size(); ++t) {
    EXPECT_LT((total.grads[t] - batch_grads.grads[t]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sgd, ZeroGradLeavesParams) {
  ValueNetwork net(small_shape(), 13);
  const ValueNetwork before = net;
  SgdMomentum opt(0.1, 0.9);
  opt.step(net, net.make_gradient_buffer());
  EXPECT_EQ(net, before);
}

TEST(Sgd, PlainStepAndMomentumRecurrence) {
  ValueNetwork net(small_shape(), 14);
  const double w0 = net.tensors()[0].value(0, 0);
  auto grads = net.make_gradient_buffer();
  grads.grads[0](0, 0) = 0.5;

  ValueNetwork plain = net;
  SgdMomentum no_momentum(0.01, 0.0);
  no_momentum.step(plain, grads);
  EXPECT_DOUBLE_EQ(plain.tensors()[0].value(0, 0), w0 - 0.01 * 0.5);

  SgdMomentum opt(0.01, 0.9);
  opt.step(net, grads);
  const double w1 = net.tensors()[0].value(0, 0);
  opt.step(net, grads);
  const double w2 = net.tensors()[0].value(0, 0);
  EXPECT_NEAR(w0 - w1, 0.01 * 0.5, 1e-15);
  EXPECT_NEAR(w1 - w2, 0.01 * 0.5 * 1.9, 1e-15);
  opt.reset();
  opt.step(net, grads);
  EXPECT_NEAR(w2 - net.tensors()[0].value(0, 0), 0.01 * 0.5, 1e-15);
}

TEST(SyncTarget, DeepIndependentCopy) {
  ValueNetwork live(small_shape(), 15);
  const ValueNetwork target = sync_target(live);
  EXPECT_EQ(target, live);
  EXPECT_EQ(sync_target(target), target);
  auto grads = live.make_gradient_buffer();
  grads.grads[3].setConstant(1.0);
  SgdMomentum opt(0.1, 0.0);
  opt.step(live, grads);
  EXPECT_FALSE(target == live);
  EXPECT_EQ(target, ValueNetwork(small_shape(), 15));
}

TEST(Sgd, RegressionLossDecreases) {
  ValueNetwork net(small_shape(), 16);
  std::mt19937_64 rng(16);
  std::vector<JointState> joints;
  Eigen::VectorXd targets(40);
  for (int i = 0; i < 40; ++i) {
    joints.push_back(random_joint(rng, 1 + i % 4));
    targets(i) = joints.back().robot.d_g < 4 ? 1.0 : 0.0;
  }
  const auto batch = PackedBatch::pack(joints);
  SgdMomentum opt(0.01, 0.9);
  auto grads = net.make_gradient_buffer();
  const double first = net.backward(batch, targets, grads);
  double last = first;
  for (int i = 0; i < 200; ++i) {
    last = net.backward(batch, targets, grads);
    opt.step(net, grads);
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(WeightFile, RoundTripIsBitExact) {
  const ValueNetwork net(NetworkShape{}, 17);
  std::stringstream buffer;
  net.save(buffer);
  const std::string text = buffer.str();
  const ValueNetwork loaded = ValueNetwork::load(buffer);
  EXPECT_EQ(loaded, net);
  std::stringstream again;
  loaded.save(again);
  EXPECT_EQ(again.str(), text);
  std::mt19937_64 rng(17);
  const auto joint = random_joint(rng, 5);
  EXPECT_EQ(loaded.forward(joint), net.forward(joint));
}

std::string saved(const ValueNetwork& net) {
  std::stringstream s;
  net.save(s);
  return s.str();
}

int load_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    ValueNetwork::load(in, "weights.txt");
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

TEST(WeightFile, CorruptionsRejectedWithLineNumbers) {
  const std::string good = saved(ValueNetwork(small_shape(), 18));
  EXPECT_EQ(load_error_line(good), -1);

  std::string bad_magic = good;
  bad_magic.replace(0, 7, "garbage");
  EXPECT_EQ(load_error_line(bad_magic), 1);

  std::string bad_shape = good;
  bad_shape.replace(bad_shape.find("shape embedding 16 12"), 21, "shape embedding 16 13");
  EXPECT_GT(load_error_line(bad_shape), 0);

  // Flip one digit in the data block: the checksum catches it.
  std::string flipped = good;
  const auto data = flipped.find("data\n") + 6;
  flipped[data] = flipped[data] == '1' ? '2' : '1';
  EXPECT_GT(load_error_line(flipped), 0);

  std::string truncated = good.substr(0, good.size() / 2);
  EXPECT_GT(load_error_line(truncated), 0);

  std::string bad_number = good;
  bad_number.insert(data, "x");
  EXPECT_GT(load_error_line(bad_number), 0);

  EXPECT_THROW(ValueNetwork::load_file("/nonexistent/weights.txt"), IoError);
}

TEST(NetworkShape, RejectsBadWidths) {
  NetworkShape s;
  s.attention = {100, 2};
  EXPECT_THROW(s.validate(), ConfigError);
  s = NetworkShape{};
  s.value = {};
  EXPECT_THROW(s.validate(), ConfigError);
  s = NetworkShape{};
  s.embedding = {0};
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace crowdnav
