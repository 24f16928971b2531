#pragma once

#include <random>

#include "crowdnav/env.hpp"
#include "crowdnav/value_network.hpp"

namespace crowdnav::test {

/// Joint state with plausible magnitudes: distances up to 10 m, speeds up to 1 m/s.
JointState random_joint(std::mt19937_64& rng, int n_humans);

/// World with the robot and humans scattered around the origin, humans moving.
World random_world(std::mt19937_64& rng, int n_humans);

/// Forward pass written with plain loops over the named tensors; shares no code
/// with ValueNetwork beyond reading its parameters.
double reference_forward(const ValueNetwork& net, const JointState& joint);

/// Max relative error between backward() and central differences (h = 1e-5)
/// over `params` random scalar parameters on each of `states` random joints.
double max_fd_relative_error(const ValueNetwork& net, std::mt19937_64& rng, int states, int params);

/// Lookahead argmax recomputed from scratch: own CVM step, own sampled-free
/// closest approach, own reward table.
std::size_t brute_force_greedy(const World& world, const ValueNetwork& net, const EnvConfig& config);

}  // namespace crowdnav::test
