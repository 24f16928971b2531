#include "crowdnav/value_network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "crowdnav/errors.hpp"
#include "crowdnav/text_format.hpp"

namespace crowdnav {
namespace {

constexpr std::string_view kMagic = "crowdnav-value-network";
constexpr int kFormatVersion = 1;
constexpr int kPairWidth = static_cast<int>(RobotSelfState::kWidth + HumanObservedState::kWidth);

using HumanRow = std::array<double, HumanObservedState::kWidth>;

HumanRow as_row(const HumanObservedState& h) { return {h.dist, h.px, h.py, h.vx, h.vy, h.radius, h.radius_sum}; }

void check_widths(const std::vector<int>& widths, const char* field) {
  if (widths.empty()) throw ConfigError(std::string("network.") + field, "needs at least one layer");
  for (int w : widths) {
    if (w <= 0) throw ConfigError(std::string("network.") + field, "layer widths must be positive");
  }
}

std::string widths_line(const char* name, const std::vector<int>& widths) {
  std::string line = std::string("shape ") + name;
  for (int w : widths) line += " " + std::to_string(w);
  return line;
}

}  // namespace

void NetworkShape::validate() const {
  check_widths(embedding, "embedding");
  check_widths(attention, "attention");
  check_widths(feature, "feature");
  check_widths(value, "value");
  if (attention.back() != 1) throw ConfigError("network.attention", "final width must be 1");
  if (value.back() != 1) throw ConfigError("network.value", "final width must be 1");
}

void GradientBuffer::set_zero() {
  for (auto& g : grads) g.setZero();
}

double GradientBuffer::max_abs() const {
  double m = 0.0;
  for (const auto& g : grads) {
    if (g.size() > 0) m = std::max(m, g.cwiseAbs().maxCoeff());
  }
  return m;
}

PackedBatch PackedBatch::pack(std::span<const JointState> states) {
  std::vector<const JointState*> ptrs;
  ptrs.reserve(states.size());
  for (const auto& s : states) ptrs.push_back(&s);
  return pack(std::span<const JointState* const>(ptrs));
}

PackedBatch PackedBatch::pack(std::span<const JointState* const> states) {
  PackedBatch batch;
  const auto n_samples = static_cast<Eigen::Index>(states.size());
  Eigen::Index total = 0;
  batch.offsets.reserve(states.size() + 1);
  batch.offsets.push_back(0);
  for (const auto* s : states) {
    total += static_cast<Eigen::Index>(s->humans.size());
    batch.offsets.push_back(total);
  }
  batch.robot.resize(n_samples, RobotSelfState::kWidth);
  batch.pairs.resize(total, kPairWidth);

  std::vector<HumanRow> rows;
  for (Eigen::Index b = 0; b < n_samples; ++b) {
    const JointState& s = *states[static_cast<std::size_t>(b)];
    const std::array<double, 5> robot{s.robot.d_g, s.robot.v_pref, s.robot.vx, s.robot.vy, s.robot.radius};
    for (int k = 0; k < 5; ++k) batch.robot(b, k) = robot[k];

    rows.clear();
    for (const auto& h : s.humans) rows.push_back(as_row(h));
    std::sort(rows.begin(), rows.end());
    Eigen::Index r = batch.offsets[static_cast<std::size_t>(b)];
    for (const auto& row : rows) {
      for (int k = 0; k < 5; ++k) batch.pairs(r, k) = robot[k];
      for (int k = 0; k < 7; ++k) batch.pairs(r, 5 + k) = row[k];
      ++r;
    }
  }
  return batch;
}

struct ValueNetwork::Cache {
  MlpCache embedding;
  MlpCache attention;
  MlpCache feature;
  MlpCache value;
  Eigen::VectorXd weights;  // softmax attention weight per human row
};

ValueNetwork::ValueNetwork(NetworkShape shape, std::uint64_t seed) : shape_(std::move(shape)), seed_(seed) {
  shape_.validate();
  const int embed_width = shape_.embedding.back();
  add_mlp(embedding_, "embedding", kPairWidth, shape_.embedding, true);
  add_mlp(attention_, "attention", 2 * embed_width, shape_.attention, false);
  add_mlp(feature_, "feature", embed_width, shape_.feature, false);
  add_mlp(value_, "value", static_cast<int>(RobotSelfState::kWidth) + shape_.feature.back(), shape_.value, false);

  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < tensors_.size(); t += 2) {
    auto& weight = tensors_[t].value;
    auto& bias = tensors_[t + 1].value;
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < weight.rows(); ++i) weight(i, j) = dist(rng);
    }
    for (Eigen::Index j = 0; j < bias.cols(); ++j) bias(0, j) = dist(rng);
  }
}

void ValueNetwork::add_mlp(Mlp& mlp, const std::string& prefix, int input, const std::vector<int>& widths,
                           bool last_relu) {
  mlp.first_tensor = tensors_.size();
  mlp.layers = widths.size();
  mlp.last_relu = last_relu;
  int in = input;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    tensors_.push_back({base + ".weight", Eigen::MatrixXd::Zero(in, widths[l])});
    tensors_.push_back({base + ".bias", Eigen::MatrixXd::Zero(1, widths[l])});
    in = widths[l];
  }
}

std::size_t ValueNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

void ValueNetwork::zero_output_layer() {
  const std::size_t last = value_.first_tensor + 2 * (value_.layers - 1);
  tensors_[last].value.setZero();
  tensors_[last + 1].value.setZero();
}

GradientBuffer ValueNetwork::make_gradient_buffer() const {
  GradientBuffer g;
  g.grads.reserve(tensors_.size());
  for (const auto& t : tensors_) g.grads.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  return g;
}

void ValueNetwork::mlp_forward(const Mlp& mlp, Eigen::MatrixXd input, MlpCache& cache) const {
  cache.activations.resize(mlp.layers + 1);
  cache.activations[0] = std::move(input);
  for (std::size_t l = 0; l < mlp.layers; ++l) {
    const auto& weight = tensors_[mlp.first_tensor + 2 * l].value;
    const auto& bias = tensors_[mlp.first_tensor + 2 * l + 1].value;
    Eigen::MatrixXd z = cache.activations[l] * weight;
    z.rowwise() += bias.row(0);
    if (l + 1 < mlp.layers || mlp.last_relu) z = z.cwiseMax(0.0);
    cache.activations[l + 1] = std::move(z);
  }
}

Eigen::MatrixXd ValueNetwork::mlp_backward(const Mlp& mlp, const MlpCache& cache, Eigen::MatrixXd d_out,
                                           GradientBuffer& grads, bool want_input_grad) const {
  for (std::size_t l = mlp.layers; l-- > 0;) {
    if (l + 1 < mlp.layers || mlp.last_relu) {
      d_out = (cache.activations[l + 1].array() > 0.0).select(d_out, 0.0);
    }
    grads.grads[mlp.first_tensor + 2 * l].noalias() += cache.activations[l].transpose() * d_out;
    grads.grads[mlp.first_tensor + 2 * l + 1] += d_out.colwise().sum();
    if (l > 0 || want_input_grad) {
      d_out = d_out * tensors_[mlp.first_tensor + 2 * l].value.transpose();
    }
  }
  return d_out;
}

void ValueNetwork::forward_impl(const PackedBatch& batch, Cache& cache) const {
  const Eigen::Index n_samples = batch.size();
  const Eigen::Index n_rows = batch.pairs.rows();
  const int embed_width = shape_.embedding.back();
  const int feature_width = shape_.feature.back();

  mlp_forward(embedding_, batch.pairs, cache.embedding);
  const Eigen::MatrixXd& embed = cache.embedding.activations.back();

  Eigen::MatrixXd attention_in(n_rows, 2 * embed_width);
  attention_in.leftCols(embed_width) = embed;
  for (Eigen::Index b = 0; b < n_samples; ++b) {
    const Eigen::Index begin = batch.offsets[static_cast<std::size_t>(b)];
    const Eigen::Index count = batch.offsets[static_cast<std::size_t>(b) + 1] - begin;
    if (count == 0) continue;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(embed_width);
    for (Eigen::Index r = begin; r < begin + count; ++r) mean += embed.row(r);
    mean /= static_cast<double>(count);
    for (Eigen::Index r = begin; r < begin + count; ++r) attention_in.block(r, embed_width, 1, embed_width) = mean;
  }
  mlp_forward(attention_, std::move(attention_in), cache.attention);
  const Eigen::MatrixXd& scores = cache.attention.activations.back();

  mlp_forward(feature_, embed, cache.feature);
  const Eigen::MatrixXd& features = cache.feature.activations.back();

  cache.weights.resize(n_rows);
  Eigen::MatrixXd value_in = Eigen::MatrixXd::Zero(n_samples, RobotSelfState::kWidth + feature_width);
  value_in.leftCols(RobotSelfState::kWidth) = batch.robot;
  for (Eigen::Index b = 0; b < n_samples; ++b) {
    const Eigen::Index begin = batch.offsets[static_cast<std::size_t>(b)];
    const Eigen::Index end = batch.offsets[static_cast<std::size_t>(b) + 1];
    if (begin == end) continue;
    double max_score = scores(begin, 0);
    for (Eigen::Index r = begin + 1; r < end; ++r) max_score = std::max(max_score, scores(r, 0));
    double norm = 0.0;
    for (Eigen::Index r = begin; r < end; ++r) {
      cache.weights(r) = std::exp(scores(r, 0) - max_score);
      norm += cache.weights(r);
    }
    Eigen::RowVectorXd crowd = Eigen::RowVectorXd::Zero(feature_width);
    for (Eigen::Index r = begin; r < end; ++r) {
      cache.weights(r) /= norm;
      crowd += cache.weights(r) * features.row(r);
    }
    value_in.block(b, RobotSelfState::kWidth, 1, feature_width) = crowd;
  }
  mlp_forward(value_, std::move(value_in), cache.value);
}

Eigen::VectorXd ValueNetwork::forward(const PackedBatch& batch) const {
  Cache cache;
  forward_impl(batch, cache);
  return cache.value.activations.back().col(0);
}

double ValueNetwork::forward(const JointState& joint) const {
  return forward(PackedBatch::pack(std::span<const JointState>(&joint, 1)))(0);
}

double ValueNetwork::backward(const PackedBatch& batch, const Eigen::VectorXd& targets, GradientBuffer& grads) const {
  if (targets.size() != batch.size()) throw ConfigError("targets", "size does not match batch");
  if (grads.grads.size() != tensors_.size()) grads = make_gradient_buffer();
  grads.set_zero();

  Cache cache;
  forward_impl(batch, cache);
  const Eigen::Index n_samples = batch.size();
  const Eigen::Index n_rows = batch.pairs.rows();
  const int embed_width = shape_.embedding.back();
  const int feature_width = shape_.feature.back();

  const Eigen::VectorXd error = cache.value.activations.back().col(0) - targets;
  const double loss = error.squaredNorm() / static_cast<double>(n_samples);
  Eigen::MatrixXd d_value = error * (2.0 / static_cast<double>(n_samples));

  const Eigen::MatrixXd d_value_in = mlp_backward(value_, cache.value, std::move(d_value), grads, true);
  const Eigen::MatrixXd d_crowd = d_value_in.rightCols(feature_width);

  const Eigen::MatrixXd& features = cache.feature.activations.back();
  Eigen::MatrixXd d_features(n_rows, feature_width);
  Eigen::MatrixXd d_scores(n_rows, 1);
  for (Eigen::Index b = 0; b < n_samples; ++b) {
    const Eigen::Index begin = batch.offsets[static_cast<std::size_t>(b)];
    const Eigen::Index end = batch.offsets[static_cast<std::size_t>(b) + 1];
    double weighted = 0.0;
    for (Eigen::Index r = begin; r < end; ++r) {
      d_features.row(r) = cache.weights(r) * d_crowd.row(b);
      d_scores(r, 0) = features.row(r).dot(d_crowd.row(b));  // dL/dw_r for now
      weighted += cache.weights(r) * d_scores(r, 0);
    }
    for (Eigen::Index r = begin; r < end; ++r) d_scores(r, 0) = cache.weights(r) * (d_scores(r, 0) - weighted);
  }

  const Eigen::MatrixXd d_attention_in = mlp_backward(attention_, cache.attention, std::move(d_scores), grads, true);
  Eigen::MatrixXd d_embed = d_attention_in.leftCols(embed_width);
  for (Eigen::Index b = 0; b < n_samples; ++b) {
    const Eigen::Index begin = batch.offsets[static_cast<std::size_t>(b)];
    const Eigen::Index end = batch.offsets[static_cast<std::size_t>(b) + 1];
    if (begin == end) continue;
    Eigen::RowVectorXd d_mean = Eigen::RowVectorXd::Zero(embed_width);
    for (Eigen::Index r = begin; r < end; ++r) d_mean += d_attention_in.block(r, embed_width, 1, embed_width);
    d_mean /= static_cast<double>(end - begin);
    for (Eigen::Index r = begin; r < end; ++r) d_embed.row(r) += d_mean;
  }
  d_embed += mlp_backward(feature_, cache.feature, std::move(d_features), grads, true);
  mlp_backward(embedding_, cache.embedding, std::move(d_embed), grads, false);
  return loss;
}

double ValueNetwork::backward(const JointState& joint, double target, GradientBuffer& grads) const {
  Eigen::VectorXd targets(1);
  targets(0) = target;
  return backward(PackedBatch::pack(std::span<const JointState>(&joint, 1)), targets, grads);
}

bool ValueNetwork::operator==(const ValueNetwork& other) const {
  if (!(shape_ == other.shape_) || seed_ != other.seed_ || tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name) return false;
    if (tensors_[i].value.rows() != other.tensors_[i].value.rows() ||
        tensors_[i].value.cols() != other.tensors_[i].value.cols())
      return false;
    if (tensors_[i].value != other.tensors_[i].value) return false;
  }
  return true;
}

void ValueNetwork::save(std::ostream& out) const {
  std::ostringstream header;
  header << kMagic << ' ' << kFormatVersion << '\n';
  header << "seed " << seed_ << '\n';
  header << widths_line("embedding", shape_.embedding) << '\n';
  header << widths_line("attention", shape_.attention) << '\n';
  header << widths_line("feature", shape_.feature) << '\n';
  header << widths_line("value", shape_.value) << '\n';
  header << "tensors " << tensors_.size() << '\n';
  const std::array<const Mlp*, 4> mlps{&embedding_, &attention_, &feature_, &value_};
  for (const Mlp* mlp : mlps) {
    for (std::size_t l = 0; l < mlp->layers; ++l) {
      const bool relu = l + 1 < mlp->layers || mlp->last_relu;
      for (std::size_t k = 0; k < 2; ++k) {
        const auto& t = tensors_[mlp->first_tensor + 2 * l + k];
        header << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << ' '
               << (relu ? "relu" : "linear") << '\n';
      }
    }
  }
  header << "data\n";

  std::string body;
  for (const auto& t : tensors_) {
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        if (j) body += ' ';
        body += format_double(t.value(i, j));
      }
      body += '\n';
    }
  }
  out << header.str() << body << "checksum " << checksum_hex(body) << '\n';
  if (!out) throw IoError("failed writing value network");
}

ValueNetwork ValueNetwork::load(std::istream& in, const std::string& source) {
  LineReader reader(in, source);

  auto header = reader.expect_tokens("header");
  if (header.size() != 2 || header[0] != kMagic) reader.fail("not a value network file (bad magic line)");
  if (header[1] != std::to_string(kFormatVersion)) reader.fail("unsupported format version '" + header[1] + "'");

  auto seed_line = reader.expect_tokens("seed");
  if (seed_line.size() != 2 || seed_line[0] != "seed") reader.fail("expected 'seed <value>'");
  const std::uint64_t seed = reader.parse_u64(seed_line[1]);

  NetworkShape shape;
  for (auto [name, widths] : {std::pair{"embedding", &shape.embedding}, std::pair{"attention", &shape.attention},
                              std::pair{"feature", &shape.feature}, std::pair{"value", &shape.value}}) {
    auto line = reader.expect_tokens("shape");
    if (line.size() < 3 || line[0] != "shape" || line[1] != name) {
      reader.fail(std::string("expected 'shape ") + name + " <widths...>'");
    }
    widths->clear();
    for (std::size_t i = 2; i < line.size(); ++i) widths->push_back(static_cast<int>(reader.parse_u64(line[i])));
  }
  try {
    shape.validate();
  } catch (const ConfigError& e) {
    reader.fail(std::string("invalid shape: ") + e.what());
  }
  ValueNetwork net(shape, seed);

  auto count_line = reader.expect_tokens("tensor count");
  if (count_line.size() != 2 || count_line[0] != "tensors") reader.fail("expected 'tensors <count>'");
  if (reader.parse_u64(count_line[1]) != net.tensors_.size()) {
    reader.fail("tensor count " + count_line[1] + " does not match shape (" + std::to_string(net.tensors_.size()) +
                ")");
  }
  for (const auto& t : net.tensors_) {
    auto line = reader.expect_tokens("tensor header");
    if (line.size() != 5 || line[0] != "tensor") reader.fail("expected 'tensor <name> <rows> <cols> <activation>'");
    if (line[1] != t.name) reader.fail("expected tensor '" + t.name + "', found '" + line[1] + "'");
    if (reader.parse_u64(line[2]) != static_cast<std::uint64_t>(t.value.rows()) ||
        reader.parse_u64(line[3]) != static_cast<std::uint64_t>(t.value.cols())) {
      reader.fail("tensor '" + t.name + "' has shape " + line[2] + "x" + line[3] + ", expected " +
                  std::to_string(t.value.rows()) + "x" + std::to_string(t.value.cols()));
    }
    if (line[4] != "relu" && line[4] != "linear") reader.fail("unknown activation tag '" + line[4] + "'");
  }
  auto data_line = reader.expect_tokens("data marker");
  if (data_line.size() != 1 || data_line[0] != "data") reader.fail("expected 'data'");

  std::string body;
  for (auto& t : net.tensors_) {
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      const std::string raw = reader.expect_line("values of " + t.name);
      body += raw;
      body += '\n';
      const auto values = split_tokens(raw);
      if (values.size() != static_cast<std::size_t>(t.value.cols())) {
        reader.fail("row " + std::to_string(i) + " of '" + t.name + "' has " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(t.value.cols()));
      }
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        t.value(i, j) = reader.parse_double(values[static_cast<std::size_t>(j)]);
      }
    }
  }
  auto checksum_line = reader.expect_tokens("checksum");
  if (checksum_line.size() != 2 || checksum_line[0] != "checksum") reader.fail("expected 'checksum <hex>'");
  const std::string actual = checksum_hex(body);
  if (checksum_line[1] != actual) {
    reader.fail("checksum mismatch: file says " + checksum_line[1] + ", data hashes to " + actual);
  }
  if (reader.next_nonempty()) reader.fail("trailing content after checksum");
  return net;
}

void ValueNetwork::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save(out);
}

ValueNetwork ValueNetwork::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load(in, path);
}

void SgdMomentum::step(ValueNetwork& net, const GradientBuffer& grads) {
  auto& tensors = net.tensors();
  if (grads.grads.size() != tensors.size()) throw ConfigError("grads", "buffer does not match network");
  if (velocity_.size() != tensors.size()) {
    velocity_.clear();
    for (const auto& t : tensors) velocity_.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] + grads.grads[i];
    tensors[i].value -= lr_ * velocity_[i];
  }
}

}  // namespace crowdnav
