#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace vqctd {

/// Stacked LSTM geometry. The first layer sees [primary, side]; every deeper
/// layer sees [hidden state of the layer below, side]. A linear map turns the
/// top hidden state into `output_dim` values.
struct LstmShape {
  std::size_t primary_dim = 0;
  std::size_t side_dim = 0;
  std::size_t hidden_dim = 1;
  std::size_t layers = 1;
  std::size_t output_dim = 1;

  std::size_t layer_input_dim(std::size_t layer) const { return (layer == 0 ? primary_dim : hidden_dim) + side_dim; }
  std::size_t parameter_count() const;
  friend bool operator==(const LstmShape&, const LstmShape&) = default;
};

/// Parameters live in one flat vector. Per layer: gate matrix W
/// (4H x (in + H), column-major, gate blocks ordered input, forget, cell,
/// output) followed by the 4H gate biases; then the output matrix
/// (out x H, column-major) and the output bias.
class LstmStack {
 public:
  LstmStack() = default;
  explicit LstmStack(LstmShape shape);

  const LstmShape& shape() const { return shape_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<const Eigen::MatrixXd> gate_weights(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> gate_bias(std::size_t layer) const;
  Eigen::Map<const Eigen::MatrixXd> output_weights() const;
  Eigen::Map<const Eigen::VectorXd> output_bias() const;

  Eigen::Map<Eigen::VectorXd> output_bias_mut();

  std::size_t gate_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t output_offset() const { return offsets_.back(); }

  /// U(-1/sqrt(H), 1/sqrt(H)) gate weights, zero biases except forget = 1,
  /// output map scaled by `output_scale`.
  void init_random(std::mt19937_64& rng, double output_scale = 1.0);

 private:
  LstmShape shape_;
  std::vector<std::size_t> offsets_;  // start of each layer's block, plus the output block
  Eigen::VectorXd params_;
};

struct LstmState {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> c;

  static LstmState zeros(const LstmShape& shape);
};

/// Everything one time step needs for its backward pass.
struct LstmStepCache {
  struct Layer {
    Eigen::VectorXd z;       // [layer input, previous h]
    Eigen::VectorXd i, f, g, o;
    Eigen::VectorXd c_prev;
    Eigen::VectorXd tanh_c;
  };
  std::vector<Layer> layers;
  Eigen::VectorXd h_top;
};

/// One step. Advances `state` and returns the output-map values.
Eigen::VectorXd lstm_step(const LstmStack& net, const Eigen::VectorXd& primary, const Eigen::VectorXd& side,
                          LstmState& state, LstmStepCache* cache = nullptr);

/// Gradients flowing backward through time: dL/dh and dL/dc for every layer.
struct LstmStateGrad {
  std::vector<Eigen::VectorXd> dh;
  std::vector<Eigen::VectorXd> dc;

  static LstmStateGrad zeros(const LstmShape& shape);
};

/// Backward pass of one step. Consumes `carry` (gradients w.r.t. this step's
/// outgoing state) and replaces it with gradients w.r.t. the incoming state.
/// Parameter gradients are accumulated into `grad`; input gradients are
/// written to `d_primary` / `d_side` when non-null.
void lstm_step_backward(const LstmStack& net, const LstmStepCache& cache, const Eigen::VectorXd& d_output,
                        LstmStateGrad& carry, Eigen::VectorXd& grad, Eigen::VectorXd* d_primary,
                        Eigen::VectorXd* d_side);

/// Adamax (infinity-norm Adam).
class Adamax {
 public:
  Adamax(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  Eigen::VectorXd m_, u_;
};

/// Scales `grad` in place so its Euclidean norm is at most `max_norm`; returns the original norm.
double clip_global_norm(Eigen::VectorXd& grad, double max_norm);

/// Binary weight container shared by every network in the project.
struct WeightFileHeader {
  std::uint32_t kind = 0;  // see NetworkKind in l2l.hpp
  LstmShape shape;
  std::uint64_t depth = 0;        // QAOA depth D (0 when not applicable)
  std::uint64_t checks = 0;       // S
  std::uint64_t code_length = 0;  // N
  std::uint64_t time_steps = 0;
  std::uint64_t flags = 0;
};

void write_weights(std::ostream& out, const WeightFileHeader& header, const Eigen::VectorXd& params);
/// Throws FormatError on a bad magic/version or a truncated payload.
std::pair<WeightFileHeader, Eigen::VectorXd> read_weights(std::istream& in);

}  // namespace vqctd
