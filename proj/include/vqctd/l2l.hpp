#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vqctd/codes.hpp"
#include "vqctd/lstm.hpp"
#include "vqctd/qsim.hpp"

namespace vqctd {

enum class NetworkKind : std::uint32_t { L2L = 1, SyndromeBaseline = 2 };

/// Learning-to-learn angle generator: a stacked LSTM with hidden size 2D that
/// reads (gamma, beta) as primary input and (cost, weighted syndromes, |l|)
/// as side input, and emits the next (gamma, beta).
struct L2LModel {
  LstmStack net;
  std::size_t depth = 0;
  std::size_t checks = 0;       // S
  std::size_t code_length = 0;  // N
  bool increments = false;      // emit angle increments instead of absolute angles

  static LstmShape shape_for(std::size_t depth, std::size_t layers, std::size_t checks, std::size_t code_length);
  static L2LModel zeros(std::size_t depth, std::size_t layers, std::size_t checks, std::size_t code_length);
  /// Random gate weights and an output bias holding a linear-ramp QAOA
  /// schedule (gamma rising to `gamma_max`, beta falling from `beta_max`).
  static L2LModel random(std::size_t depth, std::size_t layers, std::size_t checks, std::size_t code_length,
                         std::mt19937_64& rng, double gamma_max = 0.4, double beta_max = 0.6);

  std::size_t layers() const { return net.shape().layers; }
};

/// Features fed to the L2L network at one time step.
struct L2LInput {
  double cost = 0.0;  // previous <H_C>, before scaling
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> weighted_syndromes;
  std::vector<double> abs_l;  // |l| / max|l|
};

/// Constant per-episode features derived from the channel estimate.
struct EpisodeFeatures {
  std::vector<double> weighted_syndromes;
  std::vector<double> abs_l;
  double cost_scale = 1.0;  // sum |l_j|; previous cost enters the network divided by this
};

/// Throws DegenerateInput when max|l| = 0.
EpisodeFeatures episode_features(const LinearCode& code, std::span<const double> l);

struct AnglePair {
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// One LSTM step. Returns the emitted angles; `state` is advanced.
AnglePair lstm_forward(const L2LModel& model, const L2LInput& input, double cost_scale, LstmState& state,
                       LstmStepCache* cache = nullptr);

struct EpisodeStep {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> z;  // <Z_i>, one per info bit
  double cost = 0.0;
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  std::size_t time_steps() const { return steps.size(); }
};

struct EpisodeOptions {
  std::size_t time_steps = 1;
  double init_angle = 0.01;                // gamma^0 = beta^0 = init_angle
  const AnglePair* warm_start = nullptr;   // overrides init_angle when set
  std::size_t shots = 0;                   // 0 = exact expectations
  std::mt19937_64* shot_rng = nullptr;     // required when shots > 0
};

EpisodeTrace run_l2l_episode(const L2LModel& model, const LinearCode& code, std::span<const double> l,
                             const EpisodeOptions& options);

/// Probability clamp for the cross-entropy terms.
inline constexpr double kProbClamp = 1e-12;

/// Exponentially decaying cross-entropy over all steps and info bits.
double episode_loss(const EpisodeTrace& trace, std::span<const std::uint8_t> info, double xi);

/// dF/d<Z_j> at every step ([step][bit]); zero where the clamp is active.
std::vector<std::vector<double>> episode_loss_z_gradient(const EpisodeTrace& trace, std::span<const std::uint8_t> info,
                                                         double xi);

/// Runs one episode, returns its loss, and accumulates dF/dparams into `grad`
/// by backpropagation through time chained with adjoint circuit gradients.
double episode_loss_and_gradient(const L2LModel& model, const LinearCode& code, std::span<const double> l,
                                 std::span<const std::uint8_t> info, double xi, std::size_t time_steps,
                                 Eigen::VectorXd& grad, double init_angle = 0.01);

struct TrainerConfig {
  double xi = 0.6;
  double learning_rate = 0.008;
  std::size_t time_steps = 19;
  std::size_t depth = 22;
  std::size_t lstm_layers = 3;
  std::size_t batch_size = 16;
  std::size_t epochs = 1000;
  double snr_min_db = 0.0;
  double snr_max_db = 6.0;
  std::size_t holdout_size = 64;
  std::size_t log_every = 50;
  double grad_clip = 10.0;
  double init_angle = 0.01;
  double init_gamma_max = 0.4;
  double init_beta_max = 0.6;
  bool increments = false;
  bool zero_init = false;  // start from an all-zero network

  void validate() const;
};

/// One supervised example for a decoder: info bits and the AWGN-corrupted
/// BPSK codeword l = x + n, n ~ N(0, sigma2).
struct DecoderSample {
  Bits info;
  Bits codeword;
  std::vector<double> l;
  double sigma2 = 1.0;
};

DecoderSample draw_decoder_sample(const LinearCode& code, double snr_min_db, double snr_max_db, std::mt19937_64& rng);

struct TrainingLog {
  std::vector<double> epoch_loss;                       // mean batch loss per epoch
  std::vector<std::pair<std::size_t, double>> holdout;  // (epoch, mean held-out loss); epoch 0 = before training
};

struct TrainedL2L {
  L2LModel model;
  TrainingLog log;
};

using EpochCallback = std::function<void(std::size_t epoch, double batch_loss, double holdout_loss)>;

/// Adamax training on freshly drawn batches. Throws NumericalError on a non-finite loss.
TrainedL2L train_l2l(const LinearCode& code, const TrainerConfig& config, std::mt19937_64& rng,
                     const EpochCallback& on_log = {});
TrainedL2L train_l2l(const LinearCode& code, const TrainerConfig& config, L2LModel initial, std::mt19937_64& rng,
                     const EpochCallback& on_log = {});

double mean_holdout_loss(const L2LModel& model, const LinearCode& code, std::span<const DecoderSample> holdout,
                         double xi, std::size_t time_steps, double init_angle = 0.01);

/// Scalars in the model, biases and output map included.
std::size_t lstm_param_count(const L2LModel& model);

/// 4 L (8D^2 + 2DS + 2DN + 4D) + 4D^2 + 2D
std::size_t reference_lstm_param_count(std::size_t depth, std::size_t layers, std::size_t checks,
                                       std::size_t code_length);

void save_l2l(const std::string& path, const L2LModel& model, std::size_t time_steps);
/// Rejects files whose kind or dimensions disagree with the expected ones
/// (pass 0 to skip a check).
L2LModel load_l2l(const std::string& path, std::size_t expect_depth = 0, std::size_t expect_checks = 0,
                  std::size_t expect_code_length = 0, std::size_t* time_steps = nullptr);

}  // namespace vqctd
