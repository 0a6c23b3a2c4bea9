#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vqctd/codes.hpp"
#include "vqctd/l2l.hpp"
#include "vqctd/turbo.hpp"

namespace vqctd {

// ---------------------------------------------------------------------------
// Exact joint detection and decoding

/// argmin_u ||y - A (-1)^{G u}||^2 by enumeration of all 2^K info words; ties go
/// to the numerically smallest u (bit i of the integer = u_i).
Bits ml_joint_detect(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, const LinearCode& code);

// ---------------------------------------------------------------------------
// Syndrome-based LSTM decoder

struct BaselineConfig {
  std::size_t hidden = 150;
  std::size_t layers = 3;
  std::size_t time_steps = 7;
  double xi = 0.6;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t epochs = 2000;
  double snr_min_db = 0.0;
  double snr_max_db = 6.0;
  std::size_t holdout_size = 256;
  std::size_t log_every = 100;
  double grad_clip = 10.0;
};

/// Recurrent decoder fed the same (weighted syndrome, |l|) vector at every
/// step; each step predicts per-code-bit flip logits of the hard decision.
struct BaselineModel {
  LstmStack net;
  std::size_t checks = 0;
  std::size_t code_length = 0;
  std::size_t time_steps = 7;

  static BaselineModel zeros(std::size_t checks, std::size_t code_length, std::size_t hidden, std::size_t layers,
                             std::size_t time_steps);
  static BaselineModel random(std::size_t checks, std::size_t code_length, std::size_t hidden, std::size_t layers,
                              std::size_t time_steps, std::mt19937_64& rng);
};

/// Flip logits of the final step.
std::vector<double> baseline_flip_logits(const BaselineModel& model, const LinearCode& code, std::span<const double> l);

/// Extrinsic LLRs in the same contract as vqc_decode_extrinsic.
DecoderOutput lstm_baseline_decode(const LinearCode& code, std::span<const double> l, double tau2,
                                   const BaselineModel& model);

/// Decaying flip cross-entropy of one example; accumulates parameter gradients into `grad` when non-null.
double baseline_loss_and_gradient(const BaselineModel& model, const LinearCode& code, std::span<const double> l,
                                  std::span<const std::uint8_t> codeword, double xi, Eigen::VectorXd* grad);

struct TrainedBaseline {
  BaselineModel model;
  TrainingLog log;
};

TrainedBaseline train_baseline(const LinearCode& code, const BaselineConfig& config, std::mt19937_64& rng,
                               const EpochCallback& on_log = {});

void save_baseline(const std::string& path, const BaselineModel& model);
BaselineModel load_baseline(const std::string& path, std::size_t expect_checks = 0, std::size_t expect_code_length = 0);

class LstmBaselineDecoder final : public SoftDecoder {
 public:
  LstmBaselineDecoder(LinearCode code, BaselineModel model);
  const LinearCode& code() const override { return code_; }
  DecoderOutput decode(std::span<const double> l, double tau2, DecoderContext& ctx) const override;

 private:
  LinearCode code_;
  BaselineModel model_;
};

// ---------------------------------------------------------------------------
// BER sweeps

enum class DecoderKind { VqcTd, Ml, LstmBaseline, UncodedOamp };

DecoderKind parse_decoder_kind(const std::string& name);
std::string to_string(DecoderKind kind);

struct SweepConfig {
  std::vector<double> snr_points;  // dB, SNR = -10 log10(sigma2)
  std::size_t min_frames = 1000;
  std::size_t min_bit_errors = 100;
  std::size_t max_frames = 1000000;
  std::size_t batch_frames = 200;  // stopping rule is checked between batches
  std::uint64_t seed = 1;
  std::string code_path;
  std::size_t channel_m = 0;  // 0 = N
  double cond = 1.0;
  DecoderKind decoder = DecoderKind::Ml;
  std::string weights_path;
  std::size_t n_turbo_iters = 3;
  std::size_t time_steps = 0;  // VQC-TD time steps; 0 = value stored in the weight file
  double init_angle = 0.01;
  bool persist_angles = false;
  std::size_t shots = 0;
  bool record_wall_time = false;  // off keeps the CSV byte-reproducible

  void validate() const;
};

/// Reads a JSON sweep configuration; unknown keys are rejected.
SweepConfig load_sweep_config(const std::string& path);
SweepConfig parse_sweep_config(const std::string& json_text);

struct BerRecord {
  double snr_db = 0.0;
  std::size_t frames = 0;
  std::size_t bit_errors = 0;
  double ber = 0.0;
  std::size_t frame_errors = 0;
  double fer = 0.0;
  double wall_time_s = 0.0;
};

/// Code, decoder and channel shape ready for simulation.
struct SweepSetup {
  LinearCode code = LinearCode::identity(1);  // identity code for uncoded OAMP
  DecoderKind kind = DecoderKind::Ml;
  std::shared_ptr<const SoftDecoder> decoder;  // null for ML
  std::size_t channel_m = 0;
  double cond = 1.0;
  std::size_t n_turbo_iters = 3;
};

/// Loads the code and any weights named by the config. Fails before any simulation.
SweepSetup prepare_sweep(const SweepConfig& config);

struct FrameOutcome {
  std::size_t bit_errors = 0;
  std::size_t bits = 0;
  bool frame_error = false;
};

/// One frame: fresh Haar channel, random info word, noise, detection.
FrameOutcome simulate_frame(const SweepSetup& setup, double sigma2, std::mt19937_64& rng);

/// Deterministic per-frame generator derived from (seed, snr index, frame index).
std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t snr_index, std::size_t frame_index);

using SweepProgress = std::function<void(const BerRecord&)>;

std::vector<BerRecord> ber_sweep(const SweepConfig& config, const SweepSetup& setup, const SweepProgress& progress = {});
std::vector<BerRecord> ber_sweep(const SweepConfig& config, const SweepProgress& progress = {});

inline constexpr const char* kBerCsvHeader = "snr_db,frames,bit_errors,ber,frame_errors,fer,wall_time_s";
void write_ber_csv(std::ostream& out, std::span<const BerRecord> records);

/// Trainer configuration from JSON (keys mirror TrainerConfig); unknown keys rejected.
TrainerConfig parse_trainer_config(const std::string& json_text);
BaselineConfig parse_baseline_config(const std::string& json_text);

/// Gaussian BPSK bit error rate Q(1/sigma).
double bpsk_awgn_ber(double sigma2);
/// SNR (dB) at which the BPSK curve reaches `ber`.
double bpsk_awgn_snr_for_ber(double ber);

}  // namespace vqctd
