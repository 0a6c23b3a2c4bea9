#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "vqctd/codes.hpp"
#include "vqctd/l2l.hpp"

namespace vqctd {

/// Magnitude cap applied to every LLR that leaves a decoder.
inline constexpr double kLlrCap = 40.0;
inline constexpr double kVarianceFloor = 1e-9;

struct LinearStepResult {
  Eigen::VectorXd l;
  double tau2 = 0.0;
  double trace_wa = 0.0;  // tr(W A) after de-correlation; equals N
};

/// De-correlated LMMSE step of OAMP:
///   W_hat = v2 A^T (v2 A A^T + sigma2 I)^-1,  W = N / tr(W_hat A) * W_hat,
///   l = p + W (y - A p),
///   tau2 = v2/N tr((I - W A)(I - W A)^T) + sigma2/N tr(W W^T).
/// Throws NumericalError if the regularized matrix is numerically singular.
LinearStepResult oamp_linear_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, const Eigen::VectorXd& p,
                                  double v2, double sigma2);

struct NonlinearStepResult {
  Eigen::VectorXd p;
  double v2 = 1.0;
};

/// BPSK posterior-mean denoiser with a decoder prior:
/// p_i = tanh(l_i / tau2 + L_i / 2), v2 = max(mean(1 - p_i^2), floor).
NonlinearStepResult mmse_nonlinear_step(const Eigen::VectorXd& l, double tau2, std::span<const double> ext_llr);

/// Posterior mean from the explicit ratio of sums over the BPSK symbols
/// r in {+1, -1}, with Gaussian likelihoods of variance tau2 and prior
/// q(+1) = `q_plus`.
double mmse_symbol_estimate(double l, double tau2, double q_plus);

/// Gaussian extrinsic message handed back to the linear detector:
/// 1/v_ext = 1/v_post - 1/tau2, p_ext = v_ext (p_post / v_post - l / tau2).
/// Falls back to the posterior when v_post >= tau2.
NonlinearStepResult gaussian_extrinsic(const NonlinearStepResult& posterior, const Eigen::VectorXd& l, double tau2);

/// q(+1) = 1 / (1 + exp(-L))
double llr_to_prob_plus(double llr);

/// L_i = log((1 + z_i) / (1 - z_i)) with z clamped to [-1 + 1e-12, 1 - 1e-12].
std::vector<double> info_llr_from_z(std::span<const double> z);

/// L'_j = 2 atanh(prod_{i : G(j, i) = 1} tanh(L_i / 2)), clamped to +-kLlrCap.
std::vector<double> code_llr_from_info(const LinearCode& code, std::span<const double> info_llr);

struct DecoderOutput {
  std::vector<double> ext_llr;   // N, L' - 2 l / tau2, clamped
  std::vector<double> code_llr;  // N, L'
  std::vector<double> info_llr;  // K; empty when the decoder has no info-bit view
};

/// Per-frame mutable decoder state (angle persistence, shot sampling).
struct DecoderContext {
  std::optional<AnglePair> warm_start;
  std::mt19937_64* rng = nullptr;
};

class SoftDecoder {
 public:
  virtual ~SoftDecoder() = default;
  virtual const LinearCode& code() const = 0;
  virtual DecoderOutput decode(std::span<const double> l, double tau2, DecoderContext& ctx) const = 0;
};

struct VqcDecoderOptions {
  std::size_t time_steps = 19;
  double init_angle = 0.01;
  bool persist_angles = false;  // reuse the last (gamma, beta) of the previous turbo iteration
  std::size_t shots = 0;
};

/// Algorithm: L2L episode -> info LLRs from the final <Z> -> code-bit LLRs ->
/// extrinsic = L' - 2 l / tau2.
DecoderOutput vqc_decode_extrinsic(const LinearCode& code, std::span<const double> l, double tau2,
                                   const L2LModel& model, const VqcDecoderOptions& options, DecoderContext* ctx = nullptr);

class VqcTdDecoder final : public SoftDecoder {
 public:
  VqcTdDecoder(LinearCode code, L2LModel model, VqcDecoderOptions options);
  const LinearCode& code() const override { return code_; }
  const L2LModel& model() const { return model_; }
  DecoderOutput decode(std::span<const double> l, double tau2, DecoderContext& ctx) const override;

 private:
  LinearCode code_;
  L2LModel model_;
  VqcDecoderOptions options_;
};

/// No decoder: zero extrinsic information, info bits = hard decisions on l.
class NullDecoder final : public SoftDecoder {
 public:
  explicit NullDecoder(LinearCode code) : code_(std::move(code)) {}
  const LinearCode& code() const override { return code_; }
  DecoderOutput decode(std::span<const double> l, double tau2, DecoderContext& ctx) const override;

 private:
  LinearCode code_;
};

struct TurboState {
  std::size_t t = 0;
  Eigen::VectorXd l;
  double tau2 = 0.0;
  double trace_wa = 0.0;
  Eigen::VectorXd p;   // posterior mean from the MMSE step
  double v2 = 0.0;     // posterior variance (floored)
  Eigen::VectorXd p_ext;
  double v2_ext = 0.0;
  std::vector<double> q_plus;
  std::vector<double> q_minus;
  std::vector<double> ext_llr;
};

struct TurboResult {
  Bits info_hat;
  std::vector<double> info_llr;  // final info-bit LLRs when the decoder provides them
  std::vector<TurboState> trace;
};

/// Argmax over codewords of sum_j (-1)^{v_j} llr_j, ties to the lowest info
/// word; bitwise hard decision for identity codes.
Bits soft_ml_info(const LinearCode& code, std::span<const double> code_llr);

/// n_iters rounds of linear step -> decoder -> MMSE step. Final bits come from
/// the decoder's info LLRs (L > 0 or L = 0 -> 0), or from soft_ml_info on the
/// posterior code LLRs when the decoder has no info view.
TurboResult run_turbo(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, double sigma2, const SoftDecoder& decoder,
                      std::size_t n_iters, std::mt19937_64* rng = nullptr);

}  // namespace vqctd
