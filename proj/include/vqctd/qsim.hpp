#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vqctd/codes.hpp"

namespace vqctd {

using cplx = std::complex<double>;

/// coefficient * prod_{i in support} Z_i
struct PauliZTerm {
  double coefficient = 0.0;
  std::uint64_t support = 0;  // bit i set <=> qubit i participates
};

/// Diagonal cost operator: weighted sum of Z-strings on `num_qubits` qubits.
class CostHamiltonian {
 public:
  CostHamiltonian(std::size_t num_qubits, std::vector<PauliZTerm> terms);

  std::size_t num_qubits() const { return num_qubits_; }
  const std::vector<PauliZTerm>& terms() const { return terms_; }

  /// Qubit indices of term j in ascending order.
  std::vector<std::size_t> support_indices(std::size_t j) const;

  /// Eigenvalue on every computational basis state (length 2^K).
  std::vector<double> diagonal() const;

 private:
  std::size_t num_qubits_;
  std::vector<PauliZTerm> terms_;
};

/// One term per code bit j: coefficient -l_j on the info bits feeding bit j.
CostHamiltonian build_cost_hamiltonian(const LinearCode& code, std::span<const double> l);

struct QaoaParams {
  std::vector<double> gamma;
  std::vector<double> beta;

  std::size_t depth() const { return gamma.size(); }
  void validate() const;
};

/// 2^K amplitudes; basis index bit i is the computational value of qubit i.
class Statevector {
 public:
  static Statevector plus_state(std::size_t num_qubits);
  static Statevector basis_state(std::size_t num_qubits, std::uint64_t index);
  static Statevector from_amplitudes(std::size_t num_qubits, std::vector<cplx> amplitudes);

  std::size_t num_qubits() const { return num_qubits_; }
  std::size_t dimension() const { return amps_.size(); }
  std::span<const cplx> amplitudes() const { return amps_; }
  std::span<cplx> amplitudes() { return amps_; }
  double norm_squared() const;

 private:
  Statevector(std::size_t num_qubits, std::vector<cplx> amps) : num_qubits_(num_qubits), amps_(std::move(amps)) {}

  std::size_t num_qubits_ = 0;
  std::vector<cplx> amps_;
};

/// Largest register the dense simulator accepts.
inline constexpr std::size_t kMaxQubits = 24;

// Layer primitives. Phase layer: amp_b *= exp(i * gamma * E_b). Mixer layer:
// RX(2 beta) = exp(-i beta X) on every qubit.
void apply_phase_layer(std::span<cplx> amps, std::span<const double> energies, double gamma);
void apply_mixer_layer(std::span<cplx> amps, std::size_t num_qubits, double beta);

/// |+>^K followed by D alternating (cost phase, mixer) layers.
Statevector apply_qaoa(const CostHamiltonian& hc, const QaoaParams& params);
Statevector apply_qaoa(std::span<const double> energies, std::size_t num_qubits, const QaoaParams& params);

/// <Z_i> for every qubit.
std::vector<double> expect_z(const Statevector& state);
double expect_cost(const Statevector& state, const CostHamiltonian& hc);
double expect_diagonal(const Statevector& state, std::span<const double> energies);

/// Shot-sampled estimates of <Z_i> and the cost, for finite-measurement experiments.
struct SampledExpectations {
  std::vector<double> z;
  double cost = 0.0;
};
SampledExpectations sample_expectations(const Statevector& state, std::span<const double> energies,
                                        std::size_t shots, std::mt19937_64& rng);

struct AngleGradient {
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Reverse-mode (adjoint) gradient of <psi(gamma, beta)| O |psi(gamma, beta)>
/// for the diagonal observable O = sum_i z_weights[i] Z_i + cost_weight * H_C.
/// `final_state` must be the output of apply_qaoa for the same inputs.
AngleGradient qaoa_vjp(std::span<const double> energies, const QaoaParams& params, const Statevector& final_state,
                       std::span<const double> z_weights, double cost_weight);

struct QaoaGradients {
  std::vector<double> cost_gamma;                // d<H_C>/d gamma_d
  std::vector<double> cost_beta;                 // d<H_C>/d beta_d
  std::vector<std::vector<double>> z_gamma;      // [i][d] = d<Z_i>/d gamma_d
  std::vector<std::vector<double>> z_beta;       // [i][d] = d<Z_i>/d beta_d
};

/// Full Jacobian of the cost and of every <Z_i> with respect to all angles.
QaoaGradients qaoa_gradients(const CostHamiltonian& hc, const QaoaParams& params);

struct GateCount {
  std::size_t multi_z_rotations = 0;  // one per term per layer
  double avg_multi_z_arity = 0.0;     // mean column weight of G (N_c)
  double mean_term_weight = 0.0;      // mean support size per term (mean row weight of G)
  std::size_t rx_count = 0;
  std::size_t hadamard_count = 0;     // initial |+> preparation only
  std::size_t trainable_params = 0;
};

GateCount count_gates(const CostHamiltonian& hc, std::size_t depth);

}  // namespace vqctd
