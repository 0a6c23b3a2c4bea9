#include "vqctd/qsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vqctd/errors.hpp"

namespace vqctd {

namespace {

double parity_sign(std::uint64_t b, std::uint64_t mask) { return (std::popcount(b & mask) & 1) ? -1.0 : 1.0; }

void check_register(std::size_t num_qubits) {
  if (num_qubits == 0) throw std::invalid_argument("qsim: register must have at least one qubit");
  if (num_qubits > kMaxQubits) throw UnsupportedSize("qsim: register larger than the supported maximum");
}

// sum_q <lhs| X_q |rhs>
cplx x_sum_overlap(std::span<const cplx> lhs, std::span<const cplx> rhs, std::size_t num_qubits) {
  cplx acc{0.0, 0.0};
  for (std::size_t q = 0; q < num_qubits; ++q) {
    const std::size_t flip = std::size_t{1} << q;
    for (std::size_t b = 0; b < lhs.size(); ++b) acc += std::conj(lhs[b]) * rhs[b ^ flip];
  }
  return acc;
}

}  // namespace

CostHamiltonian::CostHamiltonian(std::size_t num_qubits, std::vector<PauliZTerm> terms)
    : num_qubits_(num_qubits), terms_(std::move(terms)) {
  check_register(num_qubits_);
  const std::uint64_t allowed = num_qubits_ >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << num_qubits_) - 1;
  for (const auto& t : terms_) {
    if (t.support == 0) throw InvalidCode("cost Hamiltonian: term with empty support");
    if (t.support & ~allowed) throw std::invalid_argument("cost Hamiltonian: qubit index out of range");
    if (!std::isfinite(t.coefficient)) throw std::invalid_argument("cost Hamiltonian: non-finite coefficient");
  }
}

std::vector<std::size_t> CostHamiltonian::support_indices(std::size_t j) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < num_qubits_; ++i)
    if ((terms_.at(j).support >> i) & 1u) idx.push_back(i);
  return idx;
}

std::vector<double> CostHamiltonian::diagonal() const {
  const std::size_t dim = std::size_t{1} << num_qubits_;
  std::vector<double> e(dim, 0.0);
  for (std::size_t b = 0; b < dim; ++b) {
    double acc = 0.0;
    for (const auto& t : terms_) acc += t.coefficient * parity_sign(b, t.support);
    e[b] = acc;
  }
  return e;
}

CostHamiltonian build_cost_hamiltonian(const LinearCode& code, std::span<const double> l) {
  if (l.size() != code.n()) throw std::invalid_argument("build_cost_hamiltonian: length != N");
  std::vector<PauliZTerm> terms;
  terms.reserve(code.n());
  for (std::size_t j = 0; j < code.n(); ++j) {
    const auto mask = code.generator_row_mask(j);
    if (mask == 0) throw InvalidCode("build_cost_hamiltonian: code bit with empty generator row");
    terms.push_back({-l[j], mask});
  }
  return CostHamiltonian(code.k(), std::move(terms));
}

void QaoaParams::validate() const {
  if (gamma.empty()) throw std::invalid_argument("QaoaParams: depth must be >= 1");
  if (gamma.size() != beta.size()) throw std::invalid_argument("QaoaParams: gamma/beta length mismatch");
}

Statevector Statevector::plus_state(std::size_t num_qubits) {
  check_register(num_qubits);
  const std::size_t dim = std::size_t{1} << num_qubits;
  return Statevector(num_qubits, std::vector<cplx>(dim, cplx{1.0 / std::sqrt(static_cast<double>(dim)), 0.0}));
}

Statevector Statevector::basis_state(std::size_t num_qubits, std::uint64_t index) {
  check_register(num_qubits);
  const std::size_t dim = std::size_t{1} << num_qubits;
  if (index >= dim) throw std::invalid_argument("basis_state: index out of range");
  std::vector<cplx> amps(dim, cplx{0.0, 0.0});
  amps[index] = 1.0;
  return Statevector(num_qubits, std::move(amps));
}

Statevector Statevector::from_amplitudes(std::size_t num_qubits, std::vector<cplx> amplitudes) {
  check_register(num_qubits);
  if (amplitudes.size() != (std::size_t{1} << num_qubits))
    throw std::invalid_argument("from_amplitudes: wrong dimension");
  Statevector s(num_qubits, std::move(amplitudes));
  if (std::abs(s.norm_squared() - 1.0) > 1e-10) throw std::invalid_argument("from_amplitudes: state not normalized");
  return s;
}

double Statevector::norm_squared() const {
  double acc = 0.0;
  for (const auto& a : amps_) acc += std::norm(a);
  return acc;
}

void apply_phase_layer(std::span<cplx> amps, std::span<const double> energies, double gamma) {
  for (std::size_t b = 0; b < amps.size(); ++b) {
    const double phi = gamma * energies[b];
    amps[b] *= cplx{std::cos(phi), std::sin(phi)};
  }
}

void apply_mixer_layer(std::span<cplx> amps, std::size_t num_qubits, double beta) {
  const double c = std::cos(beta);
  const cplx ms{0.0, -std::sin(beta)};
  for (std::size_t q = 0; q < num_qubits; ++q) {
    const std::size_t stride = std::size_t{1} << q;
    for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
      for (std::size_t off = 0; off < stride; ++off) {
        const std::size_t i0 = base + off;
        const std::size_t i1 = i0 + stride;
        const cplx a0 = amps[i0];
        const cplx a1 = amps[i1];
        amps[i0] = c * a0 + ms * a1;
        amps[i1] = ms * a0 + c * a1;
      }
    }
  }
}

Statevector apply_qaoa(std::span<const double> energies, std::size_t num_qubits, const QaoaParams& params) {
  params.validate();
  auto state = Statevector::plus_state(num_qubits);
  if (energies.size() != state.dimension()) throw std::invalid_argument("apply_qaoa: energy table size mismatch");
  auto amps = state.amplitudes();
  for (std::size_t d = 0; d < params.depth(); ++d) {
    apply_phase_layer(amps, energies, params.gamma[d]);
    apply_mixer_layer(amps, num_qubits, params.beta[d]);
  }
  return state;
}

Statevector apply_qaoa(const CostHamiltonian& hc, const QaoaParams& params) {
  const auto e = hc.diagonal();
  return apply_qaoa(e, hc.num_qubits(), params);
}

std::vector<double> expect_z(const Statevector& state) {
  const auto amps = state.amplitudes();
  std::vector<double> z(state.num_qubits(), 0.0);
  for (std::size_t b = 0; b < amps.size(); ++b) {
    const double p = std::norm(amps[b]);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += ((b >> i) & 1u) ? -p : p;
  }
  for (auto& v : z) v = std::clamp(v, -1.0, 1.0);
  return z;
}

double expect_diagonal(const Statevector& state, std::span<const double> energies) {
  const auto amps = state.amplitudes();
  if (energies.size() != amps.size()) throw std::invalid_argument("expect_diagonal: size mismatch");
  double acc = 0.0;
  for (std::size_t b = 0; b < amps.size(); ++b) acc += std::norm(amps[b]) * energies[b];
  return acc;
}

double expect_cost(const Statevector& state, const CostHamiltonian& hc) {
  if (hc.num_qubits() != state.num_qubits()) throw std::invalid_argument("expect_cost: register mismatch");
  return expect_diagonal(state, hc.diagonal());
}

SampledExpectations sample_expectations(const Statevector& state, std::span<const double> energies,
                                        std::size_t shots, std::mt19937_64& rng) {
  if (shots == 0) throw std::invalid_argument("sample_expectations: shots must be positive");
  const auto amps = state.amplitudes();
  std::vector<double> probs(amps.size());
  for (std::size_t b = 0; b < amps.size(); ++b) probs[b] = std::norm(amps[b]);
  std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());

  SampledExpectations out;
  out.z.assign(state.num_qubits(), 0.0);
  for (std::size_t s = 0; s < shots; ++s) {
    const std::size_t b = dist(rng);
    for (std::size_t i = 0; i < out.z.size(); ++i) out.z[i] += ((b >> i) & 1u) ? -1.0 : 1.0;
    out.cost += energies[b];
  }
  for (auto& v : out.z) v /= static_cast<double>(shots);
  out.cost /= static_cast<double>(shots);
  return out;
}

AngleGradient qaoa_vjp(std::span<const double> energies, const QaoaParams& params, const Statevector& final_state,
                       std::span<const double> z_weights, double cost_weight) {
  params.validate();
  const std::size_t k = final_state.num_qubits();
  const std::size_t dim = final_state.dimension();
  if (energies.size() != dim) throw std::invalid_argument("qaoa_vjp: energy table size mismatch");
  if (z_weights.size() != k) throw std::invalid_argument("qaoa_vjp: need one weight per qubit");

  std::vector<cplx> psi(final_state.amplitudes().begin(), final_state.amplitudes().end());
  std::vector<cplx> lam(dim);
  for (std::size_t b = 0; b < dim; ++b) {
    double o = cost_weight * energies[b];
    for (std::size_t i = 0; i < k; ++i) o += ((b >> i) & 1u) ? -z_weights[i] : z_weights[i];
    lam[b] = o * psi[b];
  }

  const std::size_t depth = params.depth();
  AngleGradient g{std::vector<double>(depth, 0.0), std::vector<double>(depth, 0.0)};
  for (std::size_t d = depth; d-- > 0;) {
    // Mixer: dU/dbeta = -i (sum_q X_q) U.
    g.beta[d] = 2.0 * std::imag(x_sum_overlap(lam, psi, k));
    apply_mixer_layer(psi, k, -params.beta[d]);
    apply_mixer_layer(lam, k, -params.beta[d]);

    // Phase: dU/dgamma = i E U.
    cplx acc{0.0, 0.0};
    for (std::size_t b = 0; b < dim; ++b) acc += std::conj(lam[b]) * energies[b] * psi[b];
    g.gamma[d] = -2.0 * std::imag(acc);
    apply_phase_layer(psi, energies, -params.gamma[d]);
    apply_phase_layer(lam, energies, -params.gamma[d]);
  }
  return g;
}

QaoaGradients qaoa_gradients(const CostHamiltonian& hc, const QaoaParams& params) {
  const auto e = hc.diagonal();
  const auto state = apply_qaoa(e, hc.num_qubits(), params);
  const std::size_t k = hc.num_qubits();

  QaoaGradients out;
  std::vector<double> w(k, 0.0);
  auto cg = qaoa_vjp(e, params, state, w, 1.0);
  out.cost_gamma = std::move(cg.gamma);
  out.cost_beta = std::move(cg.beta);
  for (std::size_t i = 0; i < k; ++i) {
    std::fill(w.begin(), w.end(), 0.0);
    w[i] = 1.0;
    auto zg = qaoa_vjp(e, params, state, w, 0.0);
    out.z_gamma.push_back(std::move(zg.gamma));
    out.z_beta.push_back(std::move(zg.beta));
  }
  return out;
}

GateCount count_gates(const CostHamiltonian& hc, std::size_t depth) {
  if (depth == 0) throw std::invalid_argument("count_gates: depth must be >= 1");
  std::size_t ones = 0;
  for (const auto& t : hc.terms()) ones += static_cast<std::size_t>(std::popcount(t.support));
  const std::size_t k = hc.num_qubits();
  const std::size_t n = hc.terms().size();

  GateCount gc;
  gc.multi_z_rotations = depth * n;
  gc.avg_multi_z_arity = static_cast<double>(ones) / static_cast<double>(k);
  gc.mean_term_weight = n ? static_cast<double>(ones) / static_cast<double>(n) : 0.0;
  gc.rx_count = depth * k;
  gc.hadamard_count = k;
  gc.trainable_params = 2 * depth;
  return gc;
}

}  // namespace vqctd
