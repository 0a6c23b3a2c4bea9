#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vqctd/errors.hpp"
#include "vqctd/qsim.hpp"

using namespace vqctd;

namespace {

struct Instance {
  std::size_t k;
  std::vector<PauliZTerm> terms;
  QaoaParams params;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_k, std::size_t max_d) {
  std::uniform_int_distribution<std::size_t> kd(1, max_k), dd(1, max_d), nt(1, 6);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), angle(-1.5, 1.5);
  Instance in;
  in.k = kd(rng);
  const std::size_t terms = nt(rng);
  std::uniform_int_distribution<std::uint64_t> mask(1, (std::uint64_t{1} << in.k) - 1);
  for (std::size_t t = 0; t < terms; ++t) in.terms.push_back({coef(rng), mask(rng)});
  const std::size_t d = dd(rng);
  for (std::size_t i = 0; i < d; ++i) {
    in.params.gamma.push_back(angle(rng));
    in.params.beta.push_back(angle(rng));
  }
  return in;
}

std::vector<oracle::Term> to_oracle(const std::vector<PauliZTerm>& terms) {
  std::vector<oracle::Term> out;
  for (const auto& t : terms) out.push_back({t.coefficient, t.support});
  return out;
}

double max_amp_diff(const Statevector& s, const oracle::CVec& ref) {
  double worst = 0.0;
  for (std::size_t b = 0; b < s.dimension(); ++b)
    worst = std::max(worst, std::abs(s.amplitudes()[b] - ref(static_cast<Eigen::Index>(b))));
  return worst;
}

}  // namespace

TEST_CASE("cost diagonal matches dense Z-string sum") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = random_instance(rng, 4, 1);
    const CostHamiltonian hc(in.k, in.terms);
    const auto diag = hc.diagonal();
    const auto dense = oracle::cost_matrix(in.k, to_oracle(in.terms));
    for (std::size_t b = 0; b < diag.size(); ++b) CHECK(diag[b] == doctest::Approx(dense(b, b).real()).epsilon(1e-12));
    CHECK((dense - oracle::CMat(dense.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("statevector and expectations match the dense oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng, 4, 3);
    const CostHamiltonian hc(in.k, in.terms);
    const auto state = apply_qaoa(hc, in.params);
    const auto ref = oracle::qaoa_state(in.k, to_oracle(in.terms), in.params.gamma, in.params.beta);
    CHECK(max_amp_diff(state, ref) < 1e-9);

    const auto z = expect_z(state);
    for (std::size_t q = 0; q < in.k; ++q) CHECK(std::abs(z[q] - oracle::z_expectation(in.k, ref, q)) < 1e-9);
    const double cost = oracle::expectation(ref, oracle::cost_matrix(in.k, to_oracle(in.terms)));
    CHECK(std::abs(expect_cost(state, hc) - cost) < 1e-9);
  }
}

TEST_CASE("single-qubit closed form") {
  for (double c : {-1.3, 0.4, 2.0})
    for (double g : {-0.7, 0.2, 1.1})
      for (double b : {-0.4, 0.3, 0.9}) {
        const CostHamiltonian hc(1, {{c, 1}});
        const auto state = apply_qaoa(hc, {{g}, {b}});
        CHECK(expect_z(state)[0] == doctest::Approx(oracle::single_qubit_z(c, g, b)).epsilon(1e-12));
      }
}

TEST_CASE("zero angles leave |+> with <Z> = 0") {
  const CostHamiltonian hc(3, {{1.0, 0b011}, {-0.5, 0b110}});
  const auto state = apply_qaoa(hc, {{0.0, 0.0}, {0.0, 0.0}});
  for (double z : expect_z(state)) CHECK(std::abs(z) < 1e-15);
  CHECK(std::abs(expect_cost(state, hc)) < 1e-15);
}

TEST_CASE("norm is preserved at depth 22 on 11 qubits") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<PauliZTerm> terms;
  std::uniform_int_distribution<std::uint64_t> mask(1, (1u << 11) - 1);
  for (int j = 0; j < 20; ++j) terms.push_back({u(rng), mask(rng)});
  QaoaParams p;
  for (int d = 0; d < 22; ++d) {
    p.gamma.push_back(u(rng));
    p.beta.push_back(u(rng));
  }
  const auto state = apply_qaoa(CostHamiltonian(11, terms), p);
  CHECK(std::abs(state.norm_squared() - 1.0) < 1e-10);
}

TEST_CASE("cost expectation is linear in the coefficients") {
  std::mt19937_64 rng(4);
  const auto a = random_instance(rng, 4, 2);
  auto b_terms = a.terms;
  for (auto& t : b_terms) t.coefficient = 0.5 - t.coefficient;
  std::vector<PauliZTerm> sum_terms = a.terms;
  for (std::size_t i = 0; i < sum_terms.size(); ++i) sum_terms[i].coefficient = 2.0 * a.terms[i].coefficient + 3.0 * b_terms[i].coefficient;

  const auto state = apply_qaoa(CostHamiltonian(a.k, a.terms), a.params);
  const double ea = expect_cost(state, CostHamiltonian(a.k, a.terms));
  const double eb = expect_cost(state, CostHamiltonian(a.k, b_terms));
  CHECK(expect_cost(state, CostHamiltonian(a.k, sum_terms)) == doctest::Approx(2 * ea + 3 * eb).epsilon(1e-12));
}

TEST_CASE("cost hamiltonian from a code") {
  // Two info bits, three code bits: v = (u0, u1, u0 ^ u1).
  const auto g = BitMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  const auto code = LinearCode::from_generator(g);
  const std::vector<double> l{0.5, -1.0, 2.0};
  const auto hc = build_cost_hamiltonian(code, l);
  REQUIRE(hc.terms().size() == 3);
  CHECK(hc.terms()[0].coefficient == -0.5);
  CHECK(hc.terms()[2].support == 0b11);
  CHECK(hc.support_indices(2) == std::vector<std::size_t>{0, 1});

  // E(u) = -sum_j l_j (-1)^{v_j(u)}: smallest for the codeword best aligned with sign(l).
  const auto diag = hc.diagonal();
  for (std::uint64_t u = 0; u < 4; ++u) {
    const int v0 = u & 1, v1 = (u >> 1) & 1, v2 = v0 ^ v1;
    const double e = -(l[0] * (v0 ? -1 : 1) + l[1] * (v1 ? -1 : 1) + l[2] * (v2 ? -1 : 1));
    CHECK(diag[u] == doctest::Approx(e));
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(CostHamiltonian(2, {{1.0, 0}}), InvalidCode);
  CHECK_THROWS(CostHamiltonian(2, {{1.0, 0b100}}));
  CHECK_THROWS(apply_qaoa(CostHamiltonian(1, {{1.0, 1}}), {{0.1, 0.2}, {0.1}}));
  CHECK_THROWS(Statevector::plus_state(kMaxQubits + 1));
}

TEST_CASE("adjoint gradients match central differences") {
  std::mt19937_64 rng(5);
  const double h = 1e-5;
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = random_instance(rng, 4, 3);
    const CostHamiltonian hc(in.k, in.terms);
    const auto grads = qaoa_gradients(hc, in.params);

    auto eval = [&](const QaoaParams& p) {
      const auto ref = oracle::qaoa_state(in.k, to_oracle(in.terms), p.gamma, p.beta);
      std::vector<double> out;
      out.push_back(oracle::expectation(ref, oracle::cost_matrix(in.k, to_oracle(in.terms))));
      for (std::size_t q = 0; q < in.k; ++q) out.push_back(oracle::z_expectation(in.k, ref, q));
      return out;
    };
    auto check = [&](double analytic, double fd) {
      if (std::abs(fd) < 1e-3)
        CHECK(std::abs(analytic - fd) < 1e-8);
      else
        CHECK(std::abs(analytic - fd) / std::abs(fd) < 1e-5);
    };
    for (std::size_t d = 0; d < in.params.depth(); ++d) {
      for (int which = 0; which < 2; ++which) {
        auto plus = in.params, minus = in.params;
        (which ? plus.beta : plus.gamma)[d] += h;
        (which ? minus.beta : minus.gamma)[d] -= h;
        const auto ep = eval(plus), em = eval(minus);
        check(which ? grads.cost_beta[d] : grads.cost_gamma[d], (ep[0] - em[0]) / (2 * h));
        for (std::size_t q = 0; q < in.k; ++q)
          check(which ? grads.z_beta[q][d] : grads.z_gamma[q][d], (ep[q + 1] - em[q + 1]) / (2 * h));
      }
    }
  }
}

TEST_CASE("vjp equals the weighted Jacobian") {
  std::mt19937_64 rng(6);
  const auto in = random_instance(rng, 4, 3);
  const CostHamiltonian hc(in.k, in.terms);
  const auto energies = hc.diagonal();
  const auto state = apply_qaoa(hc, in.params);
  std::vector<double> w(in.k);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& x : w) x = u(rng);
  const double cw = 0.7;
  const auto vjp = qaoa_vjp(energies, in.params, state, w, cw);
  const auto jac = qaoa_gradients(hc, in.params);
  for (std::size_t d = 0; d < in.params.depth(); ++d) {
    double eg = cw * jac.cost_gamma[d], eb = cw * jac.cost_beta[d];
    for (std::size_t q = 0; q < in.k; ++q) {
      eg += w[q] * jac.z_gamma[q][d];
      eb += w[q] * jac.z_beta[q][d];
    }
    CHECK(vjp.gamma[d] == doctest::Approx(eg).epsilon(1e-10));
    CHECK(vjp.beta[d] == doctest::Approx(eb).epsilon(1e-10));
  }
}

TEST_CASE("gate counts") {
  // Table-style accounting: one multi-Z per code bit per layer, one RX per qubit per layer.
  const auto g = BitMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}, {1, 0}});
  const auto code = LinearCode::from_generator(g);
  const std::vector<double> l(4, 1.0);
  const auto count = count_gates(build_cost_hamiltonian(code, l), 5);
  CHECK(count.multi_z_rotations == 20);
  CHECK(count.rx_count == 10);
  CHECK(count.hadamard_count == 2);
  CHECK(count.trainable_params == 10);
  CHECK(count.mean_term_weight == doctest::Approx(5.0 / 4.0));
  CHECK(count.avg_multi_z_arity == doctest::Approx(5.0 / 2.0));
}

TEST_CASE("shot sampling converges to the exact expectations") {
  std::mt19937_64 rng(8);
  const CostHamiltonian hc(3, {{0.8, 0b001}, {-0.6, 0b110}, {0.3, 0b111}});
  const auto state = apply_qaoa(hc, {{0.4, 0.9}, {0.7, 0.2}});
  const auto exact = expect_z(state);
  const auto est = sample_expectations(state, hc.diagonal(), 200000, rng);
  for (std::size_t q = 0; q < 3; ++q) CHECK(std::abs(est.z[q] - exact[q]) < 0.01);
  CHECK(std::abs(est.cost - expect_cost(state, hc)) < 0.01);
}
