#include <doctest.h>

#include <cmath>
#include <random>

#include "vqctd/channel.hpp"
#include "vqctd/errors.hpp"
#include "vqctd/turbo.hpp"

using namespace vqctd;

namespace {

const std::string kDataDir = VQCTD_DATA_DIR;

// Textbook de-correlated LMMSE with an explicit inverse.
LinearStepResult reference_linear(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, const Eigen::VectorXd& p,
                                  double v2, double sigma2) {
  const auto m = a.rows(), n = a.cols();
  const Eigen::MatrixXd inv = (v2 * a * a.transpose() + sigma2 * Eigen::MatrixXd::Identity(m, m)).inverse();
  Eigen::MatrixXd w = v2 * a.transpose() * inv;
  w *= double(n) / (w * a).trace();
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n) - w * a;
  LinearStepResult r;
  r.l = p + w * (y - a * p);
  r.tau2 = v2 / n * (b * b.transpose()).trace() + sigma2 / n * (w * w.transpose()).trace();
  r.trace_wa = (w * a).trace();
  return r;
}

}  // namespace

TEST_CASE("linear step matches the explicit-inverse formula") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  for (auto [m, n, cond] : {std::tuple{20, 20, 1.0}, std::tuple{19, 20, 1.0}, std::tuple{12, 20, 5.0}}) {
    const auto ch = build_channel(m, n, cond, 0.2, rng);
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(m, [&] { return n01(rng); });
    const Eigen::VectorXd p = 0.3 * Eigen::VectorXd::NullaryExpr(n, [&] { return n01(rng); });
    const auto got = oamp_linear_step(y, ch.a, p, 0.4, 0.2);
    const auto ref = reference_linear(y, ch.a, p, 0.4, 0.2);
    CHECK((got.l - ref.l).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(got.tau2 == doctest::Approx(ref.tau2).epsilon(1e-10));
    CHECK(got.trace_wa == doctest::Approx(double(n)).epsilon(1e-10));
  }
}

TEST_CASE("orthogonal channel: first linear step is matched filtering") {
  std::mt19937_64 rng(2);
  const auto ch = build_channel(20, 20, 1.0, 0.3, rng);
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(20, -1.0, 1.0);
  const auto r = oamp_linear_step(y, ch.a, Eigen::VectorXd::Zero(20), 1.0, 0.3);
  CHECK((r.l - ch.a.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.tau2 == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("linear step rejects singular systems") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(oamp_linear_step(Eigen::VectorXd::Zero(3), a, Eigen::VectorXd::Zero(3), 1.0, 0.0), NumericalError);
  CHECK_THROWS_AS(oamp_linear_step(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3),
                                   1.0, 0.1),
                  std::invalid_argument);
}

TEST_CASE("tanh denoiser equals the explicit posterior-mean sum") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0), t(0.05, 2.0), e(-8.0, 8.0);
  for (int i = 0; i < 500; ++i) {
    const double l = u(rng), tau2 = t(rng), ext = e(rng);
    Eigen::VectorXd lv(1);
    lv << l;
    const std::vector<double> ev{ext};
    const auto r = mmse_nonlinear_step(lv, tau2, ev);
    const double q = llr_to_prob_plus(ext);
    // Direct: sum_r r N(l; r, tau2) q(r) / sum_r N(l; r, tau2) q(r)
    const double wp = std::exp(-(l - 1) * (l - 1) / (2 * tau2)) * q;
    const double wm = std::exp(-(l + 1) * (l + 1) / (2 * tau2)) * (1 - q);
    const double direct = (wp - wm) / (wp + wm);
    if (std::isfinite(direct)) CHECK(r.p(0) == doctest::Approx(direct).epsilon(1e-9));
    CHECK(mmse_symbol_estimate(l, tau2, q) == doctest::Approx(r.p(0)).epsilon(1e-9));
  }
}

TEST_CASE("denoiser variance floor") {
  Eigen::VectorXd l(2);
  l << 50.0, -50.0;
  const auto r = mmse_nonlinear_step(l, 0.01, std::vector<double>{40.0, -40.0});
  CHECK(r.v2 == kVarianceFloor);
  CHECK(r.p(0) == 1.0);
}

TEST_CASE("gaussian extrinsic") {
  NonlinearStepResult post;
  post.p = Eigen::Vector2d(0.5, -0.2);
  post.v2 = 0.2;
  const Eigen::Vector2d l(0.4, -0.1);
  const auto ext = gaussian_extrinsic(post, l, 0.5);
  const double v_ext = 1.0 / (1.0 / 0.2 - 1.0 / 0.5);
  CHECK(ext.v2 == doctest::Approx(v_ext));
  CHECK(ext.p(0) == doctest::Approx(v_ext * (0.5 / 0.2 - 0.4 / 0.5)));

  post.v2 = 0.6;
  const auto fallback = gaussian_extrinsic(post, l, 0.5);
  CHECK(fallback.v2 == 0.6);
  CHECK(fallback.p == post.p);
}

TEST_CASE("llr helpers") {
  CHECK(llr_to_prob_plus(0.0) == 0.5);
  CHECK(llr_to_prob_plus(std::log(3.0)) == doctest::Approx(0.75));
  CHECK(llr_to_prob_plus(-1e6) >= 0.0);

  const auto li = info_llr_from_z(std::vector<double>{0.5, -1.0, 1.0});
  CHECK(li[0] == doctest::Approx(std::log(3.0)));
  CHECK(std::isfinite(li[1]));
  CHECK(li[1] < -20.0);
}

TEST_CASE("code llrs equal exact marginals under independent info priors") {
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  const std::vector<double> info_llr{1.3, -0.4, 2.2, 0.1};
  const auto got = code_llr_from_info(code, info_llr);
  for (std::size_t j = 0; j < code.n(); ++j) {
    double p0 = 0.0, p1 = 0.0;
    for (std::uint64_t u = 0; u < 16; ++u) {
      double w = 1.0;
      Bits info(4);
      for (int i = 0; i < 4; ++i) {
        info[i] = (u >> i) & 1u;
        const double q0 = 1.0 / (1.0 + std::exp(-info_llr[i]));
        w *= info[i] ? 1 - q0 : q0;
      }
      (encode(code, info)[j] ? p1 : p0) += w;
    }
    CHECK(got[j] == doctest::Approx(std::log(p0 / p1)).epsilon(1e-10));
  }
}

TEST_CASE("soft ML picks the best-correlated codeword") {
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> llr(8);
    for (auto& v : llr) v = n01(rng);
    double best = -1e300;
    Bits best_u;
    for (std::uint64_t u = 0; u < 16; ++u) {
      Bits info(4);
      for (int i = 0; i < 4; ++i) info[i] = (u >> i) & 1u;
      const auto v = encode(code, info);
      double s = 0.0;
      for (int j = 0; j < 8; ++j) s += (v[j] ? -1.0 : 1.0) * llr[j];
      if (s > best) {
        best = s;
        best_u = info;
      }
    }
    CHECK(soft_ml_info(code, llr) == best_u);
  }
}

TEST_CASE("null decoder on the identity code gives matched-filter hard decisions") {
  std::mt19937_64 rng(5);
  const auto code = LinearCode::identity(20);
  const NullDecoder dec(code);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = build_channel(20, 20, 1.0, 0.5, rng);
    const auto frame = transmit(ch, code, random_bits(20, rng), rng);
    const auto r = run_turbo(frame.y, ch.a, 0.5, dec, 1);
    const Eigen::VectorXd mf = ch.a.transpose() * frame.y;
    for (int i = 0; i < 20; ++i) CHECK(r.info_hat[i] == (mf(i) < 0 ? 1 : 0));
  }
}

TEST_CASE("effective noise variance tracks tau2 across iterations") {
  std::mt19937_64 rng(6);
  const auto code = LinearCode::identity(20);
  const NullDecoder dec(code);
  const double sigma2 = sigma2_from_snr_db(2.0);
  const int frames = 4000;
  std::vector<double> err(3, 0.0), tau(3, 0.0);
  for (int f = 0; f < frames; ++f) {
    const auto ch = build_channel(20, 20, 1.0, sigma2, rng);
    const auto frame = transmit(ch, code, random_bits(20, rng), rng);
    const auto r = run_turbo(frame.y, ch.a, sigma2, dec, 3);
    for (int t = 0; t < 3; ++t) {
      err[t] += (r.trace[t].l - frame.x).squaredNorm() / 20.0;
      tau[t] += r.trace[t].tau2;
    }
  }
  for (int t = 0; t < 3; ++t) CHECK(err[t] / tau[t] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("turbo trace hygiene at high SNR") {
  std::mt19937_64 rng(7);
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  const auto model = L2LModel::random(3, 2, code.s(), code.n(), rng);
  VqcDecoderOptions opt;
  opt.time_steps = 3;
  const VqcTdDecoder dec(code, model, opt);
  for (int trial = 0; trial < 20; ++trial) {
    const double sigma2 = sigma2_from_snr_db(30.0);
    const auto ch = build_channel(8, 8, 1.0, sigma2, rng);
    const auto frame = transmit(ch, code, random_bits(4, rng), rng);
    const auto r = run_turbo(frame.y, ch.a, sigma2, dec, 3, &rng);
    for (const auto& s : r.trace) {
      for (double v : s.ext_llr) CHECK(std::abs(v) <= kLlrCap);
      for (std::size_t j = 0; j < s.q_plus.size(); ++j) CHECK(std::abs(s.q_plus[j] + s.q_minus[j] - 1.0) < 1e-12);
      CHECK(s.v2 >= kVarianceFloor);
    }
    for (double v : r.info_llr) CHECK(std::abs(v) <= kLlrCap);
  }
}

TEST_CASE("vqc decoder output contract") {
  std::mt19937_64 rng(8);
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  const auto model = L2LModel::random(3, 2, code.s(), code.n(), rng);
  VqcDecoderOptions opt;
  opt.time_steps = 4;
  const std::vector<double> l{0.9, -0.3, 1.2, 0.1, -0.8, 0.4, 0.7, -1.5};
  const auto out = vqc_decode_extrinsic(code, l, 0.5, model, opt);
  REQUIRE(out.info_llr.size() == 4);
  const auto expected_code = code_llr_from_info(code, out.info_llr);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(out.code_llr[j] == doctest::Approx(expected_code[j]));
    CHECK(out.ext_llr[j] == doctest::Approx(std::clamp(out.code_llr[j] - 2 * l[j] / 0.5, -kLlrCap, kLlrCap)));
  }
  EpisodeOptions eo;
  eo.time_steps = 4;
  const auto trace = run_l2l_episode(model, code, l, eo);
  const auto li = info_llr_from_z(trace.steps.back().z);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.info_llr[i] == doctest::Approx(std::clamp(li[i], -kLlrCap, kLlrCap)));
}

TEST_CASE("angle persistence reuses the previous call's angles") {
  std::mt19937_64 rng(9);
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  const auto model = L2LModel::random(3, 2, code.s(), code.n(), rng);
  VqcDecoderOptions opt;
  opt.time_steps = 2;
  opt.persist_angles = true;
  const VqcTdDecoder dec(code, model, opt);
  DecoderContext ctx;
  const std::vector<double> l{0.9, -0.3, 1.2, 0.1, -0.8, 0.4, 0.7, -1.5};
  const auto first = dec.decode(l, 0.5, ctx);
  REQUIRE(ctx.warm_start.has_value());
  const auto second = dec.decode(l, 0.5, ctx);
  DecoderContext fresh;
  const auto reset = dec.decode(l, 0.5, fresh);
  CHECK(reset.info_llr == first.info_llr);
  CHECK(second.info_llr != first.info_llr);
}
