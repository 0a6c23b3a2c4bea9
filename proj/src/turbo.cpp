#include "vqctd/turbo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vqctd/errors.hpp"

namespace vqctd {

namespace {

double cap(double v) { return std::clamp(v, -kLlrCap, kLlrCap); }

bool is_identity_code(const LinearCode& code) {
  return code.k() == code.n() && code.generator() == BitMatrix::identity(code.n());
}

}  // namespace

LinearStepResult oamp_linear_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, const Eigen::VectorXd& p,
                                  double v2, double sigma2) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (y.size() != m || p.size() != n) throw std::invalid_argument("oamp_linear_step: dimension mismatch");
  if (!(v2 > 0.0) || !(sigma2 >= 0.0)) throw std::invalid_argument("oamp_linear_step: variances must be positive");

  const Eigen::MatrixXd reg = v2 * a * a.transpose() + sigma2 * Eigen::MatrixXd::Identity(m, m);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
  const double rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "oamp_linear_step: regularized matrix is singular (rcond " << rcond << ", v2 " << v2 << ", sigma2 "
        << sigma2 << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::MatrixXd w_hat = v2 * ldlt.solve(a).transpose();  // v2 A^T R^-1, R symmetric
  const Eigen::MatrixXd w_hat_a = w_hat * a;
  const double tr = w_hat_a.trace();
  if (!(tr > 0.0)) throw NumericalError("oamp_linear_step: tr(W_hat A) is not positive");

  const double scale = static_cast<double>(n) / tr;
  const Eigen::MatrixXd w = scale * w_hat;
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n) - scale * w_hat_a;

  LinearStepResult r;
  r.l = p + w * (y - a * p);
  r.tau2 = (v2 * b.squaredNorm() + sigma2 * w.squaredNorm()) / static_cast<double>(n);
  r.trace_wa = scale * tr;
  return r;
}

NonlinearStepResult mmse_nonlinear_step(const Eigen::VectorXd& l, double tau2, std::span<const double> ext_llr) {
  if (!(tau2 > 0.0)) throw std::invalid_argument("mmse_nonlinear_step: tau2 must be positive");
  if (static_cast<std::size_t>(l.size()) != ext_llr.size())
    throw std::invalid_argument("mmse_nonlinear_step: length mismatch");
  NonlinearStepResult r;
  r.p.resize(l.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double p = std::tanh(l(i) / tau2 + 0.5 * cap(ext_llr[static_cast<std::size_t>(i)]));
    r.p(i) = p;
    acc += 1.0 - p * p;
  }
  r.v2 = std::max(acc / static_cast<double>(l.size()), kVarianceFloor);
  return r;
}

double mmse_symbol_estimate(double l, double tau2, double q_plus) {
  constexpr double symbols[2] = {1.0, -1.0};
  const double prior[2] = {q_plus, 1.0 - q_plus};
  // Likelihoods share the factor exp(-(l^2 + 1) / (2 tau2)); keep only the cross term,
  // shifted by its max for stability.
  double logw[2];
  for (int s = 0; s < 2; ++s) logw[s] = symbols[s] * l / tau2;
  const double shift = std::max(logw[0], logw[1]);
  double num = 0.0, den = 0.0;
  for (int s = 0; s < 2; ++s) {
    const double w = prior[s] * std::exp(logw[s] - shift);
    num += symbols[s] * w;
    den += w;
  }
  return num / den;
}

NonlinearStepResult gaussian_extrinsic(const NonlinearStepResult& posterior, const Eigen::VectorXd& l, double tau2) {
  const double inv = 1.0 / posterior.v2 - 1.0 / tau2;
  if (!(inv > 0.0) || !std::isfinite(inv)) return posterior;
  NonlinearStepResult r;
  r.v2 = std::max(1.0 / inv, kVarianceFloor);
  r.p = r.v2 * (posterior.p / posterior.v2 - l / tau2);
  return r;
}

double llr_to_prob_plus(double llr) { return 1.0 / (1.0 + std::exp(-llr)); }

std::vector<double> info_llr_from_z(std::span<const double> z) {
  constexpr double eps = 1e-12;
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zc = std::clamp(z[i], -1.0 + eps, 1.0 - eps);
    out[i] = cap(std::log((1.0 + zc) / (1.0 - zc)));
  }
  return out;
}

std::vector<double> code_llr_from_info(const LinearCode& code, std::span<const double> info_llr) {
  if (info_llr.size() != code.k()) throw std::invalid_argument("code_llr_from_info: length != K");
  constexpr double limit = 1.0 - 1e-12;
  const auto& g = code.generator();
  std::vector<double> out(code.n());
  for (std::size_t j = 0; j < code.n(); ++j) {
    double prod = 1.0;
    for (std::size_t i = 0; i < code.k(); ++i)
      if (g(j, i)) prod *= std::tanh(0.5 * info_llr[i]);
    out[j] = cap(2.0 * std::atanh(std::clamp(prod, -limit, limit)));
  }
  return out;
}

DecoderOutput vqc_decode_extrinsic(const LinearCode& code, std::span<const double> l, double tau2,
                                   const L2LModel& model, const VqcDecoderOptions& options, DecoderContext* ctx) {
  if (l.size() != code.n()) throw std::invalid_argument("vqc_decode_extrinsic: length != N");
  if (!(tau2 > 0.0)) throw std::invalid_argument("vqc_decode_extrinsic: tau2 must be positive");

  EpisodeOptions eo;
  eo.time_steps = options.time_steps;
  eo.init_angle = options.init_angle;
  eo.shots = options.shots;
  if (ctx) {
    eo.shot_rng = ctx->rng;
    if (options.persist_angles && ctx->warm_start) eo.warm_start = &*ctx->warm_start;
  }
  const auto trace = run_l2l_episode(model, code, l, eo);
  const auto& last = trace.steps.back();
  if (ctx && options.persist_angles) ctx->warm_start = AnglePair{last.gamma, last.beta};

  DecoderOutput out;
  out.info_llr = info_llr_from_z(last.z);
  out.code_llr = code_llr_from_info(code, out.info_llr);
  out.ext_llr.resize(code.n());
  for (std::size_t j = 0; j < code.n(); ++j) out.ext_llr[j] = cap(out.code_llr[j] - 2.0 * l[j] / tau2);
  return out;
}

VqcTdDecoder::VqcTdDecoder(LinearCode code, L2LModel model, VqcDecoderOptions options)
    : code_(std::move(code)), model_(std::move(model)), options_(options) {
  if (model_.checks != code_.s() || model_.code_length != code_.n())
    throw std::invalid_argument("VqcTdDecoder: model dimensions do not match the code");
}

DecoderOutput VqcTdDecoder::decode(std::span<const double> l, double tau2, DecoderContext& ctx) const {
  return vqc_decode_extrinsic(code_, l, tau2, model_, options_, &ctx);
}

DecoderOutput NullDecoder::decode(std::span<const double> l, double tau2, DecoderContext&) const {
  if (l.size() != code_.n()) throw std::invalid_argument("NullDecoder: length != N");
  DecoderOutput out;
  out.ext_llr.assign(code_.n(), 0.0);
  out.code_llr.resize(code_.n());
  for (std::size_t j = 0; j < code_.n(); ++j) out.code_llr[j] = cap(2.0 * l[j] / tau2);
  return out;
}

Bits soft_ml_info(const LinearCode& code, std::span<const double> code_llr) {
  if (code_llr.size() != code.n()) throw std::invalid_argument("soft_ml_info: length != N");
  if (is_identity_code(code)) {
    Bits out(code.n());
    for (std::size_t j = 0; j < code.n(); ++j) out[j] = code_llr[j] < 0.0 ? 1 : 0;
    return out;
  }
  if (code.k() > 24) throw UnsupportedSize("soft_ml_info: K > 24");
  if (code.n() > 64) throw UnsupportedSize("soft_ml_info: N > 64");

  std::vector<std::uint64_t> columns(code.k(), 0);
  const auto& g = code.generator();
  for (std::size_t i = 0; i < code.k(); ++i)
    for (std::size_t j = 0; j < code.n(); ++j)
      if (g(j, i)) columns[i] |= std::uint64_t{1} << j;

  double total = 0.0;
  for (double v : code_llr) total += v;
  // metric(word) = sum_j (-1)^{v_j} L_j = total - 2 sum_{j in word} L_j
  std::uint64_t best_u = 0;
  double best = total;
  const std::uint64_t count = std::uint64_t{1} << code.k();
  for (std::uint64_t u = 1; u < count; ++u) {
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < code.k(); ++i)
      if ((u >> i) & 1u) word ^= columns[i];
    double metric = total;
    for (std::uint64_t w = word; w; w &= w - 1) metric -= 2.0 * code_llr[static_cast<std::size_t>(std::countr_zero(w))];
    if (metric > best) {
      best = metric;
      best_u = u;
    }
  }
  Bits out(code.k());
  for (std::size_t i = 0; i < code.k(); ++i) out[i] = static_cast<std::uint8_t>((best_u >> i) & 1u);
  return out;
}

TurboResult run_turbo(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, double sigma2, const SoftDecoder& decoder,
                      std::size_t n_iters, std::mt19937_64* rng) {
  if (n_iters == 0) throw std::invalid_argument("run_turbo: need at least one iteration");
  const auto& code = decoder.code();
  if (static_cast<std::size_t>(a.cols()) != code.n()) throw std::invalid_argument("run_turbo: code length != N");

  const Eigen::Index n = a.cols();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  double v2 = 1.0;
  DecoderContext ctx;
  ctx.rng = rng;

  TurboResult result;
  DecoderOutput dec;
  for (std::size_t it = 0; it < n_iters; ++it) {
    TurboState st;
    st.t = it + 1;
    auto lin = oamp_linear_step(y, a, p, v2, sigma2);
    st.l = lin.l;
    st.tau2 = lin.tau2;
    st.trace_wa = lin.trace_wa;

    std::vector<double> lv(lin.l.data(), lin.l.data() + n);
    dec = decoder.decode(lv, lin.tau2, ctx);
    st.ext_llr = dec.ext_llr;
    st.q_plus.resize(code.n());
    st.q_minus.resize(code.n());
    for (std::size_t j = 0; j < code.n(); ++j) {
      st.q_plus[j] = llr_to_prob_plus(dec.ext_llr[j]);
      st.q_minus[j] = 1.0 - st.q_plus[j];
    }

    const auto post = mmse_nonlinear_step(lin.l, lin.tau2, dec.ext_llr);
    st.p = post.p;
    st.v2 = post.v2;
    const auto ext = gaussian_extrinsic(post, lin.l, lin.tau2);
    st.p_ext = ext.p;
    st.v2_ext = ext.v2;
    p = ext.p;
    v2 = ext.v2;
    result.trace.push_back(std::move(st));
  }

  if (!dec.info_llr.empty()) {
    result.info_llr = dec.info_llr;
    result.info_hat.resize(code.k());
    for (std::size_t i = 0; i < code.k(); ++i) result.info_hat[i] = dec.info_llr[i] < 0.0 ? 1 : 0;
  } else {
    const auto& last = result.trace.back();
    std::vector<double> post_llr(code.n());
    for (std::size_t j = 0; j < code.n(); ++j)
      post_llr[j] = cap(2.0 * last.l(static_cast<Eigen::Index>(j)) / last.tau2 + last.ext_llr[j]);
    result.info_hat = soft_ml_info(code, post_llr);
  }
  return result;
}

}  // namespace vqctd
