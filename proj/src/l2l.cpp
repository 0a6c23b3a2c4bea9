#include "vqctd/l2l.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vqctd/channel.hpp"
#include "vqctd/errors.hpp"
#include "vqctd/parallel.hpp"

namespace vqctd {

LstmShape L2LModel::shape_for(std::size_t depth, std::size_t layers, std::size_t checks, std::size_t code_length) {
  if (depth == 0) throw std::invalid_argument("L2LModel: depth must be >= 1");
  LstmShape s;
  s.primary_dim = 2 * depth;
  s.side_dim = 1 + checks + code_length;
  s.hidden_dim = 2 * depth;
  s.layers = layers;
  s.output_dim = 2 * depth;
  return s;
}

L2LModel L2LModel::zeros(std::size_t depth, std::size_t layers, std::size_t checks, std::size_t code_length) {
  L2LModel m;
  m.net = LstmStack(shape_for(depth, layers, checks, code_length));
  m.depth = depth;
  m.checks = checks;
  m.code_length = code_length;
  return m;
}

L2LModel L2LModel::random(std::size_t depth, std::size_t layers, std::size_t checks, std::size_t code_length,
                          std::mt19937_64& rng, double gamma_max, double beta_max) {
  auto m = zeros(depth, layers, checks, code_length);
  m.net.init_random(rng, 0.1);
  auto bias = m.net.output_bias_mut();
  const double dd = static_cast<double>(depth);
  for (std::size_t d = 0; d < depth; ++d) {
    const double frac = (static_cast<double>(d) + 0.5) / dd;
    bias(static_cast<Eigen::Index>(d)) = gamma_max * frac;
    bias(static_cast<Eigen::Index>(depth + d)) = beta_max * (1.0 - frac);
  }
  return m;
}

EpisodeFeatures episode_features(const LinearCode& code, std::span<const double> l) {
  if (l.size() != code.n()) throw std::invalid_argument("episode_features: length != N");
  double max_abs = 0.0, sum_abs = 0.0;
  for (double v : l) {
    if (!std::isfinite(v)) throw std::invalid_argument("episode_features: non-finite channel value");
    max_abs = std::max(max_abs, std::abs(v));
    sum_abs += std::abs(v);
  }
  if (max_abs == 0.0) throw DegenerateInput("episode_features: max|l| = 0, no channel information");
  EpisodeFeatures f;
  f.weighted_syndromes = weighted_syndrome(code, l);
  f.abs_l.resize(l.size());
  for (std::size_t j = 0; j < l.size(); ++j) f.abs_l[j] = std::abs(l[j]) / max_abs;
  f.cost_scale = sum_abs;
  return f;
}

namespace {

Eigen::VectorXd primary_vector(std::span<const double> gamma, std::span<const double> beta) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(gamma.size() + beta.size()));
  for (std::size_t d = 0; d < gamma.size(); ++d) p(static_cast<Eigen::Index>(d)) = gamma[d];
  for (std::size_t d = 0; d < beta.size(); ++d) p(static_cast<Eigen::Index>(gamma.size() + d)) = beta[d];
  return p;
}

Eigen::VectorXd side_vector(double scaled_cost, std::span<const double> syndromes, std::span<const double> abs_l) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(1 + syndromes.size() + abs_l.size()));
  Eigen::Index k = 0;
  s(k++) = scaled_cost;
  for (double v : syndromes) s(k++) = v;
  for (double v : abs_l) s(k++) = v;
  return s;
}

AnglePair split_output(const L2LModel& model, const Eigen::VectorXd& out, std::span<const double> prev_gamma,
                       std::span<const double> prev_beta) {
  AnglePair a;
  a.gamma.resize(model.depth);
  a.beta.resize(model.depth);
  for (std::size_t d = 0; d < model.depth; ++d) {
    a.gamma[d] = out(static_cast<Eigen::Index>(d));
    a.beta[d] = out(static_cast<Eigen::Index>(model.depth + d));
    if (model.increments) {
      a.gamma[d] += prev_gamma[d];
      a.beta[d] += prev_beta[d];
    }
  }
  return a;
}

AnglePair initial_angles(std::size_t depth, double init_angle, const AnglePair* warm_start) {
  if (warm_start) {
    if (warm_start->gamma.size() != depth || warm_start->beta.size() != depth)
      throw std::invalid_argument("warm start angles have the wrong depth");
    return *warm_start;
  }
  return {std::vector<double>(depth, init_angle), std::vector<double>(depth, init_angle)};
}

void check_model(const L2LModel& model, const LinearCode& code) {
  if (model.checks != code.s() || model.code_length != code.n())
    throw std::invalid_argument("L2L model dimensions do not match the code");
}

}  // namespace

AnglePair lstm_forward(const L2LModel& model, const L2LInput& input, double cost_scale, LstmState& state,
                       LstmStepCache* cache) {
  if (input.gamma.size() != model.depth || input.beta.size() != model.depth ||
      input.weighted_syndromes.size() != model.checks || input.abs_l.size() != model.code_length)
    throw std::invalid_argument("lstm_forward: input dimensions do not match the model");
  if (!(cost_scale > 0.0)) throw std::invalid_argument("lstm_forward: cost scale must be positive");
  const auto out = lstm_step(model.net, primary_vector(input.gamma, input.beta),
                             side_vector(input.cost / cost_scale, input.weighted_syndromes, input.abs_l), state, cache);
  return split_output(model, out, input.gamma, input.beta);
}

EpisodeTrace run_l2l_episode(const L2LModel& model, const LinearCode& code, std::span<const double> l,
                             const EpisodeOptions& options) {
  check_model(model, code);
  if (options.time_steps == 0) throw std::invalid_argument("run_l2l_episode: T must be >= 1");
  if (options.shots > 0 && options.shot_rng == nullptr)
    throw std::invalid_argument("run_l2l_episode: shot sampling needs an rng");
  const auto feats = episode_features(code, l);
  const auto energies = build_cost_hamiltonian(code, l).diagonal();

  L2LInput in;
  auto init = initial_angles(model.depth, options.init_angle, options.warm_start);
  in.gamma = std::move(init.gamma);
  in.beta = std::move(init.beta);
  in.cost = 0.0;
  in.weighted_syndromes = feats.weighted_syndromes;
  in.abs_l = feats.abs_l;

  auto state = LstmState::zeros(model.net.shape());
  EpisodeTrace trace;
  for (std::size_t t = 0; t < options.time_steps; ++t) {
    auto angles = lstm_forward(model, in, feats.cost_scale, state);
    const QaoaParams params{angles.gamma, angles.beta};
    const auto psi = apply_qaoa(energies, code.k(), params);

    EpisodeStep step;
    if (options.shots > 0) {
      auto sampled = sample_expectations(psi, energies, options.shots, *options.shot_rng);
      step.z = std::move(sampled.z);
      step.cost = sampled.cost;
    } else {
      step.z = expect_z(psi);
      step.cost = expect_diagonal(psi, energies);
    }
    step.gamma = angles.gamma;
    step.beta = angles.beta;

    in.gamma = std::move(angles.gamma);
    in.beta = std::move(angles.beta);
    in.cost = step.cost;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

namespace {

void check_trace(const EpisodeTrace& trace, std::span<const std::uint8_t> info, double xi) {
  if (trace.steps.empty()) throw std::invalid_argument("episode_loss: empty trace");
  if (!(xi > 0.0 && xi <= 1.0)) throw std::invalid_argument("episode_loss: xi must be in (0, 1]");
  for (const auto& s : trace.steps) {
    if (s.z.size() != info.size()) throw std::invalid_argument("episode_loss: info length != K");
    for (double z : s.z)
      if (!(z >= -1.0 && z <= 1.0)) throw std::invalid_argument("episode_loss: <Z> outside [-1, 1]");
  }
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double episode_loss(const EpisodeTrace& trace, std::span<const std::uint8_t> info, double xi) {
  check_trace(trace, info, xi);
  const std::size_t T = trace.steps.size();
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double w = std::pow(xi, static_cast<double>(T - 1 - t));
    double step = 0.0;
    for (std::size_t j = 0; j < info.size(); ++j) {
      const double z = trace.steps[t].z[j];
      const double p = info[j] ? clamp_prob(0.5 * (1.0 - z)) : clamp_prob(0.5 * (1.0 + z));
      step -= std::log(p);
    }
    loss += w * step;
  }
  return loss;
}

std::vector<std::vector<double>> episode_loss_z_gradient(const EpisodeTrace& trace, std::span<const std::uint8_t> info,
                                                         double xi) {
  check_trace(trace, info, xi);
  const std::size_t T = trace.steps.size();
  std::vector<std::vector<double>> g(T, std::vector<double>(info.size(), 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    const double w = std::pow(xi, static_cast<double>(T - 1 - t));
    for (std::size_t j = 0; j < info.size(); ++j) {
      const double z = trace.steps[t].z[j];
      if (info[j]) {
        const double p = 0.5 * (1.0 - z);
        if (p > kProbClamp && p < 1.0 - kProbClamp) g[t][j] = w / (2.0 * p);
      } else {
        const double p = 0.5 * (1.0 + z);
        if (p > kProbClamp && p < 1.0 - kProbClamp) g[t][j] = -w / (2.0 * p);
      }
    }
  }
  return g;
}

double episode_loss_and_gradient(const L2LModel& model, const LinearCode& code, std::span<const double> l,
                                 std::span<const std::uint8_t> info, double xi, std::size_t time_steps,
                                 Eigen::VectorXd& grad, double init_angle) {
  check_model(model, code);
  if (time_steps == 0) throw std::invalid_argument("T must be >= 1");
  if (static_cast<std::size_t>(grad.size()) != model.net.parameter_count())
    throw std::invalid_argument("gradient buffer has the wrong size");
  const auto feats = episode_features(code, l);
  const auto energies = build_cost_hamiltonian(code, l).diagonal();
  const std::size_t D = model.depth;
  const std::size_t K = code.k();

  std::vector<LstmStepCache> caches(time_steps);
  std::vector<QaoaParams> params(time_steps);
  std::vector<Statevector> states;
  states.reserve(time_steps);
  EpisodeTrace trace;

  L2LInput in;
  in.gamma.assign(D, init_angle);
  in.beta.assign(D, init_angle);
  in.weighted_syndromes = feats.weighted_syndromes;
  in.abs_l = feats.abs_l;
  auto state = LstmState::zeros(model.net.shape());
  for (std::size_t t = 0; t < time_steps; ++t) {
    auto angles = lstm_forward(model, in, feats.cost_scale, state, &caches[t]);
    params[t] = QaoaParams{angles.gamma, angles.beta};
    states.push_back(apply_qaoa(energies, K, params[t]));
    EpisodeStep step;
    step.z = expect_z(states.back());
    step.cost = expect_diagonal(states.back(), energies);
    in.gamma = angles.gamma;
    in.beta = angles.beta;
    in.cost = step.cost;
    trace.steps.push_back(std::move(step));
  }

  const double loss = episode_loss(trace, info, xi);
  const auto dz = episode_loss_z_gradient(trace, info, xi);

  auto carry = LstmStateGrad::zeros(model.net.shape());
  std::vector<double> d_gamma_next(D, 0.0), d_beta_next(D, 0.0);
  double d_cost_next = 0.0;
  Eigen::VectorXd d_primary, d_side;
  Eigen::VectorXd d_out(static_cast<Eigen::Index>(2 * D));
  for (std::size_t t = time_steps; t-- > 0;) {
    const auto g = qaoa_vjp(energies, params[t], states[t], dz[t], d_cost_next);
    for (std::size_t d = 0; d < D; ++d) {
      d_out(static_cast<Eigen::Index>(d)) = g.gamma[d] + d_gamma_next[d];
      d_out(static_cast<Eigen::Index>(D + d)) = g.beta[d] + d_beta_next[d];
    }
    lstm_step_backward(model.net, caches[t], d_out, carry, grad, &d_primary, &d_side);
    for (std::size_t d = 0; d < D; ++d) {
      d_gamma_next[d] = d_primary(static_cast<Eigen::Index>(d));
      d_beta_next[d] = d_primary(static_cast<Eigen::Index>(D + d));
      if (model.increments) {
        d_gamma_next[d] += d_out(static_cast<Eigen::Index>(d));
        d_beta_next[d] += d_out(static_cast<Eigen::Index>(D + d));
      }
    }
    d_cost_next = d_side(0) / feats.cost_scale;
  }
  return loss;
}

void TrainerConfig::validate() const {
  if (!(xi > 0.0 && xi <= 1.0)) throw std::invalid_argument("trainer: xi must be in (0, 1]");
  if (time_steps == 0) throw std::invalid_argument("trainer: time_steps must be >= 1");
  if (depth == 0) throw std::invalid_argument("trainer: depth must be >= 1");
  if (lstm_layers == 0) throw std::invalid_argument("trainer: lstm_layers must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("trainer: batch_size must be >= 1");
  if (learning_rate < 0.0) throw std::invalid_argument("trainer: learning_rate must be >= 0");
  if (snr_min_db > snr_max_db) throw std::invalid_argument("trainer: snr range is empty");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("trainer: grad_clip must be positive");
}

DecoderSample draw_decoder_sample(const LinearCode& code, double snr_min_db, double snr_max_db, std::mt19937_64& rng) {
  DecoderSample s;
  std::uniform_real_distribution<double> snr(snr_min_db, snr_max_db);
  const double snr_db = snr_min_db == snr_max_db ? snr_min_db : snr(rng);
  s.sigma2 = sigma2_from_snr_db(snr_db);
  s.info = random_bits(code.k(), rng);
  s.codeword = encode(code, s.info);
  const auto x = bpsk(s.codeword);
  std::normal_distribution<double> gauss(0.0, std::sqrt(s.sigma2));
  s.l.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) s.l[j] = x[j] + gauss(rng);
  return s;
}

double mean_holdout_loss(const L2LModel& model, const LinearCode& code, std::span<const DecoderSample> holdout,
                         double xi, std::size_t time_steps, double init_angle) {
  if (holdout.empty()) return 0.0;
  std::vector<double> losses(holdout.size());
  EpisodeOptions opt;
  opt.time_steps = time_steps;
  opt.init_angle = init_angle;
  parallel_for(holdout.size(), [&](std::size_t i) {
    const auto trace = run_l2l_episode(model, code, holdout[i].l, opt);
    losses[i] = episode_loss(trace, holdout[i].info, xi);
  });
  double acc = 0.0;
  for (double v : losses) acc += v;
  return acc / static_cast<double>(holdout.size());
}

TrainedL2L train_l2l(const LinearCode& code, const TrainerConfig& config, std::mt19937_64& rng,
                     const EpochCallback& on_log) {
  config.validate();
  L2LModel initial = config.zero_init
                         ? L2LModel::zeros(config.depth, config.lstm_layers, code.s(), code.n())
                         : L2LModel::random(config.depth, config.lstm_layers, code.s(), code.n(), rng,
                                            config.init_gamma_max, config.init_beta_max);
  initial.increments = config.increments;
  return train_l2l(code, config, std::move(initial), rng, on_log);
}

TrainedL2L train_l2l(const LinearCode& code, const TrainerConfig& config, L2LModel initial, std::mt19937_64& rng,
                     const EpochCallback& on_log) {
  config.validate();
  check_model(initial, code);
  if (initial.depth != config.depth) throw std::invalid_argument("train_l2l: model depth != config depth");

  TrainedL2L out{std::move(initial), {}};
  auto& model = out.model;

  std::vector<DecoderSample> holdout;
  for (std::size_t i = 0; i < config.holdout_size; ++i)
    holdout.push_back(draw_decoder_sample(code, config.snr_min_db, config.snr_max_db, rng));
  auto holdout_loss = [&] {
    return mean_holdout_loss(model, code, holdout, config.xi, config.time_steps, config.init_angle);
  };
  if (!holdout.empty()) out.log.holdout.emplace_back(0, holdout_loss());

  Adamax opt(model.net.parameter_count(), config.learning_rate);
  const auto psize = static_cast<Eigen::Index>(model.net.parameter_count());
  std::vector<Eigen::VectorXd> grads(config.batch_size);
  std::vector<double> losses(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<DecoderSample> batch;
    for (std::size_t b = 0; b < config.batch_size; ++b)
      batch.push_back(draw_decoder_sample(code, config.snr_min_db, config.snr_max_db, rng));

    parallel_for(config.batch_size, [&](std::size_t b) {
      grads[b] = Eigen::VectorXd::Zero(psize);
      losses[b] = episode_loss_and_gradient(model, code, batch[b].l, batch[b].info, config.xi, config.time_steps,
                                            grads[b], config.init_angle);
    });

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(psize);
    double loss = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      grad += grads[b];
      loss += losses[b];
    }
    const double inv = 1.0 / static_cast<double>(config.batch_size);
    grad *= inv;
    loss *= inv;
    if (!std::isfinite(loss) || !grad.allFinite()) {
      std::ostringstream msg;
      msg << "train_l2l: non-finite loss/gradient at epoch " << epoch << " (loss " << loss << ", learning rate "
          << config.learning_rate << ", probability clamp " << kProbClamp << ", gradient clip " << config.grad_clip
          << ")";
      throw NumericalError(msg.str());
    }
    clip_global_norm(grad, config.grad_clip);
    opt.step(model.net.parameters(), grad);
    out.log.epoch_loss.push_back(loss);

    const bool log_now = config.log_every > 0 && (epoch % config.log_every == 0 || epoch == config.epochs);
    if ((log_now || epoch == 1) && !holdout.empty()) {
      const double h = holdout_loss();
      out.log.holdout.emplace_back(epoch, h);
      if (on_log) on_log(epoch, loss, h);
    }
  }
  return out;
}

std::size_t lstm_param_count(const L2LModel& model) { return model.net.parameter_count(); }

std::size_t reference_lstm_param_count(std::size_t D, std::size_t L, std::size_t S, std::size_t N) {
  return 4 * L * (8 * D * D + 2 * D * S + 2 * D * N + 4 * D) + 4 * D * D + 2 * D;
}

void save_l2l(const std::string& path, const L2LModel& model, std::size_t time_steps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file: " + path);
  WeightFileHeader h;
  h.kind = static_cast<std::uint32_t>(NetworkKind::L2L);
  h.shape = model.net.shape();
  h.depth = model.depth;
  h.checks = model.checks;
  h.code_length = model.code_length;
  h.time_steps = time_steps;
  h.flags = model.increments ? 1 : 0;
  write_weights(out, h, model.net.parameters());
}

L2LModel load_l2l(const std::string& path, std::size_t expect_depth, std::size_t expect_checks,
                  std::size_t expect_code_length, std::size_t* time_steps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  auto [h, params] = read_weights(in);
  if (h.kind != static_cast<std::uint32_t>(NetworkKind::L2L)) throw FormatError("weight file is not an L2L network");
  if ((expect_depth && h.depth != expect_depth) || (expect_checks && h.checks != expect_checks) ||
      (expect_code_length && h.code_length != expect_code_length))
    throw FormatError("weight file dimensions do not match the requested code/depth");
  auto model = L2LModel::zeros(h.depth, h.shape.layers, h.checks, h.code_length);
  if (!(model.net.shape() == h.shape)) throw FormatError("weight file shape is inconsistent with its header");
  model.net.parameters() = std::move(params);
  model.increments = (h.flags & 1) != 0;
  if (time_steps) *time_steps = h.time_steps;
  return model;
}

}  // namespace vqctd
