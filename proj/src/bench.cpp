#include "vqctd/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vqctd/channel.hpp"
#include "vqctd/errors.hpp"
#include "vqctd/parallel.hpp"

namespace vqctd {

using json = nlohmann::json;

Bits ml_joint_detect(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, const LinearCode& code) {
  if (code.k() > 24) throw UnsupportedSize("ml_joint_detect: K > 24");
  if (static_cast<std::size_t>(a.cols()) != code.n() || y.size() != a.rows())
    throw std::invalid_argument("ml_joint_detect: dimension mismatch");

  const std::uint64_t count = std::uint64_t{1} << code.k();
  Bits u(code.k());
  Eigen::VectorXd x(a.cols());
  std::uint64_t best_u = 0;
  double best = INFINITY;
  for (std::uint64_t word = 0; word < count; ++word) {
    for (std::size_t i = 0; i < code.k(); ++i) u[i] = static_cast<std::uint8_t>((word >> i) & 1u);
    const auto v = encode(code, u);
    for (std::size_t j = 0; j < v.size(); ++j) x(static_cast<Eigen::Index>(j)) = v[j] ? -1.0 : 1.0;
    const double metric = (y - a * x).squaredNorm();
    if (metric < best) {
      best = metric;
      best_u = word;
    }
  }
  for (std::size_t i = 0; i < code.k(); ++i) u[i] = static_cast<std::uint8_t>((best_u >> i) & 1u);
  return u;
}

// ---------------------------------------------------------------------------

namespace {

LstmShape baseline_shape(std::size_t checks, std::size_t n, std::size_t hidden, std::size_t layers) {
  LstmShape s;
  s.primary_dim = checks + n;
  s.side_dim = 0;
  s.hidden_dim = hidden;
  s.layers = layers;
  s.output_dim = n;
  return s;
}

// Weighted syndromes signed by the check parity (negative = unsatisfied), then |l|.
Eigen::VectorXd baseline_input(const LinearCode& code, std::span<const double> l) {
  const auto ws = weighted_syndrome(code, l);
  const auto hs = hard_syndrome(code, l);
  Eigen::VectorXd in(static_cast<Eigen::Index>(ws.size() + l.size()));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < ws.size(); ++i) in(k++) = hs[i] ? -ws[i] : ws[i];
  for (double v : l) in(k++) = std::abs(v);
  return in;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_baseline(const BaselineModel& model, const LinearCode& code) {
  if (model.checks != code.s() || model.code_length != code.n())
    throw std::invalid_argument("baseline model dimensions do not match the code");
}

}  // namespace

BaselineModel BaselineModel::zeros(std::size_t checks, std::size_t n, std::size_t hidden, std::size_t layers,
                                   std::size_t time_steps) {
  if (time_steps == 0) throw std::invalid_argument("baseline: time_steps must be >= 1");
  BaselineModel m;
  m.net = LstmStack(baseline_shape(checks, n, hidden, layers));
  m.checks = checks;
  m.code_length = n;
  m.time_steps = time_steps;
  return m;
}

BaselineModel BaselineModel::random(std::size_t checks, std::size_t n, std::size_t hidden, std::size_t layers,
                                    std::size_t time_steps, std::mt19937_64& rng) {
  auto m = zeros(checks, n, hidden, layers, time_steps);
  m.net.init_random(rng, 1.0);
  return m;
}

std::vector<double> baseline_flip_logits(const BaselineModel& model, const LinearCode& code,
                                         std::span<const double> l) {
  check_baseline(model, code);
  if (l.size() != code.n()) throw std::invalid_argument("baseline: length != N");
  const auto in = baseline_input(code, l);
  const Eigen::VectorXd none(0);
  auto state = LstmState::zeros(model.net.shape());
  Eigen::VectorXd out;
  for (std::size_t t = 0; t < model.time_steps; ++t) out = lstm_step(model.net, in, none, state);
  return {out.data(), out.data() + out.size()};
}

DecoderOutput lstm_baseline_decode(const LinearCode& code, std::span<const double> l, double tau2,
                                   const BaselineModel& model) {
  if (!(tau2 > 0.0)) throw std::invalid_argument("lstm_baseline_decode: tau2 must be positive");
  const auto logits = baseline_flip_logits(model, code, l);
  DecoderOutput out;
  out.code_llr.resize(code.n());
  out.ext_llr.resize(code.n());
  for (std::size_t j = 0; j < code.n(); ++j) {
    const double sign = l[j] < 0.0 ? -1.0 : 1.0;
    out.code_llr[j] = std::clamp(-sign * logits[j], -kLlrCap, kLlrCap);
    out.ext_llr[j] = std::clamp(out.code_llr[j] - 2.0 * l[j] / tau2, -kLlrCap, kLlrCap);
  }
  return out;
}

double baseline_loss_and_gradient(const BaselineModel& model, const LinearCode& code, std::span<const double> l,
                                  std::span<const std::uint8_t> codeword, double xi, Eigen::VectorXd* grad) {
  check_baseline(model, code);
  if (l.size() != code.n() || codeword.size() != code.n())
    throw std::invalid_argument("baseline_loss_and_gradient: length != N");
  const auto in = baseline_input(code, l);
  const Eigen::VectorXd none(0);
  const std::size_t T = model.time_steps;
  const auto n = static_cast<Eigen::Index>(code.n());

  Eigen::VectorXd flip(n);
  for (Eigen::Index j = 0; j < n; ++j)
    flip(j) = (hard_bit(l[static_cast<std::size_t>(j)]) != codeword[static_cast<std::size_t>(j)]) ? 1.0 : 0.0;

  std::vector<LstmStepCache> caches(T);
  std::vector<Eigen::VectorXd> outs(T);
  auto state = LstmState::zeros(model.net.shape());
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    outs[t] = lstm_step(model.net, in, none, state, grad ? &caches[t] : nullptr);
    const double w = std::pow(xi, static_cast<double>(T - 1 - t));
    for (Eigen::Index j = 0; j < n; ++j) loss += w * (softplus(outs[t](j)) - flip(j) * outs[t](j));
  }
  if (grad) {
    auto carry = LstmStateGrad::zeros(model.net.shape());
    for (std::size_t t = T; t-- > 0;) {
      const double w = std::pow(xi, static_cast<double>(T - 1 - t));
      Eigen::VectorXd d_out(n);
      for (Eigen::Index j = 0; j < n; ++j) d_out(j) = w * (sigmoid(outs[t](j)) - flip(j));
      lstm_step_backward(model.net, caches[t], d_out, carry, *grad, nullptr, nullptr);
    }
  }
  return loss;
}

TrainedBaseline train_baseline(const LinearCode& code, const BaselineConfig& config, std::mt19937_64& rng,
                               const EpochCallback& on_log) {
  if (config.batch_size == 0) throw std::invalid_argument("baseline: batch_size must be >= 1");
  if (!(config.xi > 0.0 && config.xi <= 1.0)) throw std::invalid_argument("baseline: xi must be in (0, 1]");
  TrainedBaseline out{BaselineModel::random(code.s(), code.n(), config.hidden, config.layers, config.time_steps, rng),
                      {}};
  auto& model = out.model;

  std::vector<DecoderSample> holdout;
  for (std::size_t i = 0; i < config.holdout_size; ++i)
    holdout.push_back(draw_decoder_sample(code, config.snr_min_db, config.snr_max_db, rng));
  auto holdout_loss = [&] {
    if (holdout.empty()) return 0.0;
    std::vector<double> losses(holdout.size());
    parallel_for(holdout.size(), [&](std::size_t i) {
      losses[i] = baseline_loss_and_gradient(model, code, holdout[i].l, holdout[i].codeword, config.xi, nullptr);
    });
    double acc = 0.0;
    for (double v : losses) acc += v;
    return acc / static_cast<double>(holdout.size());
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
      losses[b] = baseline_loss_and_gradient(model, code, batch[b].l, batch[b].codeword, config.xi, &grads[b]);
    });
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(psize);
    double loss = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      grad += grads[b];
      loss += losses[b];
    }
    grad /= static_cast<double>(config.batch_size);
    loss /= static_cast<double>(config.batch_size);
    if (!std::isfinite(loss) || !grad.allFinite())
      throw NumericalError("train_baseline: non-finite loss at epoch " + std::to_string(epoch));
    clip_global_norm(grad, config.grad_clip);
    opt.step(model.net.parameters(), grad);
    out.log.epoch_loss.push_back(loss);
    const bool log_now = config.log_every > 0 && (epoch % config.log_every == 0 || epoch == config.epochs);
    if (log_now && !holdout.empty()) {
      const double h = holdout_loss();
      out.log.holdout.emplace_back(epoch, h);
      if (on_log) on_log(epoch, loss, h);
    }
  }
  return out;
}

void save_baseline(const std::string& path, const BaselineModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file: " + path);
  WeightFileHeader h;
  h.kind = static_cast<std::uint32_t>(NetworkKind::SyndromeBaseline);
  h.shape = model.net.shape();
  h.checks = model.checks;
  h.code_length = model.code_length;
  h.time_steps = model.time_steps;
  write_weights(out, h, model.net.parameters());
}

BaselineModel load_baseline(const std::string& path, std::size_t expect_checks, std::size_t expect_code_length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  auto [h, params] = read_weights(in);
  if (h.kind != static_cast<std::uint32_t>(NetworkKind::SyndromeBaseline))
    throw FormatError("weight file is not a syndrome-LSTM baseline");
  if ((expect_checks && h.checks != expect_checks) || (expect_code_length && h.code_length != expect_code_length))
    throw FormatError("weight file dimensions do not match the code");
  auto model = BaselineModel::zeros(h.checks, h.code_length, h.shape.hidden_dim, h.shape.layers, h.time_steps);
  if (!(model.net.shape() == h.shape)) throw FormatError("weight file shape is inconsistent with its header");
  model.net.parameters() = std::move(params);
  return model;
}

LstmBaselineDecoder::LstmBaselineDecoder(LinearCode code, BaselineModel model)
    : code_(std::move(code)), model_(std::move(model)) {
  check_baseline(model_, code_);
}

DecoderOutput LstmBaselineDecoder::decode(std::span<const double> l, double tau2, DecoderContext&) const {
  return lstm_baseline_decode(code_, l, tau2, model_);
}

// ---------------------------------------------------------------------------

DecoderKind parse_decoder_kind(const std::string& name) {
  if (name == "vqc-td") return DecoderKind::VqcTd;
  if (name == "ml") return DecoderKind::Ml;
  if (name == "lstm-baseline") return DecoderKind::LstmBaseline;
  if (name == "uncoded-oamp") return DecoderKind::UncodedOamp;
  throw std::invalid_argument("unknown decoder: " + name);
}

std::string to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::VqcTd: return "vqc-td";
    case DecoderKind::Ml: return "ml";
    case DecoderKind::LstmBaseline: return "lstm-baseline";
    case DecoderKind::UncodedOamp: return "uncoded-oamp";
  }
  return "?";
}

void SweepConfig::validate() const {
  if (snr_points.empty()) throw std::invalid_argument("sweep: snr_points must be nonempty");
  for (std::size_t i = 1; i < snr_points.size(); ++i)
    if (!(snr_points[i] > snr_points[i - 1])) throw std::invalid_argument("sweep: snr_points must be strictly increasing");
  if (min_frames == 0) throw std::invalid_argument("sweep: min_frames must be >= 1");
  if (max_frames < min_frames) throw std::invalid_argument("sweep: max_frames < min_frames");
  if (batch_frames == 0) throw std::invalid_argument("sweep: batch_frames must be >= 1");
  if (n_turbo_iters == 0) throw std::invalid_argument("sweep: n_turbo_iters must be >= 1");
  if (cond < 1.0) throw std::invalid_argument("sweep: cond must be >= 1");
  if (code_path.empty() && decoder != DecoderKind::UncodedOamp) throw std::invalid_argument("sweep: code path missing");
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw FormatError(std::string(what) + ": unknown key '" + key + "'");
}

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

SweepConfig parse_sweep_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("sweep config: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"snr_points", "min_frames", "min_bit_errors", "max_frames", "batch_frames", "seed", "code",
                       "channel_m", "cond", "decoder", "weights", "n_turbo_iters", "time_steps", "init_angle",
                       "persist_angles", "shots", "record_wall_time"},
                      "sweep config");
  SweepConfig c;
  try {
    read_key(j, "snr_points", c.snr_points);
    read_key(j, "min_frames", c.min_frames);
    read_key(j, "min_bit_errors", c.min_bit_errors);
    read_key(j, "max_frames", c.max_frames);
    read_key(j, "batch_frames", c.batch_frames);
    read_key(j, "seed", c.seed);
    read_key(j, "code", c.code_path);
    read_key(j, "channel_m", c.channel_m);
    read_key(j, "cond", c.cond);
    if (j.contains("decoder")) c.decoder = parse_decoder_kind(j.at("decoder").get<std::string>());
    read_key(j, "weights", c.weights_path);
    read_key(j, "n_turbo_iters", c.n_turbo_iters);
    read_key(j, "time_steps", c.time_steps);
    read_key(j, "init_angle", c.init_angle);
    read_key(j, "persist_angles", c.persist_angles);
    read_key(j, "shots", c.shots);
    read_key(j, "record_wall_time", c.record_wall_time);
  } catch (const json::exception& e) {
    throw FormatError(std::string("sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SweepConfig load_sweep_config(const std::string& path) {
  auto c = parse_sweep_config(slurp(path));
  // Relative paths inside a config resolve against the config's directory.
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&base](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative() && !std::filesystem::exists(p)) p = (base / p).string();
  };
  resolve(c.code_path);
  resolve(c.weights_path);
  return c;
}

TrainerConfig parse_trainer_config(const std::string& text) {
  json j = json::parse(text);
  reject_unknown_keys(j,
                      {"xi", "learning_rate", "time_steps", "depth", "lstm_layers", "batch_size", "epochs",
                       "snr_min_db", "snr_max_db", "holdout_size", "log_every", "grad_clip", "init_angle",
                       "init_gamma_max", "init_beta_max", "increments", "zero_init"},
                      "trainer config");
  TrainerConfig c;
  read_key(j, "xi", c.xi);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "time_steps", c.time_steps);
  read_key(j, "depth", c.depth);
  read_key(j, "lstm_layers", c.lstm_layers);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "epochs", c.epochs);
  read_key(j, "snr_min_db", c.snr_min_db);
  read_key(j, "snr_max_db", c.snr_max_db);
  read_key(j, "holdout_size", c.holdout_size);
  read_key(j, "log_every", c.log_every);
  read_key(j, "grad_clip", c.grad_clip);
  read_key(j, "init_angle", c.init_angle);
  read_key(j, "init_gamma_max", c.init_gamma_max);
  read_key(j, "init_beta_max", c.init_beta_max);
  read_key(j, "increments", c.increments);
  read_key(j, "zero_init", c.zero_init);
  c.validate();
  return c;
}

BaselineConfig parse_baseline_config(const std::string& text) {
  json j = json::parse(text);
  reject_unknown_keys(j,
                      {"hidden", "layers", "time_steps", "xi", "learning_rate", "batch_size", "epochs", "snr_min_db",
                       "snr_max_db", "holdout_size", "log_every", "grad_clip"},
                      "baseline config");
  BaselineConfig c;
  read_key(j, "hidden", c.hidden);
  read_key(j, "layers", c.layers);
  read_key(j, "time_steps", c.time_steps);
  read_key(j, "xi", c.xi);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "epochs", c.epochs);
  read_key(j, "snr_min_db", c.snr_min_db);
  read_key(j, "snr_max_db", c.snr_max_db);
  read_key(j, "holdout_size", c.holdout_size);
  read_key(j, "log_every", c.log_every);
  read_key(j, "grad_clip", c.grad_clip);
  return c;
}

SweepSetup prepare_sweep(const SweepConfig& config) {
  config.validate();
  SweepSetup s;
  s.kind = config.decoder;
  s.cond = config.cond;
  s.n_turbo_iters = config.n_turbo_iters;

  std::optional<LinearCode> code;
  if (!config.code_path.empty()) code = load_code(config.code_path);

  switch (config.decoder) {
    case DecoderKind::Ml:
      s.code = *code;
      break;
    case DecoderKind::UncodedOamp: {
      const std::size_t n = code ? code->n() : config.channel_m;
      if (n == 0) throw std::invalid_argument("sweep: uncoded-oamp needs a code file or channel_m");
      s.code = LinearCode::identity(n);
      s.decoder = std::make_shared<NullDecoder>(s.code);
      break;
    }
    case DecoderKind::VqcTd: {
      if (config.weights_path.empty() || !std::filesystem::exists(config.weights_path))
        throw std::runtime_error("sweep: weights file not found: " + config.weights_path);
      std::size_t stored_steps = 0;
      auto model = load_l2l(config.weights_path, 0, code->s(), code->n(), &stored_steps);
      VqcDecoderOptions opt;
      opt.time_steps = config.time_steps ? config.time_steps : stored_steps;
      if (opt.time_steps == 0) throw std::invalid_argument("sweep: VQC-TD time steps unknown");
      opt.init_angle = config.init_angle;
      opt.persist_angles = config.persist_angles;
      opt.shots = config.shots;
      s.code = *code;
      s.decoder = std::make_shared<VqcTdDecoder>(*code, std::move(model), opt);
      break;
    }
    case DecoderKind::LstmBaseline: {
      if (config.weights_path.empty() || !std::filesystem::exists(config.weights_path))
        throw std::runtime_error("sweep: weights file not found: " + config.weights_path);
      auto model = load_baseline(config.weights_path, code->s(), code->n());
      s.code = *code;
      s.decoder = std::make_shared<LstmBaselineDecoder>(*code, std::move(model));
      break;
    }
  }
  s.channel_m = config.channel_m ? config.channel_m : s.code.n();
  return s;
}

std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t snr_index, std::size_t frame_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(snr_index), static_cast<std::uint32_t>(frame_index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(frame_index) >> 32)};
  return std::mt19937_64(seq);
}

FrameOutcome simulate_frame(const SweepSetup& setup, double sigma2, std::mt19937_64& rng) {
  const auto& code = setup.code;
  const auto ch = build_channel(setup.channel_m, code.n(), setup.cond, sigma2, rng);
  const auto info = random_bits(code.k(), rng);
  const auto frame = transmit(ch, code, info, rng);

  Bits decided;
  if (setup.kind == DecoderKind::Ml) {
    decided = ml_joint_detect(frame.y, ch.a, code);
  } else {
    decided = run_turbo(frame.y, ch.a, sigma2, *setup.decoder, setup.n_turbo_iters, &rng).info_hat;
  }
  FrameOutcome out;
  out.bits = code.k();
  for (std::size_t i = 0; i < code.k(); ++i) out.bit_errors += decided[i] != info[i];
  out.frame_error = out.bit_errors > 0;
  return out;
}

std::vector<BerRecord> ber_sweep(const SweepConfig& config, const SweepSetup& setup, const SweepProgress& progress) {
  config.validate();
  if (setup.kind != DecoderKind::Ml && !setup.decoder) throw std::invalid_argument("sweep: decoder missing");
  std::vector<BerRecord> records;
  for (std::size_t si = 0; si < config.snr_points.size(); ++si) {
    const auto start = std::chrono::steady_clock::now();
    BerRecord rec;
    rec.snr_db = config.snr_points[si];
    const double sigma2 = sigma2_from_snr_db(rec.snr_db);

    std::vector<FrameOutcome> batch;
    while (true) {
      const std::size_t todo = std::min(config.batch_frames, config.max_frames - rec.frames);
      batch.assign(todo, {});
      const std::size_t first = rec.frames;
      parallel_for(todo, [&](std::size_t i) {
        auto rng = frame_rng(config.seed, si, first + i);
        batch[i] = simulate_frame(setup, sigma2, rng);
      });
      for (const auto& o : batch) {
        rec.frames += 1;
        rec.bit_errors += o.bit_errors;
        rec.frame_errors += o.frame_error ? 1 : 0;
      }
      if (rec.frames >= config.max_frames) break;
      if (rec.frames >= config.min_frames && rec.bit_errors >= config.min_bit_errors) break;
    }
    rec.ber = static_cast<double>(rec.bit_errors) / static_cast<double>(rec.frames * setup.code.k());
    rec.fer = static_cast<double>(rec.frame_errors) / static_cast<double>(rec.frames);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.wall_time_s = config.record_wall_time ? elapsed : 0.0;
    records.push_back(rec);
    if (progress) {
      BerRecord shown = rec;
      shown.wall_time_s = elapsed;
      progress(shown);
    }
  }
  return records;
}

std::vector<BerRecord> ber_sweep(const SweepConfig& config, const SweepProgress& progress) {
  const auto setup = prepare_sweep(config);
  return ber_sweep(config, setup, progress);
}

void write_ber_csv(std::ostream& out, std::span<const BerRecord> records) {
  out << kBerCsvHeader << '\n';
  for (const auto& r : records) {
    std::ostringstream line;
    line << std::setprecision(10) << r.snr_db << ',' << r.frames << ',' << r.bit_errors << ',' << r.ber << ','
         << r.frame_errors << ',' << r.fer << ',' << std::setprecision(6) << r.wall_time_s;
    out << line.str() << '\n';
  }
}

double bpsk_awgn_ber(double sigma2) { return 0.5 * std::erfc(1.0 / std::sqrt(2.0 * sigma2)); }

double bpsk_awgn_snr_for_ber(double ber) {
  if (!(ber > 0.0 && ber < 0.5)) throw std::invalid_argument("bpsk_awgn_snr_for_ber: ber must be in (0, 0.5)");
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bpsk_awgn_ber(sigma2_from_snr_db(mid)) > ber)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace vqctd
