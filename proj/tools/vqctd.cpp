// Command-line front end: training, BER sweeps, gate counts and single-frame traces.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "vqctd/bench.hpp"
#include "vqctd/channel.hpp"
#include "vqctd/codes.hpp"
#include "vqctd/l2l.hpp"
#include "vqctd/parallel.hpp"
#include "vqctd/qsim.hpp"
#include "vqctd/turbo.hpp"

namespace {

using namespace vqctd;
using json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TrainArgs {
  std::string kind = "l2l";
  std::string code_path;
  std::string config_path;
  std::string out_path;
  std::string log_path;
  std::optional<std::size_t> depth, time_steps, epochs, batch, layers, hidden;
  std::optional<double> lr, xi;
  std::uint64_t seed = 1;
};

void write_training_log(const std::string& path, const TrainingLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,batch_loss,holdout_loss\n";
  std::size_t h = 0;
  for (std::size_t e = 1; e <= log.epoch_loss.size(); ++e) {
    out << e << ',' << std::setprecision(10) << log.epoch_loss[e - 1] << ',';
    while (h < log.holdout.size() && log.holdout[h].first < e) ++h;
    if (h < log.holdout.size() && log.holdout[h].first == e) out << log.holdout[h].second;
    out << '\n';
  }
}

int run_train(const TrainArgs& a) {
  const auto code = load_code(a.code_path);
  std::mt19937_64 rng(a.seed);
  auto report = [](std::size_t epoch, double loss, double holdout) {
    std::cerr << "epoch " << epoch << "  batch " << loss << "  holdout " << holdout << '\n';
  };

  if (a.kind == "l2l") {
    TrainerConfig c = a.config_path.empty() ? TrainerConfig{} : parse_trainer_config(read_file(a.config_path));
    if (a.depth) c.depth = *a.depth;
    if (a.time_steps) c.time_steps = *a.time_steps;
    if (a.epochs) c.epochs = *a.epochs;
    if (a.batch) c.batch_size = *a.batch;
    if (a.layers) c.lstm_layers = *a.layers;
    if (a.lr) c.learning_rate = *a.lr;
    if (a.xi) c.xi = *a.xi;
    c.validate();
    std::cerr << "training L2L: [" << code.n() << ',' << code.k() << "] D=" << c.depth << " T=" << c.time_steps
              << " params=" << reference_lstm_param_count(c.depth, c.lstm_layers, code.s(), code.n()) << '\n';
    auto trained = train_l2l(code, c, rng, report);
    save_l2l(a.out_path, trained.model, c.time_steps);
    if (!a.log_path.empty()) write_training_log(a.log_path, trained.log);
  } else if (a.kind == "baseline") {
    BaselineConfig c = a.config_path.empty() ? BaselineConfig{} : parse_baseline_config(read_file(a.config_path));
    if (a.time_steps) c.time_steps = *a.time_steps;
    if (a.epochs) c.epochs = *a.epochs;
    if (a.batch) c.batch_size = *a.batch;
    if (a.layers) c.layers = *a.layers;
    if (a.hidden) c.hidden = *a.hidden;
    if (a.lr) c.learning_rate = *a.lr;
    if (a.xi) c.xi = *a.xi;
    auto trained = train_baseline(code, c, rng, report);
    save_baseline(a.out_path, trained.model);
    if (!a.log_path.empty()) write_training_log(a.log_path, trained.log);
  } else {
    throw std::invalid_argument("unknown network kind: " + a.kind);
  }
  std::cerr << "wrote " << a.out_path << '\n';
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
  auto config = load_sweep_config(config_path);
  if (seed) config.seed = *seed;
  const auto setup = prepare_sweep(config);
  std::cerr << "sweep: decoder " << to_string(config.decoder) << ", [" << setup.code.n() << ',' << setup.code.k()
            << "], M=" << setup.channel_m << ", threads " << worker_count() << '\n';
  const auto records = ber_sweep(config, setup, [](const BerRecord& r) {
    std::cerr << "snr " << r.snr_db << " dB  frames " << r.frames << "  bit errors " << r.bit_errors << "  ber "
              << r.ber << "  (" << r.wall_time_s << " s)\n";
  });
  if (out_path.empty() || out_path == "-") {
    write_ber_csv(std::cout, records);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    write_ber_csv(out, records);
  }
  return 0;
}

int run_gatecount(const std::string& code_path, std::size_t depth, std::size_t layers) {
  const auto code = load_code(code_path);
  // Gate structure does not depend on the soft values.
  const std::vector<double> l(code.n(), 1.0);
  const auto g = count_gates(build_cost_hamiltonian(code, l), depth);
  const auto model = L2LModel::zeros(depth, layers, code.s(), code.n());
  const auto counted = lstm_param_count(model);
  const auto formula = reference_lstm_param_count(depth, layers, code.s(), code.n());
  json j = {
      {"N", code.n()},
      {"K", code.k()},
      {"S", code.s()},
      {"depth", depth},
      {"multi_z_rotations", g.multi_z_rotations},
      {"avg_multi_z_arity", g.avg_multi_z_arity},
      {"mean_term_weight", g.mean_term_weight},
      {"rx", g.rx_count},
      {"hadamard", g.hadamard_count},
      {"trainable_circuit_params", g.trainable_params},
      {"lstm_layers", layers},
      {"lstm_params", counted},
      {"lstm_params_formula", formula},
      {"lstm_params_diff", static_cast<long long>(counted) - static_cast<long long>(formula)},
  };
  std::cout << j.dump(2) << '\n';
  return 0;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct DecodeOneArgs {
  std::string code_path;
  std::string weights_path;
  std::string decoder = "vqc-td";
  double snr_db = 4.0;
  std::uint64_t seed = 1;
  std::size_t iters = 3;
  std::size_t channel_m = 0;
  double cond = 1.0;
  std::size_t time_steps = 0;
};

int run_decode_one(const DecodeOneArgs& a) {
  SweepConfig c;
  c.snr_points = {a.snr_db};
  c.code_path = a.code_path;
  c.decoder = parse_decoder_kind(a.decoder);
  c.weights_path = a.weights_path;
  c.channel_m = a.channel_m;
  c.cond = a.cond;
  c.n_turbo_iters = a.iters;
  c.time_steps = a.time_steps;
  const auto setup = prepare_sweep(c);
  const auto& code = setup.code;

  std::mt19937_64 rng(a.seed);
  const double sigma2 = sigma2_from_snr_db(a.snr_db);
  const auto ch = build_channel(setup.channel_m, code.n(), setup.cond, sigma2, rng);
  const auto info = random_bits(code.k(), rng);
  const auto frame = transmit(ch, code, info, rng);

  json j;
  j["snr_db"] = a.snr_db;
  j["sigma2"] = sigma2;
  j["info"] = info;
  j["codeword"] = frame.codeword;
  j["y"] = vec_json(frame.y);
  if (setup.kind == DecoderKind::Ml) {
    j["info_hat"] = ml_joint_detect(frame.y, ch.a, code);
  } else {
    const auto result = run_turbo(frame.y, ch.a, sigma2, *setup.decoder, setup.n_turbo_iters, &rng);
    json iters = json::array();
    for (const auto& s : result.trace) {
      iters.push_back({{"t", s.t},
                       {"l", vec_json(s.l)},
                       {"tau2", s.tau2},
                       {"trace_wa", s.trace_wa},
                       {"ext_llr", s.ext_llr},
                       {"q_plus", s.q_plus},
                       {"p", vec_json(s.p)},
                       {"v2", s.v2}});
    }
    j["iterations"] = iters;
    j["info_llr"] = result.info_llr;
    j["info_hat"] = result.info_hat;

    if (const auto* vqc = dynamic_cast<const VqcTdDecoder*>(setup.decoder.get()); vqc && !result.trace.empty()) {
      const auto& last = result.trace.back();
      EpisodeOptions opt;
      std::size_t stored = 0;
      load_l2l(a.weights_path, 0, 0, 0, &stored);
      opt.time_steps = a.time_steps ? a.time_steps : stored;
      const std::vector<double> l(last.l.data(), last.l.data() + last.l.size());
      const auto episode = run_l2l_episode(vqc->model(), code, l, opt);
      json steps = json::array();
      for (const auto& st : episode.steps)
        steps.push_back({{"gamma", st.gamma}, {"beta", st.beta}, {"z", st.z}, {"cost", st.cost}});
      j["last_episode"] = steps;
    }
  }
  std::size_t errors = 0;
  const Bits hat = j["info_hat"].get<Bits>();
  for (std::size_t i = 0; i < info.size(); ++i) errors += hat[i] != info[i];
  j["bit_errors"] = errors;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_code_info(const std::string& path) {
  const auto code = load_code(path);
  json j = {{"N", code.n()}, {"K", code.k()}, {"S", code.s()}};
  if (code.k() <= 24) j["min_distance"] = min_distance(code);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_make_ldpc(std::size_t n, std::size_t dv, std::size_t dc, std::uint64_t seed, const std::string& out) {
  std::mt19937_64 rng(seed);
  const auto code = build_ldpc_regular(n, dv, dc, rng);
  save_code(out, code);
  std::cerr << "wrote [" << code.n() << ',' << code.k() << "] code to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational quantum turbo detection toolkit"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train an L2L angle generator or the syndrome-LSTM baseline");
  t->add_option("--kind", train.kind, "l2l or baseline")->check(CLI::IsMember({"l2l", "baseline"}));
  t->add_option("--code", train.code_path, "Code file")->required()->check(CLI::ExistingFile);
  t->add_option("--config", train.config_path, "JSON trainer config; flags override it")->check(CLI::ExistingFile);
  t->add_option("--depth", train.depth, "QAOA depth D");
  t->add_option("--time-steps", train.time_steps, "Unrolled steps T");
  t->add_option("--lr", train.lr, "Adamax learning rate");
  t->add_option("--xi", train.xi, "Loss decay factor");
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch", train.batch);
  t->add_option("--layers", train.layers, "LSTM layers");
  t->add_option("--hidden", train.hidden, "Baseline hidden size");
  t->add_option("--seed", train.seed);
  t->add_option("--out", train.out_path, "Weight file")->required();
  t->add_option("--log", train.log_path, "Training curve CSV");

  std::string sweep_config, sweep_out;
  std::optional<std::uint64_t> sweep_seed;
  auto* s = app.add_subcommand("sweep", "BER sweep from a JSON config");
  s->add_option("--config", sweep_config)->required()->check(CLI::ExistingFile);
  s->add_option("--out", sweep_out, "CSV path, - for stdout");
  s->add_option("--seed", sweep_seed, "Override the config seed");

  std::string gc_code;
  std::size_t gc_depth = 22, gc_layers = 3;
  auto* g = app.add_subcommand("gatecount", "Circuit and network size for a code");
  g->add_option("--code", gc_code)->required()->check(CLI::ExistingFile);
  g->add_option("--depth", gc_depth);
  g->add_option("--layers", gc_layers, "LSTM layers");

  DecodeOneArgs d1;
  auto* d = app.add_subcommand("decode-one", "Simulate one frame and dump the receiver trace as JSON");
  d->add_option("--code", d1.code_path)->required()->check(CLI::ExistingFile);
  d->add_option("--weights", d1.weights_path);
  d->add_option("--decoder", d1.decoder)->check(CLI::IsMember({"vqc-td", "ml", "lstm-baseline", "uncoded-oamp"}));
  d->add_option("--snr", d1.snr_db, "dB");
  d->add_option("--seed", d1.seed);
  d->add_option("--iters", d1.iters, "Turbo iterations");
  d->add_option("--m", d1.channel_m, "Receive dimension, 0 = N");
  d->add_option("--cond", d1.cond);
  d->add_option("--time-steps", d1.time_steps);

  std::string info_code;
  auto* ci = app.add_subcommand("code-info", "Dimensions and minimum distance of a code file");
  ci->add_option("--code", info_code)->required()->check(CLI::ExistingFile);

  std::size_t ld_n = 20, ld_dv = 2, ld_dc = 4;
  std::uint64_t ld_seed = 1;
  std::string ld_out;
  auto* ld = app.add_subcommand("make-ldpc", "Sample a regular LDPC code");
  ld->add_option("--n", ld_n);
  ld->add_option("--dv", ld_dv);
  ld->add_option("--dc", ld_dc);
  ld->add_option("--seed", ld_seed);
  ld->add_option("--out", ld_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*t) return run_train(train);
    if (*s) return run_sweep(sweep_config, sweep_out, sweep_seed);
    if (*g) return run_gatecount(gc_code, gc_depth, gc_layers);
    if (*d) return run_decode_one(d1);
    if (*ci) return run_code_info(info_code);
    if (*ld) return run_make_ldpc(ld_n, ld_dv, ld_dc, ld_seed, ld_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
