#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "vqctd/bench.hpp"
#include "vqctd/channel.hpp"
#include "vqctd/errors.hpp"

using namespace vqctd;

namespace {

const std::string kDataDir = VQCTD_DATA_DIR;

std::string csv_of(const std::vector<BerRecord>& records) {
  std::ostringstream ss;
  write_ber_csv(ss, records);
  return ss.str();
}

}  // namespace

TEST_CASE("ML detection is exact without noise") {
  const auto code = load_code(kDataDir + "/codes/bklc_20_11.code");
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ch = build_channel(20, 20, 1.0, 0.1, rng);
    const auto info = random_bits(11, rng);
    const auto frame = transmit(ch, code, info, rng, true);
    CHECK(ml_joint_detect(frame.y, ch.a, code) == info);
  }
  const auto ch = build_channel(19, 20, 3.0, 0.1, rng);
  const auto info = random_bits(11, rng);
  CHECK(ml_joint_detect(transmit(ch, code, info, rng, true).y, ch.a, code) == info);
}

TEST_CASE("ML ties go to the smallest info word") {
  // A = 0 makes every word equally likely.
  const auto code = load_code(kDataDir + "/codes/toy_4_2.code");
  CHECK(ml_joint_detect(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Zero(4, 4), code) == Bits{0, 0});
  CHECK_THROWS_AS(ml_joint_detect(Eigen::VectorXd::Zero(30), Eigen::MatrixXd::Zero(30, 30), LinearCode::identity(30)),
                  UnsupportedSize);
}

TEST_CASE("zero baseline is uninformative") {
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  const auto model = BaselineModel::zeros(code.s(), code.n(), 6, 2, 3);
  const std::vector<double> l{0.9, -0.3, 1.2, 0.1, -0.8, 0.4, 0.7, -1.5};
  const auto out = lstm_baseline_decode(code, l, 0.4, model);
  for (std::size_t j = 0; j < 8; ++j) CHECK(out.ext_llr[j] == doctest::Approx(-2 * l[j] / 0.4));
  CHECK(out.info_llr.empty());

  const auto wrong = BaselineModel::zeros(3, 8, 6, 2, 3);
  CHECK_THROWS_AS(lstm_baseline_decode(code, l, 0.4, wrong), std::invalid_argument);
}

TEST_CASE("baseline gradient matches finite differences") {
  const auto code = load_code(kDataDir + "/codes/toy_4_2.code");
  std::mt19937_64 rng(2);
  const auto model = BaselineModel::random(code.s(), code.n(), 5, 2, 3, rng);
  const std::vector<double> l{0.7, -0.2, -0.9, 0.4};
  const Bits cw{0, 0, 1, 1};
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.net.parameters().size());
  baseline_loss_and_gradient(model, code, l, cw, 0.6, &grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    auto p = model, m = model;
    p.net.parameters()(i) += h;
    m.net.parameters()(i) -= h;
    const double fd = (baseline_loss_and_gradient(p, code, l, cw, 0.6, nullptr) -
                       baseline_loss_and_gradient(m, code, l, cw, 0.6, nullptr)) /
                      (2 * h);
    CHECK(std::abs(grad(i) - fd) < 1e-7 + 1e-6 * std::abs(fd));
  }
}

TEST_CASE("trained baseline recovers noiseless codewords") {
  const auto code = load_code(kDataDir + "/codes/hamming_8_4.code");
  BaselineConfig c;
  c.hidden = 16;
  c.layers = 2;
  c.time_steps = 3;
  c.epochs = 150;
  c.batch_size = 16;
  c.learning_rate = 0.01;
  c.holdout_size = 0;
  std::mt19937_64 rng(3);
  const auto trained = train_baseline(code, c, rng);

  int agree = 0, total = 0;
  for (int f = 0; f < 200; ++f) {
    const auto info = random_bits(code.k(), rng);
    const auto v = encode(code, info);
    const auto l = bpsk(v);
    const auto out = lstm_baseline_decode(code, l, 0.5, trained.model);
    for (std::size_t j = 0; j < code.n(); ++j, ++total) agree += (out.code_llr[j] < 0 ? 1 : 0) == v[j];
  }
  CHECK(agree >= 0.99 * total);

  std::mt19937_64 rng2(3);
  CHECK(train_baseline(code, c, rng2).model.net.parameters() == trained.model.net.parameters());
}

TEST_CASE("baseline weight file round trip") {
  const auto code = load_code(kDataDir + "/codes/toy_4_2.code");
  std::mt19937_64 rng(4);
  const auto model = BaselineModel::random(code.s(), code.n(), 4, 2, 5, rng);
  const std::string path = "baseline_roundtrip_test.w";
  save_baseline(path, model);
  const auto back = load_baseline(path, code.s(), code.n());
  CHECK(back.time_steps == 5);
  CHECK(back.net.parameters() == model.net.parameters());
  CHECK_THROWS_AS(load_l2l(path), FormatError);
  CHECK_THROWS_AS(load_baseline(path, 7), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("sweep config parsing") {
  const auto c = parse_sweep_config(R"({"snr_points": [1, 2.5], "code": "x.code", "decoder": "uncoded-oamp",
                                       "min_frames": 10, "seed": 99})");
  CHECK(c.snr_points == std::vector<double>{1.0, 2.5});
  CHECK(c.decoder == DecoderKind::UncodedOamp);
  CHECK(c.seed == 99);
  CHECK(c.min_bit_errors == 100);
  CHECK(c.max_frames == 1000000);

  CHECK_THROWS_AS(parse_sweep_config(R"({"snr_points": [1], "code": "x", "snr": 3})"), FormatError);
  CHECK_THROWS_AS(parse_sweep_config(R"({"snr_points": [2, 1], "code": "x"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sweep_config(R"({"snr_points": [], "code": "x"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sweep_config(R"({"snr_points": [1], "code": "x", "min_frames": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sweep_config(R"({"snr_points": [1], "code": "x", "decoder": "bp"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sweep_config("{not json"), FormatError);

  CHECK_THROWS_AS(parse_trainer_config(R"({"depth": 3, "lr": 0.1})"), FormatError);
  CHECK(parse_trainer_config(R"({"depth": 3})").depth == 3);
  CHECK_THROWS_AS(parse_baseline_config(R"({"hidden_size": 3})"), FormatError);
}

TEST_CASE("missing weights fail before simulation") {
  SweepConfig c;
  c.snr_points = {1.0};
  c.code_path = kDataDir + "/codes/toy_4_2.code";
  c.decoder = DecoderKind::VqcTd;
  c.weights_path = "does_not_exist.w";
  CHECK_THROWS(prepare_sweep(c));
  c.decoder = DecoderKind::LstmBaseline;
  CHECK_THROWS(prepare_sweep(c));
}

TEST_CASE("stopping rule") {
  SweepConfig c;
  c.snr_points = {0.0, 30.0};
  c.code_path = kDataDir + "/codes/toy_4_2.code";
  c.decoder = DecoderKind::Ml;
  c.min_frames = 100;
  c.min_bit_errors = 10;
  c.max_frames = 1000;
  c.batch_frames = 50;
  const auto records = ber_sweep(c);
  REQUIRE(records.size() == 2);
  // Low SNR: plenty of errors, stops at the first batch boundary past min_frames.
  CHECK(records[0].frames == 100);
  CHECK(records[0].bit_errors >= 10);
  // Noise-free regime: runs to the cap with no errors.
  CHECK(records[1].frames == 1000);
  CHECK(records[1].bit_errors == 0);
  CHECK(records[1].ber == 0.0);
  for (const auto& r : records) {
    CHECK(r.ber == doctest::Approx(double(r.bit_errors) / (r.frames * 2.0)));
    CHECK(r.fer == doctest::Approx(double(r.frame_errors) / r.frames));
    CHECK(r.wall_time_s == 0.0);
  }
}

TEST_CASE("sweep CSV is reproducible and independent of the worker count") {
  SweepConfig c;
  c.snr_points = {1.0, 3.0};
  c.code_path = kDataDir + "/codes/hamming_8_4.code";
  c.decoder = DecoderKind::UncodedOamp;
  c.min_frames = 300;
  c.max_frames = 300;
  c.batch_frames = 100;
  c.seed = 17;
  const auto a = csv_of(ber_sweep(c));
  const auto b = csv_of(ber_sweep(c));
  CHECK(a == b);
  CHECK(a.rfind("snr_db,frames,bit_errors,ber,frame_errors,fer,wall_time_s\n", 0) == 0);

  setenv("VQCTD_THREADS", "3", 1);
  const auto threaded = csv_of(ber_sweep(c));
  unsetenv("VQCTD_THREADS");
  CHECK(threaded == a);

  c.seed = 18;
  CHECK(csv_of(ber_sweep(c)) != a);
}

TEST_CASE("uncoded OAMP follows the BPSK curve at one point") {
  SweepConfig c;
  c.snr_points = {3.0};
  c.code_path = kDataDir + "/codes/bklc_20_11.code";
  c.decoder = DecoderKind::UncodedOamp;
  c.min_frames = 5000;
  c.max_frames = 5000;
  c.seed = 5;
  const auto r = ber_sweep(c).front();
  const double expected = oracle::bpsk_ber(sigma2_from_snr_db(3.0));
  const double bits = r.frames * 20.0;
  CHECK(std::abs(r.ber - expected) < 4 * oracle::binomial_sigma(expected, bits));
}

TEST_CASE("BPSK reference helpers") {
  CHECK(bpsk_awgn_ber(1.0) == doctest::Approx(oracle::q_function(1.0)));
  CHECK(bpsk_awgn_snr_for_ber(1e-3) == doctest::Approx(oracle::bpsk_snr_at(1e-3)).epsilon(1e-9));
  CHECK_THROWS(bpsk_awgn_snr_for_ber(0.7));
}

TEST_CASE("decoder names") {
  for (auto k : {DecoderKind::VqcTd, DecoderKind::Ml, DecoderKind::LstmBaseline, DecoderKind::UncodedOamp})
    CHECK(parse_decoder_kind(to_string(k)) == k);
}
