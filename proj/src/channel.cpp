#include "vqctd/channel.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "vqctd/errors.hpp"

namespace vqctd {

Eigen::MatrixXd sample_haar_orthogonal(std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw InvalidDimension("sample_haar_orthogonal: n must be positive");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd z(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) z(r, c) = gauss(rng);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < dim; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  return q;
}

Eigen::VectorXd singular_value_profile(std::size_t m, std::size_t n, double cond) {
  if (cond < 1.0 || !std::isfinite(cond)) throw std::invalid_argument("condition number must be >= 1");
  const auto dim = static_cast<Eigen::Index>(m);
  Eigen::VectorXd s(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double frac = dim > 1 ? static_cast<double>(i) / static_cast<double>(dim - 1) : 0.0;
    s(i) = std::pow(cond, -frac);
  }
  s *= static_cast<double>(n) / s.sum();
  return s;
}

ChannelInstance build_channel(std::size_t m, std::size_t n, double cond, double sigma2, std::mt19937_64& rng) {
  if (m == 0 || n == 0) throw InvalidDimension("build_channel: M and N must be positive");
  if (m > n) throw UnsupportedShape("build_channel: M > N is not supported");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("build_channel: sigma2 must be positive");

  ChannelInstance ch;
  ch.sigma2 = sigma2;
  ch.singular_values = singular_value_profile(m, n, cond);
  ch.u = sample_haar_orthogonal(m, rng);
  ch.v = sample_haar_orthogonal(n, rng);
  const auto mi = static_cast<Eigen::Index>(m);
  ch.a = ch.u * ch.singular_values.asDiagonal() * ch.v.leftCols(mi).transpose();
  return ch;
}

Bits random_bits(std::size_t count, std::mt19937_64& rng) {
  Bits bits(count);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return bits;
}

TransmitFrame transmit(const ChannelInstance& ch, const LinearCode& code, std::span<const std::uint8_t> info,
                       std::mt19937_64& rng, bool noiseless) {
  if (code.n() != ch.n()) throw std::invalid_argument("transmit: code length != channel N");
  if (info.size() != code.k()) throw std::invalid_argument("transmit: info length != K");

  TransmitFrame f;
  f.info.assign(info.begin(), info.end());
  f.codeword = encode(code, info);
  const auto xs = bpsk(f.codeword);
  f.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  f.w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ch.m()));
  if (!noiseless) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(ch.sigma2));
    for (Eigen::Index i = 0; i < f.w.size(); ++i) f.w(i) = gauss(rng);
  }
  f.y = ch.a * f.x + f.w;
  return f;
}

double sigma2_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

double snr_db_from_sigma2(double sigma2) { return -10.0 * std::log10(sigma2); }

void write_channel_csv(std::ostream& out, const ChannelInstance& ch, const TransmitFrame& frame,
                       std::uint64_t seed) {
  out << "M,N,sigma2,seed\n" << ch.m() << ',' << ch.n() << ',' << std::setprecision(17) << ch.sigma2 << ','
      << seed << '\n';
  auto row = [&out](auto&& vec) {
    for (Eigen::Index i = 0; i < vec.size(); ++i) out << (i ? "," : "") << vec(i);
    out << '\n';
  };
  for (Eigen::Index r = 0; r < ch.a.rows(); ++r) row(ch.a.row(r));
  row(frame.x);
  row(frame.y);
  row(frame.w);
}

}  // namespace vqctd
