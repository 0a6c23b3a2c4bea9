#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>

#include "vqctd/codes.hpp"

namespace vqctd {

/// Real linear channel A = U diag(lambda) V^T (M x N, M <= N) with noise
/// variance `sigma2` per real dimension.
struct ChannelInstance {
  Eigen::MatrixXd a;
  Eigen::MatrixXd u;  // M x M
  Eigen::MatrixXd v;  // N x N
  Eigen::VectorXd singular_values;  // M entries, sum = N
  double sigma2 = 1.0;

  std::size_t m() const { return static_cast<std::size_t>(a.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(a.cols()); }
};

struct TransmitFrame {
  Bits info;            // u, K bits
  Bits codeword;        // v, N bits
  Eigen::VectorXd x;    // BPSK image of v
  Eigen::VectorXd y;    // A x + w
  Eigen::VectorXd w;
};

/// Haar-distributed n x n orthogonal matrix (QR of a Gaussian matrix with the
/// signs of diag(R) folded into Q).
Eigen::MatrixXd sample_haar_orthogonal(std::size_t n, std::mt19937_64& rng);

/// Singular-value profile: equal values for cond == 1, otherwise geometric
/// spacing with max/min = cond. Always rescaled so the values sum to N.
Eigen::VectorXd singular_value_profile(std::size_t m, std::size_t n, double cond);

ChannelInstance build_channel(std::size_t m, std::size_t n, double cond, double sigma2, std::mt19937_64& rng);

/// Encodes `info`, maps to BPSK and passes through the channel. With
/// `noiseless` set, w = 0 and no noise is drawn.
TransmitFrame transmit(const ChannelInstance& ch, const LinearCode& code, std::span<const std::uint8_t> info,
                       std::mt19937_64& rng, bool noiseless = false);

Bits random_bits(std::size_t count, std::mt19937_64& rng);

/// Per-real-dimension noise variance for unit-energy symbols: sigma2 = 10^(-snr_db/10).
double sigma2_from_snr_db(double snr_db);
double snr_db_from_sigma2(double sigma2);

/// Debug dump. Header line "M,N,sigma2,seed", then the rows of A, then x, y and w.
void write_channel_csv(std::ostream& out, const ChannelInstance& ch, const TransmitFrame& frame,
                       std::uint64_t seed);

}  // namespace vqctd
