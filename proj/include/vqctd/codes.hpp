#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vqctd {

using Bits = std::vector<std::uint8_t>;

/// Dense binary matrix over GF(2), row-major, one byte per entry.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  static BitMatrix identity(std::size_t n);
  static BitMatrix from_rows(const std::vector<Bits>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const std::uint8_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  BitMatrix transpose() const;
  std::size_t row_weight(std::size_t r) const;
  std::size_t col_weight(std::size_t c) const;
  bool is_zero() const;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

std::size_t gf2_rank(BitMatrix m);
BitMatrix gf2_multiply(const BitMatrix& a, const BitMatrix& b);
Bits gf2_multiply(const BitMatrix& a, std::span<const std::uint8_t> x);

/// Basis of the right null space of `h` as the columns of an N x K matrix.
/// Throws ZeroDimensionalCode when `h` has full column rank.
BitMatrix generator_from_parity(const BitMatrix& h);

/// Parity-check matrix whose rows span the dual of the column space of `g`.
BitMatrix parity_from_generator(const BitMatrix& g);

/// Indices of a maximal linearly independent subset of the rows of `m`,
/// scanned top to bottom.
std::vector<std::size_t> independent_rows(const BitMatrix& m);

/// Binary linear [N, K] code. G is N x K (G(j, i) = 1 means info bit i feeds
/// code bit j), H is S x N with S = N - K. Immutable once built.
class LinearCode {
 public:
  /// Validates H G = 0, full ranks, S = N - K and nonzero G columns.
  static LinearCode from_matrices(BitMatrix generator, BitMatrix parity);
  static LinearCode from_generator(BitMatrix generator);
  /// Dependent rows of `parity` are dropped before deriving G.
  static LinearCode from_parity(const BitMatrix& parity);
  static LinearCode identity(std::size_t n);

  std::size_t n() const { return g_.rows(); }
  std::size_t k() const { return g_.cols(); }
  std::size_t s() const { return h_.rows(); }

  const BitMatrix& generator() const { return g_; }
  const BitMatrix& parity_check() const { return h_; }

  /// Info-bit support of code bit j as a bit mask (requires K <= 64).
  std::uint64_t generator_row_mask(std::size_t j) const;

 private:
  LinearCode(BitMatrix g, BitMatrix h) : g_(std::move(g)), h_(std::move(h)) {}

  BitMatrix g_;
  BitMatrix h_;
};

/// Samples an S x N parity-check matrix with every column of weight `dv` and
/// every row of weight `dc`, S = N dv / dc. Rejection-resamples to avoid
/// repeated entries and (where possible) 4-cycles.
BitMatrix sample_regular_parity(std::size_t n, std::size_t dv, std::size_t dc, std::mt19937_64& rng,
                                std::size_t max_attempts = 20000);

/// Regular (dv, dc) LDPC code; redundant checks of the sampled matrix are removed.
LinearCode build_ldpc_regular(std::size_t n, std::size_t dv, std::size_t dc, std::mt19937_64& rng);

Bits encode(const LinearCode& code, std::span<const std::uint8_t> info);

/// x_i = (-1)^{v_i}
std::vector<double> bpsk(std::span<const std::uint8_t> bits);

/// Hard decision: 0 for l >= 0, 1 for l < 0.
std::uint8_t hard_bit(double l);

Bits hard_syndrome(const LinearCode& code, std::span<const double> l);

/// Per check: the smallest |l_j| over the check's support.
std::vector<double> weighted_syndrome(const LinearCode& code, std::span<const double> l);

/// Exhaustive minimum Hamming weight over nonzero codewords (K <= 24, N <= 64).
std::size_t min_distance(const LinearCode& code);

/// Text code file: "N K S", then S rows of H, then N rows of G.
LinearCode read_code(std::istream& in);
LinearCode load_code(const std::string& path);
void write_code(std::ostream& out, const LinearCode& code);
void save_code(const std::string& path, const LinearCode& code);

}  // namespace vqctd
