#include "vqctd/codes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vqctd/errors.hpp"

namespace vqctd {

BitMatrix BitMatrix::identity(std::size_t n) {
  BitMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

BitMatrix BitMatrix::from_rows(const std::vector<Bits>& rows) {
  if (rows.empty()) return {};
  BitMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw std::invalid_argument("from_rows: ragged rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c] & 1u;
  }
  return m;
}

BitMatrix BitMatrix::transpose() const {
  BitMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::size_t BitMatrix::row_weight(std::size_t r) const {
  std::size_t w = 0;
  for (auto b : row(r)) w += b;
  return w;
}

std::size_t BitMatrix::col_weight(std::size_t c) const {
  std::size_t w = 0;
  for (std::size_t r = 0; r < rows_; ++r) w += (*this)(r, c);
  return w;
}

bool BitMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](std::uint8_t b) { return b == 0; });
}

namespace {

// In-place reduced row echelon form; returns the pivot column of each pivot row.
std::vector<std::size_t> rref(BitMatrix& m) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && m(p, c) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != r)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i != r && m(i, c)) {
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) ^= m(r, j);
      }
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace

std::size_t gf2_rank(BitMatrix m) { return rref(m).size(); }

BitMatrix gf2_multiply(const BitMatrix& a, const BitMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("gf2_multiply: inner dimension mismatch");
  BitMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      if (a(i, k))
        for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) ^= b(k, j);
  return out;
}

Bits gf2_multiply(const BitMatrix& a, std::span<const std::uint8_t> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("gf2_multiply: vector length mismatch");
  Bits out(a.rows(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::uint8_t acc = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc ^= static_cast<std::uint8_t>(a(i, j) & x[j]);
    out[i] = acc & 1u;
  }
  return out;
}

BitMatrix generator_from_parity(const BitMatrix& h) {
  if (h.rows() == 0 || h.is_zero()) throw std::invalid_argument("generator_from_parity: H must be nonzero");
  BitMatrix red = h;
  const auto pivots = rref(red);
  const std::size_t n = h.cols();
  if (pivots.size() == n) throw ZeroDimensionalCode("generator_from_parity: rank(H) = N, code dimension 0");

  std::vector<std::uint8_t> is_pivot(n, 0);
  for (auto p : pivots) is_pivot[p] = 1;

  BitMatrix g(n, n - pivots.size());
  std::size_t col = 0;
  for (std::size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    g(f, col) = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) g(pivots[r], col) = red(r, f);
    ++col;
  }
  return g;
}

BitMatrix parity_from_generator(const BitMatrix& g) {
  const std::size_t rank = gf2_rank(g);
  if (rank == g.rows()) return BitMatrix(0, g.rows());
  return generator_from_parity(g.transpose()).transpose();
}

std::vector<std::size_t> independent_rows(const BitMatrix& m) {
  std::vector<std::size_t> keep;
  BitMatrix basis(0, m.cols());
  std::vector<Bits> rows;
  std::size_t rank = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.emplace_back(m.row(r).begin(), m.row(r).end());
    const std::size_t next = gf2_rank(BitMatrix::from_rows(rows));
    if (next > rank) {
      keep.push_back(r);
      rank = next;
    } else {
      rows.pop_back();
    }
  }
  return keep;
}

LinearCode LinearCode::from_matrices(BitMatrix generator, BitMatrix parity) {
  const std::size_t n = generator.rows();
  const std::size_t k = generator.cols();
  if (n == 0 || k == 0) throw InvalidCode("code: empty generator matrix");
  if (parity.cols() != n) throw InvalidCode("code: H and G disagree on N");
  if (parity.rows() != n - k) throw InvalidCode("code: S must equal N - K");
  for (std::size_t i = 0; i < k; ++i)
    if (generator.col_weight(i) == 0) throw InvalidCode("code: generator has a zero column");
  if (gf2_rank(generator) != k) throw InvalidCode("code: generator is rank deficient");
  if (parity.rows() > 0) {
    if (gf2_rank(parity) != parity.rows()) throw InvalidCode("code: parity-check matrix is rank deficient");
    if (!gf2_multiply(parity, generator).is_zero()) throw InvalidCode("code: H * G != 0");
  }
  return LinearCode(std::move(generator), std::move(parity));
}

LinearCode LinearCode::from_generator(BitMatrix generator) {
  auto parity = parity_from_generator(generator);
  return from_matrices(std::move(generator), std::move(parity));
}

LinearCode LinearCode::from_parity(const BitMatrix& parity) {
  std::vector<Bits> rows;
  for (auto r : independent_rows(parity)) rows.emplace_back(parity.row(r).begin(), parity.row(r).end());
  auto reduced = BitMatrix::from_rows(rows);
  auto generator = generator_from_parity(reduced);
  return from_matrices(std::move(generator), std::move(reduced));
}

LinearCode LinearCode::identity(std::size_t n) {
  return LinearCode(BitMatrix::identity(n), BitMatrix(0, n));
}

std::uint64_t LinearCode::generator_row_mask(std::size_t j) const {
  if (k() > 64) throw UnsupportedSize("generator_row_mask: K > 64");
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < k(); ++i)
    if (g_(j, i)) mask |= std::uint64_t{1} << i;
  return mask;
}

BitMatrix sample_regular_parity(std::size_t n, std::size_t dv, std::size_t dc, std::mt19937_64& rng,
                                std::size_t max_attempts) {
  if (n == 0 || dv == 0 || dc == 0) throw std::invalid_argument("ldpc: degrees must be positive");
  if ((n * dv) % dc != 0) throw std::invalid_argument("ldpc: N * dv must be divisible by dc");
  if (dv >= dc) throw std::invalid_argument("ldpc: require dv < dc");
  const std::size_t s = n * dv / dc;

  std::vector<std::size_t> sockets;
  sockets.reserve(n * dv);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t e = 0; e < dv; ++e) sockets.push_back(c);

  // First half of the budget also insists on girth > 4.
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const bool want_girth6 = attempt < max_attempts / 2;
    std::shuffle(sockets.begin(), sockets.end(), rng);
    BitMatrix h(s, n);
    bool ok = true;
    for (std::size_t r = 0; r < s && ok; ++r) {
      for (std::size_t e = 0; e < dc; ++e) {
        auto& cell = h(r, sockets[r * dc + e]);
        if (cell) {
          ok = false;
          break;
        }
        cell = 1;
      }
    }
    if (!ok) continue;
    if (want_girth6) {
      for (std::size_t a = 0; a < n && ok; ++a)
        for (std::size_t b = a + 1; b < n && ok; ++b) {
          std::size_t shared = 0;
          for (std::size_t r = 0; r < s; ++r) shared += h(r, a) & h(r, b);
          if (shared > 1) ok = false;
        }
      if (!ok) continue;
    }
    return h;
  }
  throw ConstructionError("ldpc: no valid regular parity-check matrix within the attempt budget");
}

LinearCode build_ldpc_regular(std::size_t n, std::size_t dv, std::size_t dc, std::mt19937_64& rng) {
  return LinearCode::from_parity(sample_regular_parity(n, dv, dc, rng));
}

Bits encode(const LinearCode& code, std::span<const std::uint8_t> info) {
  if (info.size() != code.k()) throw std::invalid_argument("encode: info length != K");
  return gf2_multiply(code.generator(), info);
}

std::vector<double> bpsk(std::span<const std::uint8_t> bits) {
  std::vector<double> x(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) x[i] = bits[i] ? -1.0 : 1.0;
  return x;
}

std::uint8_t hard_bit(double l) { return l < 0.0 ? 1 : 0; }

Bits hard_syndrome(const LinearCode& code, std::span<const double> l) {
  if (l.size() != code.n()) throw std::invalid_argument("hard_syndrome: length != N");
  Bits hard(l.size());
  for (std::size_t j = 0; j < l.size(); ++j) {
    if (std::isnan(l[j])) throw std::invalid_argument("hard_syndrome: NaN input");
    hard[j] = hard_bit(l[j]);
  }
  return gf2_multiply(code.parity_check(), hard);
}

std::vector<double> weighted_syndrome(const LinearCode& code, std::span<const double> l) {
  if (l.size() != code.n()) throw std::invalid_argument("weighted_syndrome: length != N");
  const auto& h = code.parity_check();
  std::vector<double> out(h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    double m = INFINITY;
    for (std::size_t j = 0; j < h.cols(); ++j)
      if (h(i, j)) m = std::min(m, std::abs(l[j]));
    if (std::isinf(m)) throw InvalidCode("weighted_syndrome: empty check support");
    out[i] = m;
  }
  return out;
}

std::size_t min_distance(const LinearCode& code) {
  if (code.k() > 24) throw UnsupportedSize("min_distance: K > 24");
  if (code.n() > 64) throw UnsupportedSize("min_distance: N > 64");
  const auto& g = code.generator();
  std::vector<std::uint64_t> columns(code.k(), 0);
  for (std::size_t i = 0; i < code.k(); ++i)
    for (std::size_t j = 0; j < code.n(); ++j)
      if (g(j, i)) columns[i] |= std::uint64_t{1} << j;

  // Gray-code walk: step t flips info bit ctz(t).
  std::uint64_t word = 0;
  std::size_t best = code.n() + 1;
  const std::uint64_t total = std::uint64_t{1} << code.k();
  for (std::uint64_t t = 1; t < total; ++t) {
    word ^= columns[std::countr_zero(t)];
    best = std::min<std::size_t>(best, std::popcount(word));
  }
  return best;
}

namespace {

Bits read_bit_row(std::istream& in, std::size_t len, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (!in && line.empty()) throw FormatError(std::string("code file: missing ") + what + " row");
  std::istringstream ls(line);
  Bits row;
  int v = 0;
  while (ls >> v) {
    if (v != 0 && v != 1) throw FormatError(std::string("code file: non-binary entry in ") + what);
    row.push_back(static_cast<std::uint8_t>(v));
  }
  if (!ls.eof()) throw FormatError(std::string("code file: malformed ") + what + " row");
  if (row.size() != len) throw FormatError(std::string("code file: ") + what + " row has wrong length");
  return row;
}

}  // namespace

LinearCode read_code(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("code file: empty");
  std::istringstream hs(header);
  long n = 0, k = 0, s = 0;
  if (!(hs >> n >> k >> s) || n <= 0 || k <= 0 || s < 0) throw FormatError("code file: bad header");
  if (s != n - k) throw FormatError("code file: S != N - K");

  std::vector<Bits> hrows, grows;
  for (long r = 0; r < s; ++r) hrows.push_back(read_bit_row(in, static_cast<std::size_t>(n), "H"));
  for (long r = 0; r < n; ++r) grows.push_back(read_bit_row(in, static_cast<std::size_t>(k), "G"));

  BitMatrix h = s > 0 ? BitMatrix::from_rows(hrows) : BitMatrix(0, static_cast<std::size_t>(n));
  try {
    return LinearCode::from_matrices(BitMatrix::from_rows(grows), std::move(h));
  } catch (const InvalidCode& e) {
    throw FormatError(std::string("code file rejected: ") + e.what());
  }
}

LinearCode load_code(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open code file: " + path);
  return read_code(in);
}

void write_code(std::ostream& out, const LinearCode& code) {
  out << code.n() << ' ' << code.k() << ' ' << code.s() << '\n';
  auto dump = [&out](const BitMatrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << int(m(r, c));
      out << '\n';
    }
  };
  dump(code.parity_check());
  dump(code.generator());
}

void save_code(const std::string& path, const LinearCode& code) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write code file: " + path);
  write_code(out, code);
}

}  // namespace vqctd
