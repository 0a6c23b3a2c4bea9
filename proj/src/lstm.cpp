#include "vqctd/lstm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "vqctd/errors.hpp"

namespace vqctd {

static_assert(std::endian::native == std::endian::little, "weight files are written little-endian");

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

std::size_t layer_block(const LstmShape& s, std::size_t layer) {
  const std::size_t h4 = 4 * s.hidden_dim;
  return h4 * (s.layer_input_dim(layer) + s.hidden_dim) + h4;
}

}  // namespace

std::size_t LstmShape::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers; ++l) total += layer_block(*this, l);
  return total + output_dim * hidden_dim + output_dim;
}

LstmStack::LstmStack(LstmShape shape) : shape_(shape) {
  if (shape_.layers == 0 || shape_.hidden_dim == 0 || shape_.output_dim == 0)
    throw std::invalid_argument("LstmStack: layers, hidden and output sizes must be positive");
  if (shape_.primary_dim + shape_.side_dim == 0) throw std::invalid_argument("LstmStack: no inputs");
  std::size_t off = 0;
  for (std::size_t l = 0; l < shape_.layers; ++l) {
    offsets_.push_back(off);
    off += layer_block(shape_, l);
  }
  offsets_.push_back(off);
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape_.parameter_count()));
}

Eigen::Map<const Eigen::MatrixXd> LstmStack::gate_weights(std::size_t layer) const {
  const auto rows = static_cast<Eigen::Index>(4 * shape_.hidden_dim);
  const auto cols = static_cast<Eigen::Index>(shape_.layer_input_dim(layer) + shape_.hidden_dim);
  return {params_.data() + offsets_[layer], rows, cols};
}

Eigen::Map<const Eigen::VectorXd> LstmStack::gate_bias(std::size_t layer) const {
  const auto rows = static_cast<Eigen::Index>(4 * shape_.hidden_dim);
  const auto cols = static_cast<Eigen::Index>(shape_.layer_input_dim(layer) + shape_.hidden_dim);
  return {params_.data() + offsets_[layer] + rows * cols, rows};
}

Eigen::Map<const Eigen::MatrixXd> LstmStack::output_weights() const {
  return {params_.data() + offsets_.back(), static_cast<Eigen::Index>(shape_.output_dim),
          static_cast<Eigen::Index>(shape_.hidden_dim)};
}

Eigen::Map<const Eigen::VectorXd> LstmStack::output_bias() const {
  return {params_.data() + offsets_.back() + shape_.output_dim * shape_.hidden_dim,
          static_cast<Eigen::Index>(shape_.output_dim)};
}

Eigen::Map<Eigen::VectorXd> LstmStack::output_bias_mut() {
  return {params_.data() + offsets_.back() + shape_.output_dim * shape_.hidden_dim,
          static_cast<Eigen::Index>(shape_.output_dim)};
}

void LstmStack::init_random(std::mt19937_64& rng, double output_scale) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape_.hidden_dim));
  std::uniform_real_distribution<double> uni(-bound, bound);
  const std::size_t h = shape_.hidden_dim;
  for (std::size_t l = 0; l < shape_.layers; ++l) {
    const std::size_t nw = 4 * h * (shape_.layer_input_dim(l) + h);
    double* p = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < nw; ++i) p[i] = uni(rng);
    double* b = p + nw;
    for (std::size_t i = 0; i < 4 * h; ++i) b[i] = (i >= h && i < 2 * h) ? 1.0 : 0.0;
  }
  double* w = params_.data() + offsets_.back();
  for (std::size_t i = 0; i < shape_.output_dim * h; ++i) w[i] = output_scale * uni(rng);
  double* b = w + shape_.output_dim * h;
  for (std::size_t i = 0; i < shape_.output_dim; ++i) b[i] = 0.0;
}

LstmState LstmState::zeros(const LstmShape& shape) {
  LstmState s;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    s.h.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.hidden_dim)));
    s.c.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.hidden_dim)));
  }
  return s;
}

LstmStateGrad LstmStateGrad::zeros(const LstmShape& shape) {
  LstmStateGrad g;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    g.dh.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.hidden_dim)));
    g.dc.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.hidden_dim)));
  }
  return g;
}

Eigen::VectorXd lstm_step(const LstmStack& net, const Eigen::VectorXd& primary, const Eigen::VectorXd& side,
                          LstmState& state, LstmStepCache* cache) {
  const auto& s = net.shape();
  if (static_cast<std::size_t>(primary.size()) != s.primary_dim ||
      static_cast<std::size_t>(side.size()) != s.side_dim)
    throw std::invalid_argument("lstm_step: input dimension mismatch");
  if (state.h.size() != s.layers) throw std::invalid_argument("lstm_step: state has wrong layer count");

  const auto hd = static_cast<Eigen::Index>(s.hidden_dim);
  if (cache) cache->layers.resize(s.layers);

  Eigen::VectorXd below = primary;
  for (std::size_t l = 0; l < s.layers; ++l) {
    Eigen::VectorXd z(below.size() + side.size() + hd);
    z << below, side, state.h[l];
    const Eigen::VectorXd a = net.gate_weights(l) * z + net.gate_bias(l);

    Eigen::VectorXd i = sigmoid(a.segment(0, hd));
    Eigen::VectorXd f = sigmoid(a.segment(hd, hd));
    Eigen::VectorXd g = a.segment(2 * hd, hd).array().tanh().matrix();
    Eigen::VectorXd o = sigmoid(a.segment(3 * hd, hd));

    Eigen::VectorXd c = f.cwiseProduct(state.c[l]) + i.cwiseProduct(g);
    Eigen::VectorXd tc = c.array().tanh().matrix();
    Eigen::VectorXd h = o.cwiseProduct(tc);

    if (cache) {
      auto& lc = cache->layers[l];
      lc.z = std::move(z);
      lc.i = std::move(i);
      lc.f = std::move(f);
      lc.g = std::move(g);
      lc.o = std::move(o);
      lc.c_prev = state.c[l];
      lc.tanh_c = tc;
    }
    state.c[l] = std::move(c);
    state.h[l] = h;
    below = std::move(h);
  }
  if (cache) cache->h_top = below;
  return net.output_weights() * below + net.output_bias();
}

void lstm_step_backward(const LstmStack& net, const LstmStepCache& cache, const Eigen::VectorXd& d_output,
                        LstmStateGrad& carry, Eigen::VectorXd& grad, Eigen::VectorXd* d_primary,
                        Eigen::VectorXd* d_side) {
  const auto& s = net.shape();
  const auto hd = static_cast<Eigen::Index>(s.hidden_dim);
  const auto od = static_cast<Eigen::Index>(s.output_dim);
  const auto sd = static_cast<Eigen::Index>(s.side_dim);

  // Output map.
  {
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + net.output_offset(), od, hd);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + net.output_offset() + s.output_dim * s.hidden_dim, od);
    gw.noalias() += d_output * cache.h_top.transpose();
    gb += d_output;
  }
  Eigen::VectorXd dh_from_above = net.output_weights().transpose() * d_output;
  if (d_side) *d_side = Eigen::VectorXd::Zero(sd);

  for (std::size_t l = s.layers; l-- > 0;) {
    const auto& lc = cache.layers[l];
    const Eigen::VectorXd dh = dh_from_above + carry.dh[l];

    const Eigen::VectorXd d_o = dh.cwiseProduct(lc.tanh_c);
    const Eigen::VectorXd dc =
        dh.cwiseProduct(lc.o).cwiseProduct((1.0 - lc.tanh_c.array().square()).matrix()) + carry.dc[l];
    const Eigen::VectorXd d_i = dc.cwiseProduct(lc.g);
    const Eigen::VectorXd d_g = dc.cwiseProduct(lc.i);
    const Eigen::VectorXd d_f = dc.cwiseProduct(lc.c_prev);

    Eigen::VectorXd da(4 * hd);
    da.segment(0, hd) = d_i.array() * lc.i.array() * (1.0 - lc.i.array());
    da.segment(hd, hd) = d_f.array() * lc.f.array() * (1.0 - lc.f.array());
    da.segment(2 * hd, hd) = d_g.array() * (1.0 - lc.g.array().square());
    da.segment(3 * hd, hd) = d_o.array() * lc.o.array() * (1.0 - lc.o.array());

    const auto w = net.gate_weights(l);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + net.gate_offset(l), w.rows(), w.cols());
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + net.gate_offset(l) + w.rows() * w.cols(), w.rows());
    gw.noalias() += da * lc.z.transpose();
    gb += da;

    const Eigen::VectorXd dz = w.transpose() * da;
    const Eigen::Index below_dim = dz.size() - sd - hd;
    if (d_side) *d_side += dz.segment(below_dim, sd);
    carry.dh[l] = dz.tail(hd);
    carry.dc[l] = dc.cwiseProduct(lc.f);
    if (l > 0) {
      dh_from_above = dz.head(below_dim);
    } else if (d_primary) {
      *d_primary = dz.head(below_dim);
    }
  }
}

Adamax::Adamax(std::size_t size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))),
      u_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))) {}

void Adamax::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (grad.size() != params.size() || grad.size() != m_.size()) throw std::invalid_argument("Adamax: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  u_ = (beta2_ * u_).cwiseMax(grad.cwiseAbs());
  if (lr_ == 0.0) return;
  const double step = lr_ / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  params.array() -= step * m_.array() / (u_.array() + eps_);
}

double clip_global_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

namespace {

constexpr char kMagic[8] = {'V', 'Q', 'C', 'T', 'D', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("weight file: truncated header");
  return v;
}

}  // namespace

void write_weights(std::ostream& out, const WeightFileHeader& h, const Eigen::VectorXd& params) {
  if (static_cast<std::size_t>(params.size()) != h.shape.parameter_count())
    throw std::invalid_argument("write_weights: parameter count does not match shape");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, h.kind);
  for (std::uint64_t v : {std::uint64_t{h.shape.layers}, h.depth, h.checks, h.code_length,
                          std::uint64_t{h.shape.hidden_dim}, std::uint64_t{h.shape.primary_dim},
                          std::uint64_t{h.shape.side_dim}, std::uint64_t{h.shape.output_dim}, h.time_steps, h.flags,
                          static_cast<std::uint64_t>(params.size())})
    put<std::uint64_t>(out, v);
  out.write(reinterpret_cast<const char*>(params.data()), static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_weights: stream error");
}

std::pair<WeightFileHeader, Eigen::VectorXd> read_weights(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw FormatError("weight file: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw FormatError("weight file: unsupported version");
  WeightFileHeader h;
  h.kind = get<std::uint32_t>(in);
  h.shape.layers = get<std::uint64_t>(in);
  h.depth = get<std::uint64_t>(in);
  h.checks = get<std::uint64_t>(in);
  h.code_length = get<std::uint64_t>(in);
  h.shape.hidden_dim = get<std::uint64_t>(in);
  h.shape.primary_dim = get<std::uint64_t>(in);
  h.shape.side_dim = get<std::uint64_t>(in);
  h.shape.output_dim = get<std::uint64_t>(in);
  h.time_steps = get<std::uint64_t>(in);
  h.flags = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (count != h.shape.parameter_count()) throw FormatError("weight file: parameter count does not match header");
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  if (!in.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(count * sizeof(double))))
    throw FormatError("weight file: truncated payload");
  return {h, std::move(params)};
}

}  // namespace vqctd
