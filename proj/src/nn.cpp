#include "uavfarm/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace uavfarm::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr char kMagic[8] = {'U', 'A', 'V', 'F', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd get_vector(std::istream& in, std::uint64_t limit) {
  const auto n = get<std::uint64_t>(in);
  if (n > limit) throw std::runtime_error("checkpoint: vector length out of range");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, OutputKind kind, Eigen::VectorXd output_scale)
    : sizes_(std::move(layer_sizes)), kind_(kind), scale_(std::move(output_scale)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  }
  if (scale_.size() == 0) scale_ = Eigen::VectorXd::Ones(sizes_.back());
  if (scale_.size() != sizes_.back()) throw std::invalid_argument("Mlp: output scale size mismatch");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(total);
}

void Mlp::init_uniform(Rng& rng) {
  for (int l = 0; l < layer_count(); ++l) {
    const int in = sizes_[static_cast<std::size_t>(l)];
    const int out = sizes_[static_cast<std::size_t>(l) + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    const Eigen::Index n = static_cast<Eigen::Index>(in) * out + out;
    for (Eigen::Index i = 0; i < n; ++i) params_[offsets_[static_cast<std::size_t>(l)] + i] = u(rng);
  }
  ++version_;
}

void Mlp::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("Mlp::set_params: size mismatch");
  params_ = p;
  ++version_;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_size()) {
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(input_size()));
  }
  const int layers = layer_count();
  if (cache) {
    cache->inputs.resize(static_cast<std::size_t>(layers));
    cache->inputs[0] = x;
  }
  Eigen::MatrixXd a = x;
  for (int l = 0; l < layers; ++l) {
    const int in = sizes_[static_cast<std::size_t>(l)];
    const int out = sizes_[static_cast<std::size_t>(l) + 1];
    const double* base = params_.data() + offsets_[static_cast<std::size_t>(l)];
    Eigen::Map<const RowMat> w(base, out, in);
    Eigen::Map<const Eigen::VectorXd> b(base + static_cast<Eigen::Index>(in) * out, out);
    Eigen::MatrixXd z(out, a.cols());
    z.noalias() = w * a;
    z.colwise() += b;
    if (l + 1 < layers) {
      a = z.cwiseMax(0.0);
      if (cache) cache->inputs[static_cast<std::size_t>(l) + 1] = a;
    } else if (kind_ == OutputKind::tanh_scaled) {
      Eigen::MatrixXd t = z.array().tanh().matrix();
      a = scale_.asDiagonal() * t;
      if (cache) cache->squashed = std::move(t);
    } else {
      a = std::move(z);
    }
  }
  if (cache) {
    cache->output = a;
    cache->version = version_;
    cache->owner = this;
  }
  return a;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::VectorXd& x) const { return forward(x, nullptr).col(0); }

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dout, Eigen::MatrixXd* dinput) const {
  if (cache.owner != this || cache.version != version_) throw std::logic_error("Mlp::backward: stale cache");
  if (dout.rows() != output_size() || dout.cols() != cache.output.cols()) {
    throw std::invalid_argument("Mlp::backward: output gradient shape mismatch");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd dz;
  if (kind_ == OutputKind::tanh_scaled) {
    dz = (scale_.asDiagonal() * dout).cwiseProduct((1.0 - cache.squashed.array().square()).matrix());
  } else {
    dz = dout;
  }
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int in = sizes_[static_cast<std::size_t>(l)];
    const int out = sizes_[static_cast<std::size_t>(l) + 1];
    const Eigen::Index off = offsets_[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& x = cache.inputs[static_cast<std::size_t>(l)];
    Eigen::Map<RowMat> dw(grad.data() + off, out, in);
    dw.noalias() = dz * x.transpose();
    grad.segment(off + static_cast<Eigen::Index>(in) * out, out) = dz.rowwise().sum();
    if (l == 0 && !dinput) break;
    Eigen::Map<const RowMat> w(params_.data() + off, out, in);
    Eigen::MatrixXd dx(in, dz.cols());
    dx.noalias() = w.transpose() * dz;
    if (l == 0) {
      *dinput = std::move(dx);
    } else {
      dz = (x.array() > 0.0).select(dx, 0.0);
    }
  }
  return grad;
}

Eigen::MatrixXd Mlp::input_gradient(const Cache& cache, const Eigen::MatrixXd& dout) const {
  if (cache.owner != this || cache.version != version_) throw std::logic_error("Mlp::input_gradient: stale cache");
  if (dout.rows() != output_size() || dout.cols() != cache.output.cols()) {
    throw std::invalid_argument("Mlp::input_gradient: output gradient shape mismatch");
  }
  Eigen::MatrixXd dz;
  if (kind_ == OutputKind::tanh_scaled) {
    dz = (scale_.asDiagonal() * dout).cwiseProduct((1.0 - cache.squashed.array().square()).matrix());
  } else {
    dz = dout;
  }
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int in = sizes_[static_cast<std::size_t>(l)];
    const int out = sizes_[static_cast<std::size_t>(l) + 1];
    Eigen::Map<const RowMat> w(params_.data() + offsets_[static_cast<std::size_t>(l)], out, in);
    Eigen::MatrixXd dx(in, dz.cols());
    dx.noalias() = w.transpose() * dz;
    if (l == 0) return dx;
    dz = (cache.inputs[static_cast<std::size_t>(l)].array() > 0.0).select(dx, 0.0);
  }
  return dz;
}

bool Mlp::operator==(const Mlp& o) const {
  return sizes_ == o.sizes_ && kind_ == o.kind_ && scale_ == o.scale_ && params_ == o.params_;
}

AdamState::AdamState(Eigen::Index size, double lr, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void AdamState::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam: shape mismatch");
  if (!grad.allFinite()) throw DivergenceError("Adam: non-finite gradient");
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  if (!params.allFinite()) throw DivergenceError("Adam: parameters became non-finite");
}

void AdamState::write(std::ostream& out) const {
  put<std::int64_t>(out, t_);
  put(out, lr_);
  put(out, b1_);
  put(out, b2_);
  put(out, eps_);
  put_vector(out, m_);
  put_vector(out, v_);
}

void AdamState::read(std::istream& in) {
  t_ = get<std::int64_t>(in);
  lr_ = get<double>(in);
  b1_ = get<double>(in);
  b2_ = get<double>(in);
  eps_ = get<double>(in);
  m_ = get_vector(in, 1u << 30);
  v_ = get_vector(in, 1u << 30);
  if (m_.size() != v_.size()) throw std::runtime_error("checkpoint: Adam moment sizes differ");
}

void soft_update(Eigen::VectorXd& target, const Eigen::VectorXd& source, double xi) {
  if (target.size() != source.size()) throw std::invalid_argument("soft_update: shape mismatch");
  target = xi * source + (1.0 - xi) * target;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim, std::uint64_t seed)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim), rng_(seed) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  const auto cap = static_cast<Eigen::Index>(capacity);
  obs_.resize(obs_dim, cap);
  act_.resize(act_dim, cap);
  next_.resize(obs_dim, cap);
  reward_.resize(cap);
}

void ReplayBuffer::push(const Eigen::VectorXd& obs, const Eigen::VectorXd& act, double reward,
                        const Eigen::VectorXd& next_obs) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || act.size() != act_dim_) {
    throw std::invalid_argument("ReplayBuffer::push: dimension mismatch");
  }
  const auto c = static_cast<Eigen::Index>(cursor_);
  obs_.col(c) = obs;
  act_.col(c) = act;
  next_.col(c) = next_obs;
  reward_[c] = reward;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++pushed_;
}

void ReplayBuffer::sample(std::size_t n, Batch& out) {
  if (size_ < n || size_ == 0) throw std::logic_error("ReplayBuffer::sample: not enough records");
  const auto cols = static_cast<Eigen::Index>(n);
  out.obs.resize(obs_dim_, cols);
  out.act.resize(act_dim_, cols);
  out.next_obs.resize(obs_dim_, cols);
  out.reward.resize(cols);
  out.indices.resize(n);
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  for (Eigen::Index i = 0; i < cols; ++i) {
    const std::size_t k = pick(rng_);
    out.indices[static_cast<std::size_t>(i)] = k;
    // k counts from the oldest surviving record
    const auto slot = static_cast<Eigen::Index>(size_ < capacity_ ? k : (cursor_ + k) % capacity_);
    out.obs.col(i) = obs_.col(slot);
    out.act.col(i) = act_.col(slot);
    out.next_obs.col(i) = next_.col(slot);
    out.reward[i] = reward_[slot];
  }
}

double ReplayBuffer::reward_at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::reward_at");
  return reward_[static_cast<Eigen::Index>(size_ < capacity_ ? i : (cursor_ + i) % capacity_)];
}

void write_mlp(std::ostream& out, const Mlp& net) {
  out.write(kMagic, sizeof kMagic);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint32_t>(net.output_kind()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  put_vector(out, net.output_scale());
  put_vector(out, net.params());
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Mlp read_mlp(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("checkpoint: bad magic");
  if (get<std::uint32_t>(in) != kFormatVersion) throw std::runtime_error("checkpoint: unsupported version");
  const auto kind = get<std::uint32_t>(in);
  if (kind > 1) throw std::runtime_error("checkpoint: unknown output kind");
  const auto n = get<std::uint32_t>(in);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto s = get<std::uint32_t>(in);
    if (s == 0 || s > (1u << 20)) throw std::runtime_error("checkpoint: bad layer size");
    sizes.push_back(static_cast<int>(s));
  }
  Eigen::VectorXd scale = get_vector(in, 1u << 20);
  Mlp net(sizes, static_cast<OutputKind>(kind), scale);
  Eigen::VectorXd p = get_vector(in, 1u << 30);
  net.set_params(p);
  return net;
}

}  // namespace uavfarm::nn
