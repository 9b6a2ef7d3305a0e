#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavfarm/rng.hpp"

namespace uavfarm::nn {

/// Raised when a gradient or parameter stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputKind : std::uint32_t { identity = 0, tanh_scaled = 1 };

/// Dense feed-forward network with ReLU hidden layers. Samples are columns:
/// inputs are (in x batch), outputs (out x batch). All parameters live in one
/// flat vector, per layer W (row-major, out x in) followed by b.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to every layer
    Eigen::MatrixXd output;               // final activation
    Eigen::MatrixXd squashed;             // tanh(z) for tanh_scaled outputs
    std::uint64_t version = 0;
    const void* owner = nullptr;
  };

  Mlp() = default;
  /// `output_scale` must be empty or have one entry per output.
  Mlp(std::vector<int> layer_sizes, OutputKind kind, Eigen::VectorXd output_scale = {});

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(Rng& rng);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index param_count() const { return params_.size(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  OutputKind output_kind() const { return kind_; }
  const Eigen::VectorXd& output_scale() const { return scale_; }

  const Eigen::VectorXd& params() const { return params_; }
  /// Invalidates outstanding caches.
  Eigen::VectorXd& mutable_params() {
    ++version_;
    return params_;
  }
  void set_params(const Eigen::VectorXd& p);
  std::uint64_t version() const { return version_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  Eigen::VectorXd forward_one(const Eigen::VectorXd& x) const;

  /// Parameter gradient of sum(dout .* output). If `dinput` is set it
  /// receives the gradient with respect to the input batch.
  /// Throws std::logic_error for a cache from another net or older params.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& dout, Eigen::MatrixXd* dinput = nullptr) const;

  /// Input gradient only; skips the parameter gradient.
  Eigen::MatrixXd input_gradient(const Cache& cache, const Eigen::MatrixXd& dout) const;

  bool operator==(const Mlp& o) const;

 private:
  std::vector<int> sizes_{1, 1};
  OutputKind kind_ = OutputKind::identity;
  Eigen::VectorXd scale_;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> offsets_;  // start of W for each layer
  std::uint64_t version_ = 0;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// One bias-corrected step. Throws DivergenceError on a non-finite gradient.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  void step(Mlp& net, const Eigen::VectorXd& grad) { step(net.mutable_params(), grad); }

  long long steps() const { return t_; }
  double lr() const { return lr_; }
  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::VectorXd& v() const { return v_; }

  void write(std::ostream& out) const;
  void read(std::istream& in);

 private:
  Eigen::VectorXd m_, v_;
  long long t_ = 0;
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
};

/// target <- xi * source + (1 - xi) * target
void soft_update(Eigen::VectorXd& target, const Eigen::VectorXd& source, double xi);
inline void soft_update(Mlp& target, const Mlp& source, double xi) {
  soft_update(target.mutable_params(), source.params(), xi);
}

struct Batch {
  Eigen::MatrixXd obs;       // obs_dim x n
  Eigen::MatrixXd act;       // act_dim x n
  Eigen::VectorXd reward;    // n
  Eigen::MatrixXd next_obs;  // obs_dim x n
  std::vector<std::size_t> indices;
};

/// FIFO ring of (o, a, r, o') with seeded uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim, std::uint64_t seed);

  void push(const Eigen::VectorXd& obs, const Eigen::VectorXd& act, double reward, const Eigen::VectorXd& next_obs);
  /// Uniform with replacement. Throws std::logic_error if size() < n.
  void sample(std::size_t n, Batch& out);
  Batch sample(std::size_t n) {
    Batch b;
    sample(n, b);
    return b;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Number of records ever pushed.
  std::uint64_t pushed() const { return pushed_; }
  /// Storage slot i (0 = oldest surviving record).
  double reward_at(std::size_t i) const;

 private:
  std::size_t capacity_;
  int obs_dim_, act_dim_;
  Eigen::MatrixXd obs_, act_, next_;
  Eigen::VectorXd reward_;
  std::size_t cursor_ = 0, size_ = 0;
  std::uint64_t pushed_ = 0;
  Rng rng_;
};

/// Versioned binary checkpoint: magic, version, output kind, layer sizes,
/// output scale, row-major parameters. Round-trips bit for bit.
void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);

}  // namespace uavfarm::nn
