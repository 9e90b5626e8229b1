#ifndef RUL2STAGE_NN_NETWORK_HPP
#define RUL2STAGE_NN_NETWORK_HPP

#include "rul2stage/error.hpp"
#include "rul2stage/nn/model_spec.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rul2stage::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Offsets of every parameter block inside the flat parameter vector.
/// Order: for each recurrent layer {Wx (4H x in), Wh (4H x H), b (4H)},
/// then dense {W (D x flat), b (D)}, then head {W (1 x D), b (1)}.
/// Matrices are stored column-major. Gate row blocks are input, forget,
/// cell, output.
struct ParamLayout {
  struct Recurrent {
    Eigen::Index wx = 0, wh = 0, b = 0;
    Eigen::Index input_size = 0;
  };
  std::vector<Recurrent> recurrent;
  Eigen::Index dense_w = 0, dense_b = 0;
  Eigen::Index head_w = 0, head_b = 0;
  Eigen::Index total = 0;

  explicit ParamLayout(const ModelSpec& spec) {
    spec.validate();
    const Eigen::Index h = spec.hidden_size;
    Eigen::Index at = 0;
    for (int l = 0; l < spec.recurrent_layers(); ++l) {
      Recurrent r;
      r.input_size = l == 0 ? spec.step_dim : h;
      r.wx = at;
      at += 4 * h * r.input_size;
      r.wh = at;
      at += 4 * h * h;
      r.b = at;
      at += 4 * h;
      recurrent.push_back(r);
    }
    dense_w = at;
    at += Eigen::Index{spec.dense_width} * spec.flat_size();
    dense_b = at;
    at += spec.dense_width;
    head_w = at;
    at += spec.dense_width;
    head_b = at;
    at += 1;
    total = at;
  }
};

/// Packs window matrices (n_steps x step_dim each) into the step-major batch
/// layout the network consumes: column t * batch + b holds row t of window b.
template <typename Scalar, typename Window>
Matrix<Scalar> pack_batch(std::span<const Window* const> windows, int n_steps, int step_dim) {
  const Eigen::Index batch = static_cast<Eigen::Index>(windows.size());
  Matrix<Scalar> out(step_dim, n_steps * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Window& w = *windows[static_cast<std::size_t>(b)];
    if (w.rows() != n_steps || w.cols() != step_dim) {
      throw ShapeError("input window is " + std::to_string(w.rows()) + "x" +
                       std::to_string(w.cols()) + ", model expects " + std::to_string(n_steps) +
                       "x" + std::to_string(step_dim));
    }
    for (Eigen::Index t = 0; t < n_steps; ++t) {
      out.col(t * batch + b) = w.row(t).transpose().template cast<Scalar>();
    }
  }
  return out;
}

/// Activations kept by a forward pass for the matching backward pass.
template <typename Scalar>
struct ForwardCache {
  const void* owner = nullptr;
  std::uint64_t generation = 0;
  Eigen::Index batch = 0;

  Matrix<Scalar> input;                    // step_dim x (T*B)
  std::vector<Matrix<Scalar>> gates;       // per layer, 4H x (T*B), post-activation
  std::vector<Matrix<Scalar>> cells;       // H x (T*B)
  std::vector<Matrix<Scalar>> cell_tanh;   // H x (T*B)
  std::vector<Matrix<Scalar>> hidden;      // H x (T*B)
  Matrix<Scalar> flat;                     // (T*H) x B
  Matrix<Scalar> dense_pre, dense_out;     // D x B
  RowVector<Scalar> head_pre, output;      // 1 x B
};

struct StageShape {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

/// Per-sample shapes at each stage of a cached forward pass.
template <typename Scalar>
std::vector<StageShape> shape_chain(const ModelSpec& spec, const ForwardCache<Scalar>& cache) {
  const Eigen::Index b = cache.batch;
  std::vector<StageShape> out;
  out.push_back({"input", cache.input.cols() / b, cache.input.rows()});
  for (int s = 0; s < spec.n_stacks; ++s) {
    const auto& h = cache.hidden[static_cast<std::size_t>((s + 1) * spec.layers_per_stack - 1)];
    out.push_back({"recurrent_stack_" + std::to_string(s + 1), h.cols() / b, h.rows()});
  }
  out.push_back({"flatten", cache.flat.rows(), 1});
  out.push_back({"dense", cache.dense_out.rows(), 1});
  out.push_back({"head", cache.output.rows(), 1});
  return out;
}

template <typename Scalar>
Scalar logistic(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// Stacked gated-recurrent network with a dense head, parameters held in
/// one flat vector (see ParamLayout).
template <typename Scalar>
class Network {
 public:
  using MatrixT = Matrix<Scalar>;
  using VectorT = Vector<Scalar>;
  using RowVectorT = RowVector<Scalar>;
  using MapC = Eigen::Map<const MatrixT>;
  using MapM = Eigen::Map<MatrixT>;

  explicit Network(ModelSpec spec)
      : spec_(spec), layout_(spec), params_(VectorT::Zero(layout_.total)) {}

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index num_parameters() const { return layout_.total; }

  const VectorT& parameters() const { return params_; }
  /// Mutable access; invalidates outstanding forward caches.
  VectorT& mutable_parameters() {
    ++generation_;
    return params_;
  }
  void set_parameters(const VectorT& p) {
    if (p.size() != params_.size()) {
      throw ShapeError("parameter vector has " + std::to_string(p.size()) + " entries, model needs " +
                       std::to_string(params_.size()));
    }
    mutable_parameters() = p;
  }

  /// Recurrent weights uniform in +-1/sqrt(H) with forget-gate bias 1;
  /// dense layers uniform in +-1/sqrt(fan_in).
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    VectorT& p = mutable_parameters();
    const Eigen::Index h = spec_.hidden_size;
    const auto fill = [&](Eigen::Index from, Eigen::Index n, double bound) {
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = 0; i < n; ++i) p[from + i] = static_cast<Scalar>(u(rng));
    };
    const double rbound = 1.0 / std::sqrt(static_cast<double>(h));
    for (const auto& r : layout_.recurrent) {
      fill(r.wx, 4 * h * r.input_size, rbound);
      fill(r.wh, 4 * h * h, rbound);
      fill(r.b, 4 * h, rbound);
      p.segment(r.b + h, h).setConstant(Scalar(1));
    }
    const double dbound = 1.0 / std::sqrt(static_cast<double>(spec_.flat_size()));
    fill(layout_.dense_w, Eigen::Index{spec_.dense_width} * spec_.flat_size(), dbound);
    fill(layout_.dense_b, spec_.dense_width, dbound);
    const double hbound = 1.0 / std::sqrt(static_cast<double>(spec_.dense_width));
    fill(layout_.head_w, spec_.dense_width, hbound);
    fill(layout_.head_b, 1, hbound);
    if (spec_.head == Head::Rul) {
      // Start the rectifier head in its active region, at the midpoint of
      // the target range.
      p[layout_.head_b] = Scalar(0.5);
    }
  }

  /// Forward pass over a packed batch (see pack_batch). Returns one output
  /// per sample. Fills `cache` when given.
  RowVectorT forward(const MatrixT& packed, Eigen::Index batch, ForwardCache<Scalar>* cache = nullptr) const {
    const Eigen::Index T = spec_.n_steps;
    const Eigen::Index H = spec_.hidden_size;
    if (batch < 1 || packed.rows() != spec_.step_dim || packed.cols() != T * batch) {
      throw ShapeError("packed input is " + std::to_string(packed.rows()) + "x" +
                       std::to_string(packed.cols()) + ", expected " + std::to_string(spec_.step_dim) +
                       "x" + std::to_string(T * batch));
    }
    ForwardCache<Scalar> local;
    ForwardCache<Scalar>& c = cache ? *cache : local;
    const std::size_t L = layout_.recurrent.size();
    c.owner = this;
    c.generation = generation_;
    c.batch = batch;
    c.input = packed;
    c.gates.resize(L);
    c.cells.resize(L);
    c.cell_tanh.resize(L);
    c.hidden.resize(L);

    MatrixT h_prev(H, batch);
    MatrixT z(4 * H, batch);
    for (std::size_t l = 0; l < L; ++l) {
      const auto& r = layout_.recurrent[l];
      const MatrixT& x = l == 0 ? c.input : c.hidden[l - 1];
      const MapC wx(params_.data() + r.wx, 4 * H, r.input_size);
      const MapC wh(params_.data() + r.wh, 4 * H, H);
      const Eigen::Map<const VectorT> bias(params_.data() + r.b, 4 * H);

      MatrixT& gates = c.gates[l];
      gates.noalias() = wx * x;
      gates.colwise() += bias;
      MatrixT& cells = c.cells[l];
      MatrixT& ctanh = c.cell_tanh[l];
      MatrixT& hidden = c.hidden[l];
      cells.resize(H, T * batch);
      ctanh.resize(H, T * batch);
      hidden.resize(H, T * batch);

      for (Eigen::Index t = 0; t < T; ++t) {
        auto g = gates.middleCols(t * batch, batch);
        if (t > 0) {
          h_prev = hidden.middleCols((t - 1) * batch, batch);
          z.noalias() = wh * h_prev;
          g += z;
        }
        g.topRows(2 * H) = g.topRows(2 * H).unaryExpr([](Scalar v) { return logistic(v); });
        g.middleRows(2 * H, H) = g.middleRows(2 * H, H).array().tanh();
        g.bottomRows(H) = g.bottomRows(H).unaryExpr([](Scalar v) { return logistic(v); });

        auto cell = cells.middleCols(t * batch, batch);
        cell = g.topRows(H).cwiseProduct(g.middleRows(2 * H, H));
        if (t > 0) {
          cell += g.middleRows(H, H).cwiseProduct(cells.middleCols((t - 1) * batch, batch));
        }
        ctanh.middleCols(t * batch, batch) = cell.array().tanh();
        hidden.middleCols(t * batch, batch) =
            g.bottomRows(H).cwiseProduct(ctanh.middleCols(t * batch, batch));
      }
    }

    const MatrixT& top = c.hidden[L - 1];
    c.flat.resize(T * H, batch);
    for (Eigen::Index t = 0; t < T; ++t) {
      c.flat.middleRows(t * H, H) = top.middleCols(t * batch, batch);
    }

    const MapC dw(params_.data() + layout_.dense_w, spec_.dense_width, spec_.flat_size());
    const Eigen::Map<const VectorT> db(params_.data() + layout_.dense_b, spec_.dense_width);
    c.dense_pre.noalias() = dw * c.flat;
    c.dense_pre.colwise() += db;
    c.dense_out = c.dense_pre.cwiseMax(Scalar(0));

    const Eigen::Map<const RowVectorT> hw(params_.data() + layout_.head_w, spec_.dense_width);
    c.head_pre.noalias() = hw * c.dense_out;
    c.head_pre.array() += params_[layout_.head_b];
    switch (head_activation(spec_.head)) {
      case Activation::Logistic:
        c.output = c.head_pre.unaryExpr([](Scalar v) { return logistic(v); });
        break;
      case Activation::Rectifier:
        c.output = c.head_pre.cwiseMax(Scalar(0));
        break;
      case Activation::Tanh:
        c.output = c.head_pre.array().tanh();
        break;
      case Activation::Identity:
        c.output = c.head_pre;
        break;
    }
    if (!c.output.allFinite()) throw NumericError("non-finite network output");
    return c.output;
  }

  /// Single window (n_steps x step_dim) convenience wrapper.
  Scalar forward_one(const MatrixT& window, ForwardCache<Scalar>* cache = nullptr) const {
    const MatrixT* ptr = &window;
    const auto packed = pack_batch<Scalar, MatrixT>(std::span<const MatrixT* const>(&ptr, 1),
                                                    spec_.n_steps, spec_.step_dim);
    return forward(packed, 1, cache)(0);
  }

  /// Gradient of sum_b grad_out(b) * output(b) with respect to every
  /// parameter, in ParamLayout order.
  VectorT backward(const ForwardCache<Scalar>& c, const RowVectorT& grad_out) const {
    if (c.owner != this || c.generation != generation_) {
      throw ConfigError("forward cache does not match the current network parameters");
    }
    const Eigen::Index B = c.batch;
    if (grad_out.size() != B) throw ShapeError("output gradient size does not match the batch");
    const Eigen::Index T = spec_.n_steps;
    const Eigen::Index H = spec_.hidden_size;
    const Eigen::Index D = spec_.dense_width;

    VectorT grad = VectorT::Zero(layout_.total);

    RowVectorT dz2(B);
    switch (head_activation(spec_.head)) {
      case Activation::Logistic:
        dz2 = grad_out.cwiseProduct(c.output.cwiseProduct((Scalar(1) - c.output.array()).matrix()));
        break;
      case Activation::Rectifier:
        for (Eigen::Index b = 0; b < B; ++b) dz2(b) = c.head_pre(b) > Scalar(0) ? grad_out(b) : Scalar(0);
        break;
      case Activation::Tanh:
        dz2 = grad_out.cwiseProduct((Scalar(1) - c.output.array().square()).matrix());
        break;
      case Activation::Identity:
        dz2 = grad_out;
        break;
    }

    Eigen::Map<RowVectorT>(grad.data() + layout_.head_w, D).noalias() = dz2 * c.dense_out.transpose();
    grad[layout_.head_b] = dz2.sum();

    const Eigen::Map<const VectorT> hw(params_.data() + layout_.head_w, D);
    MatrixT dz1 = hw * dz2;
    dz1.array() *= (c.dense_pre.array() > Scalar(0)).template cast<Scalar>();

    MapM(grad.data() + layout_.dense_w, D, spec_.flat_size()).noalias() = dz1 * c.flat.transpose();
    Eigen::Map<VectorT>(grad.data() + layout_.dense_b, D) = dz1.rowwise().sum();

    const MapC dw(params_.data() + layout_.dense_w, D, spec_.flat_size());
    const MatrixT dflat = dw.transpose() * dz1;

    MatrixT dh_seq(H, T * B);
    for (Eigen::Index t = 0; t < T; ++t) dh_seq.middleCols(t * B, B) = dflat.middleRows(t * H, H);

    MatrixT dz(4 * H, T * B);
    MatrixT dh_next(H, B), dc_next(H, B), dh(H, B), dc(H, B);
    for (std::size_t l = layout_.recurrent.size(); l-- > 0;) {
      const auto& r = layout_.recurrent[l];
      const MatrixT& x = l == 0 ? c.input : c.hidden[l - 1];
      const MatrixT& gates = c.gates[l];
      const MatrixT& cells = c.cells[l];
      const MatrixT& ctanh = c.cell_tanh[l];
      const MapC wh(params_.data() + r.wh, 4 * H, H);

      dh_next.setZero();
      dc_next.setZero();
      for (Eigen::Index t = T; t-- > 0;) {
        const auto g = gates.middleCols(t * B, B);
        const auto gi = g.topRows(H).array();
        const auto gf = g.middleRows(H, H).array();
        const auto gg = g.middleRows(2 * H, H).array();
        const auto go = g.bottomRows(H).array();
        const auto tc = ctanh.middleCols(t * B, B).array();

        dh = dh_seq.middleCols(t * B, B) + dh_next;
        dc = (dh.array() * go * (Scalar(1) - tc.square())).matrix() + dc_next;

        auto dzt = dz.middleCols(t * B, B);
        dzt.topRows(H) = (dc.array() * gg * gi * (Scalar(1) - gi)).matrix();
        if (t > 0) {
          dzt.middleRows(H, H) =
              (dc.array() * cells.middleCols((t - 1) * B, B).array() * gf * (Scalar(1) - gf)).matrix();
        } else {
          dzt.middleRows(H, H).setZero();
        }
        dzt.middleRows(2 * H, H) = (dc.array() * gi * (Scalar(1) - gg.square())).matrix();
        dzt.bottomRows(H) = (dh.array() * tc * go * (Scalar(1) - go)).matrix();

        dc_next = (dc.array() * gf).matrix();
        dh_next.noalias() = wh.transpose() * dzt;
      }

      MapM(grad.data() + r.wx, 4 * H, r.input_size).noalias() = dz * x.transpose();
      if (T > 1) {
        MapM(grad.data() + r.wh, 4 * H, H).noalias() =
            dz.rightCols((T - 1) * B) * c.hidden[l].leftCols((T - 1) * B).transpose();
      }
      Eigen::Map<VectorT>(grad.data() + r.b, 4 * H) = dz.rowwise().sum();

      if (l > 0) {
        const MapC wx(params_.data() + r.wx, 4 * H, r.input_size);
        dh_seq.noalias() = wx.transpose() * dz;
      }
    }
    return grad;
  }

 private:
  ModelSpec spec_;
  ParamLayout layout_;
  VectorT params_;
  std::uint64_t generation_ = 0;
};

/// Batched inference over many windows.
template <typename Scalar, typename Window>
std::vector<Scalar> predict(const Network<Scalar>& net, std::span<const Window* const> windows,
                            std::size_t chunk = 64) {
  std::vector<Scalar> out;
  out.reserve(windows.size());
  for (std::size_t from = 0; from < windows.size(); from += chunk) {
    const auto part = windows.subspan(from, std::min(chunk, windows.size() - from));
    const auto packed = pack_batch<Scalar, Window>(part, net.spec().n_steps, net.spec().step_dim);
    const auto y = net.forward(packed, static_cast<Eigen::Index>(part.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) out.push_back(y(i));
  }
  return out;
}

}  // namespace rul2stage::nn

#endif  // RUL2STAGE_NN_NETWORK_HPP
