#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pg {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// A named trainable array. Lives outside any tape; gradients are pulled
/// back into `grad` when a tape that references it runs backward.
struct Parameter {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;

    Parameter() = default;
    Parameter(std::string name, Shape shape);

    std::size_t size() const { return value.size(); }
    void zero_grad();
};

/// Flat list of every trainable parameter in a model, in registration order.
class ParamRegistry {
public:
    void add(Parameter* p);
    std::size_t total_count() const;
    void zero_grads();
    const std::vector<Parameter*>& params() const { return params_; }

private:
    std::vector<Parameter*> params_;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; the tape owns the storage.
class Tensor {
public:
    Tensor() = default;
    Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Shape& shape() const;
    const std::vector<double>& value() const;
    const std::vector<double>& grad() const;
    std::size_t size() const;
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Record of one forward pass: values plus backward rules, replayed in
/// reverse by backward(). Built fresh per step and consumed by backward().
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf nodes.
    Tensor constant(Shape shape, std::vector<double> data);
    Tensor param(Parameter& p);

    // Differentiable operations.
    Tensor matmul(Tensor a, Tensor b);
    Tensor relu(Tensor x);

    struct PoolResult {
        Tensor values;                   // axis extent reduced to 1
        std::vector<std::size_t> argmax; // winning input index per output slot
    };
    PoolResult max_pool_axis(Tensor x, std::size_t axis);

    Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
    Tensor slice(Tensor x, std::size_t axis, std::size_t start, std::size_t len);
    Tensor repeat_rows(Tensor g, std::size_t n);
    Tensor add(Tensor a, Tensor b);
    Tensor sub(Tensor a, Tensor b);
    Tensor mul(Tensor a, Tensor b);
    Tensor scale(Tensor a, double s);
    Tensor gather_rows(Tensor x, const std::vector<std::size_t>& idx,
                       std::optional<std::size_t> group = std::nullopt);
    Tensor reshape(Tensor x, Shape shape);
    Tensor dropout(Tensor x, double rate, bool training, std::mt19937_64& rng);
    Tensor sum(Tensor x);
    Tensor cross_entropy(Tensor logits, const std::vector<int>& labels,
                         const std::vector<double>* class_weights = nullptr);

    /// Populates gradients for every node reachable from `loss` and pulls
    /// parameter gradients into their Parameter structs. Single-shot.
    void backward(Tensor loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    friend class Tensor;

    struct Node {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad;
        std::function<void()> backprop; // empty for constants
    };

    std::size_t make_node(Shape shape, std::vector<double> value);
    Node& node(std::size_t id) { return nodes_[id]; }
    const Node& node(std::size_t id) const { return nodes_[id]; }
    void check_same_tape(Tensor t) const;

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

/// One fully connected layer, y = x W + b, weight [in, out], bias [out].
class LinearLayer {
public:
    LinearLayer() = default;
    LinearLayer(std::string name, std::size_t in_dim, std::size_t out_dim,
                std::mt19937_64& rng);

    Tensor forward(Tape& tape, Tensor x);
    void register_params(ParamRegistry& reg);

    std::size_t in_dim() const { return weight.shape[0]; }
    std::size_t out_dim() const { return weight.shape[1]; }

    Parameter weight;
    Parameter bias;
};

/// Stacked linear layers with ReLU between them (and optionally after the
/// last one).
class Mlp {
public:
    Mlp() = default;
    Mlp(std::string name, const std::vector<std::size_t>& widths,
        bool relu_after_last, std::mt19937_64& rng);

    Tensor forward(Tape& tape, Tensor x);
    void register_params(ParamRegistry& reg);
    const std::vector<LinearLayer>& layers() const { return layers_; }
    std::vector<LinearLayer>& layers() { return layers_; }

private:
    std::vector<LinearLayer> layers_;
    bool relu_after_last_ = false;
};

/// Uniform draw in [0,1) from the generator's integer stream; avoids the
/// implementation-defined std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng);
/// Uniform in [lo, hi).
double uniform_in(std::mt19937_64& rng, double lo, double hi);
/// Standard normal via Box-Muller.
double normal01(std::mt19937_64& rng);

} // namespace pg
