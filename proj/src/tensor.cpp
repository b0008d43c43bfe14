#include "pg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pg {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("tensor extents must be >= 1, got " + shape_str(shape));
    }
}

// Split a shape around `axis` into (outer, extent, inner) strides.
struct AxisSplit {
    std::size_t outer, extent, inner;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
    if (axis >= shape.size())
        throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape));
    AxisSplit s{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

} // namespace

Parameter::Parameter(std::string name_, Shape shape_)
    : name(std::move(name_)), shape(std::move(shape_)) {
    check_shape(shape);
    value.assign(shape_size(shape), 0.0);
    grad.assign(value.size(), 0.0);
}

void Parameter::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

void ParamRegistry::add(Parameter* p) {
    for (Parameter* q : params_) {
        if (q == p || q->name == p->name)
            throw std::logic_error("parameter registered twice: " + p->name);
    }
    params_.push_back(p);
}

std::size_t ParamRegistry::total_count() const {
    std::size_t n = 0;
    for (const Parameter* p : params_) n += p->size();
    return n;
}

void ParamRegistry::zero_grads() {
    for (Parameter* p : params_) p->zero_grad();
}

const Shape& Tensor::shape() const { return tape_->node(id_).shape; }
const std::vector<double>& Tensor::value() const { return tape_->node(id_).value; }
const std::vector<double>& Tensor::grad() const { return tape_->node(id_).grad; }
std::size_t Tensor::size() const { return value().size(); }

std::size_t Tape::make_node(Shape shape, std::vector<double> value) {
    check_shape(shape);
    if (shape_size(shape) != value.size())
        throw std::invalid_argument("shape " + shape_str(shape) + " does not match data length " +
                                    std::to_string(value.size()));
    if (consumed_) throw std::logic_error("tape already consumed by backward()");
    nodes_.push_back(Node{std::move(shape), std::move(value), {}, {}});
    return nodes_.size() - 1;
}

void Tape::check_same_tape(Tensor t) const {
    if (t.tape() != this) throw std::logic_error("tensor belongs to a different tape");
}

Tensor Tape::constant(Shape shape, std::vector<double> data) {
    return Tensor(this, make_node(std::move(shape), std::move(data)));
}

Tensor Tape::param(Parameter& p) {
    std::size_t id = make_node(p.shape, p.value);
    Parameter* pp = &p;
    nodes_[id].backprop = [this, id, pp]() {
        const auto& g = nodes_[id].grad;
        for (std::size_t i = 0; i < g.size(); ++i) pp->grad[i] += g[i];
    };
    return Tensor(this, id);
}

Tensor Tape::matmul(Tensor a, Tensor b) {
    check_same_tape(a);
    check_same_tape(b);
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
        throw std::invalid_argument("matmul shape mismatch: " + shape_str(sa) + " x " + shape_str(sb));
    const std::size_t m = sa[0], k = sa[1], n = sb[1];
    std::vector<double> out(m * n, 0.0);
    const auto& av = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }
    std::size_t id = make_node({m, n}, std::move(out));
    std::size_t ia = a.id(), ib = b.id();
    nodes_[id].backprop = [this, id, ia, ib, m, k, n]() {
        const auto& gc = nodes_[id].grad;
        const auto& av = nodes_[ia].value;
        const auto& bv = nodes_[ib].value;
        auto& ga = nodes_[ia].grad;
        auto& gb = nodes_[ib].grad;
        // dA += dC * B^T
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += gc[i * n + j] * bv[p * n + j];
                ga[i * k + p] += acc;
            }
        // dB += A^T * dC
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) acc += av[i * k + p] * gc[i * n + j];
                gb[p * n + j] += acc;
            }
    };
    return Tensor(this, id);
}

Tensor Tape::relu(Tensor x) {
    check_same_tape(x);
    std::vector<double> out(x.value());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    std::size_t id = make_node(x.shape(), std::move(out));
    std::size_t ix = x.id();
    nodes_[id].backprop = [this, id, ix]() {
        const auto& g = nodes_[id].grad;
        const auto& xv = nodes_[ix].value;
        auto& gx = nodes_[ix].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) gx[i] += g[i];
    };
    return Tensor(this, id);
}

Tape::PoolResult Tape::max_pool_axis(Tensor x, std::size_t axis) {
    check_same_tape(x);
    AxisSplit s = split_axis(x.shape(), axis);
    const auto& xv = x.value();
    Shape out_shape = x.shape();
    out_shape[axis] = 1;
    std::vector<double> out(s.outer * s.inner);
    std::vector<std::size_t> argmax(s.outer * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t in = 0; in < s.inner; ++in) {
            std::size_t best = 0;
            double bv = xv[o * s.extent * s.inner + in];
            for (std::size_t a = 1; a < s.extent; ++a) {
                double v = xv[(o * s.extent + a) * s.inner + in];
                if (v > bv) { // first winner kept on ties
                    bv = v;
                    best = a;
                }
            }
            out[o * s.inner + in] = bv;
            argmax[o * s.inner + in] = best;
        }
    std::size_t id = make_node(std::move(out_shape), std::move(out));
    std::size_t ix = x.id();
    auto am = argmax;
    nodes_[id].backprop = [this, id, ix, s, am]() {
        const auto& g = nodes_[id].grad;
        auto& gx = nodes_[ix].grad;
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t in = 0; in < s.inner; ++in) {
                std::size_t slot = o * s.inner + in;
                gx[(o * s.extent + am[slot]) * s.inner + in] += g[slot];
            }
    };
    return PoolResult{Tensor(this, id), std::move(argmax)};
}

Tensor Tape::concat(const std::vector<Tensor>& xs, std::size_t axis) {
    if (xs.empty()) throw std::invalid_argument("concat of zero tensors");
    for (Tensor t : xs) check_same_tape(t);
    const Shape& s0 = xs[0].shape();
    Shape out_shape = s0;
    std::size_t total = s0[axis];
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const Shape& si = xs[i].shape();
        if (si.size() != s0.size())
            throw std::invalid_argument("concat rank mismatch: " + shape_str(s0) + " vs " + shape_str(si));
        for (std::size_t d = 0; d < si.size(); ++d)
            if (d != axis && si[d] != s0[d])
                throw std::invalid_argument("concat shape mismatch on axis " + std::to_string(d) + ": " +
                                            shape_str(s0) + " vs " + shape_str(si));
        total += si[axis];
    }
    out_shape[axis] = total;
    AxisSplit so = split_axis(out_shape, axis);
    std::vector<double> out(shape_size(out_shape));
    std::size_t offset = 0;
    for (Tensor t : xs) {
        AxisSplit st = split_axis(t.shape(), axis);
        const auto& tv = t.value();
        for (std::size_t o = 0; o < st.outer; ++o)
            for (std::size_t a = 0; a < st.extent; ++a)
                std::copy_n(tv.begin() + (o * st.extent + a) * st.inner, st.inner,
                            out.begin() + (o * so.extent + offset + a) * so.inner);
        offset += st.extent;
    }
    std::size_t id = make_node(std::move(out_shape), std::move(out));
    std::vector<std::size_t> ids;
    std::vector<std::size_t> extents;
    for (Tensor t : xs) {
        ids.push_back(t.id());
        extents.push_back(t.shape()[axis]);
    }
    nodes_[id].backprop = [this, id, ids, extents, so]() {
        const auto& g = nodes_[id].grad;
        std::size_t offset = 0;
        for (std::size_t t = 0; t < ids.size(); ++t) {
            auto& gx = nodes_[ids[t]].grad;
            std::size_t ext = extents[t];
            for (std::size_t o = 0; o < so.outer; ++o)
                for (std::size_t a = 0; a < ext; ++a)
                    for (std::size_t in = 0; in < so.inner; ++in)
                        gx[(o * ext + a) * so.inner + in] += g[(o * so.extent + offset + a) * so.inner + in];
            offset += ext;
        }
    };
    return Tensor(this, id);
}

Tensor Tape::slice(Tensor x, std::size_t axis, std::size_t start, std::size_t len) {
    check_same_tape(x);
    AxisSplit s = split_axis(x.shape(), axis);
    if (start + len > s.extent || len == 0)
        throw std::invalid_argument("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                                    ") out of range for extent " + std::to_string(s.extent));
    Shape out_shape = x.shape();
    out_shape[axis] = len;
    std::vector<double> out(shape_size(out_shape));
    const auto& xv = x.value();
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t a = 0; a < len; ++a)
            std::copy_n(xv.begin() + (o * s.extent + start + a) * s.inner, s.inner,
                        out.begin() + (o * len + a) * s.inner);
    std::size_t id = make_node(std::move(out_shape), std::move(out));
    std::size_t ix = x.id();
    nodes_[id].backprop = [this, id, ix, s, start, len]() {
        const auto& g = nodes_[id].grad;
        auto& gx = nodes_[ix].grad;
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t a = 0; a < len; ++a)
                for (std::size_t in = 0; in < s.inner; ++in)
                    gx[(o * s.extent + start + a) * s.inner + in] += g[(o * len + a) * s.inner + in];
    };
    return Tensor(this, id);
}

Tensor Tape::repeat_rows(Tensor g, std::size_t n) {
    check_same_tape(g);
    const Shape& s = g.shape();
    if (s.size() != 2 || s[0] != 1)
        throw std::invalid_argument("repeat_rows expects shape [1,d], got " + shape_str(s));
    if (n == 0) throw std::invalid_argument("repeat_rows with n == 0");
    const std::size_t d = s[1];
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(g.value().begin(), d, out.begin() + i * d);
    std::size_t id = make_node({n, d}, std::move(out));
    std::size_t ig = g.id();
    nodes_[id].backprop = [this, id, ig, n, d]() {
        const auto& gr = nodes_[id].grad;
        auto& gg = nodes_[ig].grad;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gg[j] += gr[i * d + j];
    };
    return Tensor(this, id);
}

namespace {
enum class EwKind { Add, Sub };
}

// Shared add/sub with optional broadcast of a leading extent-1 operand.
Tensor Tape::add(Tensor a, Tensor b) {
    check_same_tape(a);
    check_same_tape(b);
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    auto rest_equal = [](const Shape& x, const Shape& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 1; i < x.size(); ++i)
            if (x[i] != y[i]) return false;
        return true;
    };
    bool same = sa == sb;
    bool bcast_b = !same && rest_equal(sa, sb) && sb[0] == 1;
    bool bcast_a = !same && rest_equal(sa, sb) && sa[0] == 1;
    if (!same && !bcast_a && !bcast_b)
        throw std::invalid_argument("add: non-broadcastable shapes " + shape_str(sa) + " vs " + shape_str(sb));
    if (bcast_a) return add(b, a); // commutative; put the broadcast operand second
    const std::size_t rows = sa[0];
    const std::size_t inner = shape_size(sa) / rows;
    std::vector<double> out(shape_size(sa));
    const auto& av = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < inner; ++j)
            out[i * inner + j] = av[i * inner + j] + bv[same ? i * inner + j : j];
    std::size_t id = make_node(sa, std::move(out));
    std::size_t ia = a.id(), ib = b.id();
    nodes_[id].backprop = [this, id, ia, ib, rows, inner, same]() {
        const auto& g = nodes_[id].grad;
        auto& ga = nodes_[ia].grad;
        auto& gb = nodes_[ib].grad;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < inner; ++j) {
                ga[i * inner + j] += g[i * inner + j];
                gb[same ? i * inner + j : j] += g[i * inner + j];
            }
    };
    return Tensor(this, id);
}

Tensor Tape::sub(Tensor a, Tensor b) {
    return add(a, scale(b, -1.0));
}

Tensor Tape::mul(Tensor a, Tensor b) {
    check_same_tape(a);
    check_same_tape(b);
    if (a.shape() != b.shape())
        throw std::invalid_argument("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    std::size_t id = make_node(a.shape(), std::move(out));
    std::size_t ia = a.id(), ib = b.id();
    nodes_[id].backprop = [this, id, ia, ib]() {
        const auto& g = nodes_[id].grad;
        const auto& av = nodes_[ia].value;
        const auto& bv = nodes_[ib].value;
        auto& ga = nodes_[ia].grad;
        auto& gb = nodes_[ib].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * bv[i];
            gb[i] += g[i] * av[i];
        }
    };
    return Tensor(this, id);
}

Tensor Tape::scale(Tensor a, double s) {
    check_same_tape(a);
    std::vector<double> out(a.value());
    for (double& v : out) v *= s;
    std::size_t id = make_node(a.shape(), std::move(out));
    std::size_t ia = a.id();
    nodes_[id].backprop = [this, id, ia, s]() {
        const auto& g = nodes_[id].grad;
        auto& ga = nodes_[ia].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    };
    return Tensor(this, id);
}

Tensor Tape::gather_rows(Tensor x, const std::vector<std::size_t>& idx,
                         std::optional<std::size_t> group) {
    check_same_tape(x);
    const Shape& s = x.shape();
    if (s.size() != 2) throw std::invalid_argument("gather_rows expects a rank-2 source, got " + shape_str(s));
    const std::size_t n = s[0], d = s[1];
    for (std::size_t i : idx)
        if (i >= n)
            throw std::out_of_range("gather_rows index " + std::to_string(i) + " out of bounds for " +
                                    std::to_string(n) + " rows");
    Shape out_shape;
    if (group) {
        if (*group == 0 || idx.size() % *group != 0)
            throw std::invalid_argument("gather_rows group size does not divide index count");
        out_shape = {idx.size() / *group, *group, d};
    } else {
        out_shape = {idx.size(), d};
    }
    std::vector<double> out(idx.size() * d);
    const auto& xv = x.value();
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(xv.begin() + idx[i] * d, d, out.begin() + i * d);
    std::size_t id = make_node(std::move(out_shape), std::move(out));
    std::size_t ix = x.id();
    auto idx_copy = idx;
    nodes_[id].backprop = [this, id, ix, idx_copy, d]() {
        const auto& g = nodes_[id].grad;
        auto& gx = nodes_[ix].grad;
        for (std::size_t i = 0; i < idx_copy.size(); ++i)
            for (std::size_t j = 0; j < d; ++j) gx[idx_copy[i] * d + j] += g[i * d + j];
    };
    return Tensor(this, id);
}

Tensor Tape::reshape(Tensor x, Shape shape) {
    check_same_tape(x);
    if (shape_size(shape) != x.size())
        throw std::invalid_argument("reshape from " + shape_str(x.shape()) + " to " + shape_str(shape) +
                                    " changes element count");
    std::size_t id = make_node(std::move(shape), x.value());
    std::size_t ix = x.id();
    nodes_[id].backprop = [this, id, ix]() {
        const auto& g = nodes_[id].grad;
        auto& gx = nodes_[ix].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
    return Tensor(this, id);
}

Tensor Tape::dropout(Tensor x, double rate, bool training, std::mt19937_64& rng) {
    check_same_tape(x);
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) {
        // Identity at inference; still a node so graphs have a uniform shape.
        return scale(x, 1.0);
    }
    const double keep = 1.0 - rate;
    std::vector<double> mask(x.size());
    for (double& m : mask) m = (uniform01(rng) < rate) ? 0.0 : 1.0 / keep;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * mask[i];
    std::size_t id = make_node(x.shape(), std::move(out));
    std::size_t ix = x.id();
    nodes_[id].backprop = [this, id, ix, mask]() {
        const auto& g = nodes_[id].grad;
        auto& gx = nodes_[ix].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    };
    return Tensor(this, id);
}

Tensor Tape::sum(Tensor x) {
    check_same_tape(x);
    double s = std::accumulate(x.value().begin(), x.value().end(), 0.0);
    std::size_t id = make_node({1}, {s});
    std::size_t ix = x.id();
    nodes_[id].backprop = [this, id, ix]() {
        const double g = nodes_[id].grad[0];
        auto& gx = nodes_[ix].grad;
        for (double& v : gx) v += g;
    };
    return Tensor(this, id);
}

Tensor Tape::cross_entropy(Tensor logits, const std::vector<int>& labels,
                           const std::vector<double>* class_weights) {
    check_same_tape(logits);
    const Shape& s = logits.shape();
    if (s.size() != 2) throw std::invalid_argument("cross_entropy expects [N,C] logits, got " + shape_str(s));
    const std::size_t n = s[0], c = s[1];
    if (labels.size() != n)
        throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(n) + " rows");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= c)
            throw std::out_of_range("cross_entropy: label " + std::to_string(l) + " outside [0," +
                                    std::to_string(c) + ")");
    if (class_weights && class_weights->size() != c)
        throw std::invalid_argument("cross_entropy: class weight count mismatch");

    const auto& lv = logits.value();
    std::vector<double> softmax(n * c);
    std::vector<double> w(n, 1.0);
    double wsum = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = lv[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, lv[i * c + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(lv[i * c + j] - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t j = 0; j < c; ++j) softmax[i * c + j] = std::exp(lv[i * c + j] - logz);
        if (class_weights) w[i] = (*class_weights)[static_cast<std::size_t>(labels[i])];
        wsum += w[i];
        loss += w[i] * (logz - lv[i * c + static_cast<std::size_t>(labels[i])]);
    }
    loss /= wsum;
    std::size_t id = make_node({1}, {loss});
    std::size_t il = logits.id();
    auto labels_copy = labels;
    nodes_[id].backprop = [this, id, il, labels_copy, softmax, w, wsum, n, c]() {
        const double g = nodes_[id].grad[0];
        auto& gl = nodes_[il].grad;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double onehot = (static_cast<std::size_t>(labels_copy[i]) == j) ? 1.0 : 0.0;
                gl[i * c + j] += g * w[i] * (softmax[i * c + j] - onehot) / wsum;
            }
    };
    return Tensor(this, id);
}

void Tape::backward(Tensor loss) {
    check_same_tape(loss);
    if (consumed_) throw std::logic_error("backward() already ran on this tape");
    if (loss.size() != 1) throw std::invalid_argument("backward requires a scalar loss, got " + shape_str(loss.shape()));
    if (nodes_.empty()) throw std::logic_error("backward on an empty tape");
    for (Node& nd : nodes_) nd.grad.assign(nd.value.size(), 0.0);
    nodes_[loss.id()].grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].backprop) nodes_[i].backprop();
    }
    consumed_ = true;
}

LinearLayer::LinearLayer(std::string name, std::size_t in_dim, std::size_t out_dim,
                         std::mt19937_64& rng)
    : weight(name + ".weight", {in_dim, out_dim}), bias(name + ".bias", {out_dim}) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    for (double& v : weight.value) v = uniform_in(rng, -bound, bound);
    // bias stays zero
}

Tensor LinearLayer::forward(Tape& tape, Tensor x) {
    Tensor w = tape.param(weight);
    Tensor b = tape.param(bias);
    Tensor y = tape.matmul(x, w);
    return tape.add(y, tape.reshape(b, {1, bias.shape[0]}));
}

void LinearLayer::register_params(ParamRegistry& reg) {
    reg.add(&weight);
    reg.add(&bias);
}

Mlp::Mlp(std::string name, const std::vector<std::size_t>& widths, bool relu_after_last,
         std::mt19937_64& rng)
    : relu_after_last_(relu_after_last) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least [in,out] widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        layers_.emplace_back(name + ".l" + std::to_string(i), widths[i], widths[i + 1], rng);
}

Tensor Mlp::forward(Tape& tape, Tensor x) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i].forward(tape, x);
        if (i + 1 < layers_.size() || relu_after_last_) x = tape.relu(x);
    }
    return x;
}

void Mlp::register_params(ParamRegistry& reg) {
    for (auto& l : layers_) l.register_params(reg);
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace pg
