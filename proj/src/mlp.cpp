#include "relaysim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relaysim {

namespace {

// Four-way unrolled dot product: fixed summation order (deterministic) while
// still vectorizing without -ffast-math.
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) {
        throw std::invalid_argument("network needs at least input and output dims");
    }
    for (int d : dims_) {
        if (d < 1) throw std::invalid_argument("layer width must be positive");
    }
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        weights_.emplace_back(static_cast<std::size_t>(dims_[l]) * dims_[l + 1], 0.0);
        biases_.emplace_back(static_cast<std::size_t>(dims_[l + 1]), 0.0);
    }
}

Mlp Mlp::glorot_uniform(std::vector<int> dims, Rng& rng) {
    Mlp net(std::move(dims));
    for (std::size_t l = 0; l < net.weights_.size(); ++l) {
        const double fan_in = net.dims_[l];
        const double fan_out = net.dims_[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : net.weights_[l]) {
            w = (2.0 * rng.uniform() - 1.0) * limit;
        }
    }
    return net;
}

void Mlp::validate_input(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != input_dim()) {
        throw std::invalid_argument("input size does not match network input dim");
    }
    for (double v : input) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("non-finite network input");
        }
    }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
    Workspace ws;
    return forward_cached(input, ws);
}

const std::vector<double>& Mlp::forward_cached(std::span<const double> input,
                                               Workspace& ws) const {
    validate_input(input);
    const std::size_t n_layers = weights_.size();
    ws.activations.resize(n_layers + 1);
    ws.activations[0].assign(input.begin(), input.end());

    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t in = static_cast<std::size_t>(dims_[l]);
        const std::size_t out = static_cast<std::size_t>(dims_[l + 1]);
        const std::vector<double>& x = ws.activations[l];
        std::vector<double>& y = ws.activations[l + 1];
        y.resize(out);
        const bool hidden = l + 1 < n_layers;
        const double* w = weights_[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            double z = biases_[l][o] + dot(w + o * in, x.data(), in);
            y[o] = hidden && z < 0.0 ? 0.0 : z;
        }
    }
    return ws.activations[n_layers];
}

void Mlp::backward(Workspace& ws, std::span<const double> output_grad,
                   ParamTensors& grad_accum) const {
    const std::size_t n_layers = weights_.size();
    if (ws.activations.size() != n_layers + 1) {
        throw std::logic_error("backward without a cached forward pass");
    }
    if (static_cast<int>(output_grad.size()) != output_dim()) {
        throw std::invalid_argument("output gradient size mismatch");
    }
    ws.deltas.resize(n_layers);
    ws.deltas[n_layers - 1].assign(output_grad.begin(), output_grad.end());

    for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t in = static_cast<std::size_t>(dims_[l]);
        const std::size_t out = static_cast<std::size_t>(dims_[l + 1]);
        const std::vector<double>& delta = ws.deltas[l];
        const std::vector<double>& x = ws.activations[l];

        double* gw = grad_accum.w[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            if (delta[o] != 0.0) {
                axpy(delta[o], x.data(), gw + o * in, in);
            }
            grad_accum.b[l][o] += delta[o];
        }

        if (l == 0) break;
        std::vector<double>& prev = ws.deltas[l - 1];
        prev.assign(in, 0.0);
        const double* w = weights_[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            if (delta[o] != 0.0) {
                axpy(delta[o], w + o * in, prev.data(), in);
            }
        }
        // ReLU: derivative is 1 where the activation is positive, else 0
        // (exactly 0 at the kink).
        for (std::size_t i = 0; i < in; ++i) {
            if (x[i] <= 0.0) prev[i] = 0.0;
        }
    }
}

bool Mlp::same_shape(const Mlp& other) const { return dims_ == other.dims_; }

bool Mlp::equal_parameters(const Mlp& other) const {
    return same_shape(other) && weights_ == other.weights_ && biases_ == other.biases_;
}

ParamTensors ParamTensors::zeros_like(const Mlp& net) {
    ParamTensors p;
    for (const auto& w : net.weights()) p.w.emplace_back(w.size(), 0.0);
    for (const auto& b : net.biases()) p.b.emplace_back(b.size(), 0.0);
    return p;
}

void ParamTensors::fill(double value) {
    for (auto& v : w) std::fill(v.begin(), v.end(), value);
    for (auto& v : b) std::fill(v.begin(), v.end(), value);
}

AdamState::AdamState(const Mlp& net)
    : m_(ParamTensors::zeros_like(net)), v_(ParamTensors::zeros_like(net)) {}

void AdamState::step(Mlp& net, const Gradients& grad, double learning_rate,
                     const AdamConfig& cfg) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));

    const auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                            std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.stability_eps);
        }
    };

    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        update(net.weights()[l], grad.w[l], m_.w[l], v_.w[l]);
        update(net.biases()[l], grad.b[l], m_.b[l], v_.b[l]);
    }
}

} // namespace relaysim
