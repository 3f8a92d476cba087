#pragma once

#include <span>
#include <vector>

#include "relaysim/rng.hpp"

namespace relaysim {

struct ParamTensors;

// Fully connected network with ReLU hidden activations and a linear output
// layer. Weight matrices are row-major (out x in). All arithmetic is double
// precision.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<int> dims); // zero parameters

    // Uniform init in +-sqrt(6/(fan_in+fan_out)) per layer, zero biases.
    static Mlp glorot_uniform(std::vector<int> dims, Rng& rng);

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int layer_count() const { return static_cast<int>(weights_.size()); }

    // Throws std::invalid_argument on wrong input size or non-finite input.
    std::vector<double> forward(std::span<const double> input) const;

    std::vector<std::vector<double>>& weights() { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& weights() const { return weights_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    bool same_shape(const Mlp& other) const;
    bool equal_parameters(const Mlp& other) const; // exact comparison

    struct Workspace {
        std::vector<std::vector<double>> activations; // [0]=input .. [L]=output
        std::vector<std::vector<double>> deltas;      // per-layer output deltas
    };

    // Forward pass that keeps activations for a later backward pass.
    // Returns the output activation held inside the workspace.
    const std::vector<double>& forward_cached(std::span<const double> input,
                                              Workspace& ws) const;

    // Accumulates parameter gradients for the sample last run through
    // forward_cached, given the loss gradient w.r.t. the network output.
    // ReLU uses subgradient 0 at the kink.
    void backward(Workspace& ws, std::span<const double> output_grad,
                  ParamTensors& grad_accum) const;

private:
    void validate_input(std::span<const double> input) const;

    std::vector<int> dims_;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<double>> biases_;
};

// Per-parameter buffers shaped like a network (gradients, Adam moments).
struct ParamTensors {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static ParamTensors zeros_like(const Mlp& net);
    void fill(double value);
};

using Gradients = ParamTensors;

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double stability_eps = 1e-8;
};

// Bias-corrected Adam over a network's parameters.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(const Mlp& net);

    void step(Mlp& net, const Gradients& grad, double learning_rate,
              const AdamConfig& cfg);

    std::uint64_t step_count() const { return t_; }

    ParamTensors& first_moment() { return m_; }
    ParamTensors& second_moment() { return v_; }
    const ParamTensors& first_moment() const { return m_; }
    const ParamTensors& second_moment() const { return v_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

private:
    ParamTensors m_, v_;
    std::uint64_t t_ = 0;
};

} // namespace relaysim
