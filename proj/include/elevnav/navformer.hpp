#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "elevnav/core.hpp"

namespace elevnav {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NetDims {
    int embed_hidden = 150;
    int embed_out = 100;  // also the encoder width
    int heads = 4;
    int ff = 150;
    int value_hidden1 = 100;
    int value_hidden2 = 100;

    void validate() const;
    bool operator==(const NetDims&) const = default;
};

// Parameter tensors in declaration (and file) order.
enum class Param : std::size_t {
    EmbedW1, EmbedB1, EmbedW2, EmbedB2,
    Wq, Bq, Wk, Bk, Wv, Bv, Wo, Bo,
    Norm1Gain, Norm1Bias,
    FfW1, FfB1, FfW2, FfB2,
    Norm2Gain, Norm2Bias,
    WeightW, WeightB,
    ValueW1, ValueB1, ValueW2, ValueB2, ValueW3, ValueB3,
    Count
};

const char* param_name(Param p);

// Same shapes as the network's parameters.
struct Gradients {
    std::vector<Mat> tensors;

    void set_zero();
    bool finite() const;
    std::size_t size() const;
    double norm() const;
    // Rescales to global L2 norm max_norm when above it; returns the norm before.
    double clip_norm(double max_norm);
    Mat& operator[](Param p) { return tensors[static_cast<std::size_t>(p)]; }
    const Mat& operator[](Param p) const { return tensors[static_cast<std::size_t>(p)]; }
};

struct ForwardOutput {
    double value = 0.0;
    std::vector<double> attention;
};

// State-value network: per-human embedding MLP, one transformer encoder
// block over the human tokens, a softmax weight per human, the weighted
// sum of embeddings concatenated with the robot state, and a value MLP.
class ValueNet {
public:
    // All parameters zero (normalisation gains included).
    explicit ValueNet(NetDims dims = {});

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, unit norm gains.
    static ValueNet random(NetDims dims, std::uint64_t seed);

    const NetDims& dims() const { return dims_; }
    std::size_t parameter_count() const;

    Mat& operator[](Param p) { return params_[static_cast<std::size_t>(p)]; }
    const Mat& operator[](Param p) const { return params_[static_cast<std::size_t>(p)]; }
    std::vector<Mat>& tensors() { return params_; }
    const std::vector<Mat>& tensors() const { return params_; }

    ForwardOutput forward(const JointState& state) const;
    std::vector<double> values(std::span<const JointState> states) const;
    std::vector<double> values(std::span<const JointState* const> states) const;

    Gradients zero_gradients() const;
    // Gradients of upstream * value(state).
    Gradients backward(const JointState& state, double upstream) const;
    // Adds d(sum_s upstream[s] * value(states[s])) to `grads`; returns the values.
    std::vector<double> accumulate(std::span<const JointState* const> states,
                                   std::span<const double> upstream, Gradients& grads) const;
    // Mean squared error over the batch; gradients of that loss go into `grads`.
    double mse_gradients(std::span<const JointState* const> states, std::span<const double> targets,
                         Gradients& grads) const;

    bool finite() const;
    bool operator==(const ValueNet& other) const;

private:
    struct Cache;
    void run(std::span<const JointState* const> states, Cache& cache) const;
    void back(const Cache& cache, std::span<const double> upstream, Gradients& grads) const;

    NetDims dims_;
    std::vector<Mat> params_;
};

// Classical momentum: velocity = momentum * velocity + grad; theta -= lr * velocity.
class SgdOptimizer {
public:
    SgdOptimizer(double lr, double momentum);

    // Non-finite gradients leave the net untouched, bump skipped() and throw TrainingFault.
    void step(ValueNet& net, const Gradients& grads);

    double lr() const { return lr_; }
    void set_lr(double lr);
    double momentum() const { return momentum_; }
    int skipped() const { return skipped_; }

private:
    double lr_;
    double momentum_;
    std::vector<Mat> velocity_;
    int skipped_ = 0;
};

inline constexpr std::uint32_t kWeightFormatVersion = 1;

void save_weights(const ValueNet& net, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_weights(const ValueNet& net);
ValueNet load_weights(const std::filesystem::path& path);
// Rejects files whose dimension table differs from `expected`.
ValueNet load_weights(const std::filesystem::path& path, const NetDims& expected);
ValueNet deserialize_weights(std::span<const std::uint8_t> bytes);

}  // namespace elevnav
