#include "elevnav/navformer.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace elevnav {

namespace {

constexpr int kRowDim = static_cast<int>(JointState::kRowDim);
constexpr int kRobotDim = static_cast<int>(RobotState::kDim);
constexpr double kNormEps = 1e-5;

constexpr std::array<const char*, static_cast<std::size_t>(Param::Count)> kParamNames = {
    "embed_w1", "embed_b1", "embed_w2", "embed_b2",
    "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
    "norm1_gain", "norm1_bias",
    "ff_w1", "ff_b1", "ff_w2", "ff_b2",
    "norm2_gain", "norm2_bias",
    "weight_w", "weight_b",
    "value_w1", "value_b1", "value_w2", "value_b2", "value_w3", "value_b3",
};

struct Shape {
    int rows;
    int cols;
    int fan_in;  // 0 for normalisation parameters
};

std::vector<Shape> shapes_for(const NetDims& d) {
    const int e = d.embed_out;
    const int joint = kRobotDim + e;
    return {
        {kRowDim, d.embed_hidden, kRowDim}, {1, d.embed_hidden, kRowDim},
        {d.embed_hidden, e, d.embed_hidden}, {1, e, d.embed_hidden},
        {e, e, e}, {1, e, e}, {e, e, e}, {1, e, e}, {e, e, e}, {1, e, e}, {e, e, e}, {1, e, e},
        {1, e, 0}, {1, e, 0},
        {e, d.ff, e}, {1, d.ff, e}, {d.ff, e, d.ff}, {1, e, d.ff},
        {1, e, 0}, {1, e, 0},
        {e, 1, e}, {1, 1, e},
        {joint, d.value_hidden1, joint}, {1, d.value_hidden1, joint},
        {d.value_hidden1, d.value_hidden2, d.value_hidden1}, {1, d.value_hidden2, d.value_hidden1},
        {d.value_hidden2, 1, d.value_hidden2}, {1, 1, d.value_hidden2},
    };
}

std::vector<Mat> zeros_for(const NetDims& d) {
    std::vector<Mat> out;
    for (const auto& s : shapes_for(d)) out.push_back(Mat::Zero(s.rows, s.cols));
    return out;
}

void relu_inplace(Mat& m) { m = m.cwiseMax(0.0); }

// Zero the entries of `grad` where the activation was clipped.
void relu_backward(Mat& grad, const Mat& activated) {
    grad = (activated.array() > 0.0).select(grad, 0.0);
}

void add_bias(Mat& m, const Mat& bias) { m.rowwise() += bias.row(0); }

void layer_norm(const Mat& in, const Mat& gain, const Mat& bias, Mat& xhat, Eigen::VectorXd& inv_std,
                Mat& out) {
    const Eigen::Index rows = in.rows();
    const double cols = static_cast<double>(in.cols());
    xhat.resize(in.rows(), in.cols());
    inv_std.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = in.row(r).sum() / cols;
        const auto centred = in.row(r).array() - mean;
        const double var = centred.square().sum() / cols;
        inv_std(r) = 1.0 / std::sqrt(var + kNormEps);
        xhat.row(r) = centred * inv_std(r);
    }
    out = (xhat.array().rowwise() * gain.row(0).array()).matrix();
    add_bias(out, bias);
}

// Returns d(in) given d(out); accumulates gain/bias gradients.
Mat layer_norm_backward(const Mat& d_out, const Mat& xhat, const Eigen::VectorXd& inv_std, const Mat& gain,
                        Mat& d_gain, Mat& d_bias) {
    d_gain += (d_out.array() * xhat.array()).colwise().sum().matrix();
    d_bias += d_out.colwise().sum();
    const Mat d_xhat = (d_out.array().rowwise() * gain.row(0).array()).matrix();
    const double cols = static_cast<double>(d_out.cols());
    Mat d_in(d_out.rows(), d_out.cols());
    for (Eigen::Index r = 0; r < d_out.rows(); ++r) {
        const double m1 = d_xhat.row(r).sum() / cols;
        const double m2 = (d_xhat.row(r).array() * xhat.row(r).array()).sum() / cols;
        d_in.row(r) = inv_std(r) * (d_xhat.row(r).array() - m1 - xhat.row(r).array() * m2);
    }
    return d_in;
}

}  // namespace

const char* param_name(Param p) { return kParamNames[static_cast<std::size_t>(p)]; }

void NetDims::validate() const {
    if (embed_hidden <= 0 || embed_out <= 0 || heads <= 0 || ff <= 0 || value_hidden1 <= 0 ||
        value_hidden2 <= 0)
        throw InvalidArgument("network dimensions must be positive");
    if (embed_out % heads != 0) throw InvalidArgument("encoder width must be divisible by the head count");
}

void Gradients::set_zero() {
    for (auto& t : tensors) t.setZero();
}

bool Gradients::finite() const {
    for (const auto& t : tensors)
        if (!t.allFinite()) return false;
    return true;
}

double Gradients::norm() const {
    double sq = 0.0;
    for (const auto& t : tensors) sq += t.squaredNorm();
    return std::sqrt(sq);
}

double Gradients::clip_norm(double max_norm) {
    if (!(max_norm > 0.0)) throw InvalidArgument("clip norm must be positive");
    const double n = norm();
    if (std::isfinite(n) && n > max_norm)
        for (auto& t : tensors) t *= max_norm / n;
    return n;
}

std::size_t Gradients::size() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
}

ValueNet::ValueNet(NetDims dims) : dims_(dims), params_() {
    dims_.validate();
    params_ = zeros_for(dims_);
}

ValueNet ValueNet::random(NetDims dims, std::uint64_t seed) {
    ValueNet net(dims);
    Rng rng(seed);
    const auto shapes = shapes_for(net.dims_);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        Mat& m = net.params_[i];
        if (shapes[i].fan_in == 0) continue;
        const double bound = 1.0 / std::sqrt(static_cast<double>(shapes[i].fan_in));
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-bound, bound);
    }
    net[Param::Norm1Gain].setOnes();
    net[Param::Norm2Gain].setOnes();
    return net;
}

std::size_t ValueNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : params_) n += static_cast<std::size_t>(t.size());
    return n;
}

bool ValueNet::finite() const {
    for (const auto& t : params_)
        if (!t.allFinite()) return false;
    return true;
}

bool ValueNet::operator==(const ValueNet& other) const {
    if (!(dims_ == other.dims_)) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i] != other.params_[i]) return false;
    return true;
}

Gradients ValueNet::zero_gradients() const { return Gradients{zeros_for(dims_)}; }

struct ValueNet::Cache {
    std::vector<Eigen::Index> offsets;  // token range of sample s: [offsets[s], offsets[s+1])
    Mat x, robot;
    Mat h1, e;
    Mat q, k, v;
    std::vector<Mat> probs;  // per (sample, head)
    Mat o, z1, f1, z;
    Mat xhat1, xhat2;
    Eigen::VectorXd inv_std1, inv_std2;
    Eigen::VectorXd alpha;
    Mat crowd, joint, g1, g2;
    Eigen::VectorXd value;

    Eigen::Index samples() const { return static_cast<Eigen::Index>(offsets.size()) - 1; }
    Eigen::Index count(Eigen::Index s) const { return offsets[s + 1] - offsets[s]; }
};

void ValueNet::run(std::span<const JointState* const> states, Cache& c) const {
    const auto S = static_cast<Eigen::Index>(states.size());
    c.offsets.assign(states.size() + 1, 0);
    for (Eigen::Index s = 0; s < S; ++s)
        c.offsets[s + 1] = c.offsets[s] + static_cast<Eigen::Index>(states[s]->humans.size());
    const Eigen::Index T = c.offsets.back();

    c.x.resize(T, kRowDim);
    c.robot.resize(S, kRobotDim);
    for (Eigen::Index s = 0; s < S; ++s) {
        const JointState& js = *states[s];
        if (!js.finite()) throw InvalidArgument("value network: non-finite state");
        js.robot.flatten_into(c.robot.row(s).data());
        for (Eigen::Index i = 0; i < c.count(s); ++i) {
            double* row = c.x.row(c.offsets[s] + i).data();
            js.robot.flatten_into(row);
            js.humans[static_cast<std::size_t>(i)].flatten_into(row + kRobotDim);
        }
    }

    const int d = dims_.embed_out;
    const int heads = dims_.heads;
    const int dk = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const auto& P = params_;
    auto W = [&](Param p) -> const Mat& { return P[static_cast<std::size_t>(p)]; };

    c.h1 = c.x * W(Param::EmbedW1);
    add_bias(c.h1, W(Param::EmbedB1));
    relu_inplace(c.h1);
    c.e = c.h1 * W(Param::EmbedW2);
    add_bias(c.e, W(Param::EmbedB2));
    relu_inplace(c.e);

    c.q = c.e * W(Param::Wq);
    add_bias(c.q, W(Param::Bq));
    c.k = c.e * W(Param::Wk);
    add_bias(c.k, W(Param::Bk));
    c.v = c.e * W(Param::Wv);
    add_bias(c.v, W(Param::Bv));

    c.o.resize(T, d);
    c.probs.assign(static_cast<std::size_t>(S * heads), Mat());
    for (Eigen::Index s = 0; s < S; ++s) {
        const Eigen::Index off = c.offsets[s];
        const Eigen::Index n = c.count(s);
        if (n == 0) continue;
        for (int h = 0; h < heads; ++h) {
            Mat scores = c.q.block(off, h * dk, n, dk) * c.k.block(off, h * dk, n, dk).transpose() * scale;
            for (Eigen::Index r = 0; r < n; ++r) {
                const double mx = scores.row(r).maxCoeff();
                scores.row(r) = (scores.row(r).array() - mx).exp();
                scores.row(r) /= scores.row(r).sum();
            }
            c.o.block(off, h * dk, n, dk) = scores * c.v.block(off, h * dk, n, dk);
            c.probs[static_cast<std::size_t>(s * heads + h)] = std::move(scores);
        }
    }

    Mat y1 = c.o * W(Param::Wo);
    add_bias(y1, W(Param::Bo));
    y1 += c.e;
    layer_norm(y1, W(Param::Norm1Gain), W(Param::Norm1Bias), c.xhat1, c.inv_std1, c.z1);

    c.f1 = c.z1 * W(Param::FfW1);
    add_bias(c.f1, W(Param::FfB1));
    relu_inplace(c.f1);
    Mat y2 = c.f1 * W(Param::FfW2);
    add_bias(y2, W(Param::FfB2));
    y2 += c.z1;
    layer_norm(y2, W(Param::Norm2Gain), W(Param::Norm2Bias), c.xhat2, c.inv_std2, c.z);

    const Eigen::VectorXd logits = (c.z * W(Param::WeightW)).col(0).array() + W(Param::WeightB)(0, 0);
    c.alpha.resize(T);
    c.crowd = Mat::Zero(S, d);
    for (Eigen::Index s = 0; s < S; ++s) {
        const Eigen::Index off = c.offsets[s];
        const Eigen::Index n = c.count(s);
        if (n == 0) continue;
        const double mx = logits.segment(off, n).maxCoeff();
        Eigen::VectorXd w = (logits.segment(off, n).array() - mx).exp();
        w /= w.sum();
        c.alpha.segment(off, n) = w;
        c.crowd.row(s) = w.transpose() * c.e.block(off, 0, n, d);
    }

    c.joint.resize(S, kRobotDim + d);
    c.joint << c.robot, c.crowd;
    c.g1 = c.joint * W(Param::ValueW1);
    add_bias(c.g1, W(Param::ValueB1));
    relu_inplace(c.g1);
    c.g2 = c.g1 * W(Param::ValueW2);
    add_bias(c.g2, W(Param::ValueB2));
    relu_inplace(c.g2);
    c.value = (c.g2 * W(Param::ValueW3)).col(0).array() + W(Param::ValueB3)(0, 0);
}

void ValueNet::back(const Cache& c, std::span<const double> upstream, Gradients& g) const {
    const Eigen::Index S = c.samples();
    const int d = dims_.embed_out;
    const int heads = dims_.heads;
    const int dk = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    auto W = [&](Param p) -> const Mat& { return params_[static_cast<std::size_t>(p)]; };

    Mat dv(S, 1);
    for (Eigen::Index s = 0; s < S; ++s) dv(s, 0) = upstream[static_cast<std::size_t>(s)];

    // Value head.
    g[Param::ValueW3].noalias() += c.g2.transpose() * dv;
    g[Param::ValueB3](0, 0) += dv.sum();
    Mat dg2 = dv * W(Param::ValueW3).transpose();
    relu_backward(dg2, c.g2);
    g[Param::ValueW2].noalias() += c.g1.transpose() * dg2;
    g[Param::ValueB2] += dg2.colwise().sum();
    Mat dg1 = dg2 * W(Param::ValueW2).transpose();
    relu_backward(dg1, c.g1);
    g[Param::ValueW1].noalias() += c.joint.transpose() * dg1;
    g[Param::ValueB1] += dg1.colwise().sum();
    const Mat djoint = dg1 * W(Param::ValueW1).transpose();

    const Eigen::Index T = c.offsets.back();
    if (T == 0) return;

    // Weighted sum and softmax over humans.
    Mat de = Mat::Zero(T, d);
    Eigen::VectorXd dlogit(T);
    for (Eigen::Index s = 0; s < S; ++s) {
        const Eigen::Index off = c.offsets[s];
        const Eigen::Index n = c.count(s);
        if (n == 0) continue;
        const auto dcrowd = djoint.block(s, kRobotDim, 1, d);
        const auto alpha = c.alpha.segment(off, n);
        de.block(off, 0, n, d) += alpha * dcrowd;
        const Eigen::VectorXd dalpha = c.e.block(off, 0, n, d) * dcrowd.transpose();
        const double mean = alpha.dot(dalpha);
        dlogit.segment(off, n) = alpha.array() * (dalpha.array() - mean);
    }
    g[Param::WeightW].noalias() += c.z.transpose() * dlogit;
    g[Param::WeightB](0, 0) += dlogit.sum();
    const Mat dz = dlogit * W(Param::WeightW).transpose();

    // Second residual block.
    const Mat dy2 = layer_norm_backward(dz, c.xhat2, c.inv_std2, W(Param::Norm2Gain), g[Param::Norm2Gain],
                                        g[Param::Norm2Bias]);
    g[Param::FfW2].noalias() += c.f1.transpose() * dy2;
    g[Param::FfB2] += dy2.colwise().sum();
    Mat df1 = dy2 * W(Param::FfW2).transpose();
    relu_backward(df1, c.f1);
    g[Param::FfW1].noalias() += c.z1.transpose() * df1;
    g[Param::FfB1] += df1.colwise().sum();
    Mat dz1 = dy2;
    dz1.noalias() += df1 * W(Param::FfW1).transpose();

    // First residual block.
    const Mat dy1 = layer_norm_backward(dz1, c.xhat1, c.inv_std1, W(Param::Norm1Gain), g[Param::Norm1Gain],
                                        g[Param::Norm1Bias]);
    de += dy1;
    g[Param::Wo].noalias() += c.o.transpose() * dy1;
    g[Param::Bo] += dy1.colwise().sum();
    const Mat d_o = dy1 * W(Param::Wo).transpose();

    Mat dq = Mat::Zero(T, d), dk_m = Mat::Zero(T, d), dval = Mat::Zero(T, d);
    for (Eigen::Index s = 0; s < S; ++s) {
        const Eigen::Index off = c.offsets[s];
        const Eigen::Index n = c.count(s);
        if (n == 0) continue;
        for (int h = 0; h < heads; ++h) {
            const Mat& p = c.probs[static_cast<std::size_t>(s * heads + h)];
            const auto dout = d_o.block(off, h * dk, n, dk);
            dval.block(off, h * dk, n, dk).noalias() += p.transpose() * dout;
            const Mat dp = dout * c.v.block(off, h * dk, n, dk).transpose();
            Mat ds = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
            ds *= scale;
            dq.block(off, h * dk, n, dk).noalias() += ds * c.k.block(off, h * dk, n, dk);
            dk_m.block(off, h * dk, n, dk).noalias() += ds.transpose() * c.q.block(off, h * dk, n, dk);
        }
    }
    g[Param::Wq].noalias() += c.e.transpose() * dq;
    g[Param::Bq] += dq.colwise().sum();
    g[Param::Wk].noalias() += c.e.transpose() * dk_m;
    g[Param::Bk] += dk_m.colwise().sum();
    g[Param::Wv].noalias() += c.e.transpose() * dval;
    g[Param::Bv] += dval.colwise().sum();
    de.noalias() += dq * W(Param::Wq).transpose();
    de.noalias() += dk_m * W(Param::Wk).transpose();
    de.noalias() += dval * W(Param::Wv).transpose();

    // Embedding MLP.
    relu_backward(de, c.e);
    g[Param::EmbedW2].noalias() += c.h1.transpose() * de;
    g[Param::EmbedB2] += de.colwise().sum();
    Mat dh1 = de * W(Param::EmbedW2).transpose();
    relu_backward(dh1, c.h1);
    g[Param::EmbedW1].noalias() += c.x.transpose() * dh1;
    g[Param::EmbedB1] += dh1.colwise().sum();
}

ForwardOutput ValueNet::forward(const JointState& state) const {
    Cache c;
    const JointState* ptr = &state;
    run(std::span<const JointState* const>(&ptr, 1), c);
    ForwardOutput out;
    out.value = c.value(0);
    out.attention.assign(c.alpha.data(), c.alpha.data() + c.alpha.size());
    return out;
}

std::vector<double> ValueNet::values(std::span<const JointState* const> states) const {
    if (states.empty()) return {};
    Cache c;
    run(states, c);
    return {c.value.data(), c.value.data() + c.value.size()};
}

std::vector<double> ValueNet::values(std::span<const JointState> states) const {
    std::vector<const JointState*> ptrs;
    ptrs.reserve(states.size());
    for (const auto& s : states) ptrs.push_back(&s);
    return values(std::span<const JointState* const>(ptrs));
}

Gradients ValueNet::backward(const JointState& state, double upstream) const {
    Gradients g = zero_gradients();
    const JointState* ptr = &state;
    accumulate(std::span<const JointState* const>(&ptr, 1), std::span<const double>(&upstream, 1), g);
    return g;
}

std::vector<double> ValueNet::accumulate(std::span<const JointState* const> states,
                                         std::span<const double> upstream, Gradients& grads) const {
    if (states.size() != upstream.size()) throw InvalidArgument("accumulate: size mismatch");
    if (states.empty()) return {};
    Cache c;
    run(states, c);
    back(c, upstream, grads);
    return {c.value.data(), c.value.data() + c.value.size()};
}

double ValueNet::mse_gradients(std::span<const JointState* const> states, std::span<const double> targets,
                               Gradients& grads) const {
    if (states.size() != targets.size()) throw InvalidArgument("mse_gradients: size mismatch");
    if (states.empty()) return 0.0;
    Cache c;
    run(states, c);
    const double n = static_cast<double>(states.size());
    std::vector<double> upstream(states.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double err = c.value(static_cast<Eigen::Index>(i)) - targets[i];
        loss += err * err;
        upstream[i] = 2.0 * err / n;
    }
    back(c, upstream, grads);
    return loss / n;
}

SgdOptimizer::SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {
    set_lr(lr);
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0,1)");
}

void SgdOptimizer::set_lr(double lr) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be non-negative");
    lr_ = lr;
}

void SgdOptimizer::step(ValueNet& net, const Gradients& grads) {
    auto& params = net.tensors();
    if (grads.tensors.size() != params.size()) throw InvalidArgument("sgd: gradient shape mismatch");
    if (!grads.finite()) {
        ++skipped_;
        throw TrainingFault("sgd: non-finite gradients, batch skipped");
    }
    if (velocity_.empty()) {
        for (const auto& p : params) velocity_.push_back(Mat::Zero(p.rows(), p.cols()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity_[i] = momentum_ * velocity_[i] + grads.tensors[i];
        params[i] -= lr_ * velocity_[i];
    }
}

namespace {

constexpr std::array<char, 4> kMagic = {'N', 'A', 'V', 'F'};
constexpr std::uint32_t kDimCount = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return std::bit_cast<double>(v);
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("weight file truncated");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_weights(const ValueNet& net) {
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    put_u32(out, kWeightFormatVersion);
    const NetDims& d = net.dims();
    put_u32(out, kDimCount);
    for (int v : {kRowDim, kRobotDim, d.embed_hidden, d.embed_out, d.heads, d.ff, d.value_hidden1,
                  d.value_hidden2})
        put_u32(out, static_cast<std::uint32_t>(v));
    for (const auto& t : net.tensors())
        for (Eigen::Index i = 0; i < t.size(); ++i) put_f64(out, t.data()[i]);
    return out;
}

ValueNet deserialize_weights(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw FormatError("not a value-network weight file (bad magic)");
    Reader in(bytes.subspan(kMagic.size()));
    const std::uint32_t version = in.u32();
    if (version != kWeightFormatVersion)
        throw UnsupportedVersion("unsupported weight file version " + std::to_string(version));
    if (in.u32() != kDimCount) throw FormatError("weight file dimension table has the wrong length");
    std::array<std::uint32_t, kDimCount> t{};
    for (auto& v : t) v = in.u32();
    if (t[0] != static_cast<std::uint32_t>(kRowDim) || t[1] != static_cast<std::uint32_t>(kRobotDim))
        throw FormatError("weight file state dimensions do not match");
    for (auto v : t)
        if (v == 0 || v > 1u << 16) throw FormatError("weight file dimension out of range");
    NetDims d;
    d.embed_hidden = static_cast<int>(t[2]);
    d.embed_out = static_cast<int>(t[3]);
    d.heads = static_cast<int>(t[4]);
    d.ff = static_cast<int>(t[5]);
    d.value_hidden1 = static_cast<int>(t[6]);
    d.value_hidden2 = static_cast<int>(t[7]);
    try {
        d.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("weight file: ") + e.what());
    }
    ValueNet net(d);
    for (auto& m : net.tensors())
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = in.f64();
    if (!in.at_end()) throw FormatError("weight file has trailing bytes");
    return net;
}

void save_weights(const ValueNet& net, const std::filesystem::path& path) {
    const auto bytes = serialize_weights(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

ValueNet load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open weight file " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

ValueNet load_weights(const std::filesystem::path& path, const NetDims& expected) {
    ValueNet net = load_weights(path);
    if (!(net.dims() == expected)) throw FormatError("weight file dimension table does not match the configuration");
    return net;
}

}  // namespace elevnav
