// Small fully-connected networks with hand-rolled backprop, Adam, and soft
// target updates. Scalar-templated: training runs in float, the gradient
// finite-difference tests instantiate double.
//
// Layout: columns are samples. Hidden activation is ReLU; the output is
// linear or tanh scaled to +-out_scale (actor head).
#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/rng.hpp"

namespace proxops {

template <class S>
class Mlp {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    enum class Output { Linear, TanhScaled };

    struct Layer {
        Mat W;
        Vec b;
    };

    struct Cache {
        std::vector<Mat> act;  // act[0] = input, act[k] = output of layer k
        std::vector<Mat> pre;  // pre-activation of layer k
    };

    Mlp() = default;

    // widths = {in, hidden..., out}
    Mlp(const std::vector<int>& widths, Output out_kind, S out_scale, Rng& rng)
        : out_kind_(out_kind), out_scale_(out_scale) {
        if (widths.size() < 2) throw InvalidArgument("Mlp: need input and output widths");
        for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
            Layer l;
            l.W.resize(widths[k + 1], widths[k]);
            l.b = Vec::Zero(widths[k + 1]);
            const bool last = (k + 2 == widths.size());
            const S lim = last ? S(3e-3)
                               : S(1.0 / std::sqrt(static_cast<double>(widths[k])));
            for (long j = 0; j < l.W.size(); ++j)
                l.W.data()[j] = static_cast<S>(rng.uniform(-lim, lim));
            if (last)
                for (long j = 0; j < l.b.size(); ++j)
                    l.b.data()[j] = static_cast<S>(rng.uniform(-lim, lim));
            layers_.push_back(std::move(l));
        }
    }

    int input_dim() const { return static_cast<int>(layers_.front().W.cols()); }
    int output_dim() const { return static_cast<int>(layers_.back().W.rows()); }

    Mat forward(const Mat& x, Cache* cache = nullptr) const {
        Mat h = x;
        if (cache) {
            cache->act.clear();
            cache->pre.clear();
            cache->act.push_back(h);
        }
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            Mat z = (layers_[k].W * h).colwise() + layers_[k].b;
            const bool last = (k + 1 == layers_.size());
            if (cache) cache->pre.push_back(z);
            if (!last) {
                h = z.cwiseMax(S(0));
            } else if (out_kind_ == Output::TanhScaled) {
                h = out_scale_ * z.array().tanh().matrix();
            } else {
                h = z;
            }
            if (cache) cache->act.push_back(h);
        }
        return h;
    }

    // dy = dL/d(output). Fills `grads` (same shapes) and returns dL/d(input).
    Mat backward(const Cache& cache, const Mat& dy, Mlp& grads) const {
        grads.ensure_shapes(*this);
        Mat delta = dy;
        for (std::size_t k = layers_.size(); k-- > 0;) {
            const bool last = (k + 1 == layers_.size());
            if (last && out_kind_ == Output::TanhScaled) {
                const Mat t = cache.pre[k].array().tanh().matrix();
                delta = (delta.array() * out_scale_ * (S(1) - t.array().square())).matrix();
            } else if (!last) {
                delta = (delta.array() * (cache.pre[k].array() > S(0)).template cast<S>()).matrix();
            }
            grads.layers_[k].W = delta * cache.act[k].transpose();
            grads.layers_[k].b = delta.rowwise().sum();
            if (k > 0) delta = (layers_[k].W.transpose() * delta).eval();
            else return layers_[0].W.transpose() * delta;
        }
        return Mat();
    }

    struct AdamState {
        std::vector<Layer> m, v;
        long step = 0;
    };

    void adam_step(const Mlp& grads, AdamState& st, S lr, S beta1 = S(0.9),
                   S beta2 = S(0.999), S eps = S(1e-8)) {
        if (st.m.empty()) {
            st.m.resize(layers_.size());
            st.v.resize(layers_.size());
            for (std::size_t k = 0; k < layers_.size(); ++k) {
                st.m[k].W = Mat::Zero(layers_[k].W.rows(), layers_[k].W.cols());
                st.m[k].b = Vec::Zero(layers_[k].b.size());
                st.v[k] = st.m[k];
            }
        }
        st.step += 1;
        const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), st.step));
        const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), st.step));
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            auto upd = [&](Mat& p, Mat& m, Mat& v, const Mat& g) {
                m = beta1 * m + (S(1) - beta1) * g;
                v = (beta2 * v.array() + (S(1) - beta2) * g.array().square()).matrix();
                p -= (lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps)).matrix();
            };
            upd(layers_[k].W, st.m[k].W, st.v[k].W, grads.layers_[k].W);
            Mat bp = layers_[k].b, bm = st.m[k].b, bv = st.v[k].b;
            upd(bp, bm, bv, Mat(grads.layers_[k].b));
            layers_[k].b = bp;
            st.m[k].b = bm;
            st.v[k].b = bv;
        }
    }

    // target = (1 - tau) * target + tau * online
    static void soft_update(Mlp& target, const Mlp& online, S tau) {
        for (std::size_t k = 0; k < target.layers_.size(); ++k) {
            target.layers_[k].W = (S(1) - tau) * target.layers_[k].W + tau * online.layers_[k].W;
            target.layers_[k].b = (S(1) - tau) * target.layers_[k].b + tau * online.layers_[k].b;
        }
    }

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    Output output_kind() const { return out_kind_; }
    S output_scale() const { return out_scale_; }

    long parameter_count() const {
        long n = 0;
        for (const auto& l : layers_) n += l.W.size() + l.b.size();
        return n;
    }

    // Flat parameter access for finite-difference tests.
    S get_parameter(long idx) const { return *locate(const_cast<Mlp*>(this), idx); }
    void set_parameter(long idx, S value) { *locate(this, idx) = value; }

    void save(std::ostream& os) const {
        os << "proxops-mlp v1\n";
        os << "layers " << layers_.size() << " output "
           << (out_kind_ == Output::TanhScaled ? "tanh" : "linear") << " scale "
           << std::hexfloat << static_cast<double>(out_scale_) << std::defaultfloat << "\n";
        os << std::hexfloat;
        for (const auto& l : layers_) {
            os << "layer " << l.W.rows() << " " << l.W.cols() << "\n";
            for (long j = 0; j < l.W.size(); ++j) os << static_cast<double>(l.W.data()[j]) << " ";
            os << "\n";
            for (long j = 0; j < l.b.size(); ++j) os << static_cast<double>(l.b.data()[j]) << " ";
            os << "\n";
        }
        os << std::defaultfloat;
    }

    static Mlp load(std::istream& is) {
        std::string tag, ver;
        is >> tag >> ver;
        if (tag != "proxops-mlp" || ver != "v1")
            throw ConfigError("Mlp::load: unrecognized checkpoint header");
        std::string kw, outkind;
        std::size_t n_layers;
        double scale;
        is >> kw >> n_layers >> kw >> outkind >> kw >> scale;
        Mlp net;
        net.out_kind_ = (outkind == "tanh") ? Output::TanhScaled : Output::Linear;
        net.out_scale_ = static_cast<S>(scale);
        for (std::size_t k = 0; k < n_layers; ++k) {
            long rows, cols;
            is >> kw >> rows >> cols;
            Layer l;
            l.W.resize(rows, cols);
            l.b.resize(rows);
            for (long j = 0; j < l.W.size(); ++j) {
                double x;
                is >> x;
                l.W.data()[j] = static_cast<S>(x);
            }
            for (long j = 0; j < l.b.size(); ++j) {
                double x;
                is >> x;
                l.b.data()[j] = static_cast<S>(x);
            }
            net.layers_.push_back(std::move(l));
        }
        if (!is) throw ConfigError("Mlp::load: truncated checkpoint");
        return net;
    }

private:
    void ensure_shapes(const Mlp& like) {
        if (layers_.size() == like.layers_.size()) return;
        layers_.clear();
        for (const auto& l : like.layers_) {
            Layer g;
            g.W = Mat::Zero(l.W.rows(), l.W.cols());
            g.b = Vec::Zero(l.b.size());
            layers_.push_back(std::move(g));
        }
        out_kind_ = like.out_kind_;
        out_scale_ = like.out_scale_;
    }

    static S* locate(Mlp* self, long idx) {
        for (auto& l : self->layers_) {
            if (idx < l.W.size()) return l.W.data() + idx;
            idx -= l.W.size();
            if (idx < l.b.size()) return l.b.data() + idx;
            idx -= l.b.size();
        }
        throw InvalidArgument("Mlp: parameter index out of range");
    }

    std::vector<Layer> layers_;
    Output out_kind_ = Output::Linear;
    S out_scale_ = S(1);
};

}  // namespace proxops
