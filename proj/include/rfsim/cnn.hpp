#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfsim/common.hpp"
#include "rfsim/dataset.hpp"
#include "rfsim/rng.hpp"

namespace rfsim {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Architecture of the raw-I/Q window classifier:
//   Conv(F, 1x7, same) -> MaxPool(1x2) -> Conv(F, 1x5, same) -> MaxPool(1x2)
//   -> Conv(F, 2x7, same) -> MaxPool(1x2) -> Conv(F, 2x5, same) -> Flatten
//   -> Dropout -> Dense(d1) -> Dropout -> Dense(d2) -> Dense(n_classes) -> Softmax
// with a rectified-linear activation after every conv and the first two dense
// layers. Pooling halves the width axis only. The width/filter parameters are
// configurable so tests can run a narrow variant; defaults follow the paper-
// style 40-filter, 1024/256/4 stack.
struct CnnSpec {
    int input_h = 2;
    int input_w = 256;
    int conv_filters = 40;
    int dense1 = 1024;
    int dense2 = 256;
    int n_classes = 4;

    int flatten_size() const { return input_h * (input_w / 8) * conv_filters; }

    static CnnSpec reduced() {
        CnnSpec s;
        s.conv_filters = 8;
        s.dense1 = 64;
        s.dense2 = 32;
        return s;
    }
};

// Geometry of one conv layer: kernel size, channel counts and the width of its
// input map. Heights are fixed at 2; "same" padding pads (kw-1)/2 columns each
// side and one extra row below when kh = 2.
struct ConvGeom {
    int c_in, c_out, kh, kw, w;
    int patch_size() const { return c_in * kh * kw; }
    int sites() const { return 2 * w; }
};

template <typename S>
struct ParamSet {
    std::array<Mat<S>, 4> conv_w;  // c_out x (c_in*kh*kw)
    std::array<Vec<S>, 4> conv_b;
    std::array<Mat<S>, 3> dense_w;
    std::array<Vec<S>, 3> dense_b;
};

// Visits every trainable tensor in canonical (serialization) order.
template <typename S, typename F>
void for_each_tensor(ParamSet<S>& p, F&& f) {
    for (int i = 0; i < 4; ++i) {
        f(p.conv_w[i]);
        f(p.conv_b[i]);
    }
    for (int i = 0; i < 3; ++i) {
        f(p.dense_w[i]);
        f(p.dense_b[i]);
    }
}

template <typename S, typename F>
void for_each_tensor(const ParamSet<S>& p, F&& f) {
    for (int i = 0; i < 4; ++i) {
        f(p.conv_w[i]);
        f(p.conv_b[i]);
    }
    for (int i = 0; i < 3; ++i) {
        f(p.dense_w[i]);
        f(p.dense_b[i]);
    }
}

// Walks four parameter sets in lockstep (weights, grads, adam m, adam v).
template <typename S, typename F>
void zip_tensors(ParamSet<S>& a, const ParamSet<S>& b, ParamSet<S>& c, ParamSet<S>& d, F&& f) {
    for (int i = 0; i < 4; ++i) {
        f(a.conv_w[i], b.conv_w[i], c.conv_w[i], d.conv_w[i]);
        f(a.conv_b[i], b.conv_b[i], c.conv_b[i], d.conv_b[i]);
    }
    for (int i = 0; i < 3; ++i) {
        f(a.dense_w[i], b.dense_w[i], c.dense_w[i], d.dense_w[i]);
        f(a.dense_b[i], b.dense_b[i], c.dense_b[i], d.dense_b[i]);
    }
}

template <typename S>
struct CnnModel {
    CnnSpec spec;
    ParamSet<S> params;
    std::uint64_t seed = 0;
    // Standardization statistics of the bundle the model was trained on
    // (bookkeeping; inference standardizes each bundle with its own stats).
    std::map<std::uint16_t, SourceStats> train_stats;

    std::array<ConvGeom, 4> geometry() const {
        const int f = spec.conv_filters;
        return {ConvGeom{1, f, 1, 7, spec.input_w}, ConvGeom{f, f, 1, 5, spec.input_w / 2},
                ConvGeom{f, f, 2, 7, spec.input_w / 4}, ConvGeom{f, f, 2, 5, spec.input_w / 8}};
    }

    static CnnModel init(const CnnSpec& spec, std::uint64_t seed);

    template <typename T>
    CnnModel<T> cast() const {
        CnnModel<T> out;
        out.spec = spec;
        out.seed = seed;
        out.train_stats = train_stats;
        for (int i = 0; i < 4; ++i) {
            out.params.conv_w[i] = params.conv_w[i].template cast<T>();
            out.params.conv_b[i] = params.conv_b[i].template cast<T>();
        }
        for (int i = 0; i < 3; ++i) {
            out.params.dense_w[i] = params.dense_w[i].template cast<T>();
            out.params.dense_b[i] = params.dense_b[i].template cast<T>();
        }
        return out;
    }
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 128;
    int max_epochs = 50;
    int patience = 5;
    double dropout1 = 0.5;
    double dropout2 = 0.5;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw InvalidInput("TrainConfig: learning_rate must be >= 0");
        if (batch_size < 1) throw InvalidInput("TrainConfig: batch_size must be >= 1");
        if (max_epochs < 1) throw InvalidInput("TrainConfig: max_epochs must be >= 1");
        if (patience < 1) throw InvalidInput("TrainConfig: patience must be >= 1");
        if (!(dropout1 >= 0.0 && dropout1 < 1.0 && dropout2 >= 0.0 && dropout2 < 1.0))
            throw InvalidInput("TrainConfig: dropout rates must be in [0, 1)");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw InvalidInput("TrainConfig: adam betas must be in [0, 1)");
        if (!(epsilon > 0.0)) throw InvalidInput("TrainConfig: epsilon must be > 0");
    }
};

struct Prediction {
    Eigen::VectorXd probs;
    int klass = 0;  // 0-based class index; device id is klass + 1
    double max_prob = 0.0;
};

struct EpochMetrics {
    int epoch;
    double train_loss;
    double train_acc;
    double val_acc;
};

struct TrainReport {
    std::vector<EpochMetrics> epochs;
    int best_epoch = 0;
    double best_val_acc = 0.0;
};

// ---------------------------------------------------------------------------
// forward / backward
// ---------------------------------------------------------------------------

namespace cnn_detail {

// Feature maps are (channels x sites*batch) matrices; sample b occupies the
// column block [b*sites, (b+1)*sites) and site s = y*w + x.
template <typename S>
void im2col(const Mat<S>& x, const ConvGeom& g, int batch, Mat<S>& patches) {
    const int sites = g.sites();
    const int k = g.patch_size();
    const int pad_left = (g.kw - 1) / 2;
    patches.resize(k, static_cast<Eigen::Index>(sites) * batch);
    for (int b = 0; b < batch; ++b) {
        const Eigen::Index in_base = static_cast<Eigen::Index>(b) * sites;
        for (int y = 0; y < 2; ++y) {
            for (int x_pos = 0; x_pos < g.w; ++x_pos) {
                S* dst = patches.data() + (in_base + y * g.w + x_pos) * k;
                for (int c = 0; c < g.c_in; ++c) {
                    for (int dy = 0; dy < g.kh; ++dy) {
                        const int sy = y + dy;
                        for (int dx = 0; dx < g.kw; ++dx) {
                            const int sx = x_pos + dx - pad_left;
                            const int row = (c * g.kh + dy) * g.kw + dx;
                            dst[row] = (sy < 2 && sx >= 0 && sx < g.w)
                                           ? x(c, in_base + sy * g.w + sx)
                                           : S(0);
                        }
                    }
                }
            }
        }
    }
}

template <typename S>
void col2im_add(const Mat<S>& dpatches, const ConvGeom& g, int batch, Mat<S>& dinput) {
    const int sites = g.sites();
    const int k = g.patch_size();
    const int pad_left = (g.kw - 1) / 2;
    dinput.setZero(g.c_in, static_cast<Eigen::Index>(sites) * batch);
    for (int b = 0; b < batch; ++b) {
        const Eigen::Index in_base = static_cast<Eigen::Index>(b) * sites;
        for (int y = 0; y < 2; ++y) {
            for (int x_pos = 0; x_pos < g.w; ++x_pos) {
                const S* src = dpatches.data() + (in_base + y * g.w + x_pos) * k;
                for (int c = 0; c < g.c_in; ++c) {
                    for (int dy = 0; dy < g.kh; ++dy) {
                        const int sy = y + dy;
                        if (sy >= 2) continue;
                        for (int dx = 0; dx < g.kw; ++dx) {
                            const int sx = x_pos + dx - pad_left;
                            if (sx < 0 || sx >= g.w) continue;
                            dinput(c, in_base + sy * g.w + sx) += src[(c * g.kh + dy) * g.kw + dx];
                        }
                    }
                }
            }
        }
    }
}

// MaxPool 1x2 stride 2 along the width axis; ties resolve to the left site.
template <typename S>
void maxpool(const Mat<S>& x, int w, int batch, Mat<S>& y,
             Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& idx) {
    const int w_out = w / 2;
    const int sites_in = 2 * w, sites_out = 2 * w_out;
    const Eigen::Index c = x.rows();
    y.resize(c, static_cast<Eigen::Index>(sites_out) * batch);
    idx.resize(c, y.cols());
    for (int b = 0; b < batch; ++b) {
        for (int row = 0; row < 2; ++row) {
            for (int xo = 0; xo < w_out; ++xo) {
                const Eigen::Index co = static_cast<Eigen::Index>(b) * sites_out + row * w_out + xo;
                const Eigen::Index ci = static_cast<Eigen::Index>(b) * sites_in + row * w + 2 * xo;
                for (Eigen::Index ch = 0; ch < c; ++ch) {
                    const S a = x(ch, ci), bb = x(ch, ci + 1);
                    if (a >= bb) {
                        y(ch, co) = a;
                        idx(ch, co) = 0;
                    } else {
                        y(ch, co) = bb;
                        idx(ch, co) = 1;
                    }
                }
            }
        }
    }
}

template <typename S>
void maxpool_backward(const Mat<S>& dy,
                      const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& idx, int w,
                      int batch, Mat<S>& dx) {
    const int w_out = w / 2;
    const int sites_in = 2 * w, sites_out = 2 * w_out;
    const Eigen::Index c = dy.rows();
    dx.setZero(c, static_cast<Eigen::Index>(sites_in) * batch);
    for (int b = 0; b < batch; ++b) {
        for (int row = 0; row < 2; ++row) {
            for (int xo = 0; xo < w_out; ++xo) {
                const Eigen::Index co = static_cast<Eigen::Index>(b) * sites_out + row * w_out + xo;
                const Eigen::Index ci = static_cast<Eigen::Index>(b) * sites_in + row * w + 2 * xo;
                for (Eigen::Index ch = 0; ch < c; ++ch) dx(ch, ci + idx(ch, co)) += dy(ch, co);
            }
        }
    }
}

template <typename S>
struct Workspace {
    std::array<Mat<S>, 4> patches;
    std::array<Mat<S>, 4> conv_act;   // post-relu conv outputs
    std::array<Mat<S>, 3> pooled;
    std::array<Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>, 3> pool_idx;
    Mat<S> input;        // 1 x (sites*batch) view of the window batch
    Mat<S> flat_in;      // flatten output after dropout (dense1 input)
    Mat<S> dense_act[2];  // post-relu dense activations
    Mat<S> dense2_in;    // dense2 input after dropout
    Mat<S> drop_mask1, drop_mask2;  // inverted-dropout masks (0 or 1/(1-p))
    Mat<S> logits, probs;
    int batch = 0;
};

// Inverted dropout mask: entry is 1/(1-p) with probability 1-p, else 0, drawn
// column-major so the consumption order is well defined.
template <typename S>
void fill_dropout_mask(Mat<S>& mask, Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
    mask.resize(rows, cols);
    if (p <= 0.0) {
        mask.setOnes();
        return;
    }
    const S scale = static_cast<S>(1.0 / (1.0 - p));
    S* data = mask.data();
    for (Eigen::Index i = 0; i < rows * cols; ++i) data[i] = rng.uniform01() >= p ? scale : S(0);
}

template <typename S>
void softmax_inplace(Mat<S>& z) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        auto col = z.col(j);
        const S m = col.maxCoeff();
        col = (col.array() - m).exp();
        col /= col.sum();
    }
}

// Runs the full stack on a batch of flattened windows (512 x batch). When
// `train` is set, dropout masks are drawn from `rng` and every intermediate
// needed by backward() is retained.
template <typename S>
void forward_batch(const CnnModel<S>& model, const Mat<S>& windows, bool train, double p1, double p2,
                   Rng* rng, Workspace<S>& ws) {
    const auto geoms = model.geometry();
    const int batch = static_cast<int>(windows.cols());
    if (windows.rows() != static_cast<Eigen::Index>(geoms[0].sites()))
        throw InvalidInput("forward: window batch has " + std::to_string(windows.rows()) +
                           " rows, expected " + std::to_string(geoms[0].sites()));
    ws.batch = batch;

    ws.input = Eigen::Map<const Mat<S>>(windows.data(), 1, windows.size());
    const Mat<S>* current = &ws.input;
    for (int i = 0; i < 4; ++i) {
        im2col(*current, geoms[i], batch, ws.patches[i]);
        ws.conv_act[i].noalias() = model.params.conv_w[i] * ws.patches[i];
        ws.conv_act[i].colwise() += model.params.conv_b[i];
        ws.conv_act[i] = ws.conv_act[i].cwiseMax(S(0));
        if (i < 3) {
            maxpool(ws.conv_act[i], geoms[i].w, batch, ws.pooled[i], ws.pool_idx[i]);
            current = &ws.pooled[i];
        }
    }

    const int flat = model.spec.flatten_size();
    Eigen::Map<const Mat<S>> flattened(ws.conv_act[3].data(), flat, batch);
    if (train) {
        fill_dropout_mask(ws.drop_mask1, flat, batch, p1, *rng);
        ws.flat_in = flattened.cwiseProduct(ws.drop_mask1);
    } else {
        ws.flat_in = flattened;
    }

    ws.dense_act[0].noalias() = model.params.dense_w[0] * ws.flat_in;
    ws.dense_act[0].colwise() += model.params.dense_b[0];
    ws.dense_act[0] = ws.dense_act[0].cwiseMax(S(0));

    if (train) {
        fill_dropout_mask(ws.drop_mask2, ws.dense_act[0].rows(), batch, p2, *rng);
        ws.dense2_in = ws.dense_act[0].cwiseProduct(ws.drop_mask2);
    } else {
        ws.dense2_in = ws.dense_act[0];
    }

    ws.dense_act[1].noalias() = model.params.dense_w[1] * ws.dense2_in;
    ws.dense_act[1].colwise() += model.params.dense_b[1];
    ws.dense_act[1] = ws.dense_act[1].cwiseMax(S(0));

    ws.logits.noalias() = model.params.dense_w[2] * ws.dense_act[1];
    ws.logits.colwise() += model.params.dense_b[2];
    ws.probs = ws.logits;
    softmax_inplace(ws.probs);
}

// Mean cross-entropy of the workspace logits against the given classes,
// computed through log-sum-exp for stability.
template <typename S>
double batch_loss(const Workspace<S>& ws, const std::vector<int>& classes) {
    double total = 0.0;
    for (std::size_t j = 0; j < classes.size(); ++j) {
        const auto col = ws.logits.col(static_cast<Eigen::Index>(j));
        const S m = col.maxCoeff();
        const double lse = static_cast<double>(m) +
                           std::log(static_cast<double>((col.array() - m).exp().sum()));
        total += lse - static_cast<double>(col(classes[j]));
    }
    return total / static_cast<double>(classes.size());
}

template <typename S>
void backward_batch(const CnnModel<S>& model, const Workspace<S>& ws, const std::vector<int>& classes,
                    bool train, ParamSet<S>& grads) {
    const auto geoms = model.geometry();
    const int batch = ws.batch;
    const S inv_batch = S(1) / static_cast<S>(batch);

    Mat<S> dz = ws.probs;
    for (int j = 0; j < batch; ++j) dz(classes[j], j) -= S(1);
    dz *= inv_batch;

    grads.dense_w[2].noalias() = dz * ws.dense_act[1].transpose();
    grads.dense_b[2] = dz.rowwise().sum();
    Mat<S> da = model.params.dense_w[2].transpose() * dz;

    dz = da.cwiseProduct((ws.dense_act[1].array() > S(0)).template cast<S>().matrix());
    grads.dense_w[1].noalias() = dz * ws.dense2_in.transpose();
    grads.dense_b[1] = dz.rowwise().sum();
    da.noalias() = model.params.dense_w[1].transpose() * dz;
    if (train) da = da.cwiseProduct(ws.drop_mask2);

    dz = da.cwiseProduct((ws.dense_act[0].array() > S(0)).template cast<S>().matrix());
    grads.dense_w[0].noalias() = dz * ws.flat_in.transpose();
    grads.dense_b[0] = dz.rowwise().sum();
    da.noalias() = model.params.dense_w[0].transpose() * dz;
    if (train) da = da.cwiseProduct(ws.drop_mask1);

    // Reinterpret the flatten gradient as the conv4 output map gradient.
    Mat<S> dmap = Eigen::Map<const Mat<S>>(da.data(), model.spec.conv_filters,
                                           static_cast<Eigen::Index>(geoms[3].sites()) * batch);
    for (int i = 3; i >= 0; --i) {
        dmap = dmap.cwiseProduct((ws.conv_act[i].array() > S(0)).template cast<S>().matrix());
        grads.conv_w[i].noalias() = dmap * ws.patches[i].transpose();
        grads.conv_b[i] = dmap.rowwise().sum();
        if (i == 0) break;
        Mat<S> dpatches;
        dpatches.noalias() = model.params.conv_w[i].transpose() * dmap;
        Mat<S> dpooled;
        col2im_add(dpatches, geoms[i], batch, dpooled);
        maxpool_backward(dpooled, ws.pool_idx[i - 1], geoms[i - 1].w, batch, dmap);
    }
}

}  // namespace cnn_detail

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

template <typename S>
CnnModel<S> CnnModel<S>::init(const CnnSpec& spec, std::uint64_t seed) {
    if (spec.input_h != 2 || spec.input_w % 8 != 0 || spec.input_w < 8)
        throw InvalidInput("CnnSpec: input must be 2 x (multiple of 8)");
    if (spec.conv_filters < 1 || spec.dense1 < 1 || spec.dense2 < 1 || spec.n_classes < 2)
        throw InvalidInput("CnnSpec: invalid layer widths");

    CnnModel<S> m;
    m.spec = spec;
    m.seed = seed;
    Rng rng(derive_seed(seed, "init"));
    auto he = [&rng](Mat<S>& w, Eigen::Index rows, Eigen::Index cols, double fan_in) {
        w.resize(rows, cols);
        const double std_dev = std::sqrt(2.0 / fan_in);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<S>(std_dev * rng.normal());
    };

    const auto geoms = m.geometry();
    for (int i = 0; i < 4; ++i) {
        he(m.params.conv_w[i], geoms[i].c_out, geoms[i].patch_size(), geoms[i].patch_size());
        m.params.conv_b[i] = Vec<S>::Zero(geoms[i].c_out);
    }
    const int flat = spec.flatten_size();
    he(m.params.dense_w[0], spec.dense1, flat, flat);
    m.params.dense_b[0] = Vec<S>::Zero(spec.dense1);
    he(m.params.dense_w[1], spec.dense2, spec.dense1, spec.dense1);
    m.params.dense_b[1] = Vec<S>::Zero(spec.dense2);
    he(m.params.dense_w[2], spec.n_classes, spec.dense2, spec.dense2);
    m.params.dense_b[2] = Vec<S>::Zero(spec.n_classes);

    // Shape-chain self-check: widths must walk 256 -> 128 -> 64 -> 32 (scaled
    // by input_w/256) and the flatten size must match dense1's input.
    for (int i = 0; i < 4; ++i)
        if (geoms[i].w != spec.input_w >> i)
            throw std::logic_error("CnnModel: conv width chain broken");
    if (m.params.dense_w[0].cols() != flat) throw std::logic_error("CnnModel: flatten size mismatch");
    return m;
}

// Inference-mode predictions for a batch of windows (512 x n).
template <typename S>
std::vector<Prediction> predict_batch(const CnnModel<S>& model, const Eigen::MatrixXd& windows,
                                      int batch_size = 256) {
    cnn_detail::Workspace<S> ws;
    std::vector<Prediction> out;
    out.reserve(windows.cols());
    for (Eigen::Index start = 0; start < windows.cols(); start += batch_size) {
        const Eigen::Index n = std::min<Eigen::Index>(batch_size, windows.cols() - start);
        const Mat<S> block = windows.middleCols(start, n).template cast<S>();
        cnn_detail::forward_batch(model, block, false, 0.0, 0.0, nullptr, ws);
        for (Eigen::Index j = 0; j < n; ++j) {
            Prediction p;
            p.probs = ws.probs.col(j).template cast<double>();
            p.probs.maxCoeff(&p.klass);
            p.max_prob = p.probs[p.klass];
            out.push_back(std::move(p));
        }
    }
    return out;
}

template <typename S>
Prediction forward(const CnnModel<S>& model, const Eigen::MatrixXd& window) {
    if (window.size() != 512)
        throw InvalidInput("forward: window must hold 2 x 256 values");
    Eigen::MatrixXd col = Eigen::Map<const Eigen::MatrixXd>(window.data(), 512, 1);
    return predict_batch(model, col).front();
}

// REJECT is signalled by an empty optional: the maximum softmax probability
// fell below tau.
template <typename S>
std::optional<Prediction> predict_with_threshold(const CnnModel<S>& model, const Eigen::MatrixXd& window,
                                                 double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("predict_with_threshold: tau must be in [0, 1]");
    Prediction p = forward(model, window);
    if (p.max_prob < tau) return std::nullopt;
    return p;
}

template <typename S>
struct Batch {
    Mat<S> inputs;             // 512 x n
    std::vector<int> classes;  // 0-based
};

// Mean cross-entropy and gradients for every trainable tensor (dropout
// disabled, as in inference).
template <typename S>
std::pair<double, ParamSet<S>> loss_and_grads(const CnnModel<S>& model, const Batch<S>& batch) {
    if (batch.classes.empty() || batch.inputs.cols() != static_cast<Eigen::Index>(batch.classes.size()))
        throw InvalidInput("loss_and_grads: batch is empty or inconsistent");
    cnn_detail::Workspace<S> ws;
    cnn_detail::forward_batch(model, batch.inputs, false, 0.0, 0.0, nullptr, ws);
    ParamSet<S> grads;
    cnn_detail::backward_batch(model, ws, batch.classes, false, grads);
    return {cnn_detail::batch_loss(ws, batch.classes), grads};
}

template <typename S>
double accuracy(const CnnModel<S>& model, const DatasetBundle& bundle) {
    const auto preds = predict_batch(model, bundle.windows);
    std::size_t correct = 0;
    for (std::size_t j = 0; j < preds.size(); ++j)
        if (preds[j].klass + 1 == static_cast<int>(bundle.labels[j])) ++correct;
    return preds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(preds.size());
}

// Adam training with early stopping on validation accuracy. The model ends up
// holding the best-validation weights. Deterministic under cfg.seed.
template <typename S>
TrainReport train(CnnModel<S>& model, const DatasetBundle& train_bundle, const DatasetBundle& val_bundle,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (!train_bundle.standardized || !val_bundle.standardized)
        throw InvalidInput("train: bundles must be standardized");
    if (train_bundle.size() == 0 || val_bundle.size() == 0)
        throw InvalidInput("train: bundles must be non-empty");

    std::vector<int> classes(train_bundle.size());
    for (std::size_t j = 0; j < train_bundle.size(); ++j) {
        const int label = train_bundle.labels[j];
        if (label < 1 || label > model.spec.n_classes)
            throw InvalidInput("train: window label " + std::to_string(label) + " out of range");
        classes[j] = label - 1;
    }

    ParamSet<S> m_state = model.params, v_state = model.params;
    for_each_tensor(m_state, [](auto& t) { t.setZero(); });
    for_each_tensor(v_state, [](auto& t) { t.setZero(); });

    cnn_detail::Workspace<S> ws;
    ParamSet<S> grads;
    ParamSet<S> best_params = model.params;
    TrainReport report;
    report.best_val_acc = -1.0;
    long long step = 0;
    int epochs_since_best = 0;

    std::vector<std::size_t> order(train_bundle.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle/" + std::to_string(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        Rng dropout_rng(derive_seed(cfg.seed, "dropout/" + std::to_string(epoch)));

        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t done = 0;
        Mat<S> inputs;
        std::vector<int> batch_classes;
        while (done < order.size()) {
            const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - done);
            inputs.resize(512, static_cast<Eigen::Index>(n));
            batch_classes.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                inputs.col(static_cast<Eigen::Index>(j)) =
                    train_bundle.windows.col(static_cast<Eigen::Index>(order[done + j])).template cast<S>();
                batch_classes[j] = classes[order[done + j]];
            }
            done += n;

            cnn_detail::forward_batch(model, inputs, true, cfg.dropout1, cfg.dropout2, &dropout_rng, ws);
            const double loss = cnn_detail::batch_loss(ws, batch_classes);
            if (!std::isfinite(loss)) throw TrainingFailure("training diverged: loss is not finite", epoch);
            loss_sum += loss * static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
                int k;
                ws.probs.col(static_cast<Eigen::Index>(j)).maxCoeff(&k);
                if (k == batch_classes[j]) ++correct;
            }

            cnn_detail::backward_batch(model, ws, batch_classes, true, grads);
            ++step;
            const S bc1 = static_cast<S>(1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
            const S bc2 = static_cast<S>(1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
            const S lr = static_cast<S>(cfg.learning_rate);
            const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
            const S eps = static_cast<S>(cfg.epsilon);
            zip_tensors(model.params, grads, m_state, v_state,
                        [&](auto& w, const auto& g, auto& m, auto& v) {
                            m = b1 * m + (S(1) - b1) * g;
                            v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
                            w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
                        });
        }

        const double val_acc = accuracy(model, val_bundle);
        report.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size()),
                                 static_cast<double>(correct) / static_cast<double>(order.size()),
                                 val_acc});

        if (val_acc > report.best_val_acc) {
            report.best_val_acc = val_acc;
            report.best_epoch = epoch;
            best_params = model.params;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (epochs_since_best >= cfg.patience) break;
        if (report.best_val_acc >= 1.0) break;  // nothing left to improve
    }

    model.params = best_params;
    return report;
}

}  // namespace rfsim
