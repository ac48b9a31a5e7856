#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/common.hpp"
#include "relground/json_io.hpp"
#include "relground/types.hpp"

namespace relground {

class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    bool operator==(const Mat& o) const = default;
};

struct ModelConfig {
    int d_v = 64;
    int d_w = 32;
    int d_c = 64;
    int d_h = 64;
    int hidden = 64;
    int n_predicates = 50;

    int query_len() const { return 2 * d_v + 2 * d_w; }
    int head_in() const { return d_h + query_len(); }

    bool operator==(const ModelConfig& o) const = default;
};

inline json to_json(const ModelConfig& c) {
    return json{{"d_v", c.d_v},   {"d_w", c.d_w},       {"d_c", c.d_c},
                {"d_h", c.d_h},   {"hidden", c.hidden}, {"n_predicates", c.n_predicates}};
}

inline ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.d_v = j.at("d_v").get<int>();
    c.d_w = j.at("d_w").get<int>();
    c.d_c = j.at("d_c").get<int>();
    c.d_h = j.at("d_h").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.n_predicates = j.at("n_predicates").get<int>();
    return c;
}

// Cross-attention predicate classifier. A single-head scaled-dot-product
// attention block over the scene's context tokens, followed by a two-layer
// tanh head on [attended, query].
struct GroundingModel {
    ModelConfig cfg;
    Mat W_q;    // d_h x query_len
    Mat W_k;    // d_h x d_c
    Mat W_v;    // d_h x d_c
    Mat W_ff1;  // hidden x head_in
    std::vector<double> b_ff1;
    Mat W_ff2;  // n_predicates x hidden
    std::vector<double> b_ff2;

    bool operator==(const GroundingModel& o) const = default;

    static GroundingModel zeros(const ModelConfig& cfg) {
        GroundingModel m;
        m.cfg = cfg;
        m.W_q = Mat(cfg.d_h, cfg.query_len());
        m.W_k = Mat(cfg.d_h, cfg.d_c);
        m.W_v = Mat(cfg.d_h, cfg.d_c);
        m.W_ff1 = Mat(cfg.hidden, cfg.head_in());
        m.b_ff1.assign(static_cast<std::size_t>(cfg.hidden), 0.0);
        m.W_ff2 = Mat(cfg.n_predicates, cfg.hidden);
        m.b_ff2.assign(static_cast<std::size_t>(cfg.n_predicates), 0.0);
        return m;
    }

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) on weights, zero biases
    static GroundingModel init(const ModelConfig& cfg, std::uint64_t seed) {
        GroundingModel m = zeros(cfg);
        Rng rng(seed);
        auto fill = [&rng](Mat& w) {
            double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
            for (auto& x : w.a) x = rng.uniform(-bound, bound);
        };
        fill(m.W_q);
        fill(m.W_k);
        fill(m.W_v);
        fill(m.W_ff1);
        fill(m.W_ff2);
        return m;
    }

    // Visits parameter arrays in a fixed order; gradients and optimizer
    // moments are kept aligned with this order.
    template <typename Self, typename Fn>
    static void visit(Self& self, Fn&& fn) {
        fn("W_q", self.W_q.a);
        fn("W_k", self.W_k.a);
        fn("W_v", self.W_v.a);
        fn("W_ff1", self.W_ff1.a);
        fn("b_ff1", self.b_ff1);
        fn("W_ff2", self.W_ff2.a);
        fn("b_ff2", self.b_ff2);
    }
};

using QueryEmbedding = std::vector<double>;

inline QueryEmbedding build_query(const Scene& scene, int sub_id, int obj_id) {
    if (sub_id == obj_id) throw input_error("build_query: subject equals object");
    const auto& s = scene.object(sub_id);
    const auto& o = scene.object(obj_id);
    QueryEmbedding q;
    q.reserve(s.visual_feat.size() + o.visual_feat.size() + s.semantic_feat.size() +
              o.semantic_feat.size());
    q.insert(q.end(), s.visual_feat.begin(), s.visual_feat.end());
    q.insert(q.end(), o.visual_feat.begin(), o.visual_feat.end());
    q.insert(q.end(), s.semantic_feat.begin(), s.semantic_feat.end());
    q.insert(q.end(), o.semantic_feat.begin(), o.semantic_feat.end());
    return q;
}

// Intermediates retained for backprop.
struct ForwardCache {
    QueryEmbedding q;
    std::vector<double> u;                   // W_q q
    std::vector<std::vector<double>> keys;   // per token
    std::vector<std::vector<double>> vals;   // per token
    std::vector<double> attn;                // softmax weights per token
    std::vector<double> attended;            // sum_j attn_j * vals_j
    std::vector<double> head_in;             // [attended, q]
    std::vector<double> hid;                 // tanh(W_ff1 head_in + b_ff1)
    std::vector<double> probs;               // softmax over predicates
};

namespace detail {

inline std::vector<double> matvec(const Mat& w, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != w.cols)
        throw input_error("matvec: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(w.cols) + ")");
    std::vector<double> y(static_cast<std::size_t>(w.rows), 0.0);
    for (int r = 0; r < w.rows; ++r) {
        double acc = 0;
        const double* row = &w.a[static_cast<std::size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

inline void softmax_inplace(std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0;
    for (auto& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (auto& x : v) x /= sum;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace detail

inline ForwardCache forward_cached(const GroundingModel& m, const QueryEmbedding& q,
                                   const std::vector<std::vector<double>>& context) {
    if (static_cast<int>(q.size()) != m.cfg.query_len())
        throw input_error("forward: query length mismatch");
    if (context.empty()) throw input_error("forward: context must have at least one token");

    ForwardCache fc;
    fc.q = q;
    fc.u = detail::matvec(m.W_q, q);
    double scale = 1.0 / std::sqrt(static_cast<double>(m.cfg.d_h));
    std::vector<double> logits;
    logits.reserve(context.size());
    for (const auto& token : context) {
        fc.keys.push_back(detail::matvec(m.W_k, token));
        fc.vals.push_back(detail::matvec(m.W_v, token));
        logits.push_back(detail::dot(fc.u, fc.keys.back()) * scale);
    }
    fc.attn = logits;
    detail::softmax_inplace(fc.attn);
    fc.attended.assign(static_cast<std::size_t>(m.cfg.d_h), 0.0);
    for (std::size_t j = 0; j < context.size(); ++j)
        for (int r = 0; r < m.cfg.d_h; ++r)
            fc.attended[static_cast<std::size_t>(r)] += fc.attn[j] * fc.vals[j][static_cast<std::size_t>(r)];
    fc.head_in = fc.attended;
    fc.head_in.insert(fc.head_in.end(), q.begin(), q.end());
    fc.hid = detail::matvec(m.W_ff1, fc.head_in);
    for (int i = 0; i < m.cfg.hidden; ++i) {
        fc.hid[static_cast<std::size_t>(i)] += m.b_ff1[static_cast<std::size_t>(i)];
        fc.hid[static_cast<std::size_t>(i)] = std::tanh(fc.hid[static_cast<std::size_t>(i)]);
    }
    fc.probs = detail::matvec(m.W_ff2, fc.hid);
    for (int i = 0; i < m.cfg.n_predicates; ++i)
        fc.probs[static_cast<std::size_t>(i)] += m.b_ff2[static_cast<std::size_t>(i)];
    detail::softmax_inplace(fc.probs);
    for (double p : fc.probs)
        if (!std::isfinite(p)) throw numerical_error("forward: non-finite probability");
    return fc;
}

inline std::vector<double> forward(const GroundingModel& m, const QueryEmbedding& q,
                                   const std::vector<std::vector<double>>& context) {
    return forward_cached(m, q, context).probs;
}

struct Gradients {
    GroundingModel g;  // same shapes, holds accumulated gradients

    explicit Gradients(const ModelConfig& cfg) : g(GroundingModel::zeros(cfg)) {}

    void scale(double s) {
        GroundingModel::visit(g, [s](const char*, std::vector<double>& v) {
            for (auto& x : v) x *= s;
        });
    }
};

// Backprop of -w * log(probs[target]) through forward_cached, accumulating
// into grads.
inline void backward_nll(const GroundingModel& m, const ForwardCache& fc,
                         const std::vector<std::vector<double>>& context, int target, double w,
                         Gradients& grads) {
    const int P = m.cfg.n_predicates;
    const int H = m.cfg.hidden;
    const int D = m.cfg.d_h;
    const int L = m.cfg.query_len();
    if (target < 0 || target >= P) throw input_error("backward: target predicate out of range");

    std::vector<double> dlogits = fc.probs;
    dlogits[static_cast<std::size_t>(target)] -= 1.0;
    for (auto& x : dlogits) x *= w;

    // head layer 2
    std::vector<double> dhid(static_cast<std::size_t>(H), 0.0);
    for (int p = 0; p < P; ++p) {
        double d = dlogits[static_cast<std::size_t>(p)];
        grads.g.b_ff2[static_cast<std::size_t>(p)] += d;
        for (int h = 0; h < H; ++h) {
            grads.g.W_ff2.at(p, h) += d * fc.hid[static_cast<std::size_t>(h)];
            dhid[static_cast<std::size_t>(h)] += d * m.W_ff2.at(p, h);
        }
    }
    // tanh
    std::vector<double> dpre(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        double t = fc.hid[static_cast<std::size_t>(h)];
        dpre[static_cast<std::size_t>(h)] = dhid[static_cast<std::size_t>(h)] * (1.0 - t * t);
    }
    // head layer 1
    std::vector<double> dhead_in(fc.head_in.size(), 0.0);
    for (int h = 0; h < H; ++h) {
        double d = dpre[static_cast<std::size_t>(h)];
        grads.g.b_ff1[static_cast<std::size_t>(h)] += d;
        for (std::size_t c = 0; c < fc.head_in.size(); ++c) {
            grads.g.W_ff1.at(h, static_cast<int>(c)) += d * fc.head_in[c];
            dhead_in[c] += d * m.W_ff1.at(h, static_cast<int>(c));
        }
    }
    // split: first D entries feed the attention output; the query part is
    // input data and needs no parameter gradient of its own
    std::vector<double> dz(dhead_in.begin(), dhead_in.begin() + D);

    const std::size_t T = context.size();
    std::vector<double> dalpha(T, 0.0);
    for (std::size_t j = 0; j < T; ++j) {
        dalpha[j] = detail::dot(dz, fc.vals[j]);
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < m.cfg.d_c; ++c)
                grads.g.W_v.at(r, c) += fc.attn[j] * dz[static_cast<std::size_t>(r)] *
                                        context[j][static_cast<std::size_t>(c)];
    }
    double asum = 0;
    for (std::size_t j = 0; j < T; ++j) asum += fc.attn[j] * dalpha[j];
    double scale = 1.0 / std::sqrt(static_cast<double>(D));
    std::vector<double> du(static_cast<std::size_t>(D), 0.0);
    for (std::size_t j = 0; j < T; ++j) {
        double da = fc.attn[j] * (dalpha[j] - asum) * scale;
        for (int r = 0; r < D; ++r) {
            du[static_cast<std::size_t>(r)] += da * fc.keys[j][static_cast<std::size_t>(r)];
            for (int c = 0; c < m.cfg.d_c; ++c)
                grads.g.W_k.at(r, c) += da * fc.u[static_cast<std::size_t>(r)] *
                                        context[j][static_cast<std::size_t>(c)];
        }
    }
    for (int r = 0; r < D; ++r)
        for (int c = 0; c < L; ++c)
            grads.g.W_q.at(r, c) += du[static_cast<std::size_t>(r)] * fc.q[static_cast<std::size_t>(c)];
}

struct TrainingExample {
    const Scene* scene = nullptr;
    Triplet triplet;
};

enum class LossReduction { sum, mean };

struct LossOptions {
    LossReduction reduction = LossReduction::mean;
    // Optional weighting of each term by the triplet's prior confidence
    // (score field); off by default.
    bool weight_by_confidence = false;
};

// Negative log-likelihood over the batch plus exact gradients. With
// LossReduction::sum this is the alignment loss as a plain sum over
// triplets; mean divides both loss and gradients by the batch size.
inline std::pair<double, Gradients> loss_align(const GroundingModel& m,
                                               const std::vector<TrainingExample>& batch,
                                               const LossOptions& opts = {}) {
    if (batch.empty()) throw input_error("loss_align: empty batch");
    Gradients grads(m.cfg);
    double loss = 0;
    for (const auto& ex : batch) {
        if (ex.triplet.pred_id < 0 || ex.triplet.pred_id >= m.cfg.n_predicates)
            throw input_error("loss_align: predicate id out of range");
        double w = 1.0;
        if (opts.weight_by_confidence && ex.triplet.score) w = *ex.triplet.score;
        QueryEmbedding q = build_query(*ex.scene, ex.triplet.sub_id, ex.triplet.obj_id);
        ForwardCache fc = forward_cached(m, q, ex.scene->context);
        double p = fc.probs[static_cast<std::size_t>(ex.triplet.pred_id)];
        loss += -w * std::log(p);
        backward_nll(m, fc, ex.scene->context, ex.triplet.pred_id, w, grads);
    }
    if (opts.reduction == LossReduction::mean) {
        double inv = 1.0 / static_cast<double>(batch.size());
        loss *= inv;
        grads.scale(inv);
    }
    if (!std::isfinite(loss)) throw numerical_error("loss_align: non-finite loss");
    return {loss, std::move(grads)};
}

struct OptimizerState {
    double lr = 1e-3;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;  // first moments, visit order
    std::vector<std::vector<double>> v;  // second moments

    static OptimizerState for_model(const GroundingModel& model, double lr = 1e-3,
                                    double weight_decay = 1e-5) {
        OptimizerState s;
        s.lr = lr;
        s.weight_decay = weight_decay;
        GroundingModel::visit(const_cast<GroundingModel&>(model),
                              [&s](const char*, std::vector<double>& p) {
                                  s.m.emplace_back(p.size(), 0.0);
                                  s.v.emplace_back(p.size(), 0.0);
                              });
        return s;
    }

    void reset_moments() {
        step = 0;
        for (auto& x : m) std::fill(x.begin(), x.end(), 0.0);
        for (auto& x : v) std::fill(x.begin(), x.end(), 0.0);
    }
};

// Bias-corrected Adam update with decoupled weight decay applied after the
// adaptive step.
inline void adam_step(GroundingModel& model, const Gradients& grads, OptimizerState& opt) {
    ++opt.step;
    double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    std::size_t slot = 0;
    auto* gm = const_cast<GroundingModel*>(&grads.g);
    std::vector<std::vector<double>*> gvecs;
    GroundingModel::visit(*gm, [&gvecs](const char*, std::vector<double>& v) { gvecs.push_back(&v); });
    GroundingModel::visit(model, [&](const char* name, std::vector<double>& p) {
        const auto& g = *gvecs[slot];
        auto& m1 = opt.m[slot];
        auto& m2 = opt.v[slot];
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw numerical_error(std::string("adam_step: non-finite gradient in ") + name);
            m1[i] = opt.beta1 * m1[i] + (1.0 - opt.beta1) * g[i];
            m2[i] = opt.beta2 * m2[i] + (1.0 - opt.beta2) * g[i] * g[i];
            double mhat = m1[i] / bc1;
            double vhat = m2[i] / bc2;
            p[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
            p[i] -= opt.lr * opt.weight_decay * p[i];
        }
        ++slot;
    });
}

struct TrainOptions {
    int epochs = 50;
    int batch_size = 32;
    std::uint64_t seed = 0;
    LossOptions loss;
    double lr = 1e-3;
    double weight_decay = 1e-5;
};

struct TrainResult {
    std::vector<double> loss_curve;  // mean epoch loss
};

// Deterministic minibatch training. Shuffle order and batching are pure
// functions of (seed, epoch); running twice with the same seed yields
// bit-identical parameters.
inline TrainResult train(GroundingModel& model, OptimizerState& opt,
                         const std::vector<TrainingExample>& trainset, const TrainOptions& topts) {
    if (trainset.empty()) throw input_error("train: empty training set");
    TrainResult result;
    std::vector<std::size_t> order(trainset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < topts.epochs; ++epoch) {
        Rng rng = Rng::derive_from(topts.seed, static_cast<std::uint64_t>(epoch) + 1);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        double epoch_loss = 0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(topts.batch_size)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(topts.batch_size));
            std::vector<TrainingExample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(trainset[order[i]]);
            auto [loss, grads] = loss_align(model, batch, topts.loss);
            if (!std::isfinite(loss))
                throw numerical_error("train: loss diverged at epoch " + std::to_string(epoch));
            adam_step(model, grads, opt);
            epoch_loss += loss;
            ++n_batches;
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(n_batches));
    }
    return result;
}

// Argmax prediction for one ordered pair; ties resolved toward the lowest
// predicate id.
inline std::pair<int, double> predict_pair(const GroundingModel& m, const Scene& scene, int sub_id,
                                           int obj_id) {
    auto probs = forward(m, build_query(scene, sub_id, obj_id), scene.context);
    int best = 0;
    for (int p = 1; p < static_cast<int>(probs.size()); ++p)
        if (probs[static_cast<std::size_t>(p)] > probs[static_cast<std::size_t>(best)]) best = p;
    return {best, probs[static_cast<std::size_t>(best)]};
}

// ---- Checkpointing ---------------------------------------------------------

inline json to_json(const GroundingModel& m) {
    json params;
    GroundingModel::visit(const_cast<GroundingModel&>(m),
                          [&params](const char* name, std::vector<double>& p) { params[name] = p; });
    return json{{"config", to_json(m.cfg)}, {"params", params}};
}

inline GroundingModel model_from_json(const json& j) {
    GroundingModel m = GroundingModel::zeros(model_config_from_json(j.at("config")));
    const json& params = j.at("params");
    GroundingModel::visit(m, [&params](const char* name, std::vector<double>& p) {
        auto stored = params.at(name).get<std::vector<double>>();
        if (stored.size() != p.size()) throw input_error("checkpoint: shape mismatch for " + std::string(name));
        p = std::move(stored);
    });
    return m;
}

inline json to_json(const OptimizerState& s) {
    return json{{"lr", s.lr},       {"weight_decay", s.weight_decay},
                {"beta1", s.beta1}, {"beta2", s.beta2},
                {"eps", s.eps},     {"step", s.step},
                {"m", s.m},         {"v", s.v}};
}

inline OptimizerState optimizer_from_json(const json& j) {
    OptimizerState s;
    s.lr = j.at("lr").get<double>();
    s.weight_decay = j.at("weight_decay").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    s.step = j.at("step").get<long>();
    s.m = j.at("m").get<std::vector<std::vector<double>>>();
    s.v = j.at("v").get<std::vector<std::vector<double>>>();
    return s;
}

struct Checkpoint {
    GroundingModel model;
    OptimizerState optimizer;
    std::uint64_t train_seed = 0;
};

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    json j{{"version", 1},
           {"model", to_json(ckpt.model)},
           {"optimizer", to_json(ckpt.optimizer)},
           {"train_seed", ckpt.train_seed}};
    write_text_file(path, j.dump());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json j = json::parse(read_text_file(path));
    if (j.at("version").get<int>() != 1) throw input_error("unsupported checkpoint version");
    Checkpoint ckpt{model_from_json(j.at("model")), optimizer_from_json(j.at("optimizer")),
                    j.at("train_seed").get<std::uint64_t>()};
    return ckpt;
}

}  // namespace relground
