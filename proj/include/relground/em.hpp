#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/common.hpp"
#include "relground/json_io.hpp"
#include "relground/model.hpp"
#include "relground/types.hpp"

namespace relground {

struct EmConfig {
    double tau = 0.8;
    int max_iterations = 5;
    int epochs_per_m_step = 50;
    int batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    std::uint64_t seed = 0;
    ModelConfig model;
    LossOptions loss;

    void validate() const {
        if (tau <= 0 || tau >= 1) throw input_error("EmConfig: tau must be in (0,1)");
        if (max_iterations < 1) throw input_error("EmConfig: max_iterations must be >= 1");
    }
};

inline json to_json(const EmConfig& c) {
    return json{{"tau", c.tau},
                {"max_iterations", c.max_iterations},
                {"epochs_per_m_step", c.epochs_per_m_step},
                {"batch_size", c.batch_size},
                {"lr", c.lr},
                {"weight_decay", c.weight_decay},
                {"seed", c.seed},
                {"model", to_json(c.model)}};
}

struct IterationStats {
    int iteration = 0;
    int n_added = 0;  // newly added this iteration
    int n_train = 0;
    double loss_final = 0;
};

inline json to_json(const IterationStats& s) {
    return json{{"iteration", s.iteration},
                {"n_added", s.n_added},
                {"n_train", s.n_train},
                {"loss_final", s.loss_final}};
}

struct ScoredCandidate {
    std::string image_id;
    Triplet triplet;  // score holds the model confidence
};

struct EmState {
    int iteration = -1;
    std::map<std::string, PriorHypergraph> prior;  // frozen throughout
    std::set<TripletKey> prior_keys;
    std::vector<ScoredCandidate> added;  // cumulative, duplicate-free
    std::set<TripletKey> added_keys;
    std::vector<IterationStats> stats;
    bool converged = false;

    void set_prior(const std::vector<PriorHypergraph>& priors) {
        for (const auto& p : priors) {
            prior[p.image_id] = p;
            for (const auto& t : flatten_hypergraph(p))
                prior_keys.insert(TripletKey{p.image_id, t.sub_id, t.pred_id, t.obj_id});
        }
    }
};

namespace detail {

inline bool candidate_order(const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    if (a.triplet.sub_id != b.triplet.sub_id) return a.triplet.sub_id < b.triplet.sub_id;
    if (a.triplet.obj_id != b.triplet.obj_id) return a.triplet.obj_id < b.triplet.obj_id;
    return a.triplet.pred_id < b.triplet.pred_id;
}

}  // namespace detail

// The refinement filter: keep predictions whose predicate is in the seen
// set, whose confidence strictly exceeds tau, and which are novel with
// respect to the prior and all previously added triplets. Output sorted by
// (image_id, sub_id, obj_id, pred_id).
inline std::vector<ScoredCandidate> refine_filter(const std::vector<ScoredCandidate>& predictions,
                                                  const std::set<int>& seen_predicates,
                                                  const EmState& state, double tau) {
    std::vector<ScoredCandidate> out;
    std::set<TripletKey> batch_keys;
    for (const auto& cand : predictions) {
        if (!cand.triplet.score) throw input_error("refine_filter: prediction without confidence");
        if (!seen_predicates.count(cand.triplet.pred_id)) continue;
        if (!(*cand.triplet.score > tau)) continue;  // strict
        TripletKey key{cand.image_id, cand.triplet.sub_id, cand.triplet.pred_id, cand.triplet.obj_id};
        if (state.prior_keys.count(key) || state.added_keys.count(key)) continue;
        if (!batch_keys.insert(key).second) continue;
        out.push_back(cand);
    }
    std::sort(out.begin(), out.end(), detail::candidate_order);
    return out;
}

// Argmax prediction for every ordered instance pair of the scene (fully
// connected inference graph).
inline std::vector<ScoredCandidate> predict_all_pairs(const GroundingModel& model,
                                                      const Scene& scene) {
    std::vector<ScoredCandidate> out;
    for (const auto& a : scene.objects)
        for (const auto& b : scene.objects) {
            if (a.instance_id == b.instance_id) continue;
            auto [pred, conf] = predict_pair(model, scene, a.instance_id, b.instance_id);
            out.push_back(
                {scene.image_id, Triplet{a.instance_id, pred, b.instance_id, conf}});
        }
    return out;
}

struct EmRunResult {
    GroundingModel model;
    EmState state;
    std::vector<GroundingModel> checkpoints;  // index = iteration
};

namespace detail {

inline std::vector<TrainingExample> prior_examples(
    const std::map<std::string, const Scene*>& scene_index, const EmState& state) {
    std::vector<TrainingExample> out;
    for (const auto& [image_id, prior] : state.prior) {
        const Scene* scene = scene_index.at(image_id);
        for (const auto& t : flatten_hypergraph(prior)) out.push_back({scene, t});
    }
    return out;
}

inline void persist_iteration(const std::filesystem::path& dir, int t, const EmState& state,
                              const std::vector<TrainingExample>& trainset,
                              const GroundingModel& model, const OptimizerState& opt,
                              const IterationStats& stats, std::uint64_t seed) {
    auto iter_dir = dir / ("iter_" + std::to_string(t));
    std::filesystem::create_directories(iter_dir);

    std::map<std::string, std::vector<Triplet>> added_by_image;
    for (const auto& c : state.added) added_by_image[c.image_id].push_back(c.triplet);
    std::vector<ImageTriplets> added;
    for (auto& [id, trips] : added_by_image) added.push_back({id, std::move(trips), {}});
    write_triplets(iter_dir / "added.jsonl", added);

    std::map<std::string, std::vector<Triplet>> train_by_image;
    for (const auto& ex : trainset) train_by_image[ex.scene->image_id].push_back(ex.triplet);
    std::vector<ImageTriplets> train;
    for (auto& [id, trips] : train_by_image) train.push_back({id, std::move(trips), {}});
    write_triplets(iter_dir / "train_set.jsonl", train);

    save_checkpoint(iter_dir / "model.ckpt", Checkpoint{model, opt, seed});
    write_text_file(iter_dir / "stats.json", to_json(stats).dump());
}

inline bool iteration_complete(const std::filesystem::path& dir, int t) {
    auto iter_dir = dir / ("iter_" + std::to_string(t));
    return std::filesystem::exists(iter_dir / "stats.json") &&
           std::filesystem::exists(iter_dir / "model.ckpt") &&
           std::filesystem::exists(iter_dir / "added.jsonl");
}

}  // namespace detail

// The full hallucinate-and-ground loop. Iteration 0 trains on the flattened
// prior; each later iteration predicts over all ordered pairs, filters with
// refine_filter, and fine-tunes (warm-started parameters, reset optimizer
// moments) on prior-plus-additions. Stops when no triplets are added or
// max_iterations is reached. When out_dir is set, every iteration is
// persisted and an interrupted run resumes bit-identically.
inline EmRunResult run_em(const std::vector<Scene>& scenes,
                          const std::vector<PriorHypergraph>& priors, const EmConfig& cfg,
                          const std::set<int>& seen_predicates,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                          bool resume = false) {
    cfg.validate();
    std::map<std::string, const Scene*> scene_index;
    for (const auto& s : scenes) scene_index[s.image_id] = &s;
    std::set<std::string> prior_images;
    for (const auto& p : priors) prior_images.insert(p.image_id);
    for (const auto& s : scenes)
        if (!prior_images.count(s.image_id))
            throw input_error("run_em: missing prior for scene '" + s.image_id + "'");

    EmRunResult result;
    result.state.set_prior(priors);
    auto& state = result.state;

    auto prior_flat = detail::prior_examples(scene_index, state);
    auto trainset = prior_flat;

    GroundingModel model = GroundingModel::init(cfg.model, cfg.seed);
    OptimizerState opt = OptimizerState::for_model(model, cfg.lr, cfg.weight_decay);

    TrainOptions topts;
    topts.epochs = cfg.epochs_per_m_step;
    topts.batch_size = cfg.batch_size;
    topts.loss = cfg.loss;

    auto load_added = [&](int t) {
        state.added.clear();
        state.added_keys.clear();
        auto added = read_triplets(*out_dir / ("iter_" + std::to_string(t)) / "added.jsonl");
        for (const auto& img : added)
            for (const auto& trip : img.triplets) {
                state.added.push_back({img.image_id, trip});
                state.added_keys.insert(TripletKey{img.image_id, trip.sub_id, trip.pred_id, trip.obj_id});
            }
    };

    for (int t = 0; t <= cfg.max_iterations; ++t) {
        std::uint64_t iter_seed =
            Rng::derive_from(cfg.seed, 0xe11 + static_cast<std::uint64_t>(t)).next_u64();
        bool resumable = resume && out_dir && detail::iteration_complete(*out_dir, t);
        int new_added = 0;

        if (t > 0) {
            if (resumable) {
                std::size_t before = state.added.size();
                load_added(t);
                new_added = static_cast<int>(state.added.size() - before);
            } else {
                std::vector<ScoredCandidate> candidates;
                for (const auto& s : scenes) {
                    auto preds = predict_all_pairs(model, s);
                    candidates.insert(candidates.end(), preds.begin(), preds.end());
                }
                auto additions = refine_filter(candidates, seen_predicates, state, cfg.tau);
                if (additions.empty()) {
                    state.converged = true;
                    break;
                }
                new_added = static_cast<int>(additions.size());
                for (const auto& c : additions) {
                    state.added.push_back(c);
                    state.added_keys.insert(
                        TripletKey{c.image_id, c.triplet.sub_id, c.triplet.pred_id, c.triplet.obj_id});
                }
                // canonical cumulative order: keeps the persisted image-grouped
                // form and the in-memory list in the same sequence, so a
                // resumed run rebuilds the training set bit-identically
                std::sort(state.added.begin(), state.added.end(), detail::candidate_order);
            }
            trainset = prior_flat;
            for (const auto& c : state.added)
                trainset.push_back({scene_index.at(c.image_id), c.triplet});
            opt.reset_moments();
        }

        IterationStats stats;
        stats.iteration = t;
        stats.n_added = new_added;
        stats.n_train = static_cast<int>(trainset.size());

        if (resumable) {
            auto iter_dir = *out_dir / ("iter_" + std::to_string(t));
            auto ckpt = load_checkpoint(iter_dir / "model.ckpt");
            model = ckpt.model;
            opt = ckpt.optimizer;
            auto sj = json::parse(read_text_file(iter_dir / "stats.json"));
            stats.loss_final = sj.at("loss_final").get<double>();
        } else {
            topts.seed = iter_seed;
            auto tr = train(model, opt, trainset, topts);
            stats.loss_final = tr.loss_curve.empty() ? 0.0 : tr.loss_curve.back();
            if (out_dir)
                detail::persist_iteration(*out_dir, t, state, trainset, model, opt, stats, iter_seed);
        }
        state.stats.push_back(stats);
        state.iteration = t;
        result.checkpoints.push_back(model);
    }
    result.model = model;
    return result;
}

// Exact evaluation of the marginal grounding objective on a tiny instance:
// log sum over all per-pair hypothesis selections of the product of model
// probabilities and prior masses. Diagnostic only; guarded to at most 4
// pairs with at most 4 hypotheses each.
inline double evaluate_marginal_objective(const Scene& scene, const PriorHypergraph& prior,
                                          const GroundingModel& model, double abstain_mass = 0.0) {
    if (prior.pairs.size() > 4) throw input_error("marginal objective: more than 4 pairs");
    for (const auto& p : prior.pairs)
        if (p.hypotheses.size() > 4)
            throw input_error("marginal objective: more than 4 hypotheses in a pair");
    if (abstain_mass < 0 || abstain_mass >= 1)
        throw input_error("marginal objective: abstain mass out of range");

    // Per-pair model distributions, computed once.
    std::vector<std::vector<double>> probs;
    for (const auto& p : prior.pairs)
        probs.push_back(forward(model, build_query(scene, p.sub_id, p.obj_id), scene.context));

    double total = 0;
    std::vector<int> choice(prior.pairs.size(), 0);  // hypothesis index, or -1 for abstain
    // Enumerate all assignments, including abstain when it has mass.
    std::vector<int> limits;
    for (const auto& p : prior.pairs) limits.push_back(static_cast<int>(p.hypotheses.size()));
    std::size_t n_pairs = prior.pairs.size();
    std::vector<int> idx(n_pairs, abstain_mass > 0 ? -1 : 0);
    while (true) {
        double term = 1.0;
        for (std::size_t i = 0; i < n_pairs; ++i) {
            if (idx[i] < 0) {
                term *= abstain_mass;
            } else {
                const auto& h = prior.pairs[i].hypotheses[static_cast<std::size_t>(idx[i])];
                double prior_mass = (1.0 - abstain_mass) * h.norm_conf;
                term *= prior_mass * probs[i][static_cast<std::size_t>(h.pred_id)];
            }
        }
        total += term;
        // odometer increment
        std::size_t i = 0;
        for (; i < n_pairs; ++i) {
            if (idx[i] + 1 < limits[i]) {
                ++idx[i];
                break;
            }
            idx[i] = abstain_mass > 0 ? -1 : 0;
        }
        if (i == n_pairs) break;
    }
    return std::log(total);
}

}  // namespace relground
