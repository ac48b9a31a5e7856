#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/em.hpp"
#include "relground/eval.hpp"
#include "relground/splits.hpp"
#include "relground/synthetic.hpp"

namespace relground {

// End-to-end run description: a synthetic world plus the refinement loop
// settings and the evaluation grid. Fully serializable so a run can be
// reproduced from its config file alone.
struct RunConfig {
    WorldConfig world;
    EmConfig em;
    std::vector<int> ks{20, 50, 100};
    std::vector<Task> tasks{Task::predcls};

    RunConfig() {
        em.model.d_v = world.d_v;
        em.model.d_w = world.d_w;
        em.model.d_c = world.d_c;
        em.model.d_h = 32;
        em.model.hidden = 32;
        em.model.n_predicates = world.n_predicates;
    }
};

inline json to_json(const RunConfig& c) {
    std::vector<std::string> task_names;
    for (Task t : c.tasks) task_names.push_back(to_string(t));
    return json{{"world", to_json(c.world)},
                {"em", to_json(c.em)},
                {"ks", c.ks},
                {"tasks", task_names}};
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.world = world_config_from_json(j.at("world"));
    const json& e = j.at("em");
    c.em.tau = e.value("tau", c.em.tau);
    c.em.max_iterations = e.value("max_iterations", c.em.max_iterations);
    c.em.epochs_per_m_step = e.value("epochs_per_m_step", c.em.epochs_per_m_step);
    c.em.batch_size = e.value("batch_size", c.em.batch_size);
    c.em.lr = e.value("lr", c.em.lr);
    c.em.weight_decay = e.value("weight_decay", c.em.weight_decay);
    c.em.seed = e.value("seed", c.em.seed);
    if (e.contains("model")) c.em.model = model_config_from_json(e.at("model"));
    c.em.model.d_v = c.world.d_v;
    c.em.model.d_w = c.world.d_w;
    c.em.model.d_c = c.world.d_c;
    c.em.model.n_predicates = c.world.n_predicates;
    if (j.contains("ks")) c.ks = j.at("ks").get<std::vector<int>>();
    if (j.contains("tasks")) {
        c.tasks.clear();
        for (const auto& t : j.at("tasks")) c.tasks.push_back(task_from_string(t.get<std::string>()));
    }
    return c;
}

// In the synthetic world the seen vocabulary is the frequency head: the
// Zipf weights make low ids the most frequent, so seen = {0..n_seen-1}.
inline std::set<int> synthetic_seen(const WorldConfig& cfg) {
    std::set<int> seen;
    for (int p = 0; p < cfg.n_seen; ++p) seen.insert(p);
    return seen;
}

inline std::set<int> synthetic_unseen(const WorldConfig& cfg) {
    std::set<int> unseen;
    for (int p = cfg.n_seen; p < cfg.n_predicates; ++p) unseen.insert(p);
    return unseen;
}

inline std::vector<std::string> synthetic_predicate_names(const WorldConfig& cfg) {
    std::vector<std::string> names;
    for (int p = 0; p < cfg.n_predicates; ++p) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "pred_%02d", p);
        names.emplace_back(buf);
    }
    return names;
}

// Argmax predictions for every ordered pair of every scene, in the shape the
// evaluator consumes.
inline std::vector<ImageTriplets> model_predictions(const GroundingModel& model,
                                                    const std::vector<Scene>& scenes) {
    std::vector<ImageTriplets> out;
    for (const auto& scene : scenes) {
        ImageTriplets p;
        p.image_id = scene.image_id;
        for (const auto& cand : predict_all_pairs(model, scene)) p.triplets.push_back(cand.triplet);
        out.push_back(std::move(p));
    }
    return out;
}

struct PipelineResult {
    WorldData data;
    std::vector<PriorHypergraph> priors;
    SplitResult split;
    EmRunResult em;
    std::vector<EvalReport> reports;  // reports[t] scores checkpoint t
};

// Full synthetic experiment: generate the world, fabricate the noisy prior,
// run the refinement loop, then score every iteration's checkpoint on the
// stratified evaluation splits. Weakly supervised throughout — ground truth
// only ever reaches the evaluator.
inline PipelineResult run_pipeline(const RunConfig& cfg,
                                   const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                   bool resume = false) {
    PipelineResult result;
    result.data = generate_world(cfg.world);
    result.priors = noisy_prior(result.data);

    auto seen = synthetic_seen(cfg.world);
    auto unseen = synthetic_unseen(cfg.world);
    AnnotatedCorpus corpus{result.data.scenes, result.data.ground_truth};
    result.split = stratify(corpus, seen, unseen);

    std::optional<std::filesystem::path> em_dir;
    if (out_dir) em_dir = *out_dir / "em_state";
    result.em = run_em(result.data.scenes, result.priors, cfg.em, seen, em_dir, resume);

    for (const auto& ckpt : result.em.checkpoints) {
        auto preds = model_predictions(ckpt, result.data.scenes);
        result.reports.push_back(evaluate(corpus, preds, result.split, cfg.tasks, cfg.ks));
    }
    return result;
}

// Fraction of refinement additions that agree with the planted truth.
inline double addition_precision(const EmState& state, const WorldData& data) {
    if (state.added.empty()) return 0.0;
    int correct = 0;
    for (const auto& c : state.added) {
        auto it = data.truth.by_image.find(c.image_id);
        if (it == data.truth.by_image.end()) continue;
        for (const auto& t : it->second)
            if (t.sub_id == c.triplet.sub_id && t.obj_id == c.triplet.obj_id &&
                t.pred_id == c.triplet.pred_id) {
                ++correct;
                break;
            }
    }
    return static_cast<double>(correct) / static_cast<double>(state.added.size());
}

// Mean recall restricted to a predicate subset (predicates without GT in
// the cell are skipped, as in the full mR).
inline double mean_recall_over(const MetricCell& cell, const std::set<int>& predicates) {
    double sum = 0;
    int n = 0;
    for (const auto& [p, pr] : cell.per_predicate) {
        if (!predicates.count(p) || pr.gt_count == 0) continue;
        sum += pr.recall();
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

inline const MetricCell& report_cell(const EvalReport& report, const std::string& split,
                                     Task task, int k) {
    return report.cells.at(split).at(to_string(task)).at(k);
}

}  // namespace relground
