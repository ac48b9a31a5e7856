#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/json_io.hpp"
#include "relground/splits.hpp"
#include "relground/types.hpp"

namespace relground {

enum class Task { predcls, sgcls, sgdet };

inline std::string to_string(Task t) {
    switch (t) {
        case Task::predcls: return "predcls";
        case Task::sgcls: return "sgcls";
        case Task::sgdet: return "sgdet";
    }
    return "?";
}

inline Task task_from_string(const std::string& s) {
    if (s == "predcls") return Task::predcls;
    if (s == "sgcls") return Task::sgcls;
    if (s == "sgdet") return Task::sgdet;
    throw input_error("unknown task '" + s + "'");
}

constexpr double kIouThreshold = 0.5;

// Graph constraint: at most one predicate per ordered pair, keeping the
// highest-scored one (ties toward the lowest predicate id). Relative order
// of the survivors is preserved.
inline std::vector<Triplet> apply_graph_constraint(const std::vector<Triplet>& preds) {
    std::map<std::pair<int, int>, std::size_t> best;  // pair -> index into preds
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto key = std::make_pair(preds[i].sub_id, preds[i].obj_id);
        auto it = best.find(key);
        if (it == best.end()) {
            best[key] = i;
            continue;
        }
        const Triplet& cur = preds[it->second];
        double si = preds[i].score.value_or(0.0), sc = cur.score.value_or(0.0);
        if (si > sc || (si == sc && preds[i].pred_id < cur.pred_id)) it->second = i;
    }
    std::vector<Triplet> out;
    out.reserve(best.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto key = std::make_pair(preds[i].sub_id, preds[i].obj_id);
        if (best.at(key) == i) out.push_back(preds[i]);
    }
    return out;
}

// Descending score; ties by (sub_id, obj_id, pred_id) ascending.
inline void sort_predictions(std::vector<Triplet>& preds) {
    std::stable_sort(preds.begin(), preds.end(), [](const Triplet& a, const Triplet& b) {
        double sa = a.score.value_or(0.0), sb = b.score.value_or(0.0);
        if (sa != sb) return sa > sb;
        if (a.sub_id != b.sub_id) return a.sub_id < b.sub_id;
        if (a.obj_id != b.obj_id) return a.obj_id < b.obj_id;
        return a.pred_id < b.pred_id;
    });
}

namespace detail {

inline const ObjectInstance* find_object(const std::vector<ObjectInstance>& objs, int id) {
    for (const auto& o : objs)
        if (o.instance_id == id) return &o;
    return nullptr;
}

}  // namespace detail

// Whether a ranked prediction matches one ground-truth triplet under the
// given task. The caller handles one-time GT consumption.
inline bool triplet_matches(const Triplet& pred, const Triplet& gt, Task task,
                            const Scene& gt_scene, const std::vector<ObjectInstance>& pred_objects) {
    if (pred.sub_id != gt.sub_id || pred.obj_id != gt.obj_id || pred.pred_id != gt.pred_id)
        return false;
    if (task == Task::predcls) return true;
    const ObjectInstance* ps = detail::find_object(pred_objects, pred.sub_id);
    const ObjectInstance* po = detail::find_object(pred_objects, pred.obj_id);
    if (!ps || !po)
        throw input_error("evaluation in " + to_string(task) +
                          " mode requires predicted objects for image '" + gt_scene.image_id + "'");
    const ObjectInstance& gs = gt_scene.object(gt.sub_id);
    const ObjectInstance& go = gt_scene.object(gt.obj_id);
    if (ps->class_id != gs.class_id || po->class_id != go.class_id) return false;
    if (task == Task::sgcls) return true;
    return iou(ps->bbox, gs.bbox) >= kIouThreshold && iou(po->bbox, go.bbox) >= kIouThreshold;
}

struct ImageRecallResult {
    int gt_total = 0;
    int matched = 0;
    std::vector<int> matched_gt_preds;    // predicate ids of matched GT
    std::vector<int> unmatched_gt_preds;  // predicate ids of unmatched GT
};

// Top-K matching for one image. Predictions must already be
// graph-constrained; they are sorted here by the canonical order. Each GT
// triplet is consumable at most once per ranked pass.
inline ImageRecallResult recall_image(std::vector<Triplet> preds, const std::vector<Triplet>& gts,
                                      int k, Task task, const Scene& gt_scene,
                                      const std::vector<ObjectInstance>& pred_objects) {
    if (k <= 0) throw input_error("recall: K must be positive");
    sort_predictions(preds);
    if (static_cast<int>(preds.size()) > k) preds.resize(static_cast<std::size_t>(k));
    ImageRecallResult res;
    res.gt_total = static_cast<int>(gts.size());
    std::vector<bool> consumed(gts.size(), false);
    for (const auto& pred : preds) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (consumed[g]) continue;
            if (triplet_matches(pred, gts[g], task, gt_scene, pred_objects)) {
                consumed[g] = true;
                ++res.matched;
                res.matched_gt_preds.push_back(gts[g].pred_id);
                break;
            }
        }
    }
    for (std::size_t g = 0; g < gts.size(); ++g)
        if (!consumed[g]) res.unmatched_gt_preds.push_back(gts[g].pred_id);
    return res;
}

struct PredicateRecall {
    int gt_count = 0;
    int matched = 0;
    double recall() const { return gt_count > 0 ? static_cast<double>(matched) / gt_count : 0.0; }
};

struct MetricCell {
    double recall = 0;       // R@K
    double mean_recall = 0;  // mR@K
    int gt_total = 0;
    int matched = 0;
    std::map<int, PredicateRecall> per_predicate;
};

struct EvalReport {
    // split -> task -> K -> cell
    std::map<std::string, std::map<std::string, std::map<int, MetricCell>>> cells;
};

// Pooled split-level scoring: per-predicate recall pools GT instances
// across the split's images (micro within predicate), mR averages over
// predicates with at least one GT instance.
inline MetricCell score_split(const AnnotatedCorpus& corpus,
                              const std::map<std::string, ImageTriplets>& predictions,
                              const std::vector<std::string>& image_ids, int k, Task task) {
    MetricCell cell;
    static const ImageTriplets empty;
    for (const auto& id : image_ids) {
        const Scene* scene = corpus.scene_for(id);
        if (!scene) throw input_error("evaluate: split references unknown image '" + id + "'");
        const ImageTriplets* gt = corpus.gt_for(id);
        if (!gt || gt->triplets.empty()) continue;
        auto pit = predictions.find(id);
        const ImageTriplets& pred = pit == predictions.end() ? empty : pit->second;
        auto constrained = apply_graph_constraint(pred.triplets);
        auto res = recall_image(constrained, gt->triplets, k, task, *scene, pred.objects);
        cell.gt_total += res.gt_total;
        cell.matched += res.matched;
        for (int p : res.matched_gt_preds) {
            ++cell.per_predicate[p].gt_count;
            ++cell.per_predicate[p].matched;
        }
        for (int p : res.unmatched_gt_preds) ++cell.per_predicate[p].gt_count;
    }
    cell.recall = cell.gt_total > 0 ? static_cast<double>(cell.matched) / cell.gt_total : 0.0;
    double sum = 0;
    int n = 0;
    for (const auto& [p, pr] : cell.per_predicate)
        if (pr.gt_count > 0) {
            sum += pr.recall();
            ++n;
        }
    cell.mean_recall = n > 0 ? sum / n : 0.0;
    return cell;
}

inline EvalReport evaluate(const AnnotatedCorpus& corpus,
                           const std::vector<ImageTriplets>& prediction_list,
                           const SplitResult& split, const std::vector<Task>& tasks,
                           const std::vector<int>& ks) {
    std::map<std::string, ImageTriplets> predictions;
    for (const auto& p : prediction_list) {
        if (!corpus.scene_for(p.image_id))
            throw input_error("evaluate: prediction references unknown image '" + p.image_id + "'");
        predictions[p.image_id] = p;
    }
    EvalReport report;
    std::map<std::string, const std::vector<std::string>*> splits{
        {"seen_only", &split.seen_only_ids},
        {"unseen_only", &split.unseen_only_ids},
        {"mixed", &split.mixed_ids}};
    for (const auto& [split_name, ids] : splits)
        for (Task task : tasks)
            for (int k : ks)
                report.cells[split_name][to_string(task)][k] =
                    score_split(corpus, predictions, *ids, k, task);
    return report;
}

inline json to_json(const EvalReport& report, const PredicateVocabulary& vocab) {
    json out;
    for (const auto& [split_name, by_task] : report.cells)
        for (const auto& [task_name, by_k] : by_task)
            for (const auto& [k, cell] : by_k) {
                json per_pred;
                for (const auto& [p, pr] : cell.per_predicate)
                    per_pred[vocab.names.at(static_cast<std::size_t>(p))] =
                        json{{"gt_count", pr.gt_count}, {"matched", pr.matched}, {"recall", pr.recall()}};
                out[split_name][task_name][std::to_string(k)] =
                    json{{"recall", cell.recall},
                         {"mean_recall", cell.mean_recall},
                         {"gt_total", cell.gt_total},
                         {"matched", cell.matched},
                         {"per_predicate", per_pred}};
            }
    return out;
}

inline std::string per_class_recall_csv(const EvalReport& report, const PredicateVocabulary& vocab) {
    std::string csv = "predicate,split,K,recall,gt_count\n";
    for (const auto& [split_name, by_task] : report.cells)
        for (const auto& [task_name, by_k] : by_task) {
            if (task_name != "predcls") continue;
            for (const auto& [k, cell] : by_k)
                for (const auto& [p, pr] : cell.per_predicate) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.6f", pr.recall());
                    csv += vocab.names.at(static_cast<std::size_t>(p)) + "," + split_name + "," +
                           std::to_string(k) + "," + buf + "," + std::to_string(pr.gt_count) + "\n";
                }
        }
    return csv;
}

}  // namespace relground
