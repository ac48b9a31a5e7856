#pragma once

// Naive single-threaded reference scorer, kept deliberately separate from
// eval.hpp: it restates the scoring protocol from scratch (its own pair
// grouping, ranking, IoU and matching loops) so the two implementations can
// be checked against each other.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "relground/json_io.hpp"
#include "relground/splits.hpp"
#include "relground/types.hpp"

namespace relground::reference {

inline double box_iou(const BBox& a, const BBox& b) {
    double xl = a.x1 > b.x1 ? a.x1 : b.x1;
    double yt = a.y1 > b.y1 ? a.y1 : b.y1;
    double xr = a.x2 < b.x2 ? a.x2 : b.x2;
    double yb = a.y2 < b.y2 ? a.y2 : b.y2;
    double iw = xr - xl;
    double ih = yb - yt;
    if (iw <= 0 || ih <= 0) return 0;
    double inter = iw * ih;
    double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    return inter / (area_a + area_b - inter);
}

// Group-by-pair argmax, highest score wins, ties toward lower predicate id.
inline std::vector<Triplet> graph_constraint(const std::vector<Triplet>& preds) {
    std::vector<Triplet> out;
    for (const auto& p : preds) {
        bool is_best = true;
        for (const auto& q : preds) {
            if (q.sub_id != p.sub_id || q.obj_id != p.obj_id) continue;
            double sp = p.score.value_or(0.0), sq = q.score.value_or(0.0);
            if (sq > sp) is_best = false;
            if (sq == sp && q.pred_id < p.pred_id) is_best = false;
        }
        if (is_best) out.push_back(p);
    }
    return out;
}

struct SplitScores {
    double recall = 0;
    double mean_recall = 0;
    std::map<int, std::pair<int, int>> per_predicate;  // pred -> (matched, gt_count)
};

// Scores one split: rank, cut at K, greedily consume GT in list order.
inline SplitScores score(const std::vector<const Scene*>& scenes,
                         const std::vector<const std::vector<Triplet>*>& gts,
                         const std::vector<const ImageTriplets*>& preds, int k,
                         const std::string& task) {
    SplitScores s;
    int total_gt = 0, total_matched = 0;
    for (std::size_t img = 0; img < scenes.size(); ++img) {
        const Scene& scene = *scenes[img];
        const std::vector<Triplet>& gt = *gts[img];
        if (gt.empty()) continue;
        std::vector<Triplet> ranked;
        std::vector<ObjectInstance> pred_objects;
        if (preds[img]) {
            ranked = graph_constraint(preds[img]->triplets);
            pred_objects = preds[img]->objects;
        }
        std::sort(ranked.begin(), ranked.end(), [](const Triplet& a, const Triplet& b) {
            double sa = a.score.value_or(0.0), sb = b.score.value_or(0.0);
            if (sa != sb) return sa > sb;
            if (a.sub_id != b.sub_id) return a.sub_id < b.sub_id;
            if (a.obj_id != b.obj_id) return a.obj_id < b.obj_id;
            return a.pred_id < b.pred_id;
        });
        if (static_cast<int>(ranked.size()) > k) ranked.resize(static_cast<std::size_t>(k));

        std::vector<bool> used(gt.size(), false);
        std::vector<bool> hit(gt.size(), false);
        for (const auto& p : ranked) {
            for (std::size_t g = 0; g < gt.size(); ++g) {
                if (used[g]) continue;
                if (p.sub_id != gt[g].sub_id || p.obj_id != gt[g].obj_id ||
                    p.pred_id != gt[g].pred_id)
                    continue;
                if (task != "predcls") {
                    const ObjectInstance* ps = nullptr;
                    const ObjectInstance* po = nullptr;
                    for (const auto& o : pred_objects) {
                        if (o.instance_id == p.sub_id) ps = &o;
                        if (o.instance_id == p.obj_id) po = &o;
                    }
                    if (!ps || !po) throw input_error("reference: missing predicted objects");
                    if (ps->class_id != scene.object(gt[g].sub_id).class_id) continue;
                    if (po->class_id != scene.object(gt[g].obj_id).class_id) continue;
                    if (task == "sgdet") {
                        if (box_iou(ps->bbox, scene.object(gt[g].sub_id).bbox) < 0.5) continue;
                        if (box_iou(po->bbox, scene.object(gt[g].obj_id).bbox) < 0.5) continue;
                    }
                }
                used[g] = true;
                hit[g] = true;
                break;
            }
        }
        for (std::size_t g = 0; g < gt.size(); ++g) {
            ++total_gt;
            auto& pp = s.per_predicate[gt[g].pred_id];
            ++pp.second;
            if (hit[g]) {
                ++total_matched;
                ++pp.first;
            }
        }
    }
    s.recall = total_gt > 0 ? static_cast<double>(total_matched) / total_gt : 0.0;
    double sum = 0;
    int n = 0;
    for (const auto& [p, mc] : s.per_predicate)
        if (mc.second > 0) {
            sum += static_cast<double>(mc.first) / mc.second;
            ++n;
        }
    s.mean_recall = n > 0 ? sum / n : 0.0;
    return s;
}

inline SplitScores score_corpus_split(const AnnotatedCorpus& corpus,
                                      const std::vector<ImageTriplets>& predictions,
                                      const std::vector<std::string>& image_ids, int k,
                                      const std::string& task) {
    std::vector<const Scene*> scenes;
    std::vector<const std::vector<Triplet>*> gts;
    std::vector<const ImageTriplets*> preds;
    for (const auto& id : image_ids) {
        const Scene* sc = corpus.scene_for(id);
        const ImageTriplets* gt = corpus.gt_for(id);
        if (!sc || !gt) throw input_error("reference: unknown image '" + id + "'");
        scenes.push_back(sc);
        gts.push_back(&gt->triplets);
        const ImageTriplets* p = nullptr;
        for (const auto& cand : predictions)
            if (cand.image_id == id) p = &cand;
        preds.push_back(p);
    }
    return score(scenes, gts, preds, k, task);
}

}  // namespace relground::reference
