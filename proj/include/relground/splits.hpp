#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/common.hpp"
#include "relground/json_io.hpp"
#include "relground/types.hpp"

namespace relground {

struct AnnotatedCorpus {
    std::vector<Scene> scenes;
    std::vector<ImageTriplets> ground_truth;

    const ImageTriplets* gt_for(const std::string& image_id) const {
        for (const auto& g : ground_truth)
            if (g.image_id == image_id) return &g;
        return nullptr;
    }

    const Scene* scene_for(const std::string& image_id) const {
        for (const auto& s : scenes)
            if (s.image_id == image_id) return &s;
        return nullptr;
    }

    void validate() const {
        for (const auto& g : ground_truth) {
            const Scene* s = scene_for(g.image_id);
            if (!s) throw input_error("corpus: ground truth for unknown image '" + g.image_id + "'");
            for (const auto& t : g.triplets)
                if (!s->has_object(t.sub_id) || !s->has_object(t.obj_id))
                    throw input_error("corpus: triplet references unknown instance in '" + g.image_id + "'");
        }
    }
};

struct SplitStats {
    int n_images = 0;
    int n_triplets = 0;
    int n_predicates = 0;
};

inline json to_json(const SplitStats& s) {
    return json{{"n_images", s.n_images}, {"n_triplets", s.n_triplets}, {"n_predicates", s.n_predicates}};
}

struct SplitResult {
    std::set<int> seen_predicates;
    std::set<int> unseen_predicates;
    std::vector<std::string> train_ids;
    std::vector<std::string> seen_only_ids;
    std::vector<std::string> unseen_only_ids;
    std::vector<std::string> mixed_ids;
    int excluded_no_gt = 0;
    std::map<std::string, SplitStats> stats;  // keyed train/seen_only/unseen_only/mixed
};

// seen = top-k predicates by ground-truth frequency, ties broken
// alphabetically by name; unseen = complement.
inline std::pair<std::set<int>, std::set<int>> partition_vocabulary(const AnnotatedCorpus& corpus,
                                                                   const PredicateVocabulary& vocab,
                                                                   int k_seen) {
    if (corpus.ground_truth.empty()) throw input_error("partition_vocabulary: empty corpus");
    if (k_seen > vocab.size()) throw input_error("partition_vocabulary: k_seen exceeds vocabulary size");
    std::vector<long> freq(static_cast<std::size_t>(vocab.size()), 0);
    for (const auto& g : corpus.ground_truth)
        for (const auto& t : g.triplets) {
            if (t.pred_id < 0 || t.pred_id >= vocab.size())
                throw input_error("partition_vocabulary: predicate id out of range");
            ++freq[static_cast<std::size_t>(t.pred_id)];
        }
    std::vector<int> ids(static_cast<std::size_t>(vocab.size()));
    for (int i = 0; i < vocab.size(); ++i) ids[static_cast<std::size_t>(i)] = i;
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        long fa = freq[static_cast<std::size_t>(a)], fb = freq[static_cast<std::size_t>(b)];
        if (fa != fb) return fa > fb;
        return vocab.names[static_cast<std::size_t>(a)] < vocab.names[static_cast<std::size_t>(b)];
    });
    std::set<int> seen(ids.begin(), ids.begin() + k_seen);
    std::set<int> unseen(ids.begin() + k_seen, ids.end());
    return {seen, unseen};
}

namespace detail {

inline SplitStats stats_for(const AnnotatedCorpus& corpus, const std::vector<std::string>& ids) {
    SplitStats s;
    s.n_images = static_cast<int>(ids.size());
    std::set<int> preds;
    for (const auto& id : ids) {
        const ImageTriplets* g = corpus.gt_for(id);
        if (!g) continue;
        s.n_triplets += static_cast<int>(g->triplets.size());
        for (const auto& t : g->triplets) preds.insert(t.pred_id);
    }
    s.n_predicates = static_cast<int>(preds.size());
    return s;
}

}  // namespace detail

// Assigns every image with at least one GT triplet (and not pinned to the
// training list) to exactly one of seen-only / unseen-only / mixed.
inline SplitResult stratify(const AnnotatedCorpus& corpus, const std::set<int>& seen,
                            const std::set<int>& unseen,
                            const std::vector<std::string>& train_ids = {}) {
    SplitResult result;
    result.seen_predicates = seen;
    result.unseen_predicates = unseen;
    result.train_ids = train_ids;
    std::set<std::string> train_set(train_ids.begin(), train_ids.end());
    for (const auto& g : corpus.ground_truth) {
        if (train_set.count(g.image_id)) continue;
        if (g.triplets.empty()) {
            ++result.excluded_no_gt;
            continue;
        }
        bool any_seen = false, any_unseen = false;
        for (const auto& t : g.triplets) {
            if (seen.count(t.pred_id)) any_seen = true;
            else any_unseen = true;
        }
        if (any_seen && any_unseen) result.mixed_ids.push_back(g.image_id);
        else if (any_seen) result.seen_only_ids.push_back(g.image_id);
        else result.unseen_only_ids.push_back(g.image_id);
    }
    result.stats["train"] = detail::stats_for(corpus, result.train_ids);
    result.stats["seen_only"] = detail::stats_for(corpus, result.seen_only_ids);
    result.stats["unseen_only"] = detail::stats_for(corpus, result.unseen_only_ids);
    result.stats["mixed"] = detail::stats_for(corpus, result.mixed_ids);
    return result;
}

// Seeded stand-in for a released training-image list: sample n images whose
// ground truth uses only seen predicates.
inline std::vector<std::string> sample_train_ids(const AnnotatedCorpus& corpus,
                                                 const std::set<int>& seen, int n,
                                                 std::uint64_t seed) {
    std::vector<std::string> eligible;
    for (const auto& g : corpus.ground_truth) {
        if (g.triplets.empty()) continue;
        bool all_seen = true;
        for (const auto& t : g.triplets) all_seen = all_seen && seen.count(t.pred_id) > 0;
        if (all_seen) eligible.push_back(g.image_id);
    }
    if (static_cast<int>(eligible.size()) < n)
        throw input_error("sample_train_ids: only " + std::to_string(eligible.size()) +
                          " eligible images, need " + std::to_string(n));
    Rng rng = Rng::derive_from(seed, 0x7fa1);
    rng.shuffle(eligible);
    eligible.resize(static_cast<std::size_t>(n));
    std::sort(eligible.begin(), eligible.end());
    return eligible;
}

// Names the unseen predicates that occur in the evaluation corpus but never
// inside the unseen-only split, i.e. predicates that only ever co-occur
// with seen ones.
inline std::vector<std::string> verify_split_claims(const SplitResult& result,
                                                    const AnnotatedCorpus& corpus,
                                                    const PredicateVocabulary& vocab) {
    std::set<int> in_unseen_only;
    for (const auto& id : result.unseen_only_ids) {
        const ImageTriplets* g = corpus.gt_for(id);
        if (!g) continue;
        for (const auto& t : g->triplets) in_unseen_only.insert(t.pred_id);
    }
    std::set<int> occurs_anywhere;
    auto collect = [&](const std::vector<std::string>& ids) {
        for (const auto& id : ids) {
            const ImageTriplets* g = corpus.gt_for(id);
            if (!g) continue;
            for (const auto& t : g->triplets) occurs_anywhere.insert(t.pred_id);
        }
    };
    collect(result.seen_only_ids);
    collect(result.unseen_only_ids);
    collect(result.mixed_ids);
    std::vector<std::string> flagged;
    for (int p : result.unseen_predicates)
        if (occurs_anywhere.count(p) && !in_unseen_only.count(p))
            flagged.push_back(vocab.names[static_cast<std::size_t>(p)]);
    std::sort(flagged.begin(), flagged.end());
    return flagged;
}

// ---- split.json ------------------------------------------------------------

inline json to_json(const SplitResult& r) {
    json stats;
    for (const auto& [name, s] : r.stats) stats[name] = to_json(s);
    return json{{"seen_predicates", std::vector<int>(r.seen_predicates.begin(), r.seen_predicates.end())},
                {"unseen_predicates", std::vector<int>(r.unseen_predicates.begin(), r.unseen_predicates.end())},
                {"train", r.train_ids},
                {"seen_only", r.seen_only_ids},
                {"unseen_only", r.unseen_only_ids},
                {"mixed", r.mixed_ids},
                {"excluded_no_gt", r.excluded_no_gt},
                {"stats", stats}};
}

inline SplitResult split_from_json(const json& j) {
    SplitResult r;
    for (int p : j.at("seen_predicates").get<std::vector<int>>()) r.seen_predicates.insert(p);
    for (int p : j.at("unseen_predicates").get<std::vector<int>>()) r.unseen_predicates.insert(p);
    r.train_ids = j.at("train").get<std::vector<std::string>>();
    r.seen_only_ids = j.at("seen_only").get<std::vector<std::string>>();
    r.unseen_only_ids = j.at("unseen_only").get<std::vector<std::string>>();
    r.mixed_ids = j.at("mixed").get<std::vector<std::string>>();
    r.excluded_no_gt = j.value("excluded_no_gt", 0);
    return r;
}

// ---- external scene-graph metadata ingestion -------------------------------

// Converts scene-graph JSON metadata (image ids, object boxes/labels,
// relationship triples) into the corpus representation. Accepts either a
// top-level array or {"images": [...]}; feature vectors are optional and
// absent in split/eval-only workflows. Object labels and predicates may be
// given as names (resolved through the vocabularies) or numeric ids.
inline AnnotatedCorpus ingest_metadata(const json& root, const PredicateVocabulary& preds,
                                       const ObjectVocabulary& objects) {
    const json& images = root.is_array() ? root : root.at("images");
    AnnotatedCorpus corpus;
    for (const auto& im : images) {
        Scene scene;
        if (im.at("image_id").is_string()) scene.image_id = im.at("image_id").get<std::string>();
        else scene.image_id = std::to_string(im.at("image_id").get<long>());
        scene.width = im.value("width", 0.0);
        scene.height = im.value("height", 0.0);
        for (const auto& oj : im.at("objects")) {
            ObjectInstance o;
            o.instance_id = oj.contains("instance_id") ? oj.at("instance_id").get<int>()
                                                       : oj.at("object_id").get<int>();
            if (oj.contains("class_id")) {
                o.class_id = oj.at("class_id").get<int>();
            } else {
                std::string name = oj.contains("label") ? oj.at("label").get<std::string>()
                                                        : oj.at("name").get<std::string>();
                o.class_id = objects.index_of(name);
                if (o.class_id < 0) throw input_error("ingest: unknown object class '" + name + "'");
            }
            if (oj.contains("bbox")) {
                o.bbox = bbox_from_json(oj.at("bbox"));
            } else {
                double x = oj.at("x").get<double>(), y = oj.at("y").get<double>();
                o.bbox = BBox{x, y, x + oj.at("w").get<double>(), y + oj.at("h").get<double>()};
            }
            scene.objects.push_back(o);
        }
        ImageTriplets gt;
        gt.image_id = scene.image_id;
        if (im.contains("relationships"))
            for (const auto& rj : im.at("relationships")) {
                Triplet t;
                t.sub_id = rj.contains("sub_id") ? rj.at("sub_id").get<int>()
                                                 : rj.at("subject_id").get<int>();
                t.obj_id = rj.contains("obj_id") ? rj.at("obj_id").get<int>()
                                                 : rj.at("object_id").get<int>();
                if (rj.contains("pred_id")) {
                    t.pred_id = rj.at("pred_id").get<int>();
                } else {
                    std::string name = rj.at("predicate").get<std::string>();
                    t.pred_id = preds.index_of(name);
                    if (t.pred_id < 0) throw input_error("ingest: unknown predicate '" + name + "'");
                }
                gt.triplets.push_back(t);
            }
        corpus.scenes.push_back(std::move(scene));
        corpus.ground_truth.push_back(std::move(gt));
    }
    return corpus;
}

}  // namespace relground
