#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/common.hpp"
#include "relground/json_io.hpp"
#include "relground/oracle.hpp"
#include "relground/types.hpp"

namespace relground {

struct WorldConfig {
    int n_scenes = 200;
    int objects_min = 3;
    int objects_max = 6;
    int n_classes = 10;
    int n_predicates = 12;
    int n_seen = 8;
    double feature_noise_sigma = 0.5;
    double prior_hit_rate = 0.7;  // probability the true predicate enters a pair's hypotheses
    // Distractors model semantic plausibility detached from geometry: a pair
    // covered by the prior picks up an extra distractor with probability
    // hit_distractor_rate; an uncovered pair is listed with distractors alone
    // with probability miss_distractor_rate and is otherwise absent.
    double hit_distractor_rate = 0.1;
    double miss_distractor_rate = 0.3;
    int max_distractors = 2;
    // class-pair -> predicate weights, row index sub_class * n_classes +
    // obj_class; empty means generate_world derives a sparse table from seed
    std::vector<std::vector<double>> distractor_table;
    // fraction of the image diagonal within which an ordered pair is related
    double relate_radius = 0.65;
    int d_v = 16;  // last 8 slots carry normalized box geometry
    int d_w = 8;
    int d_c = 16;
    int m_context = 8;
    std::uint64_t seed = 7;

    void validate() const {
        if (n_scenes < 1) throw input_error("WorldConfig: n_scenes must be positive");
        if (objects_min < 2) throw input_error("WorldConfig: need at least 2 objects per scene");
        if (objects_max < objects_min) throw input_error("WorldConfig: objects_max < objects_min");
        if (n_seen >= n_predicates) throw input_error("WorldConfig: n_seen must be < n_predicates");
        if (prior_hit_rate < 0 || prior_hit_rate > 1) throw input_error("WorldConfig: prior_hit_rate out of range");
        if (hit_distractor_rate < 0 || hit_distractor_rate > 1 || miss_distractor_rate < 0 ||
            miss_distractor_rate > 1)
            throw input_error("WorldConfig: distractor rate out of range");
        if (feature_noise_sigma < 0) throw input_error("WorldConfig: negative noise sigma");
        if (d_v < 9) throw input_error("WorldConfig: d_v must leave room for the geometry block");
    }
};

inline json to_json(const WorldConfig& c) {
    return json{{"n_scenes", c.n_scenes},
                {"objects_min", c.objects_min},
                {"objects_max", c.objects_max},
                {"n_classes", c.n_classes},
                {"n_predicates", c.n_predicates},
                {"n_seen", c.n_seen},
                {"feature_noise_sigma", c.feature_noise_sigma},
                {"prior_hit_rate", c.prior_hit_rate},
                {"hit_distractor_rate", c.hit_distractor_rate},
                {"miss_distractor_rate", c.miss_distractor_rate},
                {"max_distractors", c.max_distractors},
                {"distractor_table", c.distractor_table},
                {"relate_radius", c.relate_radius},
                {"d_v", c.d_v},
                {"d_w", c.d_w},
                {"d_c", c.d_c},
                {"m_context", c.m_context},
                {"seed", c.seed}};
}

inline WorldConfig world_config_from_json(const json& j) {
    WorldConfig c;
    c.n_scenes = j.value("n_scenes", c.n_scenes);
    c.objects_min = j.value("objects_min", c.objects_min);
    c.objects_max = j.value("objects_max", c.objects_max);
    c.n_classes = j.value("n_classes", c.n_classes);
    c.n_predicates = j.value("n_predicates", c.n_predicates);
    c.n_seen = j.value("n_seen", c.n_seen);
    c.feature_noise_sigma = j.value("feature_noise_sigma", c.feature_noise_sigma);
    c.prior_hit_rate = j.value("prior_hit_rate", c.prior_hit_rate);
    c.hit_distractor_rate = j.value("hit_distractor_rate", c.hit_distractor_rate);
    c.miss_distractor_rate = j.value("miss_distractor_rate", c.miss_distractor_rate);
    c.max_distractors = j.value("max_distractors", c.max_distractors);
    c.distractor_table = j.value("distractor_table", c.distractor_table);
    c.relate_radius = j.value("relate_radius", c.relate_radius);
    c.d_v = j.value("d_v", c.d_v);
    c.d_w = j.value("d_w", c.d_w);
    c.d_c = j.value("d_c", c.d_c);
    c.m_context = j.value("m_context", c.m_context);
    c.seed = j.value("seed", c.seed);
    return c;
}

// The generative rule: an ordered pair's predicate is a function of the two
// classes (via a small group table) and their relative geometry. Geometry
// outcomes, checked as a decision list:
//   0 subject box inside object box      1 object box inside subject box
//   2 boxes overlap (IoU > 0.05)         3 subject right of object
//   4 subject left of object             5 subject below object
//   6 subject above object
struct GeometryRule {
    static constexpr int n_outcomes = 7;
    int n_groups = 3;
    std::vector<std::vector<int>> table;  // n_groups x n_outcomes -> predicate id

    int group_of(int class_a, int class_b) const {
        return (class_a * 31 + class_b * 7) % n_groups;
    }

    static int outcome(const BBox& s, const BBox& o) {
        bool s_in_o = s.x1 >= o.x1 && s.y1 >= o.y1 && s.x2 <= o.x2 && s.y2 <= o.y2;
        bool o_in_s = o.x1 >= s.x1 && o.y1 >= s.y1 && o.x2 <= s.x2 && o.y2 <= s.y2;
        if (s_in_o) return 0;
        if (o_in_s) return 1;
        if (iou(s, o) > 0.05) return 2;
        double dx = s.cx() - o.cx();
        double dy = s.cy() - o.cy();
        if (dx > std::abs(dy)) return 3;
        if (-dx > std::abs(dy)) return 4;
        return dy > 0 ? 5 : 6;
    }

    int predicate(int class_a, int class_b, const BBox& s, const BBox& o) const {
        return table[static_cast<std::size_t>(group_of(class_a, class_b))]
                    [static_cast<std::size_t>(outcome(s, o))];
    }
};

struct PlantedTruth {
    // image_id -> generative GT triplets (one per related ordered pair)
    std::map<std::string, std::vector<Triplet>> by_image;
    GeometryRule rule;
};

// Fixed per-world parameters shared by feature synthesis and the recovery
// oracle.
struct SyntheticWorld {
    WorldConfig cfg;
    GeometryRule rule;
    std::vector<std::vector<double>> class_proto_v;  // n_classes x (d_v - 8)
    std::vector<std::vector<double>> class_proto_w;  // n_classes x d_w
    // resolved class-pair distractor weights (cfg.distractor_table or derived)
    std::vector<std::vector<double>> distractor_table;
    double image_w = 640, image_h = 480;
};

struct WorldData {
    SyntheticWorld world;
    std::vector<Scene> scenes;
    std::vector<ImageTriplets> ground_truth;
    PlantedTruth truth;
};

namespace detail {

inline std::vector<double> geometry_block(const BBox& b, double W, double H) {
    return {b.cx() / W, b.cy() / H, b.width() / W, b.height() / H,
            b.x1 / W,   b.y1 / H,   b.x2 / W,     b.y2 / H};
}

inline BBox decode_geometry(const std::vector<double>& feat, int d_v, double W, double H) {
    std::size_t base = static_cast<std::size_t>(d_v) - 8;
    return BBox{feat[base + 4] * W, feat[base + 5] * H, feat[base + 6] * W, feat[base + 7] * H};
}

// Skewed predicate weights so the generated corpus has frequent and rare
// predicates, mirroring a long-tailed annotation distribution.
inline std::vector<double> zipf_weights(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 1.0 / (1.0 + i);
    return w;
}

inline int weighted_draw(Rng& rng, const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double r = rng.uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        r -= weights[i];
        if (r <= 0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace detail

inline WorldData generate_world(const WorldConfig& cfg) {
    cfg.validate();
    WorldData data;
    data.world.cfg = cfg;

    Rng setup = Rng::derive_from(cfg.seed, 0xf00d);
    auto& rule = data.world.rule;
    rule.table.assign(static_cast<std::size_t>(rule.n_groups),
                      std::vector<int>(GeometryRule::n_outcomes, 0));
    auto weights = detail::zipf_weights(cfg.n_predicates);
    for (auto& row : rule.table)
        for (auto& cell : row) cell = detail::weighted_draw(setup, weights);
    // Guarantee every predicate occurs somewhere in the rule so no label is
    // structurally impossible.
    {
        std::vector<int> cells(static_cast<std::size_t>(rule.n_groups * GeometryRule::n_outcomes));
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
        setup.shuffle(cells);
        std::size_t k = 0;
        for (int p = 0; p < cfg.n_predicates; ++p) {
            bool present = false;
            for (const auto& row : rule.table)
                for (int cell : row) present = present || cell == p;
            if (!present && k < cells.size()) {
                int idx = cells[k++];
                rule.table[static_cast<std::size_t>(idx / GeometryRule::n_outcomes)]
                          [static_cast<std::size_t>(idx % GeometryRule::n_outcomes)] = p;
            }
        }
    }
    if (!cfg.distractor_table.empty()) {
        if (static_cast<int>(cfg.distractor_table.size()) != cfg.n_classes * cfg.n_classes)
            throw input_error("WorldConfig: distractor_table needs one row per ordered class pair");
        data.world.distractor_table = cfg.distractor_table;
    } else {
        // each class pair gets a sparse set of plausible-but-ungrounded
        // predicates with fixed weights
        for (int row = 0; row < cfg.n_classes * cfg.n_classes; ++row) {
            std::vector<double> w(static_cast<std::size_t>(cfg.n_predicates), 0.0);
            const double slot_w[3] = {0.5, 0.3, 0.2};
            for (double sw : slot_w) {
                int p = setup.below_int(cfg.n_predicates);
                w[static_cast<std::size_t>(p)] += sw;
            }
            data.world.distractor_table.push_back(std::move(w));
        }
    }

    int class_block = cfg.d_v - 8;
    for (int c = 0; c < cfg.n_classes; ++c) {
        std::vector<double> pv(static_cast<std::size_t>(class_block));
        for (auto& x : pv) x = setup.gaussian();
        data.world.class_proto_v.push_back(std::move(pv));
        std::vector<double> pw(static_cast<std::size_t>(cfg.d_w));
        for (auto& x : pw) x = setup.gaussian();
        data.world.class_proto_w.push_back(std::move(pw));
    }

    double W = data.world.image_w, H = data.world.image_h;
    double diag = std::sqrt(W * W + H * H);
    data.truth.rule = rule;

    for (int s = 0; s < cfg.n_scenes; ++s) {
        Rng rng = Rng::derive_from(cfg.seed, 0x5ce4e + static_cast<std::uint64_t>(s));
        Scene scene;
        scene.image_id = "synth_" + std::to_string(s);
        scene.width = W;
        scene.height = H;
        int n_obj = cfg.objects_min + rng.below_int(cfg.objects_max - cfg.objects_min + 1);
        for (int i = 0; i < n_obj; ++i) {
            ObjectInstance obj;
            obj.instance_id = i;
            obj.class_id = rng.below_int(cfg.n_classes);
            double bw = rng.uniform(40, 180);
            double bh = rng.uniform(40, 180);
            double x1 = rng.uniform(0, W - bw);
            double y1 = rng.uniform(0, H - bh);
            obj.bbox = BBox{x1, y1, x1 + bw, y1 + bh};
            scene.objects.push_back(obj);
        }
        // ground truth before features: features carry noise, truth does not
        ImageTriplets gt;
        gt.image_id = scene.image_id;
        for (const auto& a : scene.objects)
            for (const auto& b : scene.objects) {
                if (a.instance_id == b.instance_id) continue;
                double dx = a.bbox.cx() - b.bbox.cx();
                double dy = a.bbox.cy() - b.bbox.cy();
                if (std::sqrt(dx * dx + dy * dy) > cfg.relate_radius * diag) continue;
                int pred = rule.predicate(a.class_id, b.class_id, a.bbox, b.bbox);
                gt.triplets.push_back(Triplet{a.instance_id, pred, b.instance_id, std::nullopt});
            }
        for (auto& obj : scene.objects) {
            obj.visual_feat = data.world.class_proto_v[static_cast<std::size_t>(obj.class_id)];
            auto geo = detail::geometry_block(obj.bbox, W, H);
            obj.visual_feat.insert(obj.visual_feat.end(), geo.begin(), geo.end());
            for (auto& x : obj.visual_feat) x += cfg.feature_noise_sigma * rng.gaussian();
            obj.semantic_feat = data.world.class_proto_w[static_cast<std::size_t>(obj.class_id)];
        }
        // context tokens: coarse layout summaries with per-token jitter
        for (int t = 0; t < cfg.m_context; ++t) {
            std::vector<double> token(static_cast<std::size_t>(cfg.d_c), 0.0);
            double mcx = 0, mcy = 0, marea = 0;
            for (const auto& obj : scene.objects) {
                mcx += obj.bbox.cx() / W;
                mcy += obj.bbox.cy() / H;
                marea += obj.bbox.area() / (W * H);
            }
            token[0] = mcx / n_obj;
            token[1] = mcy / n_obj;
            token[2] = marea / n_obj;
            token[3] = static_cast<double>(n_obj) / 10.0;
            for (std::size_t k = 4; k < token.size(); ++k) token[k] = 0.1 * rng.gaussian();
            scene.context.push_back(std::move(token));
        }
        scene.validate();
        data.truth.by_image[scene.image_id] = gt.triplets;
        data.scenes.push_back(std::move(scene));
        data.ground_truth.push_back(std::move(gt));
    }
    return data;
}

// Synthetic E-step. For each related pair the true predicate enters the
// hypothesis set with probability prior_hit_rate at high confidence; a
// covered pair occasionally carries an extra distractor, an uncovered pair
// is either listed with distractors alone or left out of the prior
// entirely. Distractors come from the class-pair distractor table, modeling
// plausibility detached from the actual geometry.
inline std::vector<PriorHypergraph> noisy_prior(const WorldData& data) {
    const auto& cfg = data.world.cfg;
    std::vector<PriorHypergraph> priors;
    for (std::size_t s = 0; s < data.scenes.size(); ++s) {
        const auto& scene = data.scenes[s];
        Rng rng = Rng::derive_from(cfg.seed, 0x9410a + static_cast<std::uint64_t>(s));
        PriorHypergraph prior;
        prior.image_id = scene.image_id;
        for (const auto& t : data.truth.by_image.at(scene.image_id)) {
            const auto& sub = scene.object(t.sub_id);
            const auto& obj = scene.object(t.obj_id);
            const auto& weights =
                data.world.distractor_table[static_cast<std::size_t>(sub.class_id * cfg.n_classes +
                                                                     obj.class_id)];
            std::vector<RawHypothesis> hyps;
            bool hit = rng.uniform() < cfg.prior_hit_rate;
            if (hit) hyps.push_back({t.pred_id, 0.8 + 0.1 * rng.below_int(2)});
            int n_distract = 0;
            double rate = hit ? cfg.hit_distractor_rate : cfg.miss_distractor_rate;
            if (rng.uniform() < rate) n_distract = 1 + rng.below_int(cfg.max_distractors);
            int added = 0;
            for (int attempt = 0; attempt < 8 && added < n_distract &&
                                  static_cast<int>(hyps.size()) < 5;
                 ++attempt) {
                int pred = detail::weighted_draw(rng, weights);
                if (pred == t.pred_id) continue;  // a miss keeps the truth absent
                bool dup = false;
                for (const auto& h : hyps) dup = dup || h.pred_id == pred;
                if (dup) continue;
                hyps.push_back({pred, 0.5 + 0.1 * rng.below_int(3)});
                ++added;
            }
            if (hyps.empty()) continue;  // the prior simply doesn't mention this pair
            prior.pairs.push_back(
                PairHypotheses{t.sub_id, t.obj_id, normalize_pair(dedupe_and_cap(hyps))});
        }
        prior.validate(&scene);
        priors.push_back(std::move(prior));
    }
    return priors;
}

// Recovery oracle: reads the class from the nearest visual prototype and the
// box from the geometry slots, then re-applies the generative rule. Exact on
// noiseless features.
inline int feature_oracle_predict(const SyntheticWorld& world, const ObjectInstance& sub,
                                  const ObjectInstance& obj) {
    int class_block = world.cfg.d_v - 8;
    auto nearest_class = [&](const ObjectInstance& o) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < world.cfg.n_classes; ++c) {
            double d = 0;
            for (int k = 0; k < class_block; ++k) {
                double diff = o.visual_feat[static_cast<std::size_t>(k)] -
                              world.class_proto_v[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        return best;
    };
    BBox sb = detail::decode_geometry(sub.visual_feat, world.cfg.d_v, world.image_w, world.image_h);
    BBox ob = detail::decode_geometry(obj.visual_feat, world.cfg.d_v, world.image_w, world.image_h);
    return world.rule.predicate(nearest_class(sub), nearest_class(obj), sb, ob);
}

}  // namespace relground
