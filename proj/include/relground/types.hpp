#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace relground {

// Raised when an input violates a documented precondition.
class input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PredicateVocabulary {
    std::vector<std::string> names;
    std::vector<bool> seen_mask;  // same length as names

    int size() const { return static_cast<int>(names.size()); }

    int index_of(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (names[static_cast<std::size_t>(i)] == name) return i;
        return -1;
    }

    bool is_seen(int pred_id) const {
        return pred_id >= 0 && pred_id < size() && seen_mask[static_cast<std::size_t>(pred_id)];
    }

    std::vector<int> seen_ids() const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (seen_mask[static_cast<std::size_t>(i)]) out.push_back(i);
        return out;
    }

    void validate() const {
        if (seen_mask.size() != names.size())
            throw input_error("PredicateVocabulary: seen_mask length mismatch");
        std::set<std::string> uniq;
        for (const auto& n : names) {
            if (n.empty()) throw input_error("PredicateVocabulary: empty name");
            if (!uniq.insert(n).second) throw input_error("PredicateVocabulary: duplicate name '" + n + "'");
        }
    }
};

struct ObjectVocabulary {
    std::vector<std::string> names;

    int size() const { return static_cast<int>(names.size()); }

    int index_of(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (names[static_cast<std::size_t>(i)] == name) return i;
        return -1;
    }

    void validate() const {
        std::set<std::string> uniq;
        for (const auto& n : names) {
            if (n.empty()) throw input_error("ObjectVocabulary: empty name");
            if (!uniq.insert(n).second) throw input_error("ObjectVocabulary: duplicate name '" + n + "'");
        }
    }
};

struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }

    bool operator==(const BBox& o) const = default;
};

inline double iou(const BBox& a, const BBox& b) {
    double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

struct ObjectInstance {
    int instance_id = 0;
    int class_id = 0;
    BBox bbox;
    std::vector<double> visual_feat;
    std::vector<double> semantic_feat;

    bool operator==(const ObjectInstance& o) const = default;
};

struct Scene {
    std::string image_id;
    double width = 0, height = 0;
    std::vector<ObjectInstance> objects;
    std::vector<std::vector<double>> context;  // m tokens x d_c

    bool operator==(const Scene& o) const = default;

    const ObjectInstance& object(int instance_id) const {
        for (const auto& obj : objects)
            if (obj.instance_id == instance_id) return obj;
        throw input_error("Scene '" + image_id + "': unknown instance id " + std::to_string(instance_id));
    }

    bool has_object(int instance_id) const {
        for (const auto& obj : objects)
            if (obj.instance_id == instance_id) return true;
        return false;
    }

    void validate() const {
        std::set<int> ids;
        for (const auto& obj : objects) {
            if (!ids.insert(obj.instance_id).second)
                throw input_error("Scene '" + image_id + "': duplicate instance id");
            if (obj.bbox.x1 >= obj.bbox.x2 || obj.bbox.y1 >= obj.bbox.y2)
                throw input_error("Scene '" + image_id + "': degenerate bbox");
            if (obj.bbox.x1 < 0 || obj.bbox.y1 < 0 || obj.bbox.x2 > width || obj.bbox.y2 > height)
                throw input_error("Scene '" + image_id + "': bbox outside image bounds");
        }
    }
};

struct Triplet {
    int sub_id = 0;
    int pred_id = 0;
    int obj_id = 0;
    std::optional<double> score;

    bool same_relation(const Triplet& o) const {
        return sub_id == o.sub_id && pred_id == o.pred_id && obj_id == o.obj_id;
    }

    bool operator==(const Triplet& o) const = default;
};

// Identity of a triplet within a corpus, used for novelty checks.
struct TripletKey {
    std::string image_id;
    int sub_id = 0;
    int pred_id = 0;
    int obj_id = 0;

    auto operator<=>(const TripletKey&) const = default;
};

struct Hypothesis {
    int pred_id = 0;
    double raw_conf = 0;
    double norm_conf = 0;

    bool operator==(const Hypothesis& o) const = default;
};

struct PairHypotheses {
    int sub_id = 0;
    int obj_id = 0;
    std::vector<Hypothesis> hypotheses;

    bool operator==(const PairHypotheses& o) const = default;

    void validate() const {
        if (hypotheses.empty() || hypotheses.size() > 5)
            throw input_error("PairHypotheses: hypothesis count must be in [1,5]");
        std::set<int> preds;
        double sum = 0;
        for (const auto& h : hypotheses) {
            if (!preds.insert(h.pred_id).second)
                throw input_error("PairHypotheses: duplicate predicate in pair");
            if (h.raw_conf <= 0 || h.norm_conf <= 0)
                throw input_error("PairHypotheses: confidences must be positive");
            sum += h.norm_conf;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw input_error("PairHypotheses: normalized confidences must sum to 1");
    }
};

struct PriorHypergraph {
    std::string image_id;
    std::vector<PairHypotheses> pairs;

    bool operator==(const PriorHypergraph& o) const = default;

    void validate(const Scene* scene = nullptr) const {
        std::set<std::pair<int, int>> seen_pairs;
        for (const auto& p : pairs) {
            if (p.sub_id == p.obj_id)
                throw input_error("PriorHypergraph '" + image_id + "': self pair");
            if (!seen_pairs.insert({p.sub_id, p.obj_id}).second)
                throw input_error("PriorHypergraph '" + image_id + "': duplicate ordered pair");
            if (scene && (!scene->has_object(p.sub_id) || !scene->has_object(p.obj_id)))
                throw input_error("PriorHypergraph '" + image_id + "': pair references unknown instance");
            p.validate();
        }
    }
};

// One Triplet per (pair, hypothesis); score carries norm_conf. Pair order is
// preserved; within a pair hypotheses come out by descending norm_conf,
// ties by ascending predicate id.
inline std::vector<Triplet> flatten_hypergraph(const PriorHypergraph& prior) {
    std::vector<Triplet> out;
    for (const auto& pair : prior.pairs) {
        auto hyps = pair.hypotheses;
        std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
            if (a.norm_conf != b.norm_conf) return a.norm_conf > b.norm_conf;
            return a.pred_id < b.pred_id;
        });
        for (const auto& h : hyps)
            out.push_back(Triplet{pair.sub_id, h.pred_id, pair.obj_id, h.norm_conf});
    }
    return out;
}

struct RawHypothesis {
    int pred_id = 0;
    double raw_conf = 0;
};

// Per predicate keep the max confidence, then keep the top five by
// confidence (ties by ascending predicate id). Output sorted by
// descending confidence.
inline std::vector<RawHypothesis> dedupe_and_cap(const std::vector<RawHypothesis>& hyps) {
    std::map<int, double> best;
    for (const auto& h : hyps) {
        if (h.raw_conf <= 0) continue;
        auto it = best.find(h.pred_id);
        if (it == best.end() || h.raw_conf > it->second) best[h.pred_id] = h.raw_conf;
    }
    if (best.empty()) throw input_error("dedupe_and_cap: no valid hypotheses for pair");
    std::vector<RawHypothesis> out;
    out.reserve(best.size());
    for (const auto& [pred, conf] : best) out.push_back({pred, conf});
    std::sort(out.begin(), out.end(), [](const RawHypothesis& a, const RawHypothesis& b) {
        if (a.raw_conf != b.raw_conf) return a.raw_conf > b.raw_conf;
        return a.pred_id < b.pred_id;
    });
    if (out.size() > 5) out.resize(5);
    return out;
}

// The default 50-predicate vocabulary, in prompt order.
inline const std::vector<std::string>& default_predicate_names() {
    static const std::vector<std::string> names = {
        "and", "says", "belonging to", "over", "parked on", "growing on", "standing on",
        "made of", "attached to", "at", "in", "hanging from", "wears", "in front of",
        "from", "for", "watching", "lying on", "to", "behind", "flying in", "looking at",
        "on back of", "holding", "between", "laying on", "riding", "has", "across",
        "wearing", "walking on", "eating", "above", "part of", "walking in", "sitting on",
        "under", "covered in", "carrying", "using", "along", "with", "on", "covering",
        "of", "against", "playing", "near", "painted on", "mounted on"};
    return names;
}

// The 29 predicates marked seen in the default benchmark configuration.
inline const std::vector<std::string>& default_seen_predicate_names() {
    static const std::vector<std::string> names = {
        "on", "has", "wearing", "of", "in", "near", "behind", "with", "holding",
        "above", "sitting on", "wears", "under", "riding", "in front of",
        "standing on", "at", "carrying", "attached to", "walking on", "over",
        "for", "looking at", "watching", "hanging from", "laying on", "eating",
        "and", "belonging to"};
    return names;
}

inline PredicateVocabulary default_predicate_vocabulary() {
    PredicateVocabulary vocab;
    vocab.names = default_predicate_names();
    vocab.seen_mask.assign(vocab.names.size(), false);
    for (const auto& name : default_seen_predicate_names()) {
        int id = vocab.index_of(name);
        if (id < 0) throw std::logic_error("default seen predicate missing from vocabulary: " + name);
        vocab.seen_mask[static_cast<std::size_t>(id)] = true;
    }
    vocab.validate();
    return vocab;
}

inline const std::vector<std::string>& default_object_names();

inline ObjectVocabulary default_object_vocabulary() {
    ObjectVocabulary vocab;
    vocab.names = default_object_names();
    vocab.validate();
    return vocab;
}

inline const std::vector<std::string>& default_object_names() {
    static const std::vector<std::string> names = {
        "airplane", "animal", "arm", "bag", "banana", "basket", "beach", "bear", "bed",
        "bench", "bike", "bird", "board", "boat", "book", "boot", "bottle", "bowl", "box",
        "boy", "branch", "building", "bus", "cabinet", "cap", "car", "cat", "chair",
        "child", "clock", "coat", "counter", "cow", "cup", "curtain", "desk", "dog",
        "door", "drawer", "ear", "elephant", "engine", "eye", "face", "fence", "finger",
        "flag", "flower", "food", "fork", "fruit", "giraffe", "girl", "glass", "glove",
        "guy", "hair", "hand", "handle", "hat", "head", "helmet", "hill", "horse",
        "house", "jacket", "jean", "kid", "kite", "lady", "lamp", "laptop", "leaf",
        "leg", "letter", "light", "logo", "man", "men", "motorcycle", "mountain",
        "mirror", "mouth", "neck", "nose", "number", "orange", "pant", "paper", "paw", "people",
        "person", "phone", "pillow", "plane", "plant", "plate", "player", "pole",
        "post", "pot", "racket", "railing", "rock", "roof", "room", "screen", "seat",
        "sheep", "shelf", "shirt", "shoe", "short", "sidewalk", "sign", "sink",
        "skateboard", "ski", "skier", "sneaker", "snow", "sock", "stand", "street",
        "surfboard", "table", "tail", "tie", "tile", "tire", "toilet", "towel",
        "tower", "track", "train", "tree", "truck", "trunk", "umbrella", "vase",
        "vegetable", "vehicle", "wave", "wheel", "window", "windshield", "wing",
        "wire", "woman", "zebra"};
    return names;
}

}  // namespace relground
