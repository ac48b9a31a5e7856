#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relground/types.hpp"

namespace relground {

using json = nlohmann::json;

inline json to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

inline BBox bbox_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw input_error("bbox must be [x1,y1,x2,y2]");
    return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline json to_json(const ObjectInstance& o) {
    return json{{"instance_id", o.instance_id},
                {"class_id", o.class_id},
                {"bbox", to_json(o.bbox)},
                {"visual_feat", o.visual_feat},
                {"semantic_feat", o.semantic_feat}};
}

inline ObjectInstance object_from_json(const json& j) {
    ObjectInstance o;
    o.instance_id = j.at("instance_id").get<int>();
    o.class_id = j.at("class_id").get<int>();
    o.bbox = bbox_from_json(j.at("bbox"));
    if (j.contains("visual_feat")) o.visual_feat = j.at("visual_feat").get<std::vector<double>>();
    if (j.contains("semantic_feat")) o.semantic_feat = j.at("semantic_feat").get<std::vector<double>>();
    return o;
}

inline json to_json(const Scene& s) {
    json objs = json::array();
    for (const auto& o : s.objects) objs.push_back(to_json(o));
    return json{{"image_id", s.image_id},
                {"width", s.width},
                {"height", s.height},
                {"objects", objs},
                {"context", s.context}};
}

inline Scene scene_from_json(const json& j) {
    Scene s;
    s.image_id = j.at("image_id").get<std::string>();
    s.width = j.at("width").get<double>();
    s.height = j.at("height").get<double>();
    for (const auto& oj : j.at("objects")) s.objects.push_back(object_from_json(oj));
    if (j.contains("context")) s.context = j.at("context").get<std::vector<std::vector<double>>>();
    return s;
}

inline json to_json(const Hypothesis& h) {
    return json{{"pred_id", h.pred_id}, {"raw_conf", h.raw_conf}, {"norm_conf", h.norm_conf}};
}

inline Hypothesis hypothesis_from_json(const json& j) {
    return Hypothesis{j.at("pred_id").get<int>(), j.at("raw_conf").get<double>(),
                      j.at("norm_conf").get<double>()};
}

inline json to_json(const PairHypotheses& p) {
    json hyps = json::array();
    for (const auto& h : p.hypotheses) hyps.push_back(to_json(h));
    return json{{"sub_id", p.sub_id}, {"obj_id", p.obj_id}, {"hypotheses", hyps}};
}

inline PairHypotheses pair_from_json(const json& j) {
    PairHypotheses p;
    p.sub_id = j.at("sub_id").get<int>();
    p.obj_id = j.at("obj_id").get<int>();
    for (const auto& hj : j.at("hypotheses")) p.hypotheses.push_back(hypothesis_from_json(hj));
    return p;
}

inline json to_json(const PriorHypergraph& g) {
    json pairs = json::array();
    for (const auto& p : g.pairs) pairs.push_back(to_json(p));
    return json{{"image_id", g.image_id}, {"pairs", pairs}};
}

inline PriorHypergraph prior_from_json(const json& j) {
    PriorHypergraph g;
    g.image_id = j.at("image_id").get<std::string>();
    for (const auto& pj : j.at("pairs")) g.pairs.push_back(pair_from_json(pj));
    return g;
}

inline json to_json(const Triplet& t) {
    json j{{"sub_id", t.sub_id}, {"pred_id", t.pred_id}, {"obj_id", t.obj_id}};
    if (t.score) j["score"] = *t.score;
    return j;
}

inline Triplet triplet_from_json(const json& j) {
    Triplet t;
    t.sub_id = j.at("sub_id").get<int>();
    t.pred_id = j.at("pred_id").get<int>();
    t.obj_id = j.at("obj_id").get<int>();
    if (j.contains("score")) t.score = j.at("score").get<double>();
    return t;
}

// ---- JSONL files -----------------------------------------------------------

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::filesystem::path& path, FromJson from) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path.string());
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(from(json::parse(line)));
        } catch (const std::exception& e) {
            throw input_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

template <typename T, typename ToJson>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items, ToJson to) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path.string());
    for (const auto& item : items) out << to(item).dump() << "\n";
}

inline std::vector<Scene> read_scenes(const std::filesystem::path& path) {
    return read_jsonl<Scene>(path, scene_from_json);
}

inline void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes) {
    write_jsonl(path, scenes, [](const Scene& s) { return to_json(s); });
}

inline std::vector<PriorHypergraph> read_priors(const std::filesystem::path& path) {
    return read_jsonl<PriorHypergraph>(path, prior_from_json);
}

inline void write_priors(const std::filesystem::path& path, const std::vector<PriorHypergraph>& priors) {
    write_jsonl(path, priors, [](const PriorHypergraph& g) { return to_json(g); });
}

// One record per image: {image_id, triplets:[...]}. Used for ground truth,
// training sets and predictions alike.
struct ImageTriplets {
    std::string image_id;
    std::vector<Triplet> triplets;
    // Predicted per-object labels/boxes, present only in sgcls/sgdet
    // prediction files.
    std::vector<ObjectInstance> objects;

    bool operator==(const ImageTriplets& o) const = default;
};

inline json to_json(const ImageTriplets& r) {
    json trips = json::array();
    for (const auto& t : r.triplets) trips.push_back(to_json(t));
    json j{{"image_id", r.image_id}, {"triplets", trips}};
    if (!r.objects.empty()) {
        json objs = json::array();
        for (const auto& o : r.objects)
            objs.push_back(json{{"instance_id", o.instance_id},
                                {"class_id", o.class_id},
                                {"bbox", to_json(o.bbox)}});
        j["objects"] = objs;
    }
    return j;
}

inline ImageTriplets image_triplets_from_json(const json& j) {
    ImageTriplets r;
    r.image_id = j.at("image_id").get<std::string>();
    for (const auto& tj : j.at("triplets")) r.triplets.push_back(triplet_from_json(tj));
    if (j.contains("objects"))
        for (const auto& oj : j.at("objects")) {
            ObjectInstance o;
            o.instance_id = oj.at("instance_id").get<int>();
            o.class_id = oj.at("class_id").get<int>();
            o.bbox = bbox_from_json(oj.at("bbox"));
            r.objects.push_back(o);
        }
    return r;
}

inline std::vector<ImageTriplets> read_triplets(const std::filesystem::path& path) {
    return read_jsonl<ImageTriplets>(path, image_triplets_from_json);
}

inline void write_triplets(const std::filesystem::path& path, const std::vector<ImageTriplets>& items) {
    write_jsonl(path, items, [](const ImageTriplets& r) { return to_json(r); });
}

// ---- Vocabulary files ------------------------------------------------------

inline std::vector<std::string> read_name_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) names.push_back(line);
    }
    return names;
}

inline void write_name_list(const std::filesystem::path& path, const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path.string());
    for (const auto& n : names) out << n << "\n";
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    out << text;
}

}  // namespace relground
