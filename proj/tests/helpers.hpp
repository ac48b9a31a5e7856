#pragma once

// Small fixture builders shared across the test suites.

#include <string>
#include <vector>

#include "relground/common.hpp"
#include "relground/types.hpp"

namespace relground::test {

// A scene with n objects laid out on a grid, features seeded and sized to
// (d_v, d_w), plus m context tokens of width d_c.
inline Scene make_scene(const std::string& image_id, int n_objects, int d_v, int d_w, int d_c,
                        int m_context, std::uint64_t seed, int n_classes = 5) {
    Rng rng(seed);
    Scene s;
    s.image_id = image_id;
    s.width = 640;
    s.height = 480;
    for (int i = 0; i < n_objects; ++i) {
        ObjectInstance o;
        o.instance_id = i;
        o.class_id = rng.below_int(n_classes);
        double x1 = rng.uniform(0, 500);
        double y1 = rng.uniform(0, 350);
        o.bbox = BBox{x1, y1, x1 + rng.uniform(20, 130), y1 + rng.uniform(20, 120)};
        o.visual_feat.resize(static_cast<std::size_t>(d_v));
        for (auto& x : o.visual_feat) x = rng.gaussian();
        o.semantic_feat.resize(static_cast<std::size_t>(d_w));
        for (auto& x : o.semantic_feat) x = rng.gaussian();
        s.objects.push_back(std::move(o));
    }
    for (int t = 0; t < m_context; ++t) {
        std::vector<double> token(static_cast<std::size_t>(d_c));
        for (auto& x : token) x = rng.gaussian();
        s.context.push_back(std::move(token));
    }
    s.validate();
    return s;
}

inline PairHypotheses make_pair(int sub, int obj, std::vector<std::pair<int, double>> raw) {
    PairHypotheses p;
    p.sub_id = sub;
    p.obj_id = obj;
    double sum = 0;
    for (auto& [pred, conf] : raw) sum += conf;
    for (auto& [pred, conf] : raw) p.hypotheses.push_back(Hypothesis{pred, conf, conf / sum});
    return p;
}

}  // namespace relground::test
