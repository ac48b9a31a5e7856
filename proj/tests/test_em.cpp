#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "relground/em.hpp"

using namespace relground;

namespace {

ScoredCandidate cand(const std::string& img, int sub, int pred, int obj, double conf) {
    return {img, Triplet{sub, pred, obj, conf}};
}

// Scenes whose objects all share identical features, so every ordered pair
// of a scene has the same query and the planted predicate is recoverable
// from the subject's one-hot visual bump. The prior mentions only (0,1),
// leaving five novel pairs per scene for the refinement step to add.
struct ForcedAdditionsFixture {
    EmConfig cfg;
    std::vector<Scene> scenes;
    std::vector<PriorHypergraph> priors;
    std::set<int> seen{0, 1, 2, 3};

    explicit ForcedAdditionsFixture(int n_scenes, std::uint64_t seed) {
        cfg.model.d_v = 4;
        cfg.model.d_w = 2;
        cfg.model.d_c = 3;
        cfg.model.d_h = 4;
        cfg.model.hidden = 8;
        cfg.model.n_predicates = 4;
        cfg.tau = 0.8;
        cfg.max_iterations = 3;
        cfg.epochs_per_m_step = 200;
        cfg.batch_size = 8;
        cfg.seed = seed;

        Rng rng(seed);
        for (int i = 0; i < n_scenes; ++i) {
            int pred = i % 4;
            char name[16];
            std::snprintf(name, sizeof name, "fx_%02d", i);
            Scene s = test::make_scene(name, 3, cfg.model.d_v, cfg.model.d_w, cfg.model.d_c, 2,
                                       rng.next_u64());
            std::vector<double> v(static_cast<std::size_t>(cfg.model.d_v), 0.0);
            v[static_cast<std::size_t>(pred)] = 3.0;
            std::vector<double> w(static_cast<std::size_t>(cfg.model.d_w), 0.5);
            for (auto& obj : s.objects) {
                obj.visual_feat = v;
                obj.semantic_feat = w;
            }
            PriorHypergraph g;
            g.image_id = s.image_id;
            g.pairs.push_back(test::make_pair(0, 1, {{pred, 0.9}}));
            scenes.push_back(std::move(s));
            priors.push_back(std::move(g));
        }
    }
};

}  // namespace

TEST_CASE("refine_filter") {
    EmState state;
    PriorHypergraph g;
    g.image_id = "img";
    g.pairs.push_back(test::make_pair(0, 1, {{2, 0.9}}));
    state.set_prior({g});
    std::set<int> seen{1, 2, 3};

    SUBCASE("seen, confident and novel passes") {
        auto out = refine_filter({cand("img", 1, 2, 0, 0.85)}, seen, state, 0.8);
        REQUIRE(out.size() == 1);
        CHECK(out[0].triplet == Triplet{1, 2, 0, 0.85});
    }

    SUBCASE("the threshold is strict") {
        CHECK(refine_filter({cand("img", 1, 2, 0, 0.8)}, seen, state, 0.8).empty());
        CHECK_FALSE(refine_filter({cand("img", 1, 2, 0, 0.8000001)}, seen, state, 0.8).empty());
    }

    SUBCASE("unseen predicates are rejected regardless of confidence") {
        CHECK(refine_filter({cand("img", 1, 7, 0, 0.99)}, seen, state, 0.8).empty());
    }

    SUBCASE("triplets already in the prior are rejected") {
        CHECK(refine_filter({cand("img", 0, 2, 1, 0.95)}, seen, state, 0.8).empty());
        // same relation in another image is still novel
        CHECK(refine_filter({cand("other", 0, 2, 1, 0.95)}, seen, state, 0.8).size() == 1);
    }

    SUBCASE("triplets added in earlier iterations are rejected") {
        state.added_keys.insert(TripletKey{"img", 1, 3, 2});
        CHECK(refine_filter({cand("img", 1, 3, 2, 0.9)}, seen, state, 0.8).empty());
    }

    SUBCASE("duplicates within a batch are kept once") {
        auto out = refine_filter({cand("img", 1, 2, 0, 0.85), cand("img", 1, 2, 0, 0.95)}, seen,
                                 state, 0.8);
        REQUIRE(out.size() == 1);
        CHECK(*out[0].triplet.score == 0.85);  // first occurrence wins
    }

    SUBCASE("output sorted by (image, sub, obj, pred)") {
        auto out = refine_filter({cand("b", 0, 1, 1, 0.9), cand("a", 2, 1, 0, 0.9),
                                  cand("a", 0, 3, 1, 0.9), cand("a", 0, 1, 1, 0.9)},
                                 seen, state, 0.8);
        REQUIRE(out.size() == 4);
        CHECK(out[0].image_id == "a");
        CHECK(out[0].triplet.pred_id == 1);
        CHECK(out[1].triplet.pred_id == 3);
        CHECK(out[2].triplet.sub_id == 2);
        CHECK(out[3].image_id == "b");
    }

    SUBCASE("a prediction without confidence is an error") {
        CHECK_THROWS_AS(refine_filter({{"img", Triplet{0, 1, 1, {}}}}, seen, state, 0.8),
                        input_error);
    }
}

TEST_CASE("predict_all_pairs covers every ordered pair") {
    ModelConfig cfg;
    cfg.d_v = 4;
    cfg.d_w = 2;
    cfg.d_c = 3;
    cfg.d_h = 4;
    cfg.hidden = 5;
    cfg.n_predicates = 6;
    auto m = GroundingModel::zeros(cfg);
    Scene s = test::make_scene("p", 3, cfg.d_v, cfg.d_w, cfg.d_c, 2, 5);
    auto out = predict_all_pairs(m, s);
    CHECK(out.size() == 6);
    std::set<std::pair<int, int>> pairs;
    for (const auto& c : out) {
        CHECK(c.image_id == "p");
        CHECK(c.triplet.sub_id != c.triplet.obj_id);
        CHECK(*c.triplet.score == doctest::Approx(1.0 / 6));
        pairs.insert({c.triplet.sub_id, c.triplet.obj_id});
    }
    CHECK(pairs.size() == 6);
}

TEST_CASE("run_em basics") {
    ForcedAdditionsFixture fix(8, 101);

    SUBCASE("a scene without a prior is an error") {
        auto priors = fix.priors;
        priors.pop_back();
        CHECK_THROWS_AS(run_em(fix.scenes, priors, fix.cfg, fix.seen), input_error);
    }

    SUBCASE("config validation") {
        auto cfg = fix.cfg;
        cfg.tau = 1.0;
        CHECK_THROWS_AS(run_em(fix.scenes, fix.priors, cfg, fix.seen), input_error);
        cfg = fix.cfg;
        cfg.max_iterations = 0;
        CHECK_THROWS_AS(run_em(fix.scenes, fix.priors, cfg, fix.seen), input_error);
    }

    SUBCASE("iteration 0 equals a plain supervised run on the flattened prior") {
        auto cfg = fix.cfg;
        cfg.epochs_per_m_step = 10;
        auto result = run_em(fix.scenes, fix.priors, cfg, fix.seen);

        // independent reconstruction: flatten per image in id order, train once
        GroundingModel manual = GroundingModel::init(cfg.model, cfg.seed);
        OptimizerState opt = OptimizerState::for_model(manual, cfg.lr, cfg.weight_decay);
        std::vector<TrainingExample> examples;
        for (const auto& p : fix.priors)  // fx_00.. ids are already in map order
            for (const auto& t : flatten_hypergraph(p)) {
                for (const auto& s : fix.scenes)
                    if (s.image_id == p.image_id) examples.push_back({&s, t});
            }
        TrainOptions topts;
        topts.epochs = cfg.epochs_per_m_step;
        topts.batch_size = cfg.batch_size;
        topts.seed = Rng::derive_from(cfg.seed, 0xe11).next_u64();
        train(manual, opt, examples, topts);
        REQUIRE_FALSE(result.checkpoints.empty());
        CHECK(result.checkpoints[0] == manual);
    }

    SUBCASE("an unreachable threshold converges after iteration 0") {
        auto cfg = fix.cfg;
        cfg.epochs_per_m_step = 5;  // keep confidences far below the bar
        cfg.tau = 0.999;
        auto result = run_em(fix.scenes, fix.priors, cfg, fix.seen);
        CHECK(result.state.converged);
        CHECK(result.state.stats.size() == 1);
        CHECK(result.checkpoints.size() == 1);
        CHECK(result.state.added.empty());
    }
}

TEST_CASE("run_em refinement") {
    ForcedAdditionsFixture fix(12, 202);
    auto result = run_em(fix.scenes, fix.priors, fix.cfg, fix.seen);
    const auto& state = result.state;

    SUBCASE("additions fire and the training set grows monotonically") {
        REQUIRE(state.stats.size() >= 2);
        CHECK(state.stats[1].n_added > 0);
        for (std::size_t t = 1; t < state.stats.size(); ++t)
            CHECK(state.stats[t].n_train >= state.stats[t - 1].n_train);
        CHECK(state.stats[0].n_train == 12);  // one prior triplet per scene
    }

    SUBCASE("the prior is frozen across iterations") {
        json before = json::array();
        for (const auto& p : fix.priors) before.push_back(to_json(p));
        json after = json::array();
        for (const auto& p : fix.priors) after.push_back(to_json(state.prior.at(p.image_id)));
        CHECK(before == after);
    }

    SUBCASE("a brute-force replay of the filter conditions reproduces every iteration") {
        REQUIRE(state.stats.size() >= 2);
        std::set<TripletKey> accumulated;
        for (std::size_t t = 1; t < state.stats.size(); ++t) {
            std::set<TripletKey> expected_t;
            for (const auto& s : fix.scenes)
                for (const auto& a : s.objects)
                    for (const auto& b : s.objects) {
                        if (a.instance_id == b.instance_id) continue;
                        auto [pred, conf] =
                            predict_pair(result.checkpoints[t - 1], s, a.instance_id, b.instance_id);
                        if (!fix.seen.count(pred)) continue;
                        if (!(conf > fix.cfg.tau)) continue;
                        TripletKey key{s.image_id, a.instance_id, pred, b.instance_id};
                        if (state.prior_keys.count(key)) continue;
                        if (accumulated.count(key)) continue;
                        expected_t.insert(key);
                    }
            CHECK(static_cast<int>(expected_t.size()) == state.stats[t].n_added);
            accumulated.insert(expected_t.begin(), expected_t.end());
        }
        CHECK(accumulated == state.added_keys);
    }

    SUBCASE("every added triplet is novel, seen and confident") {
        for (const auto& c : state.added) {
            CHECK(fix.seen.count(c.triplet.pred_id) == 1);
            CHECK(*c.triplet.score > fix.cfg.tau);
            TripletKey key{c.image_id, c.triplet.sub_id, c.triplet.pred_id, c.triplet.obj_id};
            CHECK(state.prior_keys.count(key) == 0);
        }
        // cumulative additions are duplicate-free
        CHECK(state.added_keys.size() == state.added.size());
    }
}

TEST_CASE("run_em resume is bit-identical") {
    ForcedAdditionsFixture fix(8, 303);
    auto base = std::filesystem::temp_directory_path() / "relground_em_resume";
    std::filesystem::remove_all(base);
    auto dir_a = base / "a";
    auto dir_b = base / "b";

    auto full = run_em(fix.scenes, fix.priors, fix.cfg, fix.seen, dir_a);
    REQUIRE(full.state.stats.size() >= 2);
    int last = full.state.iteration;

    // replay from a copy missing the final iteration
    std::filesystem::create_directories(dir_b);
    std::filesystem::copy(dir_a, dir_b, std::filesystem::copy_options::recursive);
    std::filesystem::remove_all(dir_b / ("iter_" + std::to_string(last)));

    auto resumed = run_em(fix.scenes, fix.priors, fix.cfg, fix.seen, dir_b, true);
    CHECK(resumed.model == full.model);
    CHECK(resumed.state.iteration == full.state.iteration);
    CHECK(resumed.state.converged == full.state.converged);
    REQUIRE(resumed.state.stats.size() == full.state.stats.size());
    for (std::size_t t = 0; t < full.state.stats.size(); ++t) {
        CHECK(resumed.state.stats[t].n_added == full.state.stats[t].n_added);
        CHECK(resumed.state.stats[t].n_train == full.state.stats[t].n_train);
        CHECK(resumed.state.stats[t].loss_final == full.state.stats[t].loss_final);
    }
    for (std::size_t t = 0; t < full.checkpoints.size(); ++t)
        CHECK(resumed.checkpoints[t] == full.checkpoints[t]);

    // the re-run final iteration writes the same bytes
    for (const char* name : {"added.jsonl", "train_set.jsonl", "model.ckpt", "stats.json"}) {
        auto pa = dir_a / ("iter_" + std::to_string(last)) / name;
        auto pb = dir_b / ("iter_" + std::to_string(last)) / name;
        CHECK(read_text_file(pa) == read_text_file(pb));
    }
    std::filesystem::remove_all(base);
}

TEST_CASE("evaluate_marginal_objective") {
    ModelConfig cfg;
    cfg.d_v = 4;
    cfg.d_w = 2;
    cfg.d_c = 3;
    cfg.d_h = 4;
    cfg.hidden = 5;
    cfg.n_predicates = 6;
    Scene s = test::make_scene("m", 3, cfg.d_v, cfg.d_w, cfg.d_c, 2, 404);

    SUBCASE("single pair, single hypothesis, uniform model") {
        auto m = GroundingModel::zeros(cfg);
        PriorHypergraph g;
        g.image_id = "m";
        g.pairs.push_back(test::make_pair(0, 1, {{2, 0.9}}));
        CHECK(evaluate_marginal_objective(s, g, m) ==
              doctest::Approx(std::log(1.0 / 6)).epsilon(1e-12));
    }

    SUBCASE("two hypotheses with equal mass under the uniform model") {
        auto m = GroundingModel::zeros(cfg);
        PriorHypergraph g;
        g.pairs.push_back(test::make_pair(0, 1, {{2, 0.5}, {4, 0.5}}));
        // 0.5/6 + 0.5/6 = 1/6
        CHECK(evaluate_marginal_objective(s, g, m) ==
              doctest::Approx(std::log(1.0 / 6)).epsilon(1e-12));
    }

    SUBCASE("independent pairs factorize") {
        auto m = GroundingModel::init(cfg, 405);
        PriorHypergraph g;
        g.pairs.push_back(test::make_pair(0, 1, {{1, 0.7}, {3, 0.3}}));
        g.pairs.push_back(test::make_pair(2, 0, {{0, 0.6}, {5, 0.4}}));
        double joint = evaluate_marginal_objective(s, g, m);
        double split = 0;
        for (const auto& pair : g.pairs) {
            PriorHypergraph single;
            single.pairs.push_back(pair);
            split += evaluate_marginal_objective(s, single, m);
        }
        CHECK(joint == doctest::Approx(split).epsilon(1e-12));
    }

    SUBCASE("abstain mass enters the sum") {
        auto m = GroundingModel::zeros(cfg);
        PriorHypergraph g;
        g.pairs.push_back(test::make_pair(0, 1, {{2, 0.9}}));
        double got = evaluate_marginal_objective(s, g, m, 0.3);
        CHECK(got == doctest::Approx(std::log(0.3 + 0.7 / 6)).epsilon(1e-12));
    }

    SUBCASE("instance size guards") {
        auto m = GroundingModel::zeros(cfg);
        PriorHypergraph big;
        for (int p = 0; p < 5; ++p) big.pairs.push_back(test::make_pair(p, p + 1, {{0, 0.5}}));
        CHECK_THROWS_AS(evaluate_marginal_objective(s, big, m), input_error);

        PriorHypergraph wide;
        wide.pairs.push_back(
            test::make_pair(0, 1, {{0, 0.2}, {1, 0.2}, {2, 0.2}, {3, 0.2}, {4, 0.2}}));
        CHECK_THROWS_AS(evaluate_marginal_objective(s, wide, m), input_error);

        PriorHypergraph ok;
        ok.pairs.push_back(test::make_pair(0, 1, {{0, 0.5}}));
        CHECK_THROWS_AS(evaluate_marginal_objective(s, ok, m, -0.1), input_error);
        CHECK_THROWS_AS(evaluate_marginal_objective(s, ok, m, 1.0), input_error);
    }
}
