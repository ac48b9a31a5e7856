// Command-line front end: wires the synthetic world, the prior oracle, the
// refinement loop and the evaluator into reproducible file-based runs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relground/eval.hpp"
#include "relground/oracle_http.hpp"
#include "relground/pipeline.hpp"

using namespace relground;
namespace fs = std::filesystem;

namespace {

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        auto comma = csv.find(',', pos);
        out.push_back(std::stoi(csv.substr(pos, comma - pos)));
        pos = comma == std::string::npos ? csv.size() : comma + 1;
    }
    if (out.empty()) throw input_error("expected a comma-separated list, got '" + csv + "'");
    return out;
}

std::vector<std::string> parse_str_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        auto comma = csv.find(',', pos);
        out.push_back(csv.substr(pos, comma - pos));
        pos = comma == std::string::npos ? csv.size() : comma + 1;
    }
    return out;
}

PredicateVocabulary load_predicates(const std::string& path) {
    if (path.empty()) return default_predicate_vocabulary();
    PredicateVocabulary v;
    v.names = read_name_list(path);
    v.seen_mask.assign(v.names.size(), false);
    v.validate();
    return v;
}

ObjectVocabulary load_classes(const std::string& path) {
    if (path.empty()) return default_object_vocabulary();
    ObjectVocabulary v;
    v.names = read_name_list(path);
    v.validate();
    return v;
}

// dims shared by every scene in the file; the model must match them
void infer_dims(const std::vector<Scene>& scenes, ModelConfig& m) {
    if (scenes.empty() || scenes[0].objects.empty())
        throw input_error("cannot infer feature dimensions from an empty scene file");
    m.d_v = static_cast<int>(scenes[0].objects[0].visual_feat.size());
    m.d_w = static_cast<int>(scenes[0].objects[0].semantic_feat.size());
    m.d_c = scenes[0].context.empty() ? m.d_c : static_cast<int>(scenes[0].context[0].size());
}

void print_em_summary(const EmState& state) {
    std::printf("%-10s %10s %10s %12s\n", "iteration", "n_added", "n_train", "loss");
    for (const auto& s : state.stats)
        std::printf("%-10d %10d %10d %12.4f\n", s.iteration, s.n_added, s.n_train, s.loss_final);
    if (state.converged) std::printf("converged: no additions survived the filter\n");
}

int cmd_synth(const std::string& config_path, const std::string& out_dir, int scenes_flag,
              std::uint64_t seed_flag, bool seed_given, bool emit_prior) {
    WorldConfig cfg;
    if (!config_path.empty()) cfg = world_config_from_json(json::parse(read_text_file(config_path)));
    if (scenes_flag > 0) cfg.n_scenes = scenes_flag;
    if (seed_given) cfg.seed = seed_flag;

    auto data = generate_world(cfg);
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    write_text_file(dir / "world.json", to_json(cfg).dump(2));
    write_scenes(dir / "scenes.jsonl", data.scenes);
    write_triplets(dir / "ground_truth.jsonl", data.ground_truth);
    write_name_list(dir / "predicates.txt", synthetic_predicate_names(cfg));
    if (emit_prior) write_priors(dir / "noisy_prior.jsonl", noisy_prior(data));
    std::printf("wrote %zu scenes to %s\n", data.scenes.size(), out_dir.c_str());
    return 0;
}

int cmd_prior(const std::string& scenes_path, const std::string& out_path,
              const std::string& mode, const std::string& cache_dir, std::uint64_t mock_seed,
              std::string endpoint, std::string model_name, const std::string& predicates_path,
              const std::string& classes_path) {
    OracleConfig cfg;
    cfg.mode = oracle_mode_from_string(mode);
    cfg.cache_dir = cache_dir;
    cfg.mock_seed = mock_seed;
    // precedence: flags > env > defaults
    if (endpoint.empty())
        if (const char* url = std::getenv("ORACLE_URL")) endpoint = url;
    if (!endpoint.empty()) cfg.endpoint_url = endpoint;
    if (!model_name.empty()) cfg.model_name = model_name;
    if (cfg.mode == OracleMode::live) enable_http_transport();

    auto preds = load_predicates(predicates_path);
    auto classes = load_classes(classes_path);
    auto scenes = read_scenes(scenes_path);

    std::vector<PriorHypergraph> priors;
    ParseReport report;
    for (const auto& scene : scenes) priors.push_back(hallucinate_scene(scene, cfg, preds, classes, report));
    write_priors(out_path, priors);
    write_text_file(out_path + ".parse_report.json", report.to_json().dump(2));
    std::printf("wrote %zu priors to %s (%d parsed lines, %zu line errors, %d warnings)\n",
                priors.size(), out_path.c_str(), report.lines_ok, report.line_errors.size(),
                report.warnings);
    return 0;
}

int cmd_split(const std::string& scenes_path, const std::string& gt_path,
              const std::string& out_path, int k_seen, int train_n, std::uint64_t seed,
              const std::string& predicates_path) {
    AnnotatedCorpus corpus{read_scenes(scenes_path), read_triplets(gt_path)};
    corpus.validate();
    auto vocab = load_predicates(predicates_path);
    if (k_seen <= 0) k_seen = static_cast<int>(vocab.seen_ids().size());
    if (k_seen <= 0) throw input_error("split: provide --k-seen or a vocabulary with seen marks");
    auto [seen, unseen] = partition_vocabulary(corpus, vocab, k_seen);
    std::vector<std::string> train_ids;
    if (train_n > 0) train_ids = sample_train_ids(corpus, seen, train_n, seed);
    auto split = stratify(corpus, seen, unseen, train_ids);
    write_text_file(out_path, to_json(split).dump(2));
    auto flagged = verify_split_claims(split, corpus, vocab);
    std::printf("split: %zu seen-only, %zu unseen-only, %zu mixed images (%d excluded)\n",
                split.seen_only_ids.size(), split.unseen_only_ids.size(), split.mixed_ids.size(),
                split.excluded_no_gt);
    for (const auto& name : flagged)
        std::printf("note: unseen predicate '%s' never reaches the unseen-only split\n", name.c_str());
    return 0;
}

int cmd_train(const std::string& scenes_path, const std::string& train_path,
              const std::string& out_path, int epochs, int batch_size, std::uint64_t seed,
              double lr, double weight_decay, int d_h, int hidden, int n_predicates) {
    auto scenes = read_scenes(scenes_path);
    auto train_set = read_triplets(train_path);

    ModelConfig mcfg;
    infer_dims(scenes, mcfg);
    mcfg.d_h = d_h;
    mcfg.hidden = hidden;
    mcfg.n_predicates = n_predicates;
    if (n_predicates <= 0) {
        int max_pred = -1;
        for (const auto& img : train_set)
            for (const auto& t : img.triplets) max_pred = std::max(max_pred, t.pred_id);
        mcfg.n_predicates = max_pred + 1;
    }

    std::map<std::string, const Scene*> index;
    for (const auto& s : scenes) index[s.image_id] = &s;
    std::vector<TrainingExample> examples;
    for (const auto& img : train_set) {
        auto it = index.find(img.image_id);
        if (it == index.end()) throw input_error("train: no scene for image '" + img.image_id + "'");
        for (const auto& t : img.triplets) examples.push_back({it->second, t});
    }

    auto model = GroundingModel::init(mcfg, seed);
    auto opt = OptimizerState::for_model(model, lr, weight_decay);
    TrainOptions topts;
    topts.epochs = epochs;
    topts.batch_size = batch_size;
    topts.seed = seed;
    topts.lr = lr;
    topts.weight_decay = weight_decay;
    auto result = train(model, opt, examples, topts);
    save_checkpoint(out_path, Checkpoint{model, opt, seed});
    std::printf("trained on %zu examples for %d epochs; final loss %.4f; checkpoint: %s\n",
                examples.size(), epochs, result.loss_curve.empty() ? 0.0 : result.loss_curve.back(),
                out_path.c_str());
    return 0;
}

int cmd_run_em(const std::string& scenes_path, const std::string& priors_path,
               const std::string& out_dir, const std::string& config_path, double tau,
               bool tau_given, int max_iters, bool max_given, int epochs, bool epochs_given,
               std::uint64_t seed, bool seed_given, const std::string& seen_csv, bool resume,
               int d_h, int hidden, int n_predicates) {
    auto scenes = read_scenes(scenes_path);
    auto priors = read_priors(priors_path);

    EmConfig cfg;
    if (!config_path.empty()) {
        const json j = json::parse(read_text_file(config_path));
        cfg.tau = j.value("tau", cfg.tau);
        cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
        cfg.epochs_per_m_step = j.value("epochs_per_m_step", cfg.epochs_per_m_step);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.lr = j.value("lr", cfg.lr);
        cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    }
    // precedence: flags > file > defaults
    if (tau_given) cfg.tau = tau;
    if (max_given) cfg.max_iterations = max_iters;
    if (epochs_given) cfg.epochs_per_m_step = epochs;
    if (seed_given) cfg.seed = seed;
    infer_dims(scenes, cfg.model);
    if (d_h > 0) cfg.model.d_h = d_h;
    if (hidden > 0) cfg.model.hidden = hidden;
    if (n_predicates > 0) {
        cfg.model.n_predicates = n_predicates;
    } else {
        int max_pred = -1;
        for (const auto& p : priors)
            for (const auto& pair : p.pairs)
                for (const auto& h : pair.hypotheses) max_pred = std::max(max_pred, h.pred_id);
        cfg.model.n_predicates = std::max(cfg.model.n_predicates, max_pred + 1);
    }

    std::set<int> seen;
    if (!seen_csv.empty())
        for (int p : parse_int_list(seen_csv)) seen.insert(p);
    else
        for (int p : default_predicate_vocabulary().seen_ids()) seen.insert(p);

    fs::create_directories(out_dir);
    write_text_file(fs::path(out_dir) / "em_config.json", to_json(cfg).dump(2));
    auto result = run_em(scenes, priors, cfg, seen, fs::path(out_dir), resume);
    print_em_summary(result.state);
    return 0;
}

int cmd_eval(const std::string& preds_path, const std::string& scenes_path,
             const std::string& gt_path, const std::string& split_path,
             const std::string& out_path, const std::string& tasks_csv, const std::string& k_csv,
             const std::string& per_class_path, const std::string& predicates_path) {
    AnnotatedCorpus corpus{read_scenes(scenes_path), read_triplets(gt_path)};
    corpus.validate();
    auto predictions = read_triplets(preds_path);
    auto split = split_from_json(json::parse(read_text_file(split_path)));
    std::vector<Task> tasks;
    for (const auto& t : parse_str_list(tasks_csv)) tasks.push_back(task_from_string(t));
    auto ks = parse_int_list(k_csv);
    auto vocab = load_predicates(predicates_path);

    auto report = evaluate(corpus, predictions, split, tasks, ks);
    write_text_file(out_path, to_json(report, vocab).dump(2));
    if (!per_class_path.empty()) write_text_file(per_class_path, per_class_recall_csv(report, vocab));

    for (const auto& [split_name, by_task] : report.cells)
        for (const auto& [task_name, by_k] : by_task)
            for (const auto& [k, cell] : by_k)
                std::printf("%-12s %-8s K=%-4d R %.4f  mR %.4f  (%d/%d matched)\n",
                            split_name.c_str(), task_name.c_str(), k, cell.recall,
                            cell.mean_recall, cell.matched, cell.gt_total);
    return 0;
}

void ablation_rows(std::string& csv, const std::string& axis, const std::string& value,
                   const EvalReport& report) {
    for (const auto& [split_name, by_task] : report.cells)
        for (const auto& [task_name, by_k] : by_task)
            for (const auto& [k, cell] : by_k) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%d,R,%.6f\n", axis.c_str(),
                              value.c_str(), split_name.c_str(), task_name.c_str(), k, cell.recall);
                csv += buf;
                std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%d,mR,%.6f\n", axis.c_str(),
                              value.c_str(), split_name.c_str(), task_name.c_str(), k,
                              cell.mean_recall);
                csv += buf;
            }
}

int cmd_ablate(const std::string& axis, const std::string& grid_csv,
               const std::string& config_path, const std::string& out_path) {
    RunConfig base;
    base.em.max_iterations = 3;
    base.em.epochs_per_m_step = 50;
    base.em.seed = 7;
    if (!config_path.empty()) base = run_config_from_json(json::parse(read_text_file(config_path)));
    auto grid = parse_str_list(grid_csv);
    if (grid.empty()) throw input_error("ablate: empty grid");

    std::string csv = "axis,value,split,task,K,metric,score\n";
    if (axis == "iterations") {
        std::vector<int> iters;
        for (const auto& v : grid) iters.push_back(std::stoi(v));
        RunConfig cfg = base;
        cfg.em.max_iterations = *std::max_element(iters.begin(), iters.end());
        auto run = run_pipeline(cfg);
        for (int t : iters) {
            std::size_t idx = std::min(static_cast<std::size_t>(t), run.reports.size() - 1);
            ablation_rows(csv, axis, std::to_string(t), run.reports[idx]);
        }
    } else if (axis == "tau") {
        for (const auto& v : grid) {
            RunConfig cfg = base;
            cfg.em.tau = std::stod(v);
            try {
                auto run = run_pipeline(cfg);
                ablation_rows(csv, axis, v, run.reports.back());
            } catch (const std::exception& e) {
                std::fprintf(stderr, "ablate: tau=%s failed: %s\n", v.c_str(), e.what());
            }
        }
    } else if (axis == "prior-source") {
        for (const auto& v : grid) {
            RunConfig cfg = base;
            if (v == "planted-gt") {
                cfg.world.prior_hit_rate = 1.0;
                cfg.world.hit_distractor_rate = 0.0;
                cfg.world.miss_distractor_rate = 0.0;
            } else if (v == "mixed") {
                cfg.world.prior_hit_rate = 0.5 * (cfg.world.prior_hit_rate + 1.0);
            } else if (v != "noisy-prior") {
                std::fprintf(stderr, "ablate: unknown prior source '%s'\n", v.c_str());
                continue;
            }
            try {
                auto run = run_pipeline(cfg);
                ablation_rows(csv, axis, v, run.reports.back());
            } catch (const std::exception& e) {
                std::fprintf(stderr, "ablate: %s failed: %s\n", v.c_str(), e.what());
            }
        }
    } else {
        throw input_error("ablate: axis must be iterations, tau or prior-source");
    }
    write_text_file(out_path, csv);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_report(const std::string& report_path, const std::string& em_dir) {
    if (!report_path.empty()) {
        json report = json::parse(read_text_file(report_path));
        std::printf("%-12s %-8s %-6s %10s %10s\n", "split", "task", "K", "R", "mR");
        for (const auto& [split_name, by_task] : report.items())
            for (const auto& [task_name, by_k] : by_task.items())
                for (const auto& [k, cell] : by_k.items())
                    std::printf("%-12s %-8s %-6s %10.4f %10.4f\n", split_name.c_str(),
                                task_name.c_str(), k.c_str(), cell.at("recall").get<double>(),
                                cell.at("mean_recall").get<double>());
    }
    if (!em_dir.empty()) {
        std::printf("%-10s %10s %10s %12s\n", "iteration", "n_added", "n_train", "loss");
        for (int t = 0;; ++t) {
            fs::path stats = fs::path(em_dir) / ("iter_" + std::to_string(t)) / "stats.json";
            if (!fs::exists(stats)) break;
            json s = json::parse(read_text_file(stats));
            std::printf("%-10d %10d %10d %12.4f\n", t, s.at("n_added").get<int>(),
                        s.at("n_train").get<int>(), s.at("loss_final").get<double>());
        }
    }
    if (report_path.empty() && em_dir.empty())
        throw input_error("report: provide --report and/or --em");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weakly supervised visual relationship grounding toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic annotated world");
    std::string sy_config, sy_out = "world_out";
    int sy_scenes = 0;
    std::uint64_t sy_seed = 0;
    bool sy_prior = false;
    synth->add_option("--config", sy_config, "world config json");
    synth->add_option("--out", sy_out, "output directory");
    synth->add_option("--scenes", sy_scenes, "number of scenes");
    auto* sy_seed_opt = synth->add_option("--seed", sy_seed, "world seed");
    synth->add_flag("--noisy-prior", sy_prior, "also emit the synthetic noisy prior");

    // prior
    auto* prior = app.add_subcommand("prior", "hallucinate prior hypergraphs for scenes");
    std::string pr_scenes, pr_out = "priors.jsonl", pr_mode = "mock", pr_cache, pr_endpoint,
                pr_model, pr_preds, pr_classes;
    std::uint64_t pr_mock_seed = 0;
    prior->add_option("--scenes", pr_scenes, "scenes jsonl")->required();
    prior->add_option("--out", pr_out, "output priors jsonl");
    prior->add_option("--mode", pr_mode, "mock | live | replay");
    prior->add_option("--cache-dir", pr_cache, "response cache directory");
    prior->add_option("--mock-seed", pr_mock_seed, "mock generator seed");
    prior->add_option("--endpoint", pr_endpoint, "chat endpoint url (or env ORACLE_URL)");
    prior->add_option("--model", pr_model, "chat model name");
    prior->add_option("--predicates", pr_preds, "predicate name list file");
    prior->add_option("--classes", pr_classes, "object class name list file");

    // split
    auto* split = app.add_subcommand("split", "build open-world evaluation splits");
    std::string sp_scenes, sp_gt, sp_out = "split.json", sp_preds;
    int sp_k = 0, sp_train = 0;
    std::uint64_t sp_seed = 0;
    split->add_option("--scenes", sp_scenes, "scenes jsonl")->required();
    split->add_option("--gt", sp_gt, "ground truth jsonl")->required();
    split->add_option("--out", sp_out, "output split json");
    split->add_option("--k-seen", sp_k, "number of seen predicates (frequency head)");
    split->add_option("--train-n", sp_train, "sample this many all-seen training images");
    split->add_option("--seed", sp_seed, "sampling seed");
    split->add_option("--predicates", sp_preds, "predicate name list file");

    // train
    auto* tr = app.add_subcommand("train", "supervised training on a triplet file");
    std::string tr_scenes, tr_set, tr_out = "model.ckpt";
    int tr_epochs = 50, tr_batch = 32, tr_dh = 32, tr_hidden = 32, tr_npred = 0;
    std::uint64_t tr_seed = 0;
    double tr_lr = 1e-3, tr_wd = 1e-5;
    tr->add_option("--scenes", tr_scenes, "scenes jsonl")->required();
    tr->add_option("--train", tr_set, "training triplets jsonl")->required();
    tr->add_option("--out", tr_out, "checkpoint path");
    tr->add_option("--epochs", tr_epochs, "training epochs");
    tr->add_option("--batch-size", tr_batch, "minibatch size");
    tr->add_option("--seed", tr_seed, "training seed");
    tr->add_option("--lr", tr_lr, "learning rate");
    tr->add_option("--weight-decay", tr_wd, "decoupled weight decay");
    tr->add_option("--d-h", tr_dh, "attention width");
    tr->add_option("--hidden", tr_hidden, "head hidden width");
    tr->add_option("--n-predicates", tr_npred, "predicate count (default: inferred)");

    // run-em
    auto* em = app.add_subcommand("run-em", "iterative hallucinate-and-ground refinement");
    std::string em_scenes, em_priors, em_out = "em_state", em_config, em_seen;
    double em_tau = 0.8;
    int em_max = 5, em_epochs = 50, em_dh = 0, em_hidden = 0, em_npred = 0;
    std::uint64_t em_seed = 0;
    bool em_resume = false;
    em->add_option("--scenes", em_scenes, "scenes jsonl")->required();
    em->add_option("--priors", em_priors, "prior hypergraphs jsonl")->required();
    em->add_option("--out", em_out, "state output directory");
    em->add_option("--config", em_config, "em config json");
    auto* em_tau_opt = em->add_option("--tau", em_tau, "confidence threshold");
    auto* em_max_opt = em->add_option("--max-iters", em_max, "maximum refinement iterations");
    auto* em_epochs_opt = em->add_option("--epochs", em_epochs, "epochs per M-step");
    auto* em_seed_opt = em->add_option("--seed", em_seed, "run seed");
    em->add_option("--seen", em_seen, "comma-separated seen predicate ids");
    em->add_flag("--resume", em_resume, "resume from persisted iterations");
    em->add_option("--d-h", em_dh, "attention width");
    em->add_option("--hidden", em_hidden, "head hidden width");
    em->add_option("--n-predicates", em_npred, "predicate count (default: inferred)");

    // eval
    auto* ev = app.add_subcommand("eval", "score predictions on the stratified splits");
    std::string ev_preds, ev_scenes, ev_gt, ev_split, ev_out = "report.json",
                ev_tasks = "predcls", ev_k = "20,50,100", ev_csv, ev_vocab;
    ev->add_option("--preds", ev_preds, "predictions jsonl")->required();
    ev->add_option("--scenes", ev_scenes, "scenes jsonl")->required();
    ev->add_option("--gt", ev_gt, "ground truth jsonl")->required();
    ev->add_option("--split", ev_split, "split json")->required();
    ev->add_option("--out", ev_out, "report json path");
    ev->add_option("--tasks", ev_tasks, "comma-separated: predcls,sgcls,sgdet");
    ev->add_option("--k", ev_k, "comma-separated K values");
    ev->add_option("--per-class", ev_csv, "also write per-class recall csv here");
    ev->add_option("--predicates", ev_vocab, "predicate name list file");

    // ablate
    auto* ab = app.add_subcommand("ablate", "sweep one axis on the synthetic world");
    std::string ab_axis, ab_grid, ab_config, ab_out = "ablation.csv";
    ab->add_option("--axis", ab_axis, "iterations | tau | prior-source")->required();
    ab->add_option("--grid", ab_grid, "comma-separated values")->required();
    ab->add_option("--config", ab_config, "base run config json");
    ab->add_option("--out", ab_out, "output csv path");

    // report
    auto* rp = app.add_subcommand("report", "pretty-print evaluation or em-state artifacts");
    std::string rp_report, rp_em;
    rp->add_option("--report", rp_report, "report json from eval");
    rp->add_option("--em", rp_em, "em state directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_synth(sy_config, sy_out, sy_scenes, sy_seed, sy_seed_opt->count() > 0,
                             sy_prior);
        if (prior->parsed())
            return cmd_prior(pr_scenes, pr_out, pr_mode, pr_cache, pr_mock_seed, pr_endpoint,
                             pr_model, pr_preds, pr_classes);
        if (split->parsed())
            return cmd_split(sp_scenes, sp_gt, sp_out, sp_k, sp_train, sp_seed, sp_preds);
        if (tr->parsed())
            return cmd_train(tr_scenes, tr_set, tr_out, tr_epochs, tr_batch, tr_seed, tr_lr,
                             tr_wd, tr_dh, tr_hidden, tr_npred);
        if (em->parsed())
            return cmd_run_em(em_scenes, em_priors, em_out, em_config, em_tau,
                              em_tau_opt->count() > 0, em_max, em_max_opt->count() > 0, em_epochs,
                              em_epochs_opt->count() > 0, em_seed, em_seed_opt->count() > 0,
                              em_seen, em_resume, em_dh, em_hidden, em_npred);
        if (ev->parsed())
            return cmd_eval(ev_preds, ev_scenes, ev_gt, ev_split, ev_out, ev_tasks, ev_k, ev_csv,
                            ev_vocab);
        if (ab->parsed()) return cmd_ablate(ab_axis, ab_grid, ab_config, ab_out);
        if (rp->parsed()) return cmd_report(rp_report, rp_em);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
