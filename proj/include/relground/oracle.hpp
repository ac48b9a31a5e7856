#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "relground/common.hpp"
#include "relground/json_io.hpp"
#include "relground/types.hpp"

namespace relground {

enum class OracleMode { live, mock, replay };

inline std::string to_string(OracleMode m) {
    switch (m) {
        case OracleMode::live: return "live";
        case OracleMode::mock: return "mock";
        case OracleMode::replay: return "replay";
    }
    return "?";
}

inline OracleMode oracle_mode_from_string(const std::string& s) {
    if (s == "live") return OracleMode::live;
    if (s == "mock") return OracleMode::mock;
    if (s == "replay") return OracleMode::replay;
    throw input_error("unknown oracle mode '" + s + "'");
}

struct OracleConfig {
    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string model_name = "gpt-4o";
    int max_retries = 3;
    double timeout_seconds = 60.0;
    std::filesystem::path cache_dir;
    OracleMode mode = OracleMode::mock;
    std::uint64_t mock_seed = 0;
    // class-pair -> [(predicate name, weight)], drives the mock generator
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, double>>>
        cooccurrence;
};

struct RawOracleResponse {
    std::string text;
    std::string prompt_hash;
};

struct ParseReport {
    int lines_ok = 0;
    std::vector<std::pair<int, std::string>> line_errors;  // (line number, message)
    int dropped_unknown_predicates = 0;
    int dropped_unexpected_pairs = 0;
    int warnings = 0;  // includes the two drop counters plus scene-level warnings

    json to_json() const {
        json errs = json::array();
        for (const auto& [line, msg] : line_errors)
            errs.push_back(json{{"line", line}, {"message", msg}});
        return json{{"lines_ok", lines_ok},
                    {"line_errors", errs},
                    {"dropped_unknown_predicates", dropped_unknown_predicates},
                    {"dropped_unexpected_pairs", dropped_unexpected_pairs},
                    {"warnings", warnings}};
    }
};

using ClassPair = std::pair<std::string, std::string>;

namespace detail {

inline std::string join_quoted(const std::vector<std::string>& names, const char* quote) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += quote + names[i] + quote;
    }
    return out;
}

inline std::string format_pairs(const std::vector<ClassPair>& pairs) {
    std::string out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i) out += " ";
        out += "('" + pairs[i].first + "','" + pairs[i].second + "')";
    }
    return out;
}

}  // namespace detail

// Assembles the query prompt. Byte-stable for identical inputs: the fixed
// instruction text plus the predicate list, the object-class list and the
// ordered pair list substituted into their slots.
inline std::string build_prompt(const std::vector<std::string>& classes,
                                const std::vector<ClassPair>& pairs,
                                const PredicateVocabulary& vocab) {
    if (classes.empty()) throw input_error("build_prompt: class list is empty");
    for (const auto& [a, b] : pairs) {
        if (std::find(classes.begin(), classes.end(), a) == classes.end() ||
            std::find(classes.begin(), classes.end(), b) == classes.end())
            throw input_error("build_prompt: pair ('" + a + "','" + b + "') references unknown class");
    }
    std::string prompt;
    prompt +=
        "Using your prior knowledge of the spatial arrangement of scenes, visualize a "
        "realistic scene which has a list of objects that I give you. Now if we pick any two "
        "objects from this list, they will have a relationship based on their placement in "
        "the scene. So, if I give you a list of objects and a list of pairs from this list of "
        "objects, your task is to visualize the scene containing these objects and give me "
        "the 5 most likely relationships along with a confidence score for each pair based "
        "on that scene.\n\n";
    prompt += "Note that you can pick the relationships only from the predicate list: [" +
              detail::join_quoted(vocab.names, "\"") + "].\n\n";
    prompt +=
        "Also, one constraint is that the chosen relationship must be unidirectional. If I "
        "give you a pair such as 'fruit', 'tree' then you can choose 'growing on' as one of "
        "the relationships since fruit can grow on tree. But if I give you 'tree', 'fruit' "
        "then you can't choose 'growing on' as one of the relationships since tree can't "
        "grow on fruit. So, the order of the pair is important while choosing the "
        "relationship.\n\n";
    prompt += "As an example, list of objects: " + detail::join_quoted(classes, "'") +
              "; list of pairs: " + detail::format_pairs(pairs) + "\n\n";
    prompt +=
        "For this, your output format should be a simple list like below which will have all "
        "the pairs:\n"
        "1. ('human','tree'); 'under',0.9; 'near',0.9; 'in front of',0.8; 'behind',0.8; "
        "'looking at',0.6\n"
        "2. ('fruit','tree'); 'growing on',0.9; 'hanging from',0.9; 'attached to',0.9; "
        "'under',0.8; 'near',0.8\n"
        "3. ('tree','fruit'); 'over',0.9; 'near',0.9; 'attached to',0.9; 'behind',0.6; "
        "'across',0.5\n";
    return prompt;
}

namespace detail {

struct ParsedLine {
    ClassPair pair;
    std::vector<std::string> names;
    std::vector<double> confs;
};

inline void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline bool read_quoted(const std::string& s, std::size_t& i, std::string& out) {
    skip_ws(s, i);
    if (i >= s.size() || s[i] != '\'') return false;
    ++i;
    std::size_t end = s.find('\'', i);
    if (end == std::string::npos) return false;
    out = s.substr(i, end - i);
    i = end + 1;
    return true;
}

// Grammar for one response line: N. ('A','B'); 'pred',conf; 'pred',conf; ...
inline ParsedLine parse_response_line(const std::string& line) {
    std::size_t i = 0;
    skip_ws(line, i);
    std::size_t digits = 0;
    while (i + digits < line.size() && std::isdigit(static_cast<unsigned char>(line[i + digits])))
        ++digits;
    if (digits == 0) throw input_error("expected line number");
    i += digits;
    if (i >= line.size() || line[i] != '.') throw input_error("expected '.' after line number");
    ++i;
    skip_ws(line, i);
    if (i >= line.size() || line[i] != '(') throw input_error("expected '(' opening the pair");
    ++i;
    ParsedLine out;
    if (!read_quoted(line, i, out.pair.first)) throw input_error("malformed pair subject");
    skip_ws(line, i);
    if (i >= line.size() || line[i] != ',') throw input_error("expected ',' inside pair");
    ++i;
    if (!read_quoted(line, i, out.pair.second)) throw input_error("malformed pair object");
    skip_ws(line, i);
    if (i >= line.size() || line[i] != ')') throw input_error("expected ')' closing the pair");
    ++i;
    skip_ws(line, i);
    while (i < line.size() && line[i] == ';') {
        ++i;
        skip_ws(line, i);
        if (i >= line.size()) break;  // trailing semicolon
        std::string pred;
        if (!read_quoted(line, i, pred)) throw input_error("malformed predicate");
        skip_ws(line, i);
        if (i >= line.size() || line[i] != ',') throw input_error("missing confidence for '" + pred + "'");
        ++i;
        skip_ws(line, i);
        std::size_t consumed = 0;
        double conf;
        try {
            conf = std::stod(line.substr(i), &consumed);
        } catch (const std::exception&) {
            throw input_error("malformed confidence for '" + pred + "'");
        }
        i += consumed;
        out.names.push_back(pred);
        out.confs.push_back(conf);
        skip_ws(line, i);
    }
    skip_ws(line, i);
    if (i != line.size()) throw input_error("trailing garbage after hypotheses");
    if (out.names.empty()) throw input_error("no hypotheses on line");
    return out;
}

}  // namespace detail

// Parses an oracle response into per-pair raw hypotheses. Unknown predicates
// and unexpected pairs are dropped with warnings; malformed lines are
// recorded per line. The output follows pairs_expected order.
inline std::vector<std::pair<ClassPair, std::vector<RawHypothesis>>> parse_response(
    const std::string& text, const std::vector<ClassPair>& pairs_expected,
    const PredicateVocabulary& vocab, ParseReport& report) {
    if (text.empty()) throw input_error("parse_response: empty response text");
    std::map<ClassPair, std::vector<RawHypothesis>> by_pair;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) continue;
        detail::ParsedLine parsed;
        try {
            parsed = detail::parse_response_line(line);
        } catch (const std::exception& e) {
            report.line_errors.emplace_back(lineno, e.what());
            continue;
        }
        if (std::find(pairs_expected.begin(), pairs_expected.end(), parsed.pair) ==
            pairs_expected.end()) {
            ++report.dropped_unexpected_pairs;
            ++report.warnings;
            continue;
        }
        std::vector<RawHypothesis> hyps;
        for (std::size_t k = 0; k < parsed.names.size(); ++k) {
            int id = vocab.index_of(parsed.names[k]);
            if (id < 0) {
                ++report.dropped_unknown_predicates;
                ++report.warnings;
                continue;
            }
            hyps.push_back(RawHypothesis{id, parsed.confs[k]});
        }
        if (hyps.empty()) continue;
        ++report.lines_ok;
        auto it = by_pair.find(parsed.pair);
        if (it == by_pair.end()) by_pair[parsed.pair] = std::move(hyps);
        // repeated pair lines: first occurrence wins
    }
    std::vector<std::pair<ClassPair, std::vector<RawHypothesis>>> out;
    for (const auto& pair : pairs_expected) {
        auto it = by_pair.find(pair);
        if (it != by_pair.end()) out.emplace_back(pair, it->second);
    }
    if (out.empty()) throw input_error("oracle response unusable: zero successfully parsed pairs");
    return out;
}

// norm_conf = raw_conf / sum(raw_conf); input must be deduped, <=5, positive.
inline std::vector<Hypothesis> normalize_pair(const std::vector<RawHypothesis>& hyps) {
    if (hyps.empty()) throw input_error("normalize_pair: empty hypothesis list");
    double sum = 0;
    for (const auto& h : hyps) {
        if (h.raw_conf <= 0) throw input_error("normalize_pair: non-positive confidence");
        sum += h.raw_conf;
    }
    std::vector<Hypothesis> out;
    out.reserve(hyps.size());
    for (const auto& h : hyps) out.push_back(Hypothesis{h.pred_id, h.raw_conf, h.raw_conf / sum});
    return out;
}

// Deterministic offline stand-in for the chat endpoint. Emits text in the
// same line grammar the parser consumes, so the full parse path is
// exercised in mock mode. Seeded by (prompt bytes, mock_seed).
inline std::string mock_oracle_response(const std::string& prompt,
                                        const std::vector<ClassPair>& pairs,
                                        const PredicateVocabulary& vocab,
                                        const OracleConfig& cfg) {
    Rng rng = Rng::derive_from(cfg.mock_seed, fnv1a64(prompt));
    std::string out;
    int lineno = 0;
    for (const auto& pair : pairs) {
        ++lineno;
        int n = 2 + rng.below_int(4);  // 2..5 hypotheses
        std::vector<int> chosen;
        auto coit = cfg.cooccurrence.find(pair);
        if (coit != cfg.cooccurrence.end() && !coit->second.empty()) {
            // weighted sampling without replacement from the table
            auto entries = coit->second;
            while (static_cast<int>(chosen.size()) < n && !entries.empty()) {
                double total = 0;
                for (const auto& [name, w] : entries) total += w;
                double r = rng.uniform() * total;
                std::size_t k = 0;
                for (; k + 1 < entries.size(); ++k) {
                    r -= entries[k].second;
                    if (r <= 0) break;
                }
                int id = vocab.index_of(entries[k].first);
                if (id >= 0) chosen.push_back(id);
                entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(k));
            }
        }
        while (static_cast<int>(chosen.size()) < n) {
            int id = rng.below_int(vocab.size());
            if (std::find(chosen.begin(), chosen.end(), id) == chosen.end()) chosen.push_back(id);
        }
        out += std::to_string(lineno) + ". ('" + pair.first + "','" + pair.second + "')";
        std::vector<double> confs;
        for (std::size_t k = 0; k < chosen.size(); ++k)
            confs.push_back(0.5 + 0.1 * rng.below_int(5));  // {0.5..0.9}
        std::sort(confs.begin(), confs.end(), std::greater<>());
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%.1f", confs[k]);
            out += "; '" + vocab.names[static_cast<std::size_t>(chosen[k])] + "'," + buf;
        }
        out += "\n";
    }
    return out;
}

// Pluggable live transport. The HTTP implementation lives in
// oracle_http.hpp and registers itself via enable_http_transport(); tests
// can install a fake. Mock/replay paths never touch it.
using ChatTransport = std::string (*)(const std::string& prompt, const OracleConfig& cfg);

inline ChatTransport& chat_transport() {
    static ChatTransport transport = nullptr;
    return transport;
}

// Resolves a prompt to raw response text according to the configured mode.
// Live responses are cached under <cache_dir>/<prompt_hash>.txt and a cache
// hit short-circuits the network entirely.
inline RawOracleResponse fetch_response(const std::string& prompt,
                                        const std::vector<ClassPair>& pairs,
                                        const PredicateVocabulary& vocab,
                                        const OracleConfig& cfg) {
    RawOracleResponse resp;
    resp.prompt_hash = hex64(fnv1a64(prompt));
    std::filesystem::path cache_file;
    if (!cfg.cache_dir.empty()) cache_file = cfg.cache_dir / (resp.prompt_hash + ".txt");

    if (cfg.mode == OracleMode::replay) {
        if (cache_file.empty() || !std::filesystem::exists(cache_file))
            throw input_error("replay mode: no cached response for prompt " + resp.prompt_hash);
        resp.text = read_text_file(cache_file);
        return resp;
    }
    if (cfg.mode == OracleMode::mock) {
        resp.text = mock_oracle_response(prompt, pairs, vocab, cfg);
        return resp;
    }
    // live
    if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
        resp.text = read_text_file(cache_file);
        return resp;
    }
    if (!chat_transport())
        throw input_error("live mode requires a transport; include oracle_http.hpp and call "
                          "enable_http_transport(), or use mock/replay mode");
    resp.text = chat_transport()(prompt, cfg);
    if (!cache_file.empty()) {
        std::filesystem::create_directories(cfg.cache_dir);
        // write-once: first writer wins, concurrent writers produce the
        // same bytes for the same key
        if (!std::filesystem::exists(cache_file)) {
            auto tmp = cache_file;
            tmp += ".tmp";
            write_text_file(tmp, resp.text);
            std::filesystem::rename(tmp, cache_file);
        }
    }
    return resp;
}

// Ordered class pairs a scene induces: (a,b) for distinct classes, plus
// (c,c) when a class has at least two instances. Class order follows first
// appearance in the object list.
inline void scene_class_pairs(const Scene& scene, const ObjectVocabulary& objects,
                              std::vector<std::string>& classes, std::vector<ClassPair>& pairs) {
    classes.clear();
    pairs.clear();
    std::map<std::string, int> counts;
    for (const auto& obj : scene.objects) {
        const auto& name = objects.names.at(static_cast<std::size_t>(obj.class_id));
        if (counts[name]++ == 0) classes.push_back(name);
    }
    for (const auto& a : classes)
        for (const auto& b : classes) {
            if (a == b && counts[a] < 2) continue;
            pairs.emplace_back(a, b);
        }
}

// Full E-step for one scene: prompt with the deduplicated class list and all
// ordered class pairs, parse the response, then broadcast each class-pair
// hypothesis set to every ordered instance pair of those classes.
inline PriorHypergraph hallucinate_scene(const Scene& scene, const OracleConfig& cfg,
                                         const PredicateVocabulary& vocab,
                                         const ObjectVocabulary& objects, ParseReport& report) {
    PriorHypergraph prior;
    prior.image_id = scene.image_id;
    if (scene.objects.size() < 2) {
        ++report.warnings;
        return prior;
    }
    std::vector<std::string> classes;
    std::vector<ClassPair> pairs;
    scene_class_pairs(scene, objects, classes, pairs);
    if (pairs.empty()) {
        ++report.warnings;
        return prior;
    }
    std::string prompt = build_prompt(classes, pairs, vocab);
    RawOracleResponse resp = fetch_response(prompt, pairs, vocab, cfg);
    auto parsed = parse_response(resp.text, pairs, vocab, report);
    for (const auto& [pair, raw] : parsed) {
        std::vector<Hypothesis> hyps;
        try {
            hyps = normalize_pair(dedupe_and_cap(raw));
        } catch (const input_error&) {
            ++report.warnings;
            continue;
        }
        for (const auto& sub : scene.objects) {
            if (objects.names.at(static_cast<std::size_t>(sub.class_id)) != pair.first) continue;
            for (const auto& obj : scene.objects) {
                if (obj.instance_id == sub.instance_id) continue;
                if (objects.names.at(static_cast<std::size_t>(obj.class_id)) != pair.second) continue;
                prior.pairs.push_back(PairHypotheses{sub.instance_id, obj.instance_id, hyps});
            }
        }
    }
    prior.validate(&scene);
    return prior;
}

}  // namespace relground

