#include "tabfuse/eval.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "jsonl.hpp"
#include "tabfuse/errors.hpp"

namespace tabfuse {

using detail::json;

int em(const std::string& prediction, const std::vector<std::string>& golds) {
    const std::string p = normalize_answer(prediction);
    return std::any_of(golds.begin(), golds.end(), [&](const std::string& g) { return normalize_answer(g) == p; })
               ? 1
               : 0;
}

namespace {
double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& t : gold) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double p = static_cast<double>(common) / static_cast<double>(pred.size());
    const double r = static_cast<double>(common) / static_cast<double>(gold.size());
    return 2.0 * p * r / (p + r);
}
}  // namespace

double f1(const std::string& prediction, const std::vector<std::string>& golds) {
    const auto pred = split_whitespace(normalize_answer(prediction));
    double best = 0.0;
    for (const auto& g : golds) best = std::max(best, f1_single(pred, split_whitespace(normalize_answer(g))));
    return best;
}

int hits_at_budget(const RetrievalResult& result, const std::vector<std::string>& gold_block_ids) {
    const std::unordered_set<std::string> gold(gold_block_ids.begin(), gold_block_ids.end());
    return std::any_of(result.truncated_ids.begin(), result.truncated_ids.end(),
                       [&](const std::string& id) { return gold.contains(id); })
               ? 1
               : 0;
}

EvalReport run_eval(const std::vector<QAExample>& examples, const std::map<std::string, std::string>& predictions,
                    const std::map<std::string, RetrievalResult>& retrievals, std::size_t budget) {
    std::unordered_set<std::string> qids;
    for (const auto& ex : examples) qids.insert(ex.qid);
    for (const auto& [qid, _] : predictions) {
        if (!qids.contains(qid)) throw UnknownQidError(qid);
    }
    for (const auto& [qid, _] : retrievals) {
        if (!qids.contains(qid)) throw UnknownQidError(qid);
    }

    EvalReport report;
    report.budget = budget;
    for (const auto& ex : examples) {
        QuestionScore s;
        s.qid = ex.qid;
        if (auto it = predictions.find(ex.qid); it != predictions.end()) {
            s.em = em(it->second, ex.gold_answers);
            s.f1 = f1(it->second, ex.gold_answers);
        }
        if (auto it = retrievals.find(ex.qid); it != retrievals.end()) {
            s.hit = hits_at_budget(it->second, ex.gold_block_ids);
        }
        report.em += s.em;
        report.f1 += s.f1;
        report.hits += s.hit;
        report.per_question.push_back(std::move(s));
    }
    if (!examples.empty()) {
        const auto n = static_cast<double>(examples.size());
        report.em /= n;
        report.f1 /= n;
        report.hits /= n;
    }
    return report;
}

std::vector<QAExample> load_questions_jsonl(std::istream& in) {
    std::vector<QAExample> out;
    std::unordered_set<std::string> seen;
    detail::for_each_json_line(in, [&](const json& obj, std::size_t line) {
        QAExample ex;
        ex.qid = detail::require_string(obj, "qid", line);
        ex.question = detail::require_string(obj, "question", line);
        ex.gold_answers = detail::require_string_array(obj, "answers", line);
        if (ex.gold_answers.empty()) throw ParseError(line, "question " + ex.qid + " has no gold answers");
        if (obj.contains("gold_block_ids")) ex.gold_block_ids = detail::require_string_array(obj, "gold_block_ids", line);
        if (!seen.insert(ex.qid).second) throw DuplicateIdError(ex.qid);
        out.push_back(std::move(ex));
    });
    return out;
}

void write_questions_jsonl(std::ostream& out, const std::vector<QAExample>& examples) {
    for (const auto& ex : examples) {
        json obj = {{"qid", ex.qid},
                    {"question", ex.question},
                    {"answers", ex.gold_answers},
                    {"gold_block_ids", ex.gold_block_ids}};
        out << obj.dump() << '\n';
    }
}

std::map<std::string, std::string> load_predictions_jsonl(std::istream& in) {
    std::map<std::string, std::string> out;
    detail::for_each_json_line(in, [&](const json& obj, std::size_t line) {
        std::string qid = detail::require_string(obj, "qid", line);
        std::string answer = detail::require_string(obj, "answer", line);
        if (!out.emplace(std::move(qid), std::move(answer)).second) {
            throw DuplicateIdError(detail::require_string(obj, "qid", line));
        }
    });
    return out;
}

void write_predictions_jsonl(std::ostream& out, const std::map<std::string, std::string>& predictions) {
    for (const auto& [qid, answer] : predictions) {
        out << json({{"qid", qid}, {"answer", answer}}).dump() << '\n';
    }
}

std::string report_to_json(const EvalReport& report, const std::string& config_json) {
    json per = json::array();
    for (const auto& s : report.per_question) {
        per.push_back({{"qid", s.qid}, {"em", s.em}, {"f1", s.f1}, {"hit", s.hit}});
    }
    json config;
    try {
        config = json::parse(config_json);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config echo is not valid JSON: ") + e.what());
    }
    json obj = {{"config", std::move(config)},
                {"aggregates", {{"EM", report.em}, {"F1", report.f1}, {"HITS@budget", report.hits}}},
                {"budget", report.budget},
                {"per_question", std::move(per)}};
    return obj.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    try {
        const json obj = json::parse(text);
        EvalReport r;
        r.budget = obj.at("budget").get<std::size_t>();
        r.em = obj.at("aggregates").at("EM").get<double>();
        r.f1 = obj.at("aggregates").at("F1").get<double>();
        r.hits = obj.at("aggregates").at("HITS@budget").get<double>();
        for (const auto& q : obj.at("per_question")) {
            r.per_question.push_back({q.at("qid").get<std::string>(), q.at("em").get<int>(), q.at("f1").get<double>(),
                                      q.at("hit").get<int>()});
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(1, std::string("malformed report: ") + e.what());
    }
}

}  // namespace tabfuse
