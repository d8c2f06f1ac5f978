#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tabfuse/retrieve.hpp"

namespace tabfuse {

struct QAExample {
    std::string qid;
    std::string question;
    std::vector<std::string> gold_answers;    // non-empty
    std::vector<std::string> gold_block_ids;  // approximate answer blocks
};

struct QuestionScore {
    std::string qid;
    int em = 0;
    double f1 = 0.0;
    int hit = 0;
    bool operator==(const QuestionScore&) const = default;
};

struct EvalReport {
    std::vector<QuestionScore> per_question;  // in example order
    double em = 0.0;
    double f1 = 0.0;
    double hits = 0.0;
    std::size_t budget = 0;
    bool operator==(const EvalReport&) const = default;
};

/// 1 iff the normalized prediction equals some normalized gold answer.
int em(const std::string& prediction, const std::vector<std::string>& golds);

/// Token-level F1 on normalized text with multiset overlap, max over golds.
double f1(const std::string& prediction, const std::vector<std::string>& golds);

/// 1 iff any gold block id is among the truncated ids.
int hits_at_budget(const RetrievalResult& result, const std::vector<std::string>& gold_block_ids);

/// Missing predictions score em = f1 = 0 and missing retrievals hit = 0.
/// Predictions or retrievals for qids not in `examples` raise UnknownQidError.
EvalReport run_eval(const std::vector<QAExample>& examples, const std::map<std::string, std::string>& predictions,
                    const std::map<std::string, RetrievalResult>& retrievals, std::size_t budget);

/// questions.jsonl: {"qid","question","answers":[...],"gold_block_ids":[...]}.
std::vector<QAExample> load_questions_jsonl(std::istream& in);
void write_questions_jsonl(std::ostream& out, const std::vector<QAExample>& examples);

/// predictions.jsonl: {"qid","answer"}.
std::map<std::string, std::string> load_predictions_jsonl(std::istream& in);
void write_predictions_jsonl(std::ostream& out, const std::map<std::string, std::string>& predictions);

/// Deterministic JSON text of a report; `config_json` (a JSON object text) is
/// echoed under "config".
std::string report_to_json(const EvalReport& report, const std::string& config_json = "{}");
EvalReport report_from_json(const std::string& text);

}  // namespace tabfuse
