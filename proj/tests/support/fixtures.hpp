#pragma once

#include <cstddef>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "tabfuse/corpus.hpp"
#include "tabfuse/eval.hpp"
#include "tabfuse/reader.hpp"

namespace tabfuse::testing {

inline std::filesystem::path data_dir() { return TABFUSE_TEST_DATA_DIR; }

inline Corpus corpus_from_jsonl(const std::string& tables, const std::string& passages, const std::string& links) {
    std::istringstream t(tables);
    std::istringstream p(passages);
    std::istringstream l(links);
    return load_corpus(t, p, &l);
}

/// 100 segments and 100 passages. Question i names segment i by two unique
/// tokens. Passage i shares no token with question i, is gold-linked to
/// segment i, and its title appears as a cell of segment i. Every fifth
/// question has its segment as gold evidence; the rest have the passage.
struct DirectionalFixture {
    Corpus corpus;
    std::vector<QAExample> questions;
};

inline DirectionalFixture make_directional_fixture() {
    std::string tables;
    std::string passages;
    std::string links;
    DirectionalFixture fx;
    for (int t = 0; t < 10; ++t) {
        std::string rows;
        for (int r = 0; r < 10; ++r) {
            const int i = t * 10 + r;
            const std::string n = std::to_string(i);
            rows += std::string(r ? "," : "") + "[\"zorblax" + n + "\",\"code" + n + "\",\"partnername" + n + "\"]";
            passages += "{\"id\":\"p" + n + "\",\"title\":\"Partnername" + n + "\",\"text\":\"Partnername" + n +
                        " resides near lake" + n + " beside hill" + n + ".\"}\n";
            links += "{\"segment_id\":\"reg" + std::to_string(t) + "#" + std::to_string(r) + "\",\"passage_ids\":[\"p" +
                     n + "\"]}\n";
            QAExample q;
            q.qid = "q" + n;
            q.question = "Who is associated with zorblax" + n + " under code" + n + "?";
            q.gold_answers = {"Partnername" + n};
            q.gold_block_ids = {i % 5 == 0 ? "reg" + std::to_string(t) + "#" + std::to_string(r) : "p" + n};
            fx.questions.push_back(q);
        }
        tables += "{\"id\":\"reg" + std::to_string(t) + "\",\"page_title\":\"Registry " + std::to_string(t) +
                  "\",\"section_title\":\"Entries\",\"section_text\":\"\",\"headers\":[\"Name\",\"Code\",\"Partner\"],"
                  "\"rows\":[" + rows + "]}\n";
    }
    fx.corpus = corpus_from_jsonl(tables, passages, links);
    return fx;
}

/// Three reader blocks in retrieval order. The manager's name, which picks
/// out the right team, sits in the first block; the gold answer "riverton"
/// sits in the second. The third block is a distractor whose own window
/// matches more of the question than the gold block's does. The second block
/// is long enough that no evidence window reaches both of its neighbours.
struct ReaderFixture {
    std::vector<std::string> question;
    std::vector<ReaderBlock> blocks;
    std::string gold = "riverton";
};

inline ReaderFixture make_reader_fixture() {
    ReaderFixture fx;
    fx.question = tokenize("What is the home ground of the Comets whose manager is Zed Quill?").tokens;
    auto block = [](std::string id, const std::string& text) {
        return ReaderBlock{std::move(id), 1.0, tokenize(text).tokens};
    };
    fx.blocks.push_back(block("seg_comets", "Comets manager Zed Quill"));
    fx.blocks.push_back(block("p_comets",
                              "Comets home ground Riverton. Founded by miners, later sold, rebuilt twice, renamed "
                              "once, painted blue, expanded north, expanded south, roofed, floodlit, seated, "
                              "restored, reopened, celebrated widely. Crowds gathered every spring near quiet fields beside old "
                              "mills while bands played marches until dusk fell gently. Vendors sold roasted chestnuts, "
                              "children chased kites, and older fans recalled storied rivalries over warm cider."));
    fx.blocks.push_back(block("p_rockets", "The Rockets home ground Lakeford manager"));
    return fx;
}

}  // namespace tabfuse::testing
