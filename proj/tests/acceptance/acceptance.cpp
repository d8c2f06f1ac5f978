// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tabfuse/attention.hpp"
#include "tabfuse/dense.hpp"
#include "tabfuse/eval.hpp"
#include "tabfuse/fusion.hpp"
#include "tabfuse/index.hpp"
#include "tabfuse/reader.hpp"
#include "tabfuse/retrieve.hpp"
#include "json.hpp"

namespace tabfuse {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, a, b, c);
    return buf;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

Outcome bm25_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::size_t order_mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t ndocs = 1 + rng() % 100;
        const std::size_t vocab = 5 + rng() % 60;
        std::vector<testing::RefDoc> docs(ndocs);
        std::vector<IndexDoc> in;
        for (std::size_t i = 0; i < ndocs; ++i) {
            docs[i].id = "d" + std::to_string(i);
            for (std::size_t n = rng() % 40; n > 0; --n) docs[i].tokens.push_back("w" + std::to_string(rng() % vocab));
            in.push_back({docs[i].id, BlockKind::Passage, docs[i].tokens});
        }
        const InvertedIndex index = InvertedIndex::build(in, {});
        std::vector<std::string> q;
        TokenSeq qs;
        for (std::size_t n = 1 + rng() % 6; n > 0; --n) {
            q.push_back("w" + std::to_string(rng() % (vocab + 5)));
            qs.push_back(q.back(), {});
        }
        const auto want = testing::bm25_reference(docs, q);
        const auto got = index.top_k(qs, ndocs);
        if (got.size() != want.size()) {
            ++order_mismatches;
            continue;
        }
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i].block_id != want[i].id) ++order_mismatches;
            worst = std::max(worst, std::abs(got[i].score - want[i].score));
        }
    }
    const double t = seconds_since(start);
    return {worst <= 1e-9 && order_mismatches == 0 && t < 10.0,
            fmt("max |diff| %.3g, order mismatches %.0f, %.2f s", worst, static_cast<double>(order_mismatches), t)};
}

Outcome attention_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> lengths;
        std::size_t nodes = 0;
        const std::size_t target = 2 + rng() % 255;
        while (nodes + 2 <= target) {
            const std::size_t len = std::min<std::size_t>(1 + rng() % 40, target - nodes - 1);
            lengths.push_back(len);
            nodes += len + 1;
        }
        const std::size_t radius = rng() % 20;
        const auto routing = rng() % 2 ? GlobalRouting::All : GlobalRouting::Own;
        const auto d = static_cast<Eigen::Index>(1 + rng() % 32);
        const AttentionMask mask = build_mask(SparseAttentionConfig::from_lengths(lengths, radius, routing));
        const auto n = static_cast<Eigen::Index>(mask.num_nodes());
        const AttentionIO io{gaussian(rng, n, d), gaussian(rng, n, d), gaussian(rng, n, d)};
        const auto layout = testing::RefLayout::from_lengths(lengths, radius, routing == GlobalRouting::All);
        const Eigen::MatrixXd want = testing::dense_masked_attention(layout, io.queries, io.keys, io.values);
        worst = std::max(worst, (sparse_attention(io, mask) - want).cwiseAbs().maxCoeff());
    }
    const double t = seconds_since(start);
    return {worst <= 1e-9 && t < 30.0, fmt("max |diff| %.3g, %.2f s", worst, t)};
}

Outcome complexity() {
    std::vector<double> per_token;
    std::string detail;
    for (std::size_t n : {512, 1024, 2048, 4096}) {
        const auto cfg = SparseAttentionConfig::uniform(n, 128, 84, GlobalRouting::Own);
        const double ratio = static_cast<double>(edge_count(build_mask(cfg)).total) / static_cast<double>(n);
        per_token.push_back(ratio);
        detail += "N=" + std::to_string(n) + ":" + fmt("%.2f ", ratio);
    }
    const auto [lo, hi] = std::minmax_element(per_token.begin(), per_token.end());
    const double spread = (*hi - *lo) / *lo;
    return {spread < 0.10, detail + fmt("spread %.4f", spread)};
}

bool any_cross_block(const BoolMatrix& reach, const std::vector<std::size_t>& lengths) {
    const auto layout = testing::RefLayout::from_lengths(lengths, 0, true);
    for (std::size_t i = 0; i < layout.locals(); ++i) {
        for (std::size_t j = 0; j < layout.locals(); ++j) {
            if (layout.block_of[i] != layout.block_of[j] && reach.get(i, j)) return true;
        }
    }
    return false;
}

bool matches_power(const BoolMatrix& got, const testing::BoolGrid& want) {
    for (std::size_t i = 0; i < got.rows(); ++i) {
        for (std::size_t j = 0; j < got.cols(); ++j) {
            if (got.get(i, j) != want[i][j]) return false;
        }
    }
    return true;
}

Outcome reachability_layers() {
    bool ok = true;
    std::size_t cases = 0;
    for (const std::vector<std::size_t>& lengths :
         {std::vector<std::size_t>{3, 4}, std::vector<std::size_t>{1, 1}, std::vector<std::size_t>{5, 2, 6, 1}}) {
        const AttentionMask own = build_mask(SparseAttentionConfig::from_lengths(lengths, 0, GlobalRouting::Own));
        const AttentionMask all = build_mask(SparseAttentionConfig::from_lengths(lengths, 0, GlobalRouting::All));
        const auto ref_own = testing::RefLayout::from_lengths(lengths, 0, false);
        const auto ref_all = testing::RefLayout::from_lengths(lengths, 0, true);
        const BoolMatrix own2 = reachability(own, 2);
        const BoolMatrix own3 = reachability(own, 3);
        const BoolMatrix all2 = reachability(all, 2);
        ok = ok && matches_power(own2, testing::reachability_by_matrix_power(ref_own, 2));
        ok = ok && matches_power(own3, testing::reachability_by_matrix_power(ref_own, 3));
        ok = ok && matches_power(all2, testing::reachability_by_matrix_power(ref_all, 2));
        ok = ok && !any_cross_block(own2, lengths) && own3.all() && all2.all();
        ++cases;
    }
    return {ok, std::to_string(cases) + " layouts: own@2 no cross-block pair, own@3 full, all@2 full"};
}

Outcome loss_checks() {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    const double e = std::exp(1.0);
    const double identity_err = std::abs(in_batch_loss(eye, eye).loss - (-std::log(e / (e + 1.0))));
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto b = static_cast<Eigen::Index>(2 + rng() % 7);
        const auto d = static_cast<Eigen::Index>(1 + rng() % 8);
        const Eigen::MatrixXd q = gaussian(rng, b, d);
        const Eigen::MatrixXd p = gaussian(rng, b, d);
        const BatchLoss r = in_batch_loss(q, p);
        const Eigen::MatrixXd fq =
            testing::central_difference([&](const Eigen::MatrixXd& x) { return in_batch_loss(x, p).loss; }, q);
        const Eigen::MatrixXd fp =
            testing::central_difference([&](const Eigen::MatrixXd& x) { return in_batch_loss(q, x).loss; }, p);
        worst = std::max(worst, (r.grad_q - fq).norm() / std::max(fq.norm(), 1e-12));
        worst = std::max(worst, (r.grad_b - fp).norm() / std::max(fp.norm(), 1e-12));
    }
    return {identity_err <= 1e-12 && worst <= 1e-6,
            fmt("identity |err| %.3g, worst gradient relative error %.3g", identity_err, worst)};
}

Outcome ict_checks() {
    const auto fx = testing::make_directional_fixture();
    const auto pool = build_fused_pool(fx.corpus.segments, fx.corpus.passages, fx.corpus.links);
    const auto pairs = generate_ict_dataset(pool, 3, 11);
    std::size_t bad_drops = 0;
    std::map<std::string, const FusedBlock*> by_id;
    for (const auto& f : pool) by_id[f.id] = &f;
    for (const auto& p : pairs) {
        const std::size_t w = ict_droppable_words(by_id.at(p.target_block_id)->segment).size();
        if (p.kept_positions.size() != w - w / 2) ++bad_drops;
    }

    FusedBlock block = pool.front();
    block.segment.metadata = {"Registry of partners", "Entries", "Ledger"};
    const std::size_t w = ict_droppable_words(block.segment).size();
    std::vector<std::size_t> kept(w, 0);
    const std::size_t samples = 10000;
    for (std::uint64_t seed = 0; seed < samples; ++seed) {
        for (auto pos : make_ict_pair(block, seed).kept_positions) ++kept[pos];
    }
    double worst = 0.0;
    for (auto k : kept) worst = std::max(worst, std::abs(static_cast<double>(k) / samples - 0.5));

    std::ostringstream a;
    std::ostringstream b;
    write_ict_jsonl(a, generate_ict_dataset(pool, 3, 11, 1));
    write_ict_jsonl(b, generate_ict_dataset(pool, 3, 11, 4));
    const bool identical = a.str() == b.str() && !a.str().empty();
    return {bad_drops == 0 && w % 2 == 0 && worst <= 0.02 && identical,
            fmt("drop-count violations %.0f, w=%.0f, max |survival-0.5| %.4f", static_cast<double>(bad_drops),
                static_cast<double>(w), worst) +
                (identical ? ", regeneration identical" : ", regeneration differs")};
}

Outcome directional() {
    const auto start = Clock::now();
    const auto fx = testing::make_directional_fixture();
    const BlockPool units = make_block_pool(fx.corpus);
    const InvertedIndex index = build_index(units, {});
    const BlockPool fused = make_fused_block_pool(build_fused_pool(fx.corpus.segments, fx.corpus.passages, fx.corpus.links));
    const InvertedIndex fused_index = build_index(fused, {});
    double one = 0.0;
    double two = 0.0;
    double fusion = 0.0;
    for (const auto& q : fx.questions) {
        one += hits_at_budget(one_step_sparse(q.question, index, units, {}), q.gold_block_ids);
        two += hits_at_budget(iter_sparse(q.question, index, units, {}), q.gold_block_ids);
        fusion += hits_at_budget(fusion_retrieve(q.question, fused_index, fused, units, {}), q.gold_block_ids);
    }
    const auto n = static_cast<double>(fx.questions.size());
    one /= n;
    two /= n;
    fusion /= n;
    const double t = seconds_since(start);
    return {units.size() == 200 && fusion > one && two > one && t < 5.0,
            fmt("HITS 1-step %.2f, 2-step %.2f, fusion %.2f", one, two, fusion) + fmt(", %.2f s", t)};
}

Outcome reader_fixture() {
    const auto fx = testing::make_reader_fixture();
    const LexicalSpanScorer scorer(fx.blocks);
    SparseAttentionConfig cfg;
    cfg.seq_len = 4096;
    const ReaderAnswer cross = select_span_cross_block(fx.question, fx.blocks, cfg, scorer);
    const ReaderAnswer single = select_span_single_block(fx.question, fx.blocks, scorer);
    return {cross.answer == fx.gold && single.answer != fx.gold,
            "cross \"" + cross.answer + "\", single \"" + single.answer + "\", gold \"" + fx.gold + "\""};
}

Outcome golden_em_f1() {
    std::ifstream in(testing::data_dir() / "em_f1_golden.jsonl");
    std::string line;
    std::size_t cases = 0;
    std::size_t failures = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto row = nlohmann::json::parse(line);
        const auto p = row.at("prediction").get<std::string>();
        const auto golds = row.at("golds").get<std::vector<std::string>>();
        if (em(p, golds) != row.at("em").get<int>() || f1(p, golds) != row.at("f1").get<double>()) ++failures;
        ++cases;
    }
    return {cases == 20 && failures == 0,
            fmt("%.0f cases, %.0f mismatches", static_cast<double>(cases), static_cast<double>(failures))};
}

Outcome end_to_end() {
    const auto a = testing::scratch_dir("acceptance_a");
    const auto b = testing::scratch_dir("acceptance_b");
    const auto c = testing::scratch_dir("acceptance_c");
    for (const auto& [dir, threads] : {std::pair{a, 1}, std::pair{b, 1}, std::pair{c, 8}}) {
        const auto r = testing::run_fixture_pipeline(dir, static_cast<std::size_t>(threads));
        if (r.code != 0) return {false, "pipeline failed: " + r.err};
    }
    const std::string ra = testing::slurp(a / "report.json");
    const bool same = !ra.empty() && ra == testing::slurp(b / "report.json") && ra == testing::slurp(c / "report.json");
    return {same, same ? "report.json identical across 2 runs and threads 1/8" : "report.json differs"};
}

}  // namespace
}  // namespace tabfuse

int main() {
    using namespace tabfuse;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"bm25 oracle equivalence", bm25_oracle},
        {"sparse attention oracle equivalence", attention_oracle},
        {"attention edge count linear in N", complexity},
        {"global-local reachability", reachability_layers},
        {"in-batch loss and gradient", loss_checks},
        {"ICT generator", ict_checks},
        {"directional retrieval fixture", directional},
        {"cross-block reader fixture", reader_fixture},
        {"EM/F1 golden file", golden_em_f1},
        {"end-to-end determinism", end_to_end},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    std::fflush(stdout);
    return failures == 0 ? 0 : 1;
}
