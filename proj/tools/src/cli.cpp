#include "tabfuse/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include "tabfuse/attention.hpp"
#include "tabfuse/corpus.hpp"
#include "tabfuse/dense.hpp"
#include "tabfuse/errors.hpp"
#include "tabfuse/eval.hpp"
#include "tabfuse/fusion.hpp"
#include "tabfuse/index.hpp"
#include "tabfuse/linker.hpp"
#include "tabfuse/parallel.hpp"
#include "tabfuse/reader.hpp"
#include "tabfuse/retrieve.hpp"

namespace tabfuse::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    bool quiet = false;
    std::string workdir = ".";
};

struct Context {
    const Globals& globals;
    const CLI::App& command;
    std::ostream& out;
    std::ostream& err;

    fs::path resolve(const std::string& path, const char* fallback) const {
        return path.empty() ? fs::path(globals.workdir) / fallback : fs::path(path);
    }
    void note(const std::string& message) const {
        if (!globals.quiet) err << message << '\n';
    }
};

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
    std::ostringstream buf;
    writer(buf);
    write_file(path, buf.str());
}

/// Every option of the command and the global seed, as given or defaulted.
json config_echo(const Context& ctx) {
    json cfg = json::object();
    cfg["subcommand"] = ctx.command.get_name();
    cfg["seed"] = ctx.globals.seed;
    for (const CLI::Option* opt : ctx.command.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "seed") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            std::string value;
            for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
            cfg[name] = value;
        } else {
            cfg[name] = opt->get_default_str();
        }
    }
    return cfg;
}

Corpus load_workspace_corpus(const fs::path& dir) {
    CorpusPaths paths{dir / "tables.jsonl", dir / "passages.jsonl", std::nullopt};
    if (fs::exists(dir / "links.jsonl")) paths.links = dir / "links.jsonl";
    return load_corpus(paths);
}

std::vector<QAExample> load_questions(const fs::path& path) {
    auto in = open_in(path);
    return load_questions_jsonl(in);
}

InvertedIndex load_index(const fs::path& path) {
    auto in = open_in(path);
    return InvertedIndex::load(in);
}

EmbeddingStore load_embeddings(const fs::path& path) {
    auto in = open_in(path);
    return EmbeddingStore::load_tsv(in);
}

std::vector<FusedBlock> load_fused(const fs::path& path, const Corpus& corpus) {
    auto in = open_in(path);
    return load_fused_jsonl(in, corpus);
}

/// Rebuilds the query encoder recorded in an embedding file header.
std::unique_ptr<Encoder> encoder_for(const EmbeddingStore& store) {
    const std::string prefix = "hashed-bow/seed=";
    const std::string& tag = store.encoder_tag();
    if (tag.rfind(prefix, 0) != 0) throw Error("unsupported encoder: " + tag);
    try {
        return std::make_unique<HashedBowEncoder>(store.dim(), std::stoull(tag.substr(prefix.size())));
    } catch (const std::logic_error&) {
        throw Error("malformed encoder tag: " + tag);
    }
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
    std::string tables;
    std::string passages;
    std::string links;
    std::string questions;
};

void run_ingest(const Context& ctx, const IngestOptions& o) {
    CorpusPaths paths{o.tables, o.passages, std::nullopt};
    if (!o.links.empty()) paths.links = o.links;
    const Corpus corpus = load_corpus(paths);
    const fs::path dir = ctx.globals.workdir;

    write_with(dir / "tables.jsonl", [&](std::ostream& s) { write_tables_jsonl(s, corpus.tables); });
    write_with(dir / "passages.jsonl", [&](std::ostream& s) { write_passages_jsonl(s, corpus.passages); });
    if (paths.links) {
        write_with(dir / "links.jsonl", [&](std::ostream& s) { write_links_jsonl(s, corpus.links); });
    } else if (fs::exists(dir / "links.jsonl")) {
        fs::remove(dir / "links.jsonl");
    }
    std::size_t questions = 0;
    if (!o.questions.empty()) {
        const auto examples = load_questions(o.questions);
        questions = examples.size();
        write_with(dir / "questions.jsonl", [&](std::ostream& s) { write_questions_jsonl(s, examples); });
    }

    const BlockPool pool = make_block_pool(corpus);
    std::size_t segment_tokens = 0;
    std::size_t passage_tokens = 0;
    for (const auto& b : pool) (b.kind() == BlockKind::Segment ? segment_tokens : passage_tokens) += b.token_count();
    std::size_t link_count = 0;
    for (const auto& [_, ids] : corpus.links) link_count += ids.size();
    auto mean = [](std::size_t total, std::size_t n) { return n ? static_cast<double>(total) / n : 0.0; };

    json stats = {{"config", config_echo(ctx)},
                  {"tables", corpus.tables.size()},
                  {"segments", corpus.segments.size()},
                  {"passages", corpus.passages.size()},
                  {"linked_segments", corpus.links.size()},
                  {"links", link_count},
                  {"questions", questions},
                  {"mean_segment_tokens", mean(segment_tokens, corpus.segments.size())},
                  {"mean_passage_tokens", mean(passage_tokens, corpus.passages.size())}};
    write_file(dir / "stats.json", stats.dump(2) + "\n");
    if (!ctx.globals.quiet) ctx.out << stats.dump(2) << '\n';
}

// ---------------------------------------------------------------- link

struct LinkOptionsCli {
    std::string queries = "baseline";
    std::string augmented;
    std::size_t per_query_k = 1;
    double threshold = 0.0;
    double k1 = 1.2;
    double b = 0.75;
    std::string out;
    std::string report;
};

void run_link(const Context& ctx, const LinkOptionsCli& o) {
    const Corpus corpus = load_workspace_corpus(ctx.globals.workdir);
    const Bm25Params params{o.k1, o.b};
    params.validate();
    if (o.per_query_k < 1) throw Error("--per-query-k must be >= 1");

    AugmentedQueries augmented;
    if (o.queries == "file") {
        std::unordered_set<std::string> known;
        for (const auto& s : corpus.segments) known.insert(s.id);
        augmented = load_augmented_queries(ctx.resolve(o.augmented, "augmented_queries.jsonl"), known);
    }
    const InvertedIndex titles = build_title_index(corpus.passages, params, ctx.globals.threads);

    std::vector<LinkResult> slots(corpus.segments.size());
    parallel_for(corpus.segments.size(), ctx.globals.threads, [&](std::size_t i) {
        const TableSegment& seg = corpus.segments[i];
        std::vector<std::string> queries;
        if (o.queries == "baseline") {
            queries = baseline_queries(seg);
        } else if (auto it = augmented.find(seg.id); it != augmented.end()) {
            queries = it->second;
        }
        slots[i] = link_segment(seg, queries, titles, o.per_query_k, o.threshold);
    });
    std::map<std::string, LinkResult> results;
    for (auto& r : slots) results.emplace(r.segment_id, std::move(r));

    const fs::path out = ctx.resolve(o.out, "predicted_links.jsonl");
    write_with(out, [&](std::ostream& s) { write_link_results_jsonl(s, results); });
    ctx.note("linked " + std::to_string(results.size()) + " segments -> " + out.string());

    if (!corpus.links.empty()) {
        const LinkEvalReport rep = eval_linking(results, corpus.links);
        json per = json::array();
        for (const auto& s : rep.per_segment) {
            per.push_back({{"segment_id", s.segment_id}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
        }
        json report = {{"config", config_echo(ctx)},
                       {"macro", {{"precision", rep.macro_precision}, {"recall", rep.macro_recall}, {"f1", rep.macro_f1}}},
                       {"per_segment", std::move(per)}};
        write_file(ctx.resolve(o.report, "link_report.json"), report.dump(2) + "\n");
    }
}

// ---------------------------------------------------------------- fuse

struct FuseOptions {
    std::string links = "gold";
    std::string out;
};

void run_fuse(const Context& ctx, const FuseOptions& o) {
    const fs::path dir = ctx.globals.workdir;
    Corpus corpus;
    if (o.links == "gold") {
        corpus = load_workspace_corpus(dir);
    } else {
        const fs::path links = o.links == "predicted" ? dir / "predicted_links.jsonl" : fs::path(o.links);
        corpus = load_corpus(CorpusPaths{dir / "tables.jsonl", dir / "passages.jsonl", links});
    }
    const auto fused = build_fused_pool(corpus.segments, corpus.passages, corpus.links);
    const fs::path out = ctx.resolve(o.out, "fused.jsonl");
    write_with(out, [&](std::ostream& s) { write_fused_jsonl(s, fused); });
    ctx.note("fused " + std::to_string(fused.size()) + " blocks -> " + out.string());
}

// ---------------------------------------------------------------- ict-gen

struct IctOptions {
    std::size_t pairs_per_block = 1;
    std::string fused;
    std::string out;
};

void run_ict(const Context& ctx, const IctOptions& o) {
    const Corpus corpus = load_workspace_corpus(ctx.globals.workdir);
    const auto fused = load_fused(ctx.resolve(o.fused, "fused.jsonl"), corpus);
    const auto pairs = generate_ict_dataset(fused, o.pairs_per_block, ctx.globals.seed, ctx.globals.threads);
    const fs::path out = ctx.resolve(o.out, "ict.jsonl");
    write_with(out, [&](std::ostream& s) { write_ict_jsonl(s, pairs); });
    ctx.note("wrote " + std::to_string(pairs.size()) + " pairs -> " + out.string());
}

// ---------------------------------------------------------------- index

struct IndexOptions {
    std::string target = "blocks";
    std::string fused;
    double k1 = 1.2;
    double b = 0.75;
    std::string out;
};

void run_index(const Context& ctx, const IndexOptions& o) {
    const Corpus corpus = load_workspace_corpus(ctx.globals.workdir);
    const Bm25Params params{o.k1, o.b};
    params.validate();
    InvertedIndex index;
    if (o.target == "blocks") {
        index = build_index(make_block_pool(corpus), params, ctx.globals.threads);
    } else if (o.target == "fused") {
        const auto fused = load_fused(ctx.resolve(o.fused, "fused.jsonl"), corpus);
        index = build_index(make_fused_block_pool(fused), params, ctx.globals.threads);
    } else {
        index = build_title_index(corpus.passages, params, ctx.globals.threads);
    }
    const fs::path out = ctx.resolve(o.out, (o.target + ".idx").c_str());
    write_with(out, [&](std::ostream& s) { index.save(s); });
    ctx.note("indexed " + std::to_string(index.num_docs()) + " docs -> " + out.string());
}

// ---------------------------------------------------------------- embed

struct EmbedOptions {
    std::string target = "blocks";
    std::string encoder = "hashed-bow";
    std::size_t dim = 256;
    std::string fused;
    std::string out;
};

void run_embed(const Context& ctx, const EmbedOptions& o) {
    if (o.dim < 1) throw Error("--dim must be >= 1");
    const Corpus corpus = load_workspace_corpus(ctx.globals.workdir);
    const BlockPool pool = o.target == "blocks"
                               ? make_block_pool(corpus)
                               : make_fused_block_pool(load_fused(ctx.resolve(o.fused, "fused.jsonl"), corpus));
    const HashedBowEncoder encoder(o.dim, ctx.globals.seed);
    const EmbeddingStore store = embed_pool(pool, encoder, ctx.globals.threads);
    const fs::path out = ctx.resolve(o.out, (o.target + ".emb.tsv").c_str());
    write_with(out, [&](std::ostream& s) { store.save_tsv(s); });
    ctx.note("embedded " + std::to_string(store.size()) + " blocks -> " + out.string());
}

// ---------------------------------------------------------------- retrieve

struct RetrieveOptions {
    std::string mode = "fusion-sparse";
    std::string questions;
    std::string index;
    std::string embeddings;
    std::string fused;
    std::size_t first_round = 20;
    std::size_t per_query = 5;
    std::vector<std::size_t> fanouts{8, 4, 2};
    std::size_t top_fused = 15;
    std::size_t budget = 4096;
    std::string out;
};

void run_retrieve(const Context& ctx, const RetrieveOptions& o) {
    const fs::path dir = ctx.globals.workdir;
    const Corpus corpus = load_workspace_corpus(dir);
    const auto questions = load_questions(ctx.resolve(o.questions, "questions.jsonl"));
    const BlockPool units = make_block_pool(corpus);
    const bool fusion = o.mode.rfind("fusion", 0) == 0;
    const bool dense = o.mode.find("dense") != std::string::npos;

    BlockPool fused_pool;
    if (fusion) fused_pool = make_fused_block_pool(load_fused(ctx.resolve(o.fused, "fused.jsonl"), corpus));

    std::optional<InvertedIndex> index;
    std::optional<EmbeddingStore> store;
    std::unique_ptr<Encoder> encoder;
    if (dense) {
        store = load_embeddings(ctx.resolve(o.embeddings, fusion ? "fused.emb.tsv" : "blocks.emb.tsv"));
        store->bind_kinds(fusion ? fused_pool : units);
        encoder = encoder_for(*store);
    } else {
        index = load_index(ctx.resolve(o.index, fusion ? "fused.idx" : "blocks.idx"));
    }

    IterSparseConfig sparse_cfg{o.first_round, o.per_query, o.budget};
    IterDenseConfig dense_cfg{o.fanouts, o.budget};
    const FusionConfig fusion_cfg{o.top_fused, o.budget};
    if (o.mode == "iter-sparse" || o.mode == "one-step-sparse") sparse_cfg.validate();
    if (o.mode == "iter-dense") dense_cfg.validate();

    std::vector<RetrievalResult> slots(questions.size());
    parallel_for(questions.size(), ctx.globals.threads, [&](std::size_t i) {
        const std::string& q = questions[i].question;
        if (o.mode == "iter-sparse") {
            slots[i] = iter_sparse(q, *index, units, sparse_cfg);
        } else if (o.mode == "one-step-sparse") {
            slots[i] = one_step_sparse(q, *index, units, sparse_cfg);
        } else if (o.mode == "iter-dense") {
            slots[i] = iter_dense(q, *store, *encoder, units, dense_cfg);
        } else if (o.mode == "fusion-sparse") {
            slots[i] = fusion_retrieve(q, *index, fused_pool, units, fusion_cfg);
        } else {
            slots[i] = fusion_retrieve_dense(encoder->encode(q), *store, fused_pool, units, fusion_cfg);
        }
    });
    std::map<std::string, RetrievalResult> results;
    for (std::size_t i = 0; i < questions.size(); ++i) results.emplace(questions[i].qid, std::move(slots[i]));

    const fs::path out = ctx.resolve(o.out, "retrieval_results.jsonl");
    write_with(out, [&](std::ostream& s) { write_retrieval_jsonl(s, results); });
    ctx.note("retrieved for " + std::to_string(results.size()) + " questions -> " + out.string());
}

// ---------------------------------------------------------------- read

struct ReadOptions {
    std::string reader = "cross";
    std::string normalization = "minmax";
    std::string questions;
    std::string retrievals;
    std::size_t capacity = 4096;
    std::size_t max_span = 10;
    std::size_t window = 20;
    std::string out;
};

void run_read(const Context& ctx, const ReadOptions& o) {
    const Corpus corpus = load_workspace_corpus(ctx.globals.workdir);
    const BlockPool units = make_block_pool(corpus);
    const auto questions = load_questions(ctx.resolve(o.questions, "questions.jsonl"));
    std::map<std::string, RetrievalResult> retrievals;
    {
        auto in = open_in(ctx.resolve(o.retrievals, "retrieval_results.jsonl"));
        retrievals = load_retrieval_jsonl(in);
    }
    SparseAttentionConfig attn;
    attn.seq_len = o.capacity;
    const auto norm = o.normalization == "none" ? RetrievalNormalization::None : RetrievalNormalization::MinMax;

    std::vector<std::optional<std::string>> answers(questions.size());
    parallel_for(questions.size(), ctx.globals.threads, [&](std::size_t i) {
        auto it = retrievals.find(questions[i].qid);
        if (it == retrievals.end()) return;
        const auto blocks = reader_blocks(it->second.ranked, it->second.truncated_ids, units);
        if (blocks.empty()) {
            answers[i] = "";
            return;
        }
        const LexicalSpanScorer scorer(blocks, o.max_span, o.window);
        const auto question = tokenize(questions[i].question).tokens;
        answers[i] = o.reader == "single" ? select_span_single_block(question, blocks, scorer, norm).answer
                                          : select_span_cross_block(question, blocks, attn, scorer).answer;
    });
    std::map<std::string, std::string> predictions;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (answers[i]) predictions.emplace(questions[i].qid, *answers[i]);
    }
    const fs::path out = ctx.resolve(o.out, "predictions.jsonl");
    write_with(out, [&](std::ostream& s) { write_predictions_jsonl(s, predictions); });
    ctx.note("answered " + std::to_string(predictions.size()) + " questions -> " + out.string());
}

// ---------------------------------------------------------------- attn-check

struct AttnOptions {
    std::size_t n = 1024;
    std::size_t radius = 84;
    std::size_t block_size = 84;
    std::string mode = "all";
    std::size_t dim = 16;
    std::size_t max_layers = 4;
};

/// Edge predicate recomputed from the layout, independent of the CSR mask.
bool layout_allows(const SparseAttentionConfig& cfg, const std::vector<std::size_t>& block_of, std::size_t row,
                   std::size_t col) {
    const std::size_t n = cfg.seq_len;
    const auto block = [&](std::size_t node) { return node < n ? block_of[node] : node - n; };
    if (row >= n) return col >= n || block(col) == row - n;
    if (col >= n) return cfg.routing == GlobalRouting::All || col - n == block(row);
    const std::size_t dist = row > col ? row - col : col - row;
    return block(row) == block(col) && dist <= cfg.radius;
}

void run_attn_check(const Context& ctx, const AttnOptions& o) {
    const auto cfg = SparseAttentionConfig::uniform(o.n, o.block_size, o.radius, *parse_global_routing(o.mode));
    const AttentionMask mask = build_mask(cfg);
    const EdgeCounts counts = edge_count(mask);
    const std::size_t nodes = mask.num_nodes();

    std::vector<std::size_t> block_of(o.n);
    for (std::size_t b = 0; b < cfg.block_bounds.size(); ++b) {
        for (std::size_t i = cfg.block_bounds[b].first; i < cfg.block_bounds[b].second; ++i) block_of[i] = b;
    }

    std::mt19937_64 rng(ctx.globals.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto rows = static_cast<Eigen::Index>(nodes);
    const auto cols = static_cast<Eigen::Index>(std::max<std::size_t>(o.dim, 1));
    AttentionIO io;
    for (Eigen::MatrixXd* m : {&io.queries, &io.keys, &io.values}) {
        *m = Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return unit(rng); });
    }
    const Eigen::MatrixXd sparse = sparse_attention(io, mask);

    // Dense reference: full logits, disallowed pairs excluded.
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    const Eigen::MatrixXd logits = io.queries * io.keys.transpose() * scale;
    double max_diff = 0.0;
    std::size_t mismatched = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < rows; ++j) {
            const bool ok = layout_allows(cfg, block_of, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (ok != mask.allows(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) ++mismatched;
            if (ok) m = std::max(m, logits(i, j));
        }
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(cols);
        double z = 0.0;
        for (Eigen::Index j = 0; j < rows; ++j) {
            if (!layout_allows(cfg, block_of, static_cast<std::size_t>(i), static_cast<std::size_t>(j))) continue;
            const double w = std::exp(logits(i, j) - m);
            z += w;
            acc += w * io.values.row(j);
        }
        max_diff = std::max(max_diff, (acc / z - sparse.row(i)).cwiseAbs().maxCoeff());
    }

    json cross_first = nullptr;
    json all_reach = nullptr;
    for (std::size_t layers = 1; layers <= o.max_layers; ++layers) {
        const BoolMatrix reach = reachability(mask, layers);
        bool cross = false;
        for (std::size_t i = 0; i < o.n && !cross; ++i) {
            for (std::size_t j = 0; j < o.n; ++j) {
                if (block_of[i] != block_of[j] && reach.get(i, j)) {
                    cross = true;
                    break;
                }
            }
        }
        if (cross && cross_first.is_null()) cross_first = layers;
        if (reach.all()) {
            all_reach = layers;
            break;
        }
    }

    json report = {{"config", config_echo(ctx)},
                   {"nodes", nodes},
                   {"blocks", cfg.num_globals()},
                   {"edge_counts",
                    {{"local_local", counts.local_local},
                     {"local_global", counts.local_global},
                     {"global_local", counts.global_local},
                     {"global_global", counts.global_global},
                     {"total", counts.total}}},
                   {"edge_bound", edge_count_bound(cfg)},
                   {"dense_pairs", nodes * nodes},
                   {"edges_per_token", o.n ? static_cast<double>(counts.total) / static_cast<double>(o.n) : 0.0},
                   {"mask_mismatches", mismatched},
                   {"oracle_max_abs_diff", max_diff},
                   {"oracle_pass", max_diff <= 1e-9 && mismatched == 0},
                   {"reachability",
                    {{"max_layers", o.max_layers}, {"cross_block_first_layer", cross_first}, {"all_reachable_layer", all_reach}}}};
    ctx.out << report.dump(2) << '\n';
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    std::string questions;
    std::string predictions;
    std::string retrievals;
    std::size_t budget = 4096;
    std::string out;
};

void run_eval_cmd(const Context& ctx, const EvalOptions& o) {
    const auto questions = load_questions(ctx.resolve(o.questions, "questions.jsonl"));
    std::map<std::string, std::string> predictions;
    {
        auto in = open_in(ctx.resolve(o.predictions, "predictions.jsonl"));
        predictions = load_predictions_jsonl(in);
    }
    std::map<std::string, RetrievalResult> retrievals;
    const fs::path rpath = ctx.resolve(o.retrievals, "retrieval_results.jsonl");
    if (!o.retrievals.empty() || fs::exists(rpath)) {
        auto in = open_in(rpath);
        retrievals = load_retrieval_jsonl(in);
    }
    const EvalReport report = run_eval(questions, predictions, retrievals, o.budget);
    const std::string text = report_to_json(report, config_echo(ctx).dump());
    const fs::path out = ctx.resolve(o.out, "report.json");
    write_file(out, text);
    if (!ctx.globals.quiet) {
        ctx.out << "EM " << report.em << " F1 " << report.f1 << " HITS@" << report.budget << ' ' << report.hits
                << '\n';
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"tabfuse: open-domain QA over tables and text"};
    app.name("tabfuse");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    Globals g;
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Random seed");
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");
    app.add_option("--workdir", g.workdir, "Directory holding pipeline artifacts");

    std::function<void(const Context&)> action;
    const CLI::App* chosen = nullptr;
    auto bind = [&](CLI::App* sub, auto& opts, auto fn) {
        sub->callback([&, sub, fn] {
            chosen = sub;
            action = [&opts, fn](const Context& ctx) { fn(ctx, opts); };
        });
    };

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate a corpus and write canonical pools and stats");
    c_ingest->add_option("--tables", ingest.tables, "tables.jsonl")->required();
    c_ingest->add_option("--passages", ingest.passages, "passages.jsonl")->required();
    c_ingest->add_option("--links", ingest.links, "Gold links.jsonl");
    c_ingest->add_option("--questions", ingest.questions, "questions.jsonl");
    bind(c_ingest, ingest, run_ingest);

    LinkOptionsCli link;
    auto* c_link = app.add_subcommand("link", "Link table segments to passages by title");
    c_link->add_option("--queries", link.queries)->check(CLI::IsMember({"baseline", "file"}));
    c_link->add_option("--augmented", link.augmented, "augmented_queries.jsonl");
    c_link->add_option("--per-query-k", link.per_query_k)->check(CLI::PositiveNumber);
    c_link->add_option("--threshold", link.threshold);
    c_link->add_option("--k1", link.k1);
    c_link->add_option("--b", link.b);
    c_link->add_option("--out", link.out);
    c_link->add_option("--report", link.report);
    bind(c_link, link, run_link);

    FuseOptions fuse;
    auto* c_fuse = app.add_subcommand("fuse", "Group segments with linked passages into fused blocks");
    c_fuse->add_option("--links", fuse.links, "gold, predicted, or a links file");
    c_fuse->add_option("--out", fuse.out);
    bind(c_fuse, fuse, run_fuse);

    IctOptions ict;
    auto* c_ict = app.add_subcommand("ict-gen", "Generate inverse-cloze pretraining pairs");
    c_ict->add_option("--pairs-per-block", ict.pairs_per_block)->check(CLI::PositiveNumber);
    c_ict->add_option("--fused", ict.fused);
    c_ict->add_option("--out", ict.out);
    c_ict->add_option("--seed", g.seed, "Random seed");
    bind(c_ict, ict, run_ict);

    IndexOptions index;
    auto* c_index = app.add_subcommand("index", "Build a BM25 index");
    c_index->add_option("--target", index.target)->check(CLI::IsMember({"blocks", "fused", "titles"}));
    c_index->add_option("--fused", index.fused);
    c_index->add_option("--k1", index.k1);
    c_index->add_option("--b", index.b);
    c_index->add_option("--out", index.out);
    bind(c_index, index, run_index);

    EmbedOptions embed;
    auto* c_embed = app.add_subcommand("embed", "Encode blocks into an embedding table");
    c_embed->add_option("--target", embed.target)->check(CLI::IsMember({"blocks", "fused"}));
    c_embed->add_option("--encoder", embed.encoder)->check(CLI::IsMember({"hashed-bow"}));
    c_embed->add_option("--dim", embed.dim)->check(CLI::PositiveNumber);
    c_embed->add_option("--fused", embed.fused);
    c_embed->add_option("--out", embed.out);
    bind(c_embed, embed, run_embed);

    RetrieveOptions retrieve;
    auto* c_retrieve = app.add_subcommand("retrieve", "Retrieve evidence for every question");
    c_retrieve->add_option("--mode", retrieve.mode)
        ->check(CLI::IsMember({"iter-sparse", "one-step-sparse", "iter-dense", "fusion-sparse", "fusion-dense"}));
    c_retrieve->add_option("--questions", retrieve.questions);
    c_retrieve->add_option("--index", retrieve.index);
    c_retrieve->add_option("--embeddings", retrieve.embeddings);
    c_retrieve->add_option("--fused", retrieve.fused);
    c_retrieve->add_option("--first-round", retrieve.first_round, "L: first-round hits");
    c_retrieve->add_option("--per-query", retrieve.per_query, "M: hits per expanded query");
    c_retrieve->add_option("--fanouts", retrieve.fanouts, "Dense beam fanouts")->delimiter(',');
    c_retrieve->add_option("--top-fused", retrieve.top_fused)->check(CLI::PositiveNumber);
    c_retrieve->add_option("--budget", retrieve.budget, "Token budget");
    c_retrieve->add_option("--out", retrieve.out);
    bind(c_retrieve, retrieve, run_retrieve);

    ReadOptions read;
    auto* c_read = app.add_subcommand("read", "Extract answers from retrieved blocks");
    c_read->add_option("--reader", read.reader)->check(CLI::IsMember({"single", "cross"}));
    c_read->add_option("--normalization", read.normalization)->check(CLI::IsMember({"minmax", "none"}));
    c_read->add_option("--questions", read.questions);
    c_read->add_option("--retrievals", read.retrievals);
    c_read->add_option("--capacity", read.capacity, "Cross-block reader token capacity");
    c_read->add_option("--max-span", read.max_span)->check(CLI::PositiveNumber);
    c_read->add_option("--window", read.window);
    c_read->add_option("--out", read.out);
    bind(c_read, read, run_read);

    AttnOptions attn;
    auto* c_attn = app.add_subcommand("attn-check", "Check sparse attention against a dense oracle");
    c_attn->add_option("--n", attn.n)->check(CLI::PositiveNumber);
    c_attn->add_option("--radius", attn.radius);
    c_attn->add_option("--block-size", attn.block_size)->check(CLI::PositiveNumber);
    c_attn->add_option("--mode", attn.mode)->check(CLI::IsMember({"own", "all"}));
    c_attn->add_option("--dim", attn.dim)->check(CLI::PositiveNumber);
    c_attn->add_option("--max-layers", attn.max_layers)->check(CLI::PositiveNumber);
    bind(c_attn, attn, run_attn_check);

    EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Score predictions and retrievals");
    c_eval->add_option("--questions", eval.questions);
    c_eval->add_option("--predictions", eval.predictions);
    c_eval->add_option("--retrievals", eval.retrievals);
    c_eval->add_option("--budget", eval.budget);
    c_eval->add_option("--out", eval.out);
    bind(c_eval, eval, run_eval_cmd);

    if (args.empty()) {
        err << app.help();
        return 1;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run with --help for usage\n";
        return 1;
    }

    try {
        const Context ctx{g, *chosen, out, err};
        action(ctx);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace tabfuse::cli
