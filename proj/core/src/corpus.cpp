#include "tabfuse/corpus.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <unordered_set>

#include "jsonl.hpp"
#include "tabfuse/errors.hpp"

namespace tabfuse {

using detail::json;

namespace {

constexpr double kNumericColumnShare = 0.8;
constexpr std::string_view kFieldSeparator = " ; ";

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    for (const auto& word : split_whitespace(text)) {
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

// Accumulates text fields and marker tokens into one flat text with a
// TokenSeq whose offsets point into that text.
class FlatBuilder {
public:
    void add_text(std::string_view field) {
        const TokenSeq seq = tokenize(field);
        if (seq.empty()) return;
        separate();
        const std::size_t shift = out_.text.size();
        out_.text += field;
        out_.seq.append(seq, shift);
    }

    void add_marker(std::string_view marker) {
        separate();
        const std::size_t begin = out_.text.size();
        out_.text += marker;
        out_.seq.push_back(std::string(marker), {begin, out_.text.size()});
    }

    void add(const FlatText& flat) {
        if (flat.seq.empty()) return;
        separate();
        const std::size_t shift = out_.text.size();
        out_.text += flat.text;
        out_.seq.append(flat.seq, shift);
    }

    FlatText take() { return std::move(out_); }

private:
    void separate() {
        if (!out_.text.empty()) out_.text += kFieldSeparator;
    }

    FlatText out_;
};

bool is_currency(UChar32 c) { return u_charType(c) == U_CURRENCY_SYMBOL; }

void check_unique(std::unordered_set<std::string>& seen, const std::string& id) {
    if (!seen.insert(id).second) throw DuplicateIdError(id);
}

Passage passage_from_json(const json& obj, std::size_t line) {
    Passage p;
    p.id = detail::require_string(obj, "id", line);
    p.title = detail::optional_string(obj, "title", line);
    p.text = detail::optional_string(obj, "text", line);
    if (obj.contains("sentences") && !obj["sentences"].is_null()) {
        p.sentences = detail::require_string_array(obj, "sentences", line);
        std::erase_if(p.sentences, [](const std::string& s) { return collapse_whitespace(s).empty(); });
        if (p.text.empty()) {
            p.text = join(p.sentences, " ");
        } else if (collapse_whitespace(join(p.sentences, " ")) != collapse_whitespace(p.text)) {
            throw ParseError(line, "sentences of passage " + p.id + " do not concatenate to its text");
        }
    } else {
        p.sentences = split_sentences(p.text);
    }
    if (p.sentences.empty()) throw ParseError(line, "passage " + p.id + " has no sentences");
    return p;
}

Table table_from_json(const json& obj, std::size_t line) {
    Table t;
    t.id = detail::require_string(obj, "id", line);
    t.page_title = detail::optional_string(obj, "page_title", line);
    t.section_title = detail::optional_string(obj, "section_title", line);
    t.section_text = detail::optional_string(obj, "section_text", line);
    t.headers = detail::require_string_array(obj, "headers", line);
    t.rows = detail::require_string_matrix(obj, "rows", line);
    return t;
}

}  // namespace

std::string_view to_string(BlockKind kind) noexcept {
    switch (kind) {
        case BlockKind::Segment: return "segment";
        case BlockKind::Passage: return "passage";
        case BlockKind::Fused: return "fused";
    }
    return "unknown";
}

std::optional<BlockKind> parse_block_kind(std::string_view name) noexcept {
    if (name == "segment") return BlockKind::Segment;
    if (name == "passage") return BlockKind::Passage;
    if (name == "fused") return BlockKind::Fused;
    return std::nullopt;
}

Block::Block(TableSegment segment) : content_(std::move(segment)) {
    flat_ = render_segment(std::get<TableSegment>(content_));
}

Block::Block(Passage passage) : content_(std::move(passage)) {
    flat_ = render_passage(std::get<Passage>(content_));
}

Block::Block(FusedBlock fused) : content_(std::move(fused)) {
    flat_ = render_fused(std::get<FusedBlock>(content_));
}

const std::string& Block::id() const noexcept {
    return std::visit([](const auto& c) -> const std::string& { return c.id; }, content_);
}

BlockKind Block::kind() const noexcept {
    switch (content_.index()) {
        case 0: return BlockKind::Segment;
        case 1: return BlockKind::Passage;
        default: return BlockKind::Fused;
    }
}

void BlockPool::add(Block block) {
    auto [it, inserted] = by_id_.emplace(block.id(), blocks_.size());
    if (!inserted) throw DuplicateIdError(block.id());
    blocks_.push_back(std::move(block));
}

const Block* BlockPool::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &blocks_[it->second];
}

const Block& BlockPool::at(std::string_view id) const {
    const Block* b = find(id);
    if (b == nullptr) throw UnknownBlockError(std::string(id));
    return *b;
}

const Passage* Corpus::find_passage(std::string_view id) const {
    auto it = std::find_if(passages.begin(), passages.end(), [&](const Passage& p) { return p.id == id; });
    return it == passages.end() ? nullptr : &*it;
}

const TableSegment* Corpus::find_segment(std::string_view id) const {
    auto it = std::find_if(segments.begin(), segments.end(),
                           [&](const TableSegment& s) { return s.id == id; });
    return it == segments.end() ? nullptr : &*it;
}

std::string ordinal(std::size_t position) {
    std::string suffix = "th";
    if (position <= 20) {
        switch (position % 10) {
            case 1: suffix = position == 11 ? "th" : "st"; break;
            case 2: suffix = position == 12 ? "th" : "nd"; break;
            case 3: suffix = position == 13 ? "th" : "rd"; break;
            default: break;
        }
    }
    return std::to_string(position) + suffix;
}

std::optional<double> parse_numeric_cell(std::string_view cell) {
    std::string cleaned;
    const auto* s = reinterpret_cast<const uint8_t*>(cell.data());
    const auto length = static_cast<int32_t>(cell.size());
    int32_t i = 0;
    while (i < length) {
        const int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(s, i, length, c);
        if (c < 0) return std::nullopt;
        if (c == ',' || c == '%' || u_isUWhiteSpace(c) || is_currency(c)) continue;
        cleaned.append(cell.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
    }
    if (cleaned.empty()) return std::nullopt;

    // decimal: [+-]? (digits [. digits?] | . digits) ([eE][+-]?digits)?
    std::size_t pos = 0;
    bool negative = false;
    if (cleaned[pos] == '+' || cleaned[pos] == '-') {
        negative = cleaned[pos] == '-';
        ++pos;
    }
    const auto digits = [&](std::size_t from) {
        std::size_t p = from;
        while (p < cleaned.size() && cleaned[p] >= '0' && cleaned[p] <= '9') ++p;
        return p - from;
    };
    const std::size_t body = pos;
    std::size_t n = digits(pos);
    pos += n;
    std::size_t frac = 0;
    if (pos < cleaned.size() && cleaned[pos] == '.') {
        frac = digits(pos + 1);
        pos += 1 + frac;
    }
    if (n == 0 && frac == 0) return std::nullopt;
    if (pos < cleaned.size() && (cleaned[pos] == 'e' || cleaned[pos] == 'E')) {
        std::size_t p = pos + 1;
        if (p < cleaned.size() && (cleaned[p] == '+' || cleaned[p] == '-')) ++p;
        const std::size_t e = digits(p);
        if (e == 0) return std::nullopt;
        pos = p + e;
    }
    if (pos != cleaned.size()) return std::nullopt;

    double value = 0.0;
    const char* first = cleaned.data() + body;
    const char* last = cleaned.data() + cleaned.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return negative ? -value : value;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    std::size_t sentence_start = 0;

    auto flush = [&](std::size_t end) {
        std::string sentence = collapse_whitespace(text.substr(sentence_start, end - sentence_start));
        if (!sentence.empty()) sentences.push_back(std::move(sentence));
    };

    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(s, i, length, c);
        if (c != '.' && c != '!' && c != '?') continue;
        const auto boundary = static_cast<std::size_t>(i);
        int32_t j = i;
        bool saw_space = false;
        UChar32 next = 0;
        while (j < length) {
            U8_NEXT(s, j, length, next);
            if (next >= 0 && u_isUWhiteSpace(next)) {
                saw_space = true;
                continue;
            }
            break;
        }
        if (saw_space && next >= 0 && u_isupper(next)) {
            flush(boundary);
            sentence_start = boundary;
        }
    }
    flush(text.size());
    return sentences;
}

std::string segment_id(std::string_view table_id, std::size_t row_index) {
    return std::string(table_id) + "#" + std::to_string(row_index);
}

std::vector<TableSegment> segment_table(const Table& table) {
    const std::size_t columns = table.headers.size();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != columns) {
            throw MalformedTableError("table " + table.id + " row " + std::to_string(r) + " has " +
                                      std::to_string(table.rows[r].size()) + " cells, expected " +
                                      std::to_string(columns));
        }
    }

    std::vector<std::vector<Extremum>> flags(table.rows.size(), std::vector<Extremum>(columns, Extremum::None));
    for (std::size_t c = 0; c < columns; ++c) {
        std::size_t non_empty = 0;
        std::vector<std::optional<double>> values(table.rows.size());
        std::size_t parsed = 0;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const std::string& cell = table.rows[r][c];
            if (collapse_whitespace(cell).empty()) continue;
            ++non_empty;
            values[r] = parse_numeric_cell(cell);
            if (values[r]) ++parsed;
        }
        if (non_empty == 0 || static_cast<double>(parsed) < kNumericColumnShare * static_cast<double>(non_empty)) {
            continue;
        }
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& v : values) {
            if (!v) continue;
            hi = std::max(hi, *v);
            lo = std::min(lo, *v);
        }
        if (!(hi > lo)) continue;  // constant column carries no extremum
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            if (!values[r]) continue;
            if (*values[r] == hi) flags[r][c] = Extremum::Max;
            else if (*values[r] == lo) flags[r][c] = Extremum::Min;
        }
    }

    std::vector<TableSegment> segments;
    segments.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        TableSegment s;
        s.id = segment_id(table.id, r);
        s.table_id = table.id;
        s.row_index = r;
        s.header = table.headers;
        s.cells = table.rows[r];
        s.metadata = {table.page_title, table.section_title, table.section_text};
        s.ordinal_token = ordinal(r + 1);
        s.extrema_flags = std::move(flags[r]);
        segments.push_back(std::move(s));
    }
    return segments;
}

FlatText render_segment(const TableSegment& segment) {
    FlatBuilder b;
    b.add_text(segment.metadata.page_title);
    b.add_text(segment.metadata.section_title);
    b.add_text(segment.metadata.section_text);
    b.add_text(segment.ordinal_token);
    for (std::size_t c = 0; c < segment.header.size(); ++c) {
        b.add_text(segment.header[c]);
        if (c < segment.cells.size()) b.add_text(segment.cells[c]);
        const Extremum flag = c < segment.extrema_flags.size() ? segment.extrema_flags[c] : Extremum::None;
        if (flag == Extremum::Max) b.add_marker(markers::kMax);
        if (flag == Extremum::Min) b.add_marker(markers::kMin);
    }
    return b.take();
}

FlatText render_passage(const Passage& passage) {
    FlatBuilder b;
    b.add_text(passage.title);
    b.add_text(passage.text);
    return b.take();
}

FlatText render_fused(const FusedBlock& fused) {
    FlatBuilder b;
    b.add(render_segment(fused.segment));
    for (const auto& p : fused.passages) {
        b.add_marker(markers::kSep);
        b.add_text(p.title);
        b.add_text(p.text);
    }
    return b.take();
}

TokenSeq flatten_segment(const TableSegment& segment) { return render_segment(segment).seq; }
TokenSeq flatten_passage(const Passage& passage) { return render_passage(passage).seq; }
TokenSeq flatten_fused(const FusedBlock& fused) { return render_fused(fused).seq; }

Corpus load_corpus(std::istream& tables, std::istream& passages, std::istream* links) {
    Corpus corpus;
    std::unordered_set<std::string> block_ids;

    detail::for_each_json_line(passages, [&](const json& obj, std::size_t line) {
        Passage p = passage_from_json(obj, line);
        check_unique(block_ids, p.id);
        corpus.passages.push_back(std::move(p));
    });

    std::unordered_set<std::string> table_ids;
    detail::for_each_json_line(tables, [&](const json& obj, std::size_t line) {
        Table t = table_from_json(obj, line);
        check_unique(table_ids, t.id);
        std::vector<TableSegment> segments;
        try {
            segments = segment_table(t);
        } catch (const MalformedTableError& e) {
            throw ParseError(line, e.what());
        }
        for (auto& s : segments) {
            check_unique(block_ids, s.id);
            corpus.segments.push_back(std::move(s));
        }
        corpus.tables.push_back(std::move(t));
    });

    if (links != nullptr) {
        std::unordered_set<std::string> segment_ids;
        for (const auto& s : corpus.segments) segment_ids.insert(s.id);
        std::unordered_set<std::string> passage_ids;
        for (const auto& p : corpus.passages) passage_ids.insert(p.id);

        detail::for_each_json_line(*links, [&](const json& obj, std::size_t line) {
            std::string sid = detail::require_string(obj, "segment_id", line);
            auto pids = detail::require_string_array(obj, "passage_ids", line);
            if (!segment_ids.contains(sid)) throw UnknownSegmentError(sid);
            if (corpus.links.contains(sid)) throw DuplicateIdError(sid);
            std::vector<std::string> distinct;
            for (auto& pid : pids) {
                if (!passage_ids.contains(pid)) throw DanglingLinkError(sid, pid);
                if (std::find(distinct.begin(), distinct.end(), pid) == distinct.end()) {
                    distinct.push_back(std::move(pid));
                }
            }
            corpus.links.emplace(std::move(sid), std::move(distinct));
        });
    }
    return corpus;
}

Corpus load_corpus(const CorpusPaths& paths) {
    auto open = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw IoError("cannot open " + p.string());
        return in;
    };
    std::ifstream tables = open(paths.tables);
    std::ifstream passages = open(paths.passages);
    if (paths.links) {
        std::ifstream links = open(*paths.links);
        return load_corpus(tables, passages, &links);
    }
    return load_corpus(tables, passages, nullptr);
}

BlockPool make_block_pool(const Corpus& corpus) {
    BlockPool pool;
    for (const auto& s : corpus.segments) pool.add(Block(s));
    for (const auto& p : corpus.passages) pool.add(Block(p));
    return pool;
}

void write_tables_jsonl(std::ostream& out, const std::vector<Table>& tables) {
    for (const auto& t : tables) {
        json obj = {{"id", t.id},
                    {"page_title", t.page_title},
                    {"section_title", t.section_title},
                    {"section_text", t.section_text},
                    {"headers", t.headers},
                    {"rows", t.rows}};
        out << obj.dump() << '\n';
    }
}

void write_passages_jsonl(std::ostream& out, const std::vector<Passage>& passages) {
    for (const auto& p : passages) {
        json obj = {{"id", p.id}, {"title", p.title}, {"text", p.text}, {"sentences", p.sentences}};
        out << obj.dump() << '\n';
    }
}

void write_links_jsonl(std::ostream& out, const GoldLinks& links) {
    for (const auto& [sid, pids] : links) {
        json obj = {{"segment_id", sid}, {"passage_ids", pids}};
        out << obj.dump() << '\n';
    }
}

}  // namespace tabfuse
