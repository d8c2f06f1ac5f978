#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tabfuse/textproc.hpp"

namespace tabfuse {

struct Passage {
    std::string id;
    std::string title;
    std::string text;
    std::vector<std::string> sentences;

    bool operator==(const Passage&) const = default;
};

struct Table {
    std::string id;
    std::string page_title;
    std::string section_title;
    std::string section_text;
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const Table&) const = default;
};

enum class Extremum { None, Max, Min };

struct SegmentMetadata {
    std::string page_title;
    std::string section_title;
    std::string section_text;

    bool operator==(const SegmentMetadata&) const = default;
};

/// One table row together with headers, page metadata, its ordinal position
/// and per-column max/min markers.
struct TableSegment {
    std::string id;
    std::string table_id;
    std::size_t row_index = 0;
    std::vector<std::string> header;
    std::vector<std::string> cells;
    SegmentMetadata metadata;
    std::string ordinal_token;
    std::vector<Extremum> extrema_flags;

    bool operator==(const TableSegment&) const = default;
};

/// A table segment grouped with the passages linked from its cells. Keyed by
/// the segment id.
struct FusedBlock {
    std::string id;
    TableSegment segment;
    std::vector<Passage> passages;

    bool operator==(const FusedBlock&) const = default;
};

/// segment id -> linked passage ids, distinct, in link order.
using GoldLinks = std::map<std::string, std::vector<std::string>>;

/// Flattened textual form of a block. `seq` offsets index into `text`.
struct FlatText {
    std::string text;
    TokenSeq seq;
};

enum class BlockKind { Segment, Passage, Fused };

std::string_view to_string(BlockKind kind) noexcept;
std::optional<BlockKind> parse_block_kind(std::string_view name) noexcept;

/// Polymorphic retrieval unit with its cached flattened form.
class Block {
public:
    explicit Block(TableSegment segment);
    explicit Block(Passage passage);
    explicit Block(FusedBlock fused);

    const std::string& id() const noexcept;
    BlockKind kind() const noexcept;
    const FlatText& flat() const noexcept { return flat_; }
    std::size_t token_count() const noexcept { return flat_.seq.size(); }

    const TableSegment* segment() const noexcept { return std::get_if<TableSegment>(&content_); }
    const Passage* passage() const noexcept { return std::get_if<Passage>(&content_); }
    const FusedBlock* fused() const noexcept { return std::get_if<FusedBlock>(&content_); }

private:
    std::variant<TableSegment, Passage, FusedBlock> content_;
    FlatText flat_;
};

/// Id-addressable collection of blocks. Ids are unique across all kinds.
class BlockPool {
public:
    void add(Block block);
    const Block* find(std::string_view id) const;
    const Block& at(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    std::size_t size() const noexcept { return blocks_.size(); }
    auto begin() const { return blocks_.begin(); }
    auto end() const { return blocks_.end(); }

private:
    std::vector<Block> blocks_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

struct Corpus {
    std::vector<Table> tables;
    std::vector<TableSegment> segments;
    std::vector<Passage> passages;
    GoldLinks links;

    const Passage* find_passage(std::string_view id) const;
    const TableSegment* find_segment(std::string_view id) const;
};

struct CorpusPaths {
    std::filesystem::path tables;
    std::filesystem::path passages;
    std::optional<std::filesystem::path> links;
};

/// "1st", "2nd", "3rd", ..., "20th"; past twenty always "<n>th".
std::string ordinal(std::size_t position);

/// Parses a cell as a decimal number after removing whitespace, thousands
/// commas, "%" and currency symbols.
std::optional<double> parse_numeric_cell(std::string_view cell);

/// Splits on '.', '!' or '?' when followed by whitespace and an uppercase
/// letter.
std::vector<std::string> split_sentences(std::string_view text);

std::string segment_id(std::string_view table_id, std::size_t row_index);

std::vector<TableSegment> segment_table(const Table& table);

FlatText render_segment(const TableSegment& segment);
FlatText render_passage(const Passage& passage);
FlatText render_fused(const FusedBlock& fused);

TokenSeq flatten_segment(const TableSegment& segment);
TokenSeq flatten_passage(const Passage& passage);
TokenSeq flatten_fused(const FusedBlock& fused);

Corpus load_corpus(const CorpusPaths& paths);
Corpus load_corpus(std::istream& tables, std::istream& passages, std::istream* links);

/// Segments and passages of a corpus as one pool.
BlockPool make_block_pool(const Corpus& corpus);

void write_tables_jsonl(std::ostream& out, const std::vector<Table>& tables);
void write_passages_jsonl(std::ostream& out, const std::vector<Passage>& passages);
void write_links_jsonl(std::ostream& out, const GoldLinks& links);

}  // namespace tabfuse
