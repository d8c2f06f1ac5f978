#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tabfuse/corpus.hpp"
#include "tabfuse/linker.hpp"

namespace tabfuse {

/// One fused block per segment, in segment order; passages follow link order.
/// Throws DanglingLinkError when a link names an unknown passage.
std::vector<FusedBlock> build_fused_pool(const std::vector<TableSegment>& segments,
                                         const std::vector<Passage>& passages, const GoldLinks& links);
std::vector<FusedBlock> build_fused_pool(const std::vector<TableSegment>& segments,
                                         const std::vector<Passage>& passages,
                                         const std::map<std::string, LinkResult>& links);

BlockPool make_fused_block_pool(const std::vector<FusedBlock>& fused);

/// fused.jsonl: {"id","segment_id","passage_ids"} per line.
void write_fused_jsonl(std::ostream& out, const std::vector<FusedBlock>& fused);
std::vector<FusedBlock> load_fused_jsonl(std::istream& in, const Corpus& corpus);

inline constexpr std::string_view kIctRngName = "mt19937_64";

/// Inverse-cloze pseudo query paired with the fused block it was cut from.
struct IctPair {
    std::string pseudo_query;
    std::string target_block_id;
    std::uint64_t seed = 0;
    bool segment_only = false;  // block had no passage; query is the corrupted segment alone

    // Not serialized: positions (into ict_droppable_words) that survived, and
    // the sampled sentence.
    std::vector<std::size_t> kept_positions;
    std::string sentence;

    bool operator==(const IctPair&) const = default;
};

/// Whitespace words of page title, section title, section text and cells,
/// in that order. Header words are never dropped and are not included.
std::vector<std::string> ict_droppable_words(const TableSegment& segment);

/// Drops floor(w/2) droppable words uniformly without replacement, then picks
/// a passage and one of its sentences uniformly. Fully determined by `seed`.
IctPair make_ict_pair(const FusedBlock& block, std::uint64_t seed);

/// `pairs_per_block` pairs per block, blocks in id order, pair j of the block
/// at rank r seeded with base_seed + r * pairs_per_block + j.
std::vector<IctPair> generate_ict_dataset(const std::vector<FusedBlock>& pool, std::size_t pairs_per_block,
                                          std::uint64_t base_seed, std::size_t threads = 1);

void write_ict_jsonl(std::ostream& out, const std::vector<IctPair>& pairs);

}  // namespace tabfuse
