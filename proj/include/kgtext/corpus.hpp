// Text pipeline: tokenization, sentence splitting, head-word selection,
// in-order mention matching with a gap budget, context selection over entity
// descriptions, and vocabulary filtering of distant-supervision records.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgtext/kg_store.hpp"
#include "kgtext/util.hpp"

namespace kgtext {

struct TokenizedText {
  std::vector<std::string> tokens;
  std::vector<std::size_t> char_offsets;  // byte offset of each token start
};

// Whitespace split only; offsets into the input. Used for pre-tokenized text.
TokenizedText split_whitespace(std::string_view text);

// Whitespace split plus detaching leading/trailing ASCII punctuation as
// one-character tokens. Case is preserved.
TokenizedText tokenize(std::string_view text);

// Sentence rule: '.', '!' or '?' followed by whitespace and an ASCII uppercase
// letter (or only whitespace to end of text) closes a sentence; the terminator
// stays with its sentence. Abbreviations ("Mr. Smith") therefore over-split;
// that is accepted, not corrected. Offsets point into the original text.
std::vector<TokenizedText> split_sentences(std::string_view text);

struct HeadWord {
  std::string token;      // as written in the lexicalization
  std::size_t lex_index;  // position within the lexicalization tokens
};

// Most frequent lexicalization token in the description (case-insensitive);
// ties go to the earliest lexicalization position; punctuation-only tokens are
// ineligible. nullopt when every eligible count is zero.
std::optional<HeadWord> select_head_word(const TokenizedText& lexicalization,
                                         const TokenizedText& description);

struct MentionMatch {
  std::size_t span_start{};
  std::size_t span_end{};  // inclusive
  std::vector<std::size_t> matched_positions;  // one per lexicalization token
};

// Earliest span where all lexicalization tokens appear in order
// (case-insensitive) with at most max_gap interrupting tokens in total. At a
// fixed start the greedy match minimizes the gap, so an exact contiguous match
// wins over a gapped one starting at the same position.
std::optional<MentionMatch> find_mention(const TokenizedText& sentence,
                                         const TokenizedText& lexicalization,
                                         std::size_t max_gap = 1);

enum class MentionSource { description, distant };

enum class DropReason {
  no_description,
  mention_not_found,
  gap_exceeded,
  oov_entity,
  oov_relation,
};
std::string_view to_string(DropReason reason);

struct ContextualMention {
  EntityId entity{};
  std::shared_ptr<const TokenizedText> sentence;
  std::size_t head_index{};  // token index in sentence, inside the span
  std::size_t span_start{};
  std::size_t span_end{};  // inclusive
  MentionSource source = MentionSource::description;
  std::int64_t mention_id{};  // row index in the emitting pipeline
};

struct DropRecord {
  std::string id;  // entity symbol or record index
  DropReason reason{};
};

// Steps 1-6 composed for one entity: tokenize the lexicalization, pick the
// head word over the whole description, split into sentences, keep the first
// sentence with an in-budget mention, locate the head inside the span.
std::variant<ContextualMention, DropRecord> select_context(
    EntityId entity, const EntityCatalog& catalog, const Vocabulary& entities,
    std::size_t max_gap = 1);

struct ContextSelection {
  std::vector<ContextualMention> mentions;
  std::vector<DropRecord> drops;
  std::size_t inputs = 0;  // mentions.size() + drops.size()
};

// Runs select_context over every entity present in the catalog.
ContextSelection select_contexts(const EntityCatalog& catalog,
                                 const Vocabulary& entities,
                                 std::size_t max_gap = 1);

// One raw distant-supervision record. The sentence column holds
// space-separated tokens; spans are inclusive token index ranges "start:end".
struct DistantRecord {
  std::string subject, object, relation;
  std::size_t subj_start{}, subj_end{};
  std::size_t obj_start{}, obj_end{};
  std::string sentence;
  std::string split;  // optional original split name, "" when absent
  std::size_t index{};
};

// TSV: subject, object, relation, subj-span, obj-span, sentence [, split].
// Malformed records (wrong arity, bad span syntax, out-of-bounds or
// overlapping spans) throw with the record index.
std::vector<DistantRecord> parse_distant_records(
    const std::filesystem::path& path);

struct RelationSample {
  ContextualMention subject_mention;
  ContextualMention object_mention;  // shares the sentence object
  RelationId relation{};
  std::string split;  // "" when the source had no split column
};

struct DistantFilterStats {
  std::size_t sentences_before{}, sentences_after{};
  std::size_t entities_before{}, entities_after{};
  std::size_t relations_before{}, relations_after{};
  std::size_t samples_before{}, samples_after{};
};

struct DistantFilterResult {
  std::vector<RelationSample> samples;
  std::vector<DropRecord> drops;
  DistantFilterStats stats;
};

// Keeps records whose two entities and relation all exist in the store
// vocabularies; everything else becomes a DropRecord (oov_entity checked
// before oov_relation). |samples| + |drops| == |records|.
DistantFilterResult filter_distant_records(
    std::span<const DistantRecord> records, const TripleStore& store);

nlohmann::json distant_filter_stats_json(const DistantFilterStats& stats);

// Mention file: entity, head_index, span_start, span_end, space-joined
// tokens. Relation sample files repeat the mention columns for the object and
// append the relation symbol and split name ("-" when absent) before the
// shared token column. mention_id is the row index on read.
void write_mentions_tsv(const std::filesystem::path& path,
                        std::span<const ContextualMention> mentions,
                        const Vocabulary& entities);
std::vector<ContextualMention> read_mentions_tsv(
    const std::filesystem::path& path, const Vocabulary& entities,
    std::vector<Rejection>* rejections = nullptr);

void write_relation_samples_tsv(const std::filesystem::path& path,
                                std::span<const RelationSample> samples,
                                const TripleStore& store);
std::vector<RelationSample> read_relation_samples_tsv(
    const std::filesystem::path& path, const TripleStore& store,
    std::vector<Rejection>* rejections = nullptr);

void write_drops_tsv(const std::filesystem::path& path,
                     std::span<const DropRecord> drops);

}  // namespace kgtext
