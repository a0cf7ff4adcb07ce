#include "kgtext/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace kgtext {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::size_t parse_size(std::string_view s, const std::string& context) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(context + ": bad number '" + std::string(s) + "'");
  }
  return value;
}

std::vector<std::string> lowered(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(lower_ascii(t));
  return out;
}

}  // namespace

TokenizedText split_whitespace(std::string_view text) {
  TokenizedText out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    out.tokens.emplace_back(text.substr(start, i - start));
    out.char_offsets.push_back(start);
  }
  return out;
}

TokenizedText tokenize(std::string_view text) {
  TokenizedText chunks = split_whitespace(text);
  TokenizedText out;
  for (std::size_t c = 0; c < chunks.tokens.size(); ++c) {
    const std::string& chunk = chunks.tokens[c];
    const std::size_t base = chunks.char_offsets[c];
    std::size_t lo = 0, hi = chunk.size();
    while (lo < hi && is_ascii_punct(chunk[lo])) ++lo;
    while (hi > lo && is_ascii_punct(chunk[hi - 1])) --hi;
    for (std::size_t i = 0; i < lo; ++i) {
      out.tokens.push_back(chunk.substr(i, 1));
      out.char_offsets.push_back(base + i);
    }
    if (lo < hi) {
      out.tokens.push_back(chunk.substr(lo, hi - lo));
      out.char_offsets.push_back(base + lo);
    }
    for (std::size_t i = hi; i < chunk.size(); ++i) {
      out.tokens.push_back(chunk.substr(i, 1));
      out.char_offsets.push_back(base + i);
    }
  }
  return out;
}

std::vector<TokenizedText> split_sentences(std::string_view text) {
  std::vector<TokenizedText> out;
  auto emit = [&](std::size_t start, std::size_t end) {  // [start, end)
    if (start >= end) return;
    TokenizedText sent = tokenize(text.substr(start, end - start));
    if (sent.tokens.empty()) return;
    for (std::size_t& off : sent.char_offsets) off += start;
    out.push_back(std::move(sent));
  };

  std::size_t sent_start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j < text.size() && !is_space(text[j])) continue;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j < text.size() && !is_ascii_upper(text[j])) continue;
    emit(sent_start, i + 1);
    sent_start = j;
  }
  emit(sent_start, text.size());
  return out;
}

std::optional<HeadWord> select_head_word(const TokenizedText& lexicalization,
                                         const TokenizedText& description) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& t : description.tokens) ++counts[lower_ascii(t)];

  std::optional<HeadWord> best;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < lexicalization.tokens.size(); ++i) {
    const std::string& tok = lexicalization.tokens[i];
    if (punct_only(tok)) continue;
    auto it = counts.find(lower_ascii(tok));
    std::size_t count = it == counts.end() ? 0 : it->second;
    if (count > best_count) {  // strict: ties keep the earliest position
      best_count = count;
      best = HeadWord{tok, i};
    }
  }
  return best;
}

std::optional<MentionMatch> find_mention(const TokenizedText& sentence,
                                         const TokenizedText& lexicalization,
                                         std::size_t max_gap) {
  const std::size_t n = sentence.tokens.size();
  const std::size_t m = lexicalization.tokens.size();
  if (m == 0 || n < m) return std::nullopt;

  const std::vector<std::string> sent = lowered(sentence.tokens);
  const std::vector<std::string> lex = lowered(lexicalization.tokens);

  for (std::size_t start = 0; start + m <= n; ++start) {
    if (sent[start] != lex[0]) continue;
    // Greedy in-order match; at a fixed start this minimizes the total gap,
    // so a contiguous match is found whenever one exists here.
    MentionMatch match;
    match.span_start = start;
    match.matched_positions.push_back(start);
    std::size_t k = 1;
    std::size_t gap = 0;
    for (std::size_t j = start + 1; j < n && k < m; ++j) {
      if (sent[j] == lex[k]) {
        match.matched_positions.push_back(j);
        ++k;
      } else if (++gap > max_gap) {
        break;
      }
    }
    if (k == m) {
      match.span_end = match.matched_positions.back();
      return match;
    }
  }
  return std::nullopt;
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::no_description: return "no_description";
    case DropReason::mention_not_found: return "mention_not_found";
    case DropReason::gap_exceeded: return "gap_exceeded";
    case DropReason::oov_entity: return "oov_entity";
    case DropReason::oov_relation: return "oov_relation";
  }
  return "unknown";
}

std::variant<ContextualMention, DropRecord> select_context(
    EntityId entity, const EntityCatalog& catalog, const Vocabulary& entities,
    std::size_t max_gap) {
  const std::string& symbol = entities.symbol(entity);
  const std::string& description = catalog.description(entity);

  TokenizedText desc_tokens = tokenize(description);
  if (desc_tokens.tokens.empty()) {
    return DropRecord{symbol, DropReason::no_description};
  }
  TokenizedText lex_tokens = tokenize(catalog.lexicalization(entity));
  std::optional<HeadWord> head = select_head_word(lex_tokens, desc_tokens);
  if (!head) {
    return DropRecord{symbol, DropReason::mention_not_found};
  }

  std::vector<TokenizedText> sentences = split_sentences(description);
  for (TokenizedText& sentence : sentences) {
    auto match = find_mention(sentence, lex_tokens, max_gap);
    if (!match) continue;
    ContextualMention mention;
    mention.entity = entity;
    mention.head_index = match->matched_positions[head->lex_index];
    mention.span_start = match->span_start;
    mention.span_end = match->span_end;
    mention.source = MentionSource::description;
    mention.sentence =
        std::make_shared<const TokenizedText>(std::move(sentence));
    return mention;
  }

  // No sentence fits the budget; report whether a larger budget would match.
  for (const TokenizedText& sentence : sentences) {
    if (find_mention(sentence, lex_tokens, sentence.tokens.size())) {
      return DropRecord{symbol, DropReason::gap_exceeded};
    }
  }
  return DropRecord{symbol, DropReason::mention_not_found};
}

ContextSelection select_contexts(const EntityCatalog& catalog,
                                 const Vocabulary& entities,
                                 std::size_t max_gap) {
  ContextSelection out;
  for (EntityId e = 0; e < catalog.size(); ++e) {
    if (!catalog.present(e)) continue;
    ++out.inputs;
    auto result = select_context(e, catalog, entities, max_gap);
    if (std::holds_alternative<ContextualMention>(result)) {
      auto& mention = std::get<ContextualMention>(result);
      mention.mention_id = static_cast<std::int64_t>(out.mentions.size());
      out.mentions.push_back(std::move(mention));
    } else {
      out.drops.push_back(std::move(std::get<DropRecord>(result)));
    }
  }
  return out;
}

std::vector<DistantRecord> parse_distant_records(
    const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<DistantRecord> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const std::string context = path.string() + ": record " +
                                std::to_string(index);
    auto cols = split_tabs(line);
    if (cols.size() != 6 && cols.size() != 7) {
      throw std::runtime_error(context + ": expected 6 or 7 columns, got " +
                               std::to_string(cols.size()));
    }
    DistantRecord rec;
    rec.subject = std::string(cols[0]);
    rec.object = std::string(cols[1]);
    rec.relation = std::string(cols[2]);
    auto parse_span = [&](std::string_view field, std::size_t& start,
                          std::size_t& end) {
      std::size_t colon = field.find(':');
      if (colon == std::string_view::npos) {
        throw std::runtime_error(context + ": bad span '" +
                                 std::string(field) + "'");
      }
      start = parse_size(field.substr(0, colon), context);
      end = parse_size(field.substr(colon + 1), context);
      if (start > end) {
        throw std::runtime_error(context + ": span start after end");
      }
    };
    parse_span(cols[3], rec.subj_start, rec.subj_end);
    parse_span(cols[4], rec.obj_start, rec.obj_end);
    rec.sentence = std::string(cols[5]);
    if (cols.size() == 7) rec.split = std::string(cols[6]);

    const std::size_t n_tokens = split_whitespace(rec.sentence).tokens.size();
    if (rec.subj_end >= n_tokens || rec.obj_end >= n_tokens) {
      throw std::runtime_error(context + ": span exceeds sentence length");
    }
    if (rec.subj_start <= rec.obj_end && rec.obj_start <= rec.subj_end) {
      throw std::runtime_error(context + ": overlapping mention spans");
    }
    rec.index = index;
    out.push_back(std::move(rec));
    ++index;
  }
  return out;
}

DistantFilterResult filter_distant_records(
    std::span<const DistantRecord> records, const TripleStore& store) {
  DistantFilterResult out;
  std::unordered_set<std::string> sentences_before, sentences_after;
  std::unordered_set<std::string> entities_before, entities_after;
  std::unordered_set<std::string> relations_before, relations_after;

  for (const DistantRecord& rec : records) {
    sentences_before.insert(rec.sentence);
    entities_before.insert(rec.subject);
    entities_before.insert(rec.object);
    relations_before.insert(rec.relation);

    auto subj = store.entities().find(rec.subject);
    auto obj = store.entities().find(rec.object);
    if (!subj || !obj) {
      out.drops.push_back(
          {std::to_string(rec.index), DropReason::oov_entity});
      continue;
    }
    auto rel = store.relations().find(rec.relation);
    if (!rel) {
      out.drops.push_back(
          {std::to_string(rec.index), DropReason::oov_relation});
      continue;
    }

    auto sentence = std::make_shared<const TokenizedText>(
        split_whitespace(rec.sentence));
    const std::int64_t sample_index =
        static_cast<std::int64_t>(out.samples.size());
    RelationSample sample;
    sample.relation = *rel;
    sample.split = rec.split;
    // No head-word procedure exists for distant records; the span start is
    // the mention anchor.
    sample.subject_mention = {*subj,          sentence,
                              rec.subj_start, rec.subj_start,
                              rec.subj_end,   MentionSource::distant,
                              2 * sample_index};
    sample.object_mention = {*obj,          sentence,
                             rec.obj_start, rec.obj_start,
                             rec.obj_end,   MentionSource::distant,
                             2 * sample_index + 1};
    sentences_after.insert(rec.sentence);
    entities_after.insert(rec.subject);
    entities_after.insert(rec.object);
    relations_after.insert(rec.relation);
    out.samples.push_back(std::move(sample));
  }

  out.stats = {sentences_before.size(), sentences_after.size(),
               entities_before.size(),  entities_after.size(),
               relations_before.size(), relations_after.size(),
               records.size(),          out.samples.size()};
  return out;
}

nlohmann::json distant_filter_stats_json(const DistantFilterStats& stats) {
  return nlohmann::json{
      {"sentences", {{"before", stats.sentences_before},
                     {"after", stats.sentences_after}}},
      {"entities", {{"before", stats.entities_before},
                    {"after", stats.entities_after}}},
      {"relations", {{"before", stats.relations_before},
                     {"after", stats.relations_after}}},
      {"samples", {{"before", stats.samples_before},
                   {"after", stats.samples_after}}}};
}

namespace {

std::string join_tokens(const TokenizedText& text) {
  std::string out;
  for (std::size_t i = 0; i < text.tokens.size(); ++i) {
    if (i) out += ' ';
    out += text.tokens[i];
  }
  return out;
}

void write_mention_columns(std::ofstream& out, const ContextualMention& m,
                           const Vocabulary& entities) {
  out << entities.symbol(m.entity) << '\t' << m.head_index << '\t'
      << m.span_start << '\t' << m.span_end;
}

// Parses the four mention columns; the shared sentence is attached by the
// caller. Throws on structurally invalid rows.
ContextualMention read_mention_columns(std::span<const std::string_view> cols,
                                       EntityId entity,
                                       std::shared_ptr<const TokenizedText> sent,
                                       const std::string& context) {
  ContextualMention m;
  m.entity = entity;
  m.head_index = parse_size(cols[0], context);
  m.span_start = parse_size(cols[1], context);
  m.span_end = parse_size(cols[2], context);
  m.sentence = std::move(sent);
  if (m.span_start > m.span_end ||
      m.span_end >= m.sentence->tokens.size() ||
      m.head_index < m.span_start || m.head_index > m.span_end) {
    throw std::runtime_error(context + ": inconsistent mention span");
  }
  return m;
}

}  // namespace

void write_mentions_tsv(const std::filesystem::path& path,
                        std::span<const ContextualMention> mentions,
                        const Vocabulary& entities) {
  std::ofstream out = open_output(path);
  for (const ContextualMention& m : mentions) {
    write_mention_columns(out, m, entities);
    out << '\t' << join_tokens(*m.sentence) << '\n';
  }
}

std::vector<ContextualMention> read_mentions_tsv(
    const std::filesystem::path& path, const Vocabulary& entities,
    std::vector<Rejection>* rejections) {
  std::ifstream in = open_input(path);
  std::vector<ContextualMention> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string context =
        path.string() + ":" + std::to_string(line_number);
    auto cols = split_tabs(line);
    if (cols.size() != 5) {
      throw std::runtime_error(context + ": expected 5 columns, got " +
                               std::to_string(cols.size()));
    }
    auto entity = entities.find(cols[0]);
    if (!entity) {
      if (rejections) {
        rejections->push_back(
            {line_number, "oov_entity: " + std::string(cols[0]), line});
      }
      continue;
    }
    auto sentence =
        std::make_shared<const TokenizedText>(split_whitespace(cols[4]));
    ContextualMention m = read_mention_columns(
        std::span(cols).subspan(1, 3), *entity, std::move(sentence), context);
    m.source = MentionSource::description;
    m.mention_id = static_cast<std::int64_t>(out.size());
    out.push_back(std::move(m));
  }
  return out;
}

void write_relation_samples_tsv(const std::filesystem::path& path,
                                std::span<const RelationSample> samples,
                                const TripleStore& store) {
  std::ofstream out = open_output(path);
  for (const RelationSample& s : samples) {
    write_mention_columns(out, s.subject_mention, store.entities());
    out << '\t';
    write_mention_columns(out, s.object_mention, store.entities());
    out << '\t' << store.relations().symbol(s.relation) << '\t'
        << (s.split.empty() ? "-" : s.split) << '\t'
        << join_tokens(*s.subject_mention.sentence) << '\n';
  }
}

std::vector<RelationSample> read_relation_samples_tsv(
    const std::filesystem::path& path, const TripleStore& store,
    std::vector<Rejection>* rejections) {
  std::ifstream in = open_input(path);
  std::vector<RelationSample> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string context =
        path.string() + ":" + std::to_string(line_number);
    auto cols = split_tabs(line);
    if (cols.size() != 11) {
      throw std::runtime_error(context + ": expected 11 columns, got " +
                               std::to_string(cols.size()));
    }
    auto subj = store.entities().find(cols[0]);
    auto obj = store.entities().find(cols[4]);
    auto rel = store.relations().find(cols[8]);
    if (!subj || !obj || !rel) {
      if (rejections) {
        rejections->push_back({line_number, "oov_symbol", line});
      }
      continue;
    }
    auto sentence =
        std::make_shared<const TokenizedText>(split_whitespace(cols[10]));
    RelationSample sample;
    sample.subject_mention = read_mention_columns(
        std::span(cols).subspan(1, 3), *subj, sentence, context);
    sample.object_mention = read_mention_columns(
        std::span(cols).subspan(5, 3), *obj, sentence, context);
    sample.relation = *rel;
    sample.split = cols[9] == "-" ? "" : std::string(cols[9]);
    const std::int64_t i = static_cast<std::int64_t>(out.size());
    sample.subject_mention.source = MentionSource::distant;
    sample.object_mention.source = MentionSource::distant;
    sample.subject_mention.mention_id = 2 * i;
    sample.object_mention.mention_id = 2 * i + 1;
    out.push_back(std::move(sample));
  }
  return out;
}

void write_drops_tsv(const std::filesystem::path& path,
                     std::span<const DropRecord> drops) {
  std::ofstream out = open_output(path);
  for (const DropRecord& d : drops) {
    out << d.id << '\t' << to_string(d.reason) << '\n';
  }
}

}  // namespace kgtext
