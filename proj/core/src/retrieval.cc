#include "dragon/retrieval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "dragon/random.h"

namespace dragon {

Corpus::Corpus(std::vector<Document> docs, std::size_t chunk_size) : docs_(std::move(docs)), chunk_size_(chunk_size) {
  if (chunk_size_ == 0) throw std::invalid_argument("chunk size must be positive");
  std::unordered_set<std::uint32_t> ids;
  for (const auto& d : docs_) {
    if (d.tokens.empty()) throw std::invalid_argument("empty document " + std::to_string(d.id));
    if (!ids.insert(d.id).second) throw std::invalid_argument("duplicate document id " + std::to_string(d.id));
  }
}

Corpus SyntheticCorpus(const SyntheticCorpusSpec& spec) {
  if (spec.docs == 0 || spec.doc_len == 0 || spec.topics == 0) throw std::invalid_argument("empty synthetic corpus");
  if (spec.vocab < 2) throw std::invalid_argument("vocabulary needs at least two tokens");
  const std::uint64_t succ_stream = HashCombine(streams::kTrace, 0x636f7270ULL);
  const std::uint64_t walk_stream = HashCombine(succ_stream, 1);
  auto pick = [&](std::uint64_t stream, std::uint64_t i) {
    return static_cast<TokenId>(UniformAt(spec.seed, stream, i) * static_cast<double>(spec.vocab));
  };
  std::vector<Document> docs;
  std::uint64_t draw = 0;
  for (std::size_t d = 0; d < spec.docs; ++d) {
    const std::size_t topic = d % spec.topics;
    Document doc{static_cast<std::uint32_t>(d), {}};
    TokenId cur = pick(walk_stream, draw++);
    doc.tokens.push_back(cur);
    while (doc.tokens.size() < spec.doc_len) {
      if (UniformAt(spec.seed, walk_stream, draw++) < spec.coherence) {
        cur = pick(succ_stream, topic * spec.vocab + cur);
      } else {
        cur = pick(walk_stream, draw++);
      }
      doc.tokens.push_back(cur);
    }
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs), std::max(spec.doc_len, kDefaultChunkSize));
}

void WriteCorpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.docs()) {
    for (std::size_t i = 0; i < d.tokens.size(); ++i) out << (i ? " " : "") << d.tokens[i];
    out << '\n';
  }
}

Corpus Corpus::Parse(std::string_view text, std::size_t chunk_size) {
  if (chunk_size == 0) throw std::invalid_argument("chunk size must be positive");
  std::vector<Document> docs;
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<TokenId> record;
    std::string field;
    while (fields >> field) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size() || v > UINT32_MAX || field.front() == '-') {
        throw std::invalid_argument("corpus line " + std::to_string(line_no) + ": bad token id '" + field + "'");
      }
      record.push_back(static_cast<TokenId>(v));
    }
    for (std::size_t begin = 0; begin < record.size(); begin += chunk_size) {
      const std::size_t end = std::min(record.size(), begin + chunk_size);
      docs.push_back({static_cast<std::uint32_t>(docs.size()), {record.begin() + begin, record.begin() + end}});
    }
  }
  return Corpus(std::move(docs), chunk_size);
}

Corpus Corpus::Load(const std::filesystem::path& path, std::size_t chunk_size) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str(), chunk_size);
}

std::size_t Corpus::MinVocabSize() const {
  TokenId hi = 0;
  for (const auto& d : docs_) hi = std::max(hi, *std::max_element(d.tokens.begin(), d.tokens.end()));
  return static_cast<std::size_t>(hi) + 1;
}

RetrievalHalf ParseRetrievalHalf(std::string_view name) {
  if (name == "first") return RetrievalHalf::kFirst;
  if (name == "second") return RetrievalHalf::kSecond;
  if (name == "all") return RetrievalHalf::kAll;
  throw std::invalid_argument("unknown retrieval half '" + std::string(name) + "'");
}

std::size_t UnigramOverlap(std::span<const TokenId> window, std::span<const TokenId> doc) {
  std::vector<TokenId> a(window.begin(), window.end());
  std::vector<TokenId> b(doc.begin(), doc.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  std::vector<TokenId> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return common.size();
}

double ToyRelevance(std::span<const TokenId> window, std::span<const TokenId> doc) {
  const std::size_t overlap = UnigramOverlap(window, doc);
  return overlap == 0 ? kRelevanceFloor : std::log1p(static_cast<double>(overlap));
}

std::vector<ScoredDocument> Retrieve(const Corpus& corpus, std::span<const TokenId> query, std::size_t k,
                                     RetrievalHalf half) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (corpus.empty()) throw std::invalid_argument("cannot retrieve from an empty corpus");
  const std::size_t window_len = std::min(query.size(), corpus.chunk_size());
  const auto window = query.subspan(query.size() - window_len);

  std::vector<ScoredDocument> ranked;
  ranked.reserve(corpus.docs().size());
  for (const auto& d : corpus.docs()) ranked.push_back({&d, ToyRelevance(window, d.tokens)});
  std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc->id < b.doc->id;
  });

  std::size_t begin = 0;
  std::size_t end = k;
  if (half == RetrievalHalf::kSecond) {
    begin = k;
    end = 2 * k;
  }
  begin = std::min(begin, ranked.size());
  end = std::min(end, ranked.size());
  return {ranked.begin() + begin, ranked.begin() + end};
}

}  // namespace dragon
