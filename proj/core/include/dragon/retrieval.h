#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "dragon/types.h"

namespace dragon {

inline constexpr std::size_t kDefaultChunkSize = 64;
/// Score given to a document that shares no token with the query window.
inline constexpr double kRelevanceFloor = -20.0;

struct Document {
  std::uint32_t id = 0;
  std::vector<TokenId> tokens;
};

class Corpus {
 public:
  Corpus(std::vector<Document> docs, std::size_t chunk_size);

  /// One record per line, whitespace-separated token ids. Each record is cut
  /// into consecutive chunks of at most `chunk_size` tokens; chunks are
  /// numbered in file order.
  static Corpus Load(const std::filesystem::path& path, std::size_t chunk_size = kDefaultChunkSize);
  static Corpus Parse(std::string_view text, std::size_t chunk_size = kDefaultChunkSize);

  std::span<const Document> docs() const { return docs_; }
  std::size_t chunk_size() const { return chunk_size_; }
  bool empty() const { return docs_.empty(); }
  /// Largest token id present plus one.
  std::size_t MinVocabSize() const;

 private:
  std::vector<Document> docs_;
  std::size_t chunk_size_;
};

/// Which slice of the top-2k ranking a side retrieves; kAll returns the top k.
/// Topic-structured random corpus: each topic prefers a fixed successor per
/// token, so documents of one topic share bigrams.
struct SyntheticCorpusSpec {
  std::size_t docs = 32;
  std::size_t doc_len = 48;
  std::size_t vocab = 64;
  std::size_t topics = 4;
  double coherence = 0.7;  // probability of the topic successor
  std::uint64_t seed = 0;
};
Corpus SyntheticCorpus(const SyntheticCorpusSpec& spec);
/// One document per line, ids separated by spaces.
void WriteCorpus(std::ostream& out, const Corpus& corpus);

enum class RetrievalHalf { kFirst, kSecond, kAll };

RetrievalHalf ParseRetrievalHalf(std::string_view name);

struct ScoredDocument {
  const Document* doc;
  double score;
};

/// Number of distinct token ids shared by the window and the document.
std::size_t UnigramOverlap(std::span<const TokenId> window, std::span<const TokenId> doc);

/// log(1 + overlap), or kRelevanceFloor when nothing overlaps.
double ToyRelevance(std::span<const TokenId> window, std::span<const TokenId> doc);

/// Ranks by ToyRelevance against the trailing chunk_size tokens of `query`
/// (descending score, ascending id on ties). Pointers borrow from `corpus`.
std::vector<ScoredDocument> Retrieve(const Corpus& corpus, std::span<const TokenId> query, std::size_t k,
                                     RetrievalHalf half);

}  // namespace dragon
