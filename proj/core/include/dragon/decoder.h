#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dragon/dist.h"
#include "dragon/retrieval.h"
#include "dragon/topp.h"

namespace dragon {

/// Document-conditioned toy language model: bigram counts with add-one
/// smoothing over the document's own token set. A context whose last token
/// never starts a bigram in the document falls back to a categorical whose
/// weights are hashed from (seed, document id, last token).
class DocumentModel {
 public:
  DocumentModel(Document doc, Vocab vocab);

  const Document& doc() const { return doc_; }
  LogDist NextToken(std::span<const TokenId> context, std::uint64_t seed) const;

 private:
  Document doc_;
  Vocab vocab_;
  std::vector<TokenId> support_;  // distinct tokens, ascending
  std::map<TokenId, std::map<TokenId, std::uint32_t>> bigrams_;
};

struct RetrievedDoc {
  std::shared_ptr<const DocumentModel> model;
  double score = kRelevanceFloor;
};

/// Per-side decoding state. `context` holds the prompt followed by every
/// generated token; generation step g sits at context position prompt_len + g.
struct DecoderState {
  Vocab vocab{2};
  std::vector<TokenId> context;
  std::size_t prompt_len = 0;
  std::vector<RetrievedDoc> docs;
  std::uint64_t seed = 0;
  std::size_t max_context = 256;
  std::size_t window = kDefaultChunkSize;
  /// When set, drafts are sampled from the top-p codec round trip of the
  /// mixture, i.e. exactly the distribution the other node receives.
  std::optional<double> wire_top_p;

  /// Context length (the absolute position of the next token).
  std::size_t step() const { return context.size(); }
  std::uint32_t generation_step() const { return static_cast<std::uint32_t>(context.size() - prompt_len); }
};

/// Builds a state from retrieval results.
DecoderState MakeDecoderState(Vocab vocab, std::vector<TokenId> prompt, std::span<const ScoredDocument> retrieved,
                              std::uint64_t seed, std::size_t max_context, std::size_t window);

struct DraftRecord {
  TokenId token = 0;
  LogDist dist = LogDist::Uniform(Vocab(2));
  CorrectedWeight h;
  double decode_ms = 0.0;
  std::uint32_t step = 0;  // generation step
  Side side = Side::kDevice;
  // Sparse form that produced `dist`; set when the state has wire_top_p.
  std::optional<CompressedDist> wire;

  friend bool operator==(const DraftRecord&, const DraftRecord&) = default;
};

class ContextExhausted : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Re-scores the documents against the trailing window of the context and
/// returns logsumexp of the new scores.
CorrectedWeight Rerank(DecoderState& state);

/// Locally-aggregated next-token distribution: sum_d softmax(scores)_d * p(.|d, ctx).
LogDist LocalMixture(const DecoderState& state);

/// Reranks, mixes, samples with `rng_draw` by inverse CDF and appends the
/// token. decode_ms is left at 0 for the caller to fill in.
/// Throws ContextExhausted once step() reaches max_context.
DraftRecord DecodeStep(DecoderState& state, double rng_draw, Side side = Side::kDevice);

/// Truncates the context to `accepted_prefix` (which must be a prefix of the
/// current context, prompt included) and appends `next_input`. Scores are kept.
void Rollback(DecoderState& state, std::span<const TokenId> accepted_prefix, TokenId next_input);

}  // namespace dragon
