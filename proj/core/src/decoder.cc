#include "dragon/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dragon/random.h"
#include "dragon/topp.h"

namespace dragon {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kNoPreviousToken = ~0ULL;
// Keeps every fallback weight strictly positive.
constexpr double kFallbackFloor = 0.05;

}  // namespace

DocumentModel::DocumentModel(Document doc, Vocab vocab) : doc_(std::move(doc)), vocab_(vocab) {
  if (doc_.tokens.empty()) throw std::invalid_argument("document has no tokens");
  for (TokenId t : doc_.tokens) {
    if (!vocab_.Contains(t)) {
      throw std::out_of_range("document " + std::to_string(doc_.id) + " has token " + std::to_string(t) +
                              " outside the vocabulary");
    }
  }
  support_ = doc_.tokens;
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  for (std::size_t i = 0; i + 1 < doc_.tokens.size(); ++i) ++bigrams_[doc_.tokens[i]][doc_.tokens[i + 1]];
}

LogDist DocumentModel::NextToken(std::span<const TokenId> context, std::uint64_t seed) const {
  std::vector<double> logw(vocab_.size(), kNegInf);
  const std::uint64_t prev = context.empty() ? kNoPreviousToken : context.back();
  const auto row = context.empty() ? bigrams_.end() : bigrams_.find(context.back());
  if (row != bigrams_.end()) {
    for (TokenId x : support_) {
      const auto hit = row->second.find(x);
      const double count = hit == row->second.end() ? 0.0 : static_cast<double>(hit->second);
      logw[x] = std::log(count + 1.0);
    }
  } else {
    const std::uint64_t stream = HashCombine(HashCombine(streams::kFallbackModel, doc_.id), prev);
    for (TokenId x : support_) logw[x] = std::log(kFallbackFloor + UniformAt(seed, stream, x));
  }
  return LogDist::Normalize(std::move(logw));
}

DecoderState MakeDecoderState(Vocab vocab, std::vector<TokenId> prompt, std::span<const ScoredDocument> retrieved,
                              std::uint64_t seed, std::size_t max_context, std::size_t window) {
  if (retrieved.empty()) throw std::invalid_argument("decoder needs at least one retrieved document");
  if (prompt.size() > max_context) throw ContextExhausted("prompt longer than the maximum context");
  for (TokenId t : prompt) {
    if (!vocab.Contains(t)) throw std::out_of_range("prompt token " + std::to_string(t) + " outside the vocabulary");
  }
  DecoderState state;
  state.vocab = vocab;
  state.prompt_len = prompt.size();
  state.context = std::move(prompt);
  state.seed = seed;
  state.max_context = max_context;
  state.window = window;
  for (const auto& r : retrieved) {
    state.docs.push_back({std::make_shared<const DocumentModel>(*r.doc, vocab), r.score});
  }
  return state;
}

CorrectedWeight Rerank(DecoderState& state) {
  const std::size_t len = std::min(state.context.size(), state.window);
  const std::span<const TokenId> window(state.context.data() + state.context.size() - len, len);
  std::vector<double> scores;
  scores.reserve(state.docs.size());
  for (auto& d : state.docs) {
    d.score = ToyRelevance(window, d.model->doc().tokens);
    scores.push_back(d.score);
  }
  return {LogSumExp(scores)};
}

LogDist LocalMixture(const DecoderState& state) {
  if (state.docs.empty()) throw std::invalid_argument("decoder state has no documents");
  std::vector<double> scores;
  for (const auto& d : state.docs) scores.push_back(d.score);
  const double norm = LogSumExp(scores);

  std::vector<double> mix(state.vocab.size(), kNegInf);
  for (const auto& d : state.docs) {
    const double log_omega = d.score - norm;
    const LogDist p = d.model->NextToken(state.context, state.seed);
    const auto lp = p.log_probs();
    for (std::size_t x = 0; x < mix.size(); ++x) {
      const double term = log_omega + lp[x];
      if (term == kNegInf) continue;
      if (mix[x] == kNegInf) {
        mix[x] = term;
      } else {
        const double hi = std::max(mix[x], term);
        mix[x] = hi + std::log1p(std::exp(std::min(mix[x], term) - hi));
      }
    }
  }
  return LogDist::Normalize(std::move(mix));
}

DraftRecord DecodeStep(DecoderState& state, double rng_draw, Side side) {
  if (state.step() >= state.max_context) {
    throw ContextExhausted("context exhausted at length " + std::to_string(state.step()));
  }
  DraftRecord out;
  out.h = Rerank(state);
  out.dist = LocalMixture(state);
  if (state.wire_top_p) {
    out.wire = TopPEncode(out.dist, *state.wire_top_p);
    out.dist = TopPDecode(*out.wire);
  }
  out.token = SampleInverseCdf(out.dist, rng_draw);
  out.step = state.generation_step();
  out.side = side;
  state.context.push_back(out.token);
  return out;
}

void Rollback(DecoderState& state, std::span<const TokenId> accepted_prefix, TokenId next_input) {
  if (accepted_prefix.size() > state.context.size()) {
    throw std::invalid_argument("rollback prefix longer than the context");
  }
  if (accepted_prefix.size() < state.prompt_len) throw std::invalid_argument("rollback prefix cuts into the prompt");
  if (!std::equal(accepted_prefix.begin(), accepted_prefix.end(), state.context.begin())) {
    throw std::invalid_argument("rollback prefix is not a prefix of the context");
  }
  if (!state.vocab.Contains(next_input)) throw std::out_of_range("rollback input outside the vocabulary");
  state.context.resize(accepted_prefix.size());
  state.context.push_back(next_input);
}

}  // namespace dragon
