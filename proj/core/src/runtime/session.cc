#include "dragon/runtime/session.h"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "dragon/random.h"

namespace dragon::runtime {

void Validate(const SessionConfig& s) {
  if (s.prompt.empty()) throw std::invalid_argument("prompt must not be empty");
  if (s.vocab_size < 2) throw std::invalid_argument("vocabulary size must be at least 2");
  const TokenId top = *std::max_element(s.prompt.begin(), s.prompt.end());
  if (top >= s.vocab_size) throw std::invalid_argument("prompt token " + std::to_string(top) + " outside vocabulary");
  if (s.docs == 0) throw std::invalid_argument("docs per side must be positive");
  if (s.prompt.size() + s.max_new_tokens > s.max_context) {
    throw std::invalid_argument("prompt plus max_new_tokens exceeds max_context");
  }
  if (!(s.top_p > 0.0 && s.top_p <= 1.0)) throw std::invalid_argument("top_p must lie in (0, 1]");
  if (!(s.gamma > 0.0 && s.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
}

RetrievalHalf DefaultHalf(Side side) { return side == Side::kDevice ? RetrievalHalf::kSecond : RetrievalHalf::kFirst; }

DecoderState BuildDecoderState(const SessionConfig& session, const SideSetup& setup) {
  if (!setup.corpus) throw std::invalid_argument("side has no corpus");
  const Vocab vocab(session.vocab_size);
  if (setup.corpus->MinVocabSize() > vocab.size()) {
    throw std::invalid_argument("corpus uses token ids outside the vocabulary");
  }
  const auto hits = Retrieve(*setup.corpus, session.prompt, session.docs, setup.half);
  if (hits.empty()) throw std::invalid_argument("retrieval left this side without documents");
  DecoderState state =
      MakeDecoderState(vocab, session.prompt, hits, session.seed, session.max_context, session.window);
  state.wire_top_p = session.top_p;
  return state;
}

transport::DraftMsg ToWire(const DraftRecord& d) {
  transport::DraftMsg m;
  m.step = d.step;
  m.token = d.token;
  m.h = d.h.hlog;
  m.dist = d.wire ? *d.wire : TopPEncode(d.dist, 1.0);
  m.decode_ms = static_cast<float>(d.decode_ms);
  return m;
}

DraftRecord FromWire(const transport::DraftMsg& m, Side side) {
  DraftRecord d;
  d.token = m.token;
  d.dist = TopPDecode(m.dist);
  if (!d.dist.vocab().Contains(m.token) || d.dist.Prob(m.token) <= 0.0) {
    throw ProtocolError("draft token " + std::to_string(m.token) + " outside its own distribution");
  }
  d.h = CorrectedWeight{m.h};
  d.decode_ms = m.decode_ms;
  d.step = m.step;
  d.side = side;
  d.wire = m.dist;
  return d;
}

SequentialResult RunSequential(const SessionConfig& session, const SideSetup& device, const SideSetup& cloud) {
  Validate(session);
  DecoderState dev = BuildDecoderState(session, device);
  DecoderState cld = BuildDecoderState(session, cloud);
  SequentialResult out;
  for (std::uint32_t g = 0; g < session.max_new_tokens; ++g) {
    const double u = UniformAt(session.seed, streams::kDraft, g);
    DecoderState dev_try = dev;
    DecoderState cld_try = cld;
    DraftRecord dl = DecodeStep(dev_try, u, Side::kDevice);
    DraftRecord dr = DecodeStep(cld_try, u, Side::kCloud);
    const AggregationOutcome o = Aggregate(dl, dr, DrawsForStep(session.seed, g), session.gamma);
    dev.context.push_back(o.target);
    cld.context.push_back(o.target);
    out.log.push_back(o);
    out.device_drafts.push_back(std::move(dl));
    out.cloud_drafts.push_back(std::move(dr));
  }
  return out;
}

std::vector<TokenId> Tokens(const std::vector<AggregationOutcome>& log) {
  std::vector<TokenId> out;
  out.reserve(log.size());
  for (const auto& o : log) out.push_back(o.target);
  return out;
}

}  // namespace dragon::runtime
