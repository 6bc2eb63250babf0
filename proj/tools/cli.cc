#include "cli.h"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "dragon/profiler.h"
#include "dragon/random.h"
#include "dragon/runtime/loopback.h"
#include "dragon/transport/channel.h"
#include "verify.h"

namespace dragon::tools {

std::vector<TokenId> ParseTokenList(const std::string& text) {
  std::string norm = text;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream in(norm);
  std::vector<TokenId> out;
  std::string field;
  while (in >> field) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || field.front() == '-' || v > UINT32_MAX) {
      throw std::invalid_argument("bad token id '" + field + "'");
    }
    out.push_back(static_cast<TokenId>(v));
  }
  return out;
}

LoadedSession LoadSession(const SessionArgs& args, std::uint64_t seed) {
  if (args.corpus.empty()) throw std::invalid_argument("--corpus is required");
  LoadedSession out;
  out.corpus = std::make_shared<const Corpus>(Corpus::Load(args.corpus, args.chunk));
  if (out.corpus->empty()) throw std::invalid_argument("corpus " + args.corpus + " has no documents");
  auto& s = out.session;
  if (args.prompt.empty()) {
    const auto& first = out.corpus->docs().front().tokens;
    s.prompt.assign(first.begin(), first.begin() + std::min<std::size_t>(8, first.size()));
  } else {
    s.prompt = ParseTokenList(args.prompt);
  }
  if (s.prompt.empty()) throw std::invalid_argument("prompt is empty");
  s.vocab_size = args.vocab;
  if (s.vocab_size == 0) {
    s.vocab_size = std::max<std::size_t>(out.corpus->MinVocabSize(), *std::max_element(s.prompt.begin(), s.prompt.end()) + 1);
    s.vocab_size = std::max<std::size_t>(s.vocab_size, 2);
  }
  s.docs = args.docs;
  s.max_new_tokens = args.max_new_tokens;
  s.max_context = std::max<std::size_t>(s.max_context, s.prompt.size() + s.max_new_tokens);
  s.seed = seed;
  s.top_p = args.top_p;
  runtime::Validate(s);
  return out;
}

void Validate(const NodeArgs& a) {
  (void)ParseSide(a.role);
  if (a.listen.empty() == a.connect.empty()) throw std::invalid_argument("give exactly one of --listen or --connect");
  (void)runtime::ParseAggregatorPolicy(a.static_side);
  (void)transport::ParseCodec(a.codec);
  if (!a.half.empty()) (void)ParseRetrievalHalf(a.half);
  if (a.queue_capacity == 0) throw std::invalid_argument("--queue-capacity must be positive");
  if (a.decode_ms < 0.0 || a.decode_slope_ms < 0.0) throw std::invalid_argument("decode costs must be non-negative");
  if (a.delay_ms < 0.0 || a.jitter_ms < 0.0 || a.jitter_ms > a.delay_ms) {
    throw std::invalid_argument("need 0 <= --jitter-ms <= --delay-ms");
  }
  if (!(a.jitter_period_ms > 0.0)) throw std::invalid_argument("--jitter-period-ms must be positive");
}

void Validate(const SimulateArgs& a) {
  if (a.trace.empty() == !a.bernoulli.has_value()) throw std::invalid_argument("give exactly one of --trace or --bernoulli");
  if (a.bernoulli && !(*a.bernoulli >= 0.0 && *a.bernoulli <= 1.0)) throw std::invalid_argument("--bernoulli must lie in [0, 1]");
  if (!(a.bernoulli_device >= 0.0 && a.bernoulli_device <= 1.0)) throw std::invalid_argument("--bernoulli-device must lie in [0, 1]");
  (void)sim::ParseStrategy(a.strategy);
  (void)ParseSide(a.initial);
  if (a.tokens == 0) throw std::invalid_argument("--tokens must be positive");
  for (double v : {a.c_dec_l, a.c_dec_r, a.c_trans_l, a.c_trans_r}) {
    if (!(v >= 0.0)) throw std::invalid_argument("costs must be non-negative");
  }
  if (a.queue_capacity == 0) throw std::invalid_argument("--queue-capacity must be positive");
}

sim::SimConfig MakeSimConfig(const SimulateArgs& a, std::uint64_t seed) {
  sim::SimConfig cfg;
  cfg.costs = {a.c_dec_l, a.c_dec_r, a.c_trans_l, a.c_trans_r};
  cfg.net.base_latency_ms = a.base_latency;
  cfg.net.extra_latency_ms = a.extra_latency;
  cfg.net.jitter_amplitude_ms = a.jitter_amplitude;
  cfg.net.jitter_period_s = a.jitter_period_s;
  cfg.net.bandwidth = a.bandwidth;
  cfg.net.Validate();
  cfg.strategy = {sim::ParseStrategy(a.strategy), seed};
  cfg.queue_capacity = a.queue_capacity;
  cfg.vanilla = a.vanilla;
  cfg.initial_aggregator = ParseSide(a.initial);
  if (a.bandwidth > 0.0) cfg.sizes = sim::MessageSizes::FromWire(16);
  return cfg;
}

sim::AcceptanceTrace MakeTrace(const SimulateArgs& a, std::uint64_t seed) {
  if (!a.trace.empty()) {
    auto t = sim::AcceptanceTrace::LoadCsv(a.trace);
    if (t.empty()) throw std::invalid_argument("trace " + a.trace + " is empty");
    return t;
  }
  return sim::AcceptanceTrace::Bernoulli(a.tokens, a.bernoulli_device, *a.bernoulli, seed);
}

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string csv;
  std::string log_level = "info";
};

// Opens --csv when given; the callback is skipped otherwise.
void WithCsv(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  fn(f);
}

void AddSessionOptions(CLI::App* cmd, SessionArgs& s) {
  cmd->add_option("--corpus", s.corpus, "Corpus file: one document per line of token ids")->required();
  cmd->add_option("--chunk", s.chunk, "Chunk size M in tokens")->check(CLI::PositiveNumber);
  cmd->add_option("--docs", s.docs, "Documents retrieved per side (K)")->check(CLI::PositiveNumber);
  cmd->add_option("--max-new-tokens", s.max_new_tokens, "Target tokens to generate");
  cmd->add_option("--vocab", s.vocab, "Vocabulary size (0: derive)");
  cmd->add_option("--prompt", s.prompt, "Prompt token ids (default: first 8 tokens of document 0)");
  cmd->add_option("--top-p", s.top_p, "Top-p threshold for transmitted distributions")->check(CLI::Range(1e-9, 1.0));
}

std::shared_ptr<spdlog::logger> MakeLogger(std::ostream& err, const std::string& level) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("dragon", sink);
  logger->set_pattern("[%l] %v");
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") throw std::invalid_argument("unknown log level '" + level + "'");
  logger->set_level(lvl);
  return logger;
}

double MeanLatency(const runtime::NodeResult& r) {
  if (r.metrics.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : r.metrics) s += m.latency_ms;
  return s / static_cast<double>(r.metrics.size());
}

int RunNodeCommand(const Globals& g, const SessionArgs& sa, const NodeArgs& na, std::ostream& out,
                   spdlog::logger& log) {
  Validate(na);
  const auto loaded = LoadSession(sa, g.seed);
  runtime::NodeConfig cfg;
  cfg.role = ParseSide(na.role);
  cfg.session = loaded.session;
  cfg.setup = {loaded.corpus, na.half.empty() ? runtime::DefaultHalf(cfg.role) : ParseRetrievalHalf(na.half)};
  cfg.options.vanilla = na.vanilla;
  cfg.options.policy = runtime::ParseAggregatorPolicy(na.static_side);
  cfg.options.queue_capacity = na.queue_capacity;
  cfg.options.decode_delay_ms = na.decode_ms;
  cfg.options.decode_delay_slope_ms = na.decode_slope_ms;

  const int timeout = static_cast<int>(na.timeout_ms);
  transport::Socket sock;
  if (!na.listen.empty()) {
    transport::Listener listener(transport::Endpoint::Parse(na.listen));
    log.info("{} listening on port {}", na.role, listener.port());
    if (!na.port_file.empty()) {
      const std::string tmp = na.port_file + ".tmp";
      std::ofstream(tmp) << listener.port() << '\n';
      std::filesystem::rename(tmp, na.port_file);
    }
    sock = listener.Accept(timeout);
  } else {
    sock = transport::Connect(transport::Endpoint::Parse(na.connect), timeout);
  }
  transport::Channel channel(std::move(sock),
                             {transport::ParseCodec(na.codec), runtime::MakeDelay(na.delay_ms, na.jitter_ms, na.jitter_period_ms)});
  const auto result = runtime::RunNode(cfg, channel);

  if (na.log_out.empty()) {
    runtime::WriteTargetLog(out, result.log);
  } else {
    std::ofstream f(na.log_out);
    if (!f) throw std::runtime_error("cannot write " + na.log_out);
    runtime::WriteTargetLog(f, result.log);
  }
  WithCsv(g.csv, [&](std::ostream& f) { runtime::WriteMetricsCsv(f, result); });
  log.info("{}: {} tokens, ttft {:.1f} ms, mean latency {:.1f} ms, rollbacks {}, switches {}", na.role,
           result.log.size(), result.ttft_ms, MeanLatency(result), result.rollbacks, result.switches);
  if (!result.completed) {
    log.error("{}: aborted: {}", na.role, result.error);
    return kExitFailure;
  }
  return kExitOk;
}

int RunSimulateCommand(const Globals& g, const SimulateArgs& a, std::ostream& out) {
  Validate(a);
  const auto cfg = MakeSimConfig(a, g.seed);
  const auto trace = MakeTrace(a, g.seed);
  const auto res = sim::Simulate(trace, cfg);
  // Vanilla closed form for the starting aggregator.
  const Side agg = cfg.strategy.kind == sim::StrategyKind::kCloud ? Side::kCloud
                   : cfg.strategy.kind == sim::StrategyKind::kDevice ? Side::kDevice
                                                                     : cfg.initial_aggregator;
  const double rtt = cfg.costs.rtt() + 2.0 * (a.base_latency + a.extra_latency);
  const double c_local = agg == Side::kDevice ? cfg.costs.c_dec_l : cfg.costs.c_dec_r;
  const double c_remote = agg == Side::kDevice ? cfg.costs.c_dec_r : cfg.costs.c_dec_l;
  out << "strategy,tokens,total_ms,steady_ms,mean_ms,switches,vanilla_ms\n";
  out << a.strategy << ',' << trace.size() << ',' << res.total_time << ',' << res.SteadyState() << ','
      << res.total_time / static_cast<double>(trace.size()) << ',' << res.switches << ','
      << std::max(c_local, c_remote + rtt) << '\n';
  WithCsv(g.csv, [&](std::ostream& f) { sim::WriteResultCsv(f, res); });
  return kExitOk;
}

int RunVerifyCommand(const Globals& g, const std::string& suite, VerifyOptions opt, std::ostream& out,
                     spdlog::logger& log) {
  opt.seed = g.seed;
  std::ofstream csv;
  if (!g.csv.empty()) {
    csv.open(g.csv);
    if (!csv) throw std::runtime_error("cannot write " + g.csv);
    csv << "suite,key,metric,value\n";
    opt.csv = &csv;
  }
  const auto names = suite == "all" ? SuiteNames() : std::vector<std::string>{suite};
  bool ok = true;
  for (const auto& n : names) {
    const auto rep = RunSuite(n, opt);
    PrintReport(out, rep);
    log.info("suite {} finished in {:.2f} s", n, rep.seconds);
    ok = ok && rep.passed();
  }
  return ok ? kExitOk : kExitFailure;
}

struct BenchArgs {
  std::string prompts;
  double device_decode_ms = 0.0;
  double cloud_decode_ms = 0.0;
  double delay_ms = 0.0;
  bool vanilla = false;
  std::string static_side = "device";
  std::string codec = "none";
};

int RunBenchCommand(const Globals& g, const SessionArgs& sa, const BenchArgs& b, std::ostream& out,
                    spdlog::logger& log) {
  if (b.device_decode_ms < 0.0 || b.cloud_decode_ms < 0.0 || b.delay_ms < 0.0) {
    throw std::invalid_argument("delays must be non-negative");
  }
  std::ifstream in(b.prompts);
  if (!in) throw std::runtime_error("cannot open prompt file " + b.prompts);
  std::vector<std::vector<TokenId>> prompts;
  for (std::string line; std::getline(in, line);) {
    auto p = ParseTokenList(line);
    if (!p.empty()) prompts.push_back(std::move(p));
  }
  if (prompts.empty()) throw std::invalid_argument("prompt file has no prompts");
  auto base = LoadSession(sa, g.seed);
  std::ostringstream rows;
  rows << "prompt,tokens,ttft_ms,mean_latency_ms,total_ms,accept_l,accept_r,rollbacks\n";
  bool ok = true;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    runtime::SessionConfig s = base.session;
    s.prompt = prompts[i];
    s.max_context = std::max(s.max_context, s.prompt.size() + s.max_new_tokens);
    runtime::NodeConfig d{Side::kDevice, s, {base.corpus, runtime::DefaultHalf(Side::kDevice)}, {}};
    runtime::NodeConfig c{Side::kCloud, s, {base.corpus, runtime::DefaultHalf(Side::kCloud)}, {}};
    d.options.vanilla = c.options.vanilla = b.vanilla;
    d.options.policy = c.options.policy = runtime::ParseAggregatorPolicy(b.static_side);
    d.options.decode_delay_ms = b.device_decode_ms;
    c.options.decode_delay_ms = b.cloud_decode_ms;
    runtime::LinkOptions link;
    link.codec = transport::ParseCodec(b.codec);
    link.device_to_cloud = runtime::MakeDelay(b.delay_ms);
    link.cloud_to_device = runtime::MakeDelay(b.delay_ms);
    const auto r = runtime::RunLoopbackPair(d, c, link);
    if (!r.device.completed || !r.cloud.completed) {
      log.error("prompt {}: {} {}", i, r.device.error, r.cloud.error);
      ok = false;
    }
    double al = 0.0;
    double ar = 0.0;
    for (const auto& o : r.device.log) {
      al += o.accept_l ? 1.0 : 0.0;
      ar += o.accept_r ? 1.0 : 0.0;
    }
    const double n = std::max<double>(1.0, static_cast<double>(r.device.log.size()));
    rows << i << ',' << r.device.log.size() << ',' << r.device.ttft_ms << ',' << MeanLatency(r.device) << ','
         << r.device.total_ms << ',' << al / n << ',' << ar / n << ',' << r.device.rollbacks + r.cloud.rollbacks << '\n';
  }
  out << rows.str();
  WithCsv(g.csv, [&](std::ostream& f) { f << rows.str(); });
  return ok ? kExitOk : kExitFailure;
}

struct FitArgs {
  std::string samples;
  std::string corpus;
  std::size_t docs = 2;
  std::size_t from = 8;
  std::size_t to = 128;
  std::size_t reps = 3;
};

std::vector<DecodeSample> LoadSamples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open samples " + path);
  std::vector<DecodeSample> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("t,c_dec", 0) != 0) throw std::invalid_argument("samples header must start with t,c_dec");
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    DecodeSample s{};
    if (!(row >> s.t >> s.c_dec)) throw std::invalid_argument("bad sample row '" + line + "'");
    out.push_back(s);
  }
  return out;
}

int RunFitCommand(const Globals& g, const FitArgs& a, std::ostream& out) {
  if (a.samples.empty() == a.corpus.empty()) throw std::invalid_argument("give exactly one of --samples or --corpus");
  std::vector<ProfileRow> rows;
  DecodeModel model;
  if (!a.samples.empty()) {
    const auto samples = LoadSamples(a.samples);
    model = FitOffline(samples);
    for (const auto& s : samples) rows.push_back({static_cast<std::size_t>(s.t), s.c_dec, model.Predict(s.t), 0.0, 0.0});
  } else {
    if (a.from == 0 || a.to <= a.from + 1) throw std::invalid_argument("need 0 < --from < --to - 1");
    const auto corpus = Corpus::Load(a.corpus);
    std::vector<TokenId> stream;
    for (const auto& d : corpus.docs()) stream.insert(stream.end(), d.tokens.begin(), d.tokens.end());
    const std::size_t vocab = corpus.MinVocabSize();
    // Time of one decode step at context length t, averaged over a batch.
    auto measure = [&](std::size_t t) {
      std::vector<TokenId> ctx(t);
      for (std::size_t i = 0; i < t; ++i) ctx[i] = stream[i % stream.size()];
      const auto hits = Retrieve(corpus, ctx, a.docs, RetrievalHalf::kAll);
      DecoderState st = MakeDecoderState(Vocab(std::max<std::size_t>(vocab, 2)), ctx, hits, g.seed, t + 1, kDefaultChunkSize);
      st.wire_top_p = runtime::kDefaultWireTopP;
      constexpr int kBatch = 20;
      const auto t0 = std::chrono::steady_clock::now();
      for (int k = 0; k < kBatch; ++k) {
        DecoderState copy = st;
        (void)DecodeStep(copy, UniformAt(g.seed, streams::kDraft, k));
      }
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / kBatch;
    };
    const auto prof = ProfileOffline(measure, a.from, a.to, a.reps);
    model = prof.model;
    for (const auto& s : prof.averaged) rows.push_back({static_cast<std::size_t>(s.t), s.c_dec, model.Predict(s.t), 0.0, 0.0});
  }
  out << "k_a,k_b,k_c\n" << model.k_a << ',' << model.k_b << ',' << model.k_c << '\n';
  WithCsv(g.csv, [&](std::ostream& f) { WriteProfileCsv(f, rows); });
  return kExitOk;
}

int RunRecordCommand(const Globals& g, const SessionArgs& sa, std::size_t count, const std::string& out_dir,
                     std::ostream& out) {
  if (count == 0) throw std::invalid_argument("--count must be positive");
  if (count > 1 && out_dir.empty()) throw std::invalid_argument("--count > 1 needs --out-dir");
  const auto base = LoadSession(sa, g.seed);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < count; ++i) {
    runtime::SessionConfig s = base.session;
    s.seed = g.seed + i;
    if (sa.prompt.empty()) {
      const auto& doc = base.corpus->docs()[i % base.corpus->docs().size()].tokens;
      s.prompt.assign(doc.begin(), doc.begin() + std::min<std::size_t>(8, doc.size()));
      s.max_context = std::max(s.max_context, s.prompt.size() + s.max_new_tokens);
    }
    const auto r = runtime::RunSequential(s, {base.corpus, runtime::DefaultHalf(Side::kDevice)},
                                          {base.corpus, runtime::DefaultHalf(Side::kCloud)});
    const auto trace = sim::AcceptanceTrace::FromLog(r.log);
    if (!out_dir.empty()) {
      std::ofstream f(std::filesystem::path(out_dir) / ("trace_" + std::to_string(i) + ".csv"));
      trace.WriteCsv(f);
    } else if (!g.csv.empty()) {
      WithCsv(g.csv, [&](std::ostream& f) { trace.WriteCsv(f); });
    } else {
      trace.WriteCsv(out);
    }
  }
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Device-cloud speculative aggregation for distributed RAG (toy decoders)", "dragon"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--csv", g.csv, "CSV output path");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

  SessionArgs node_sa;
  NodeArgs na;
  auto* node = app.add_subcommand("node", "Run one side of a live session");
  AddSessionOptions(node, node_sa);
  node->add_option("--role", na.role, "device|cloud")->required();
  node->add_option("--listen", na.listen, "host:port to listen on (port 0: ephemeral)");
  node->add_option("--connect", na.connect, "host:port of the peer");
  node->add_option("--half", na.half, "Retrieval half: first|second|all (default by role)");
  node->add_flag("--vanilla", na.vanilla, "Aggregate every step before decoding the next");
  node->add_option("--static-side", na.static_side, "Aggregator placement: device|cloud|auto");
  node->add_option("--codec", na.codec, "Message body codec: none|block");
  node->add_option("--queue-capacity", na.queue_capacity, "Draft queue capacity");
  node->add_option("--decode-ms", na.decode_ms, "Emulated decode cost per token");
  node->add_option("--decode-slope-ms", na.decode_slope_ms, "Extra decode cost per context token");
  node->add_option("--delay-ms", na.delay_ms, "Injected one-way delay on outgoing messages");
  node->add_option("--jitter-ms", na.jitter_ms, "Sinusoidal jitter amplitude on the injected delay");
  node->add_option("--jitter-period-ms", na.jitter_period_ms, "Jitter period");
  node->add_option("--timeout-ms", na.timeout_ms, "Connect/accept timeout");
  node->add_option("--port-file", na.port_file, "Write the bound port here");
  node->add_option("--log", na.log_out, "Target log path (default stdout)");

  SimulateArgs sim_a;
  auto* simc = app.add_subcommand("simulate", "Replay an acceptance trace in the event simulator");
  simc->add_option("--trace", sim_a.trace, "CSV trace: step,accept_l,accept_r");
  simc->add_option("--bernoulli", sim_a.bernoulli, "Cloud acceptance probability for a synthetic trace");
  simc->add_option("--bernoulli-device", sim_a.bernoulli_device, "Device acceptance probability (default 0)");
  simc->add_option("--strategy", sim_a.strategy, "device|cloud|random|dragon");
  simc->add_option("--tokens", sim_a.tokens, "Synthetic trace length");
  simc->add_option("--c-dec-l", sim_a.c_dec_l, "Device decode cost (ms)");
  simc->add_option("--c-dec-r", sim_a.c_dec_r, "Cloud decode cost (ms)");
  simc->add_option("--c-trans-l", sim_a.c_trans_l, "Device to cloud transmission (ms)");
  simc->add_option("--c-trans-r", sim_a.c_trans_r, "Cloud to device transmission (ms)");
  simc->add_option("--base-latency", sim_a.base_latency, "Network base latency per direction (ms)");
  simc->add_option("--extra-latency", sim_a.extra_latency, "Extra latency per direction (ms)");
  simc->add_option("--jitter-amplitude", sim_a.jitter_amplitude, "Jitter amplitude (default (base+extra)/5)");
  simc->add_option("--jitter-period-s", sim_a.jitter_period_s, "Jitter period in seconds");
  simc->add_option("--bandwidth", sim_a.bandwidth, "Bytes per ms (0: unlimited)");
  simc->add_option("--queue-capacity", sim_a.queue_capacity, "Draft queue capacity");
  simc->add_flag("--vanilla", sim_a.vanilla, "Capacity-1 queues");
  simc->add_option("--initial", sim_a.initial, "Starting aggregator for random/dragon");

  std::string suite = "all";
  VerifyOptions vopt;
  auto* verify = app.add_subcommand("verify", "Run a statistical or formula verification suite");
  verify->add_option("--suite", suite, "Suite name or all");
  verify->add_option("--trials", vopt.trials, "Monte-Carlo trials per instance")->check(CLI::PositiveNumber);
  verify->add_option("--instances", vopt.instances, "Random instances")->check(CLI::PositiveNumber);

  SessionArgs bench_sa;
  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Per-token latency and TTFT over a prompt file (in-process pair)");
  AddSessionOptions(bench, bench_sa);
  bench->add_option("--prompts", ba.prompts, "One prompt of token ids per line")->required();
  bench->add_option("--device-decode-ms", ba.device_decode_ms, "Emulated device decode cost");
  bench->add_option("--cloud-decode-ms", ba.cloud_decode_ms, "Emulated cloud decode cost");
  bench->add_option("--delay-ms", ba.delay_ms, "Injected one-way delay");
  bench->add_flag("--vanilla", ba.vanilla, "Token-wise synchronized baseline");
  bench->add_option("--static-side", ba.static_side, "device|cloud|auto");
  bench->add_option("--codec", ba.codec, "none|block");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit-profile", "Fit the linear decode-latency model");
  fit->add_option("--samples", fa.samples, "CSV with header t,c_dec");
  fit->add_option("--corpus", fa.corpus, "Measure the toy decoder on this corpus instead");
  fit->add_option("--docs", fa.docs, "Documents in the measured mixture");
  fit->add_option("--from", fa.from, "First context length");
  fit->add_option("--to", fa.to, "One past the last context length");
  fit->add_option("--reps", fa.reps, "Repetitions per length")->check(CLI::PositiveNumber);

  SessionArgs rec_sa;
  std::size_t rec_count = 1;
  std::string rec_dir;
  auto* rec = app.add_subcommand("record-trace", "Record acceptance decisions with the sequential engine");
  AddSessionOptions(rec, rec_sa);
  rec->add_option("--count", rec_count, "Number of traces (seeds seed..seed+count-1)");
  rec->add_option("--out-dir", rec_dir, "Directory for trace_<i>.csv");

  SyntheticCorpusSpec cspec;
  std::string corpus_out;
  auto* mk = app.add_subcommand("make-corpus", "Write a synthetic topic corpus");
  mk->add_option("--docs", cspec.docs)->check(CLI::PositiveNumber);
  mk->add_option("--doc-len", cspec.doc_len)->check(CLI::PositiveNumber);
  mk->add_option("--vocab", cspec.vocab)->check(CLI::Range(2, 1 << 30));
  mk->add_option("--topics", cspec.topics)->check(CLI::PositiveNumber);
  mk->add_option("--coherence", cspec.coherence)->check(CLI::Range(0.0, 1.0));
  mk->add_option("--out", corpus_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::shared_ptr<spdlog::logger> log;
  try {
    log = MakeLogger(err, g.log_level);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*node) return RunNodeCommand(g, node_sa, na, out, *log);
    if (*simc) return RunSimulateCommand(g, sim_a, out);
    if (*verify) return RunVerifyCommand(g, suite, vopt, out, *log);
    if (*bench) return RunBenchCommand(g, bench_sa, ba, out, *log);
    if (*fit) return RunFitCommand(g, fa, out);
    if (*rec) return RunRecordCommand(g, rec_sa, rec_count, rec_dir, out);
    if (*mk) {
      cspec.seed = g.seed;
      const Corpus c = SyntheticCorpus(cspec);
      if (corpus_out.empty()) {
        WriteCorpus(out, c);
      } else {
        std::ofstream f(corpus_out);
        if (!f) throw std::runtime_error("cannot write " + corpus_out);
        WriteCorpus(f, c);
      }
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    log->error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace dragon::tools
