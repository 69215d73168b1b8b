#include "mbrlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "mbrlab/decoding.hpp"
#include "mbrlab/records.hpp"
#include "mbrlab/rng.hpp"

namespace mbrlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kGenData: return "gen-data";
    case Stage::kTrainBase: return "train-base";
    case Stage::kSample: return "sample";
    case Stage::kRank: return "rank";
    case Stage::kMakePrefs: return "make-prefs";
    case Stage::kDpoTrain: return "dpo-train";
    case Stage::kEvaluate: return "evaluate";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// config (de)serialization

namespace {

json task_to_json(const TaskSpec& t) {
  return {{"kind", task_name(t.kind)},       {"vocab_size", t.vocab_size},
          {"min_len", t.min_len},            {"max_len", t.max_len},
          {"noise_rate", t.noise_rate},      {"base_train", t.base_train},
          {"dpo_sources", t.dpo_sources},    {"heldout", t.heldout},
          {"test", t.test},                  {"seed", t.seed},
          {"cipher_identity", t.cipher_identity}};
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.kind = task_from_name(j.at("kind").get<std::string>());
  t.vocab_size = j.at("vocab_size").get<std::size_t>();
  t.min_len = j.at("min_len").get<std::size_t>();
  t.max_len = j.at("max_len").get<std::size_t>();
  t.noise_rate = j.at("noise_rate").get<double>();
  t.base_train = j.at("base_train").get<std::size_t>();
  t.dpo_sources = j.at("dpo_sources").get<std::size_t>();
  t.heldout = j.at("heldout").get<std::size_t>();
  t.test = j.at("test").get<std::size_t>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.cipher_identity = j.value("cipher_identity", false);
  return t;
}

json model_to_json(const ModelConfig& m) {
  return {{"d_model", m.d_model}, {"n_heads", m.n_heads},   {"n_layers", m.n_layers},
          {"ffn_mult", m.ffn_mult}, {"max_len", m.max_len}, {"vocab_size", m.vocab_size},
          {"init_scale", m.init_scale}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.d_model = j.at("d_model").get<std::size_t>();
  m.n_heads = j.at("n_heads").get<std::size_t>();
  m.n_layers = j.at("n_layers").get<std::size_t>();
  m.ffn_mult = j.at("ffn_mult").get<std::size_t>();
  m.max_len = j.at("max_len").get<std::size_t>();
  m.vocab_size = j.at("vocab_size").get<std::size_t>();
  m.init_scale = j.at("init_scale").get<double>();
  return m;
}

json mle_to_json(const MleConfig& m) {
  return {{"epochs", m.epochs},           {"batch_size", m.batch_size}, {"lr", m.lr},
          {"warmup_steps", m.warmup_steps}, {"max_steps", m.max_steps}, {"seed", m.seed}};
}

MleConfig mle_from_json(const json& j) {
  MleConfig m;
  m.epochs = j.at("epochs").get<std::size_t>();
  m.batch_size = j.at("batch_size").get<std::size_t>();
  m.lr = j.at("lr").get<double>();
  m.warmup_steps = j.at("warmup_steps").get<std::size_t>();
  m.max_steps = j.at("max_steps").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

json sampling_to_json(const SamplingConfig& s) {
  return {{"temperature", s.temperature}, {"max_len", s.max_len}, {"seed", s.seed},
          {"set_size", s.set_size}};
}

SamplingConfig sampling_from_json(const json& j) {
  SamplingConfig s;
  s.temperature = j.at("temperature").get<double>();
  s.max_len = j.at("max_len").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.set_size = j.at("set_size").get<std::size_t>();
  return s;
}

json dpo_to_json(const DpoConfig& d) {
  return {{"beta", d.beta},
          {"lr", d.lr},
          {"warmup_steps", d.warmup_steps},
          {"epochs", d.epochs},
          {"batch_size", d.batch_size},
          {"seed", d.seed},
          {"checkpoint_fractions", d.checkpoint_fractions},
          {"moving_average_window", d.moving_average_window},
          {"grad_clip", d.grad_clip},
          {"weight_decay", d.weight_decay}};
}

DpoConfig dpo_from_json(const json& j) {
  DpoConfig d;
  d.beta = j.at("beta").get<double>();
  d.lr = j.at("lr").get<double>();
  d.warmup_steps = j.at("warmup_steps").get<std::size_t>();
  d.epochs = j.at("epochs").get<std::size_t>();
  d.batch_size = j.at("batch_size").get<std::size_t>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.checkpoint_fractions = j.at("checkpoint_fractions").get<std::vector<double>>();
  d.moving_average_window = j.at("moving_average_window").get<std::size_t>();
  d.grad_clip = j.value("grad_clip", 0.0);
  d.weight_decay = j.value("weight_decay", 0.0);
  return d;
}

// out_dir is runtime context, not experiment identity: leaving it out keeps
// reports byte-identical across directories.
json config_to_json(const ExperimentConfig& c) {
  return {{"task", task_to_json(c.task)},
          {"model", model_to_json(c.model)},
          {"mle", mle_to_json(c.mle)},
          {"sampling", sampling_to_json(c.sampling)},
          {"utility", utility_name(c.utility)},
          {"strategy", strategy_name(c.strategy)},
          {"stride", c.stride},
          {"equality_filter", c.equality_filter},
          {"dpo", dpo_to_json(c.dpo)},
          {"beam_width", c.beam_width},
          {"length_normalize", c.length_normalize},
          {"model_seed", c.model_seed},
          {"eval_seed", c.eval_seed}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.task = task_from_json(j.at("task"));
  c.model = model_from_json(j.at("model"));
  c.mle = mle_from_json(j.at("mle"));
  c.sampling = sampling_from_json(j.at("sampling"));
  c.utility = utility_from_name(j.at("utility").get<std::string>());
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.stride = j.at("stride").get<int>();
  c.equality_filter = j.at("equality_filter").get<bool>();
  c.dpo = dpo_from_json(j.at("dpo"));
  c.beam_width = j.at("beam_width").get<std::size_t>();
  c.length_normalize = j.at("length_normalize").get<bool>();
  c.model_seed = j.at("model_seed").get<std::uint64_t>();
  c.eval_seed = j.at("eval_seed").get<std::uint64_t>();
  c.out_dir = j.value("out_dir", c.out_dir);
  return c;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.task.kind = TaskKind::kCipher;
  c.task.seed = 7;
  c.model.d_model = 48;
  c.model.n_heads = 4;
  c.model.n_layers = 1;
  c.model.ffn_mult = 2;
  c.model.max_len = 64;
  // Deliberately light MLE training: the interesting regime is a base model
  // whose beam output still trails its own MBR consensus.
  c.mle.epochs = 3;
  c.mle.batch_size = 8;
  c.mle.lr = 1e-3;
  c.mle.seed = 11;
  c.sampling.temperature = 0.7;
  c.sampling.set_size = 8;
  c.sampling.seed = 21;
  c.dpo.beta = 0.7;
  c.dpo.lr = 1e-4;
  c.dpo.batch_size = 4;
  c.dpo.seed = 31;
  c.beam_width = 4;
  c.model_seed = 1;
  c.eval_seed = 1234;
  return c;
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  return config_from_json(json::parse(text));
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_text_file(path));
}

void save_experiment_config(const std::string& path, const ExperimentConfig& cfg) {
  write_text_file(path, experiment_config_json(cfg));
}

double repetition_rate(const std::vector<std::vector<int>>& hypotheses) {
  if (hypotheses.empty()) throw std::invalid_argument("repetition_rate: empty input");
  std::size_t repetitive = 0;
  for (const auto& h : hypotheses) {
    bool rep = false;
    if (h.size() >= 8) {
      std::map<std::vector<int>, int> grams;
      for (std::size_t i = 0; i + 4 <= h.size() && !rep; ++i) {
        std::vector<int> g(h.begin() + i, h.begin() + i + 4);
        if (++grams[g] >= 2) rep = true;
      }
    }
    if (rep) ++repetitive;
  }
  return static_cast<double>(repetitive) / static_cast<double>(hypotheses.size());
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

template <typename F>
auto run_stage(Stage s, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + stage_name(s) + ": " + e.what());
  }
}

using HypSets = std::vector<std::pair<int, std::vector<Hypothesis>>>;

HypSets sample_sets_for(const ModelParams& params, const Vocab& vocab,
                        const std::vector<SentencePair>& sources, SamplingConfig cfg,
                        std::uint64_t stream_seed) {
  HypSets out;
  out.reserve(sources.size());
  for (const auto& p : sources) {
    SamplingConfig per = cfg;
    per.seed = Rng::mix(stream_seed, static_cast<std::uint64_t>(p.id));
    out.emplace_back(p.id, sample_hypothesis_set(params, vocab, p.source, per));
  }
  return out;
}

std::vector<RankedHypothesisSet> rank_sets(const HypSets& sets,
                                           const std::map<int, const SentencePair*>& by_id,
                                           const Vocab& vocab, const UtilityFunction& util) {
  std::vector<RankedHypothesisSet> out;
  out.reserve(sets.size());
  for (const auto& [sid, hyps] : sets) {
    auto it = by_id.find(sid);
    if (it == by_id.end()) throw std::runtime_error("rank: unknown source id");
    out.push_back(mbr_rank(hyps, vocab, util, sid, it->second->source));
  }
  return out;
}

std::map<int, const SentencePair*> index_split(const std::vector<SentencePair>& split) {
  std::map<int, const SentencePair*> m;
  for (const auto& p : split) m[p.id] = &p;
  return m;
}

// Lazily materialized pipeline artifacts rooted at cfg.out_dir.
struct Pipeline {
  ExperimentConfig cfg;
  bool resume;
  fs::path dir;

  Corpus corpus;
  bool have_corpus = false;
  ModelParams base;
  bool have_base = false;
  HypSets hyps, heldout_hyps;
  bool have_hyps = false;
  std::vector<RankedHypothesisSet> ranked, heldout_ranked;
  bool have_ranked = false;
  std::vector<PreferenceTriplet> triplets, heldout_triplets;
  bool have_prefs = false;
  ModelParams dpo_model;
  bool have_dpo = false;

  Pipeline(ExperimentConfig c, bool r) : cfg(std::move(c)), resume(r), dir(cfg.out_dir) {
    fs::create_directories(dir / "corpus");
    save_experiment_config((dir / "config.json").string(), cfg);
  }

  UtilityFunction util() const {
    UtilityFunction u;
    u.id = cfg.utility;
    return u;
  }

  void ensure_corpus() {
    if (have_corpus) return;
    run_stage(Stage::kGenData, [&] {
      // Generation is deterministic, so regeneration equals re-reading; the
      // files exist for inspection and for the secondary tooling.
      corpus = gen_corpus(cfg.task);
      auto cd = dir / "corpus";
      if (!resume || !fs::exists(cd / "manifest.json")) {
        write_vocab((cd / "vocab.json").string(), corpus.vocab);
        write_corpus_split((cd / "base_train.jsonl").string(), corpus.base_train, corpus.vocab);
        write_corpus_split((cd / "dpo_sources.jsonl").string(), corpus.dpo_finetune, corpus.vocab);
        write_corpus_split((cd / "heldout.jsonl").string(), corpus.heldout, corpus.vocab);
        write_corpus_split((cd / "test.jsonl").string(), corpus.test, corpus.vocab);
        json manifest = {{"task", task_to_json(cfg.task)},
                         {"splits",
                          {{"base_train", corpus.base_train.size()},
                           {"dpo_sources", corpus.dpo_finetune.size()},
                           {"heldout", corpus.heldout.size()},
                           {"test", corpus.test.size()}}}};
        write_text_file((cd / "manifest.json").string(), manifest.dump(2) + "\n");
      }
      have_corpus = true;
      return 0;
    });
  }

  void ensure_base() {
    if (have_base) return;
    ensure_corpus();
    run_stage(Stage::kTrainBase, [&] {
      auto path = dir / "base.ckpt";
      if (resume && fs::exists(path)) {
        base = load_checkpoint(path.string()).first;
      } else {
        ModelConfig mc = cfg.model;
        mc.vocab_size = corpus.vocab.size();
        ModelParams init = init_model(mc, cfg.model_seed);
        MleResult res = train_mle(init, corpus.vocab, corpus.base_train, cfg.mle);
        base = std::move(res.params);
        save_checkpoint(path.string(), base, corpus.vocab);
        // Loss curve alongside the checkpoint, plot-ready.
        std::ostringstream ss;
        ss << "step,nll\n";
        for (std::size_t i = 0; i < res.step_losses.size(); ++i) {
          ss << i << ',' << json(res.step_losses[i]).dump() << '\n';
        }
        write_text_file((dir / "base_loss.csv").string(), ss.str());
      }
      have_base = true;
      return 0;
    });
  }

  void ensure_hyps() {
    if (have_hyps) return;
    ensure_base();
    run_stage(Stage::kSample, [&] {
      auto hp = dir / "hyps.jsonl";
      auto hh = dir / "heldout_hyps.jsonl";
      if (resume && fs::exists(hp) && fs::exists(hh)) {
        hyps = read_hypothesis_sets(hp.string(), corpus.vocab);
        heldout_hyps = read_hypothesis_sets(hh.string(), corpus.vocab);
      } else {
        hyps = sample_sets_for(base, corpus.vocab, corpus.dpo_finetune, cfg.sampling,
                               cfg.sampling.seed);
        heldout_hyps = sample_sets_for(base, corpus.vocab, corpus.heldout, cfg.sampling,
                                       Rng::mix(cfg.sampling.seed, 0x4e1d));
        write_hypothesis_sets(hp.string(), hyps, corpus.vocab);
        write_hypothesis_sets(hh.string(), heldout_hyps, corpus.vocab);
      }
      have_hyps = true;
      return 0;
    });
  }

  void ensure_ranked() {
    if (have_ranked) return;
    ensure_hyps();
    run_stage(Stage::kRank, [&] {
      auto by_id = index_split(corpus.dpo_finetune);
      auto held_by_id = index_split(corpus.heldout);
      ranked = rank_sets(hyps, by_id, corpus.vocab, util());
      heldout_ranked = rank_sets(heldout_hyps, held_by_id, corpus.vocab, util());
      write_ranked_sets((dir / "ranked.jsonl").string(), ranked, corpus.vocab);
      write_ranked_sets((dir / "heldout_ranked.jsonl").string(), heldout_ranked, corpus.vocab);
      have_ranked = true;
      return 0;
    });
  }

  void ensure_prefs() {
    if (have_prefs) return;
    ensure_ranked();
    run_stage(Stage::kMakePrefs, [&] {
      triplets.clear();
      for (const auto& r : ranked) {
        auto ts = select(cfg.strategy, r, cfg.stride, cfg.equality_filter);
        triplets.insert(triplets.end(), ts.begin(), ts.end());
      }
      // Held-out margins are always tracked over BMW pairs.
      heldout_triplets.clear();
      for (const auto& r : heldout_ranked) {
        auto ts = select_bmw(r, cfg.equality_filter);
        heldout_triplets.insert(heldout_triplets.end(), ts.begin(), ts.end());
      }
      write_triplets((dir / "triplets.jsonl").string(), triplets, corpus.vocab);
      write_triplets((dir / "heldout_triplets.jsonl").string(), heldout_triplets, corpus.vocab);
      have_prefs = true;
      return 0;
    });
  }

  void ensure_dpo() {
    if (have_dpo) return;
    ensure_prefs();
    run_stage(Stage::kDpoTrain, [&] {
      if (cfg.dpo.epochs == 0) {
        dpo_model = base;  // no-op fine-tune
        have_dpo = true;
        return 0;
      }
      auto path = dir / "dpo.ckpt";
      if (resume && fs::exists(path)) {
        dpo_model = load_checkpoint(path.string()).first;
      } else {
        DpoResult res = dpo_finetune(base, corpus.vocab, triplets, cfg.dpo, heldout_triplets);
        dpo_model = std::move(res.params);
        save_checkpoint(path.string(), dpo_model, corpus.vocab);
        write_margin_trace((dir / "margins.csv").string(), res.trace);
        write_heldout_margins((dir / "heldout_margins.csv").string(), res.trace);
      }
      have_dpo = true;
      return 0;
    });
  }

  std::vector<std::vector<int>> decode_beam(const ModelParams& params) {
    std::vector<std::vector<int>> out;
    out.reserve(corpus.test.size());
    for (const auto& p : corpus.test) {
      out.push_back(
          beam_search(params, corpus.vocab, p.source, cfg.beam_width, 0, cfg.length_normalize)
              .tokens);
    }
    return out;
  }

  std::vector<std::vector<int>> decode_mbr(const ModelParams& params) {
    UtilityFunction u = util();
    std::vector<std::vector<int>> out;
    out.reserve(corpus.test.size());
    for (const auto& p : corpus.test) {
      SamplingConfig per = cfg.sampling;
      per.seed = Rng::mix(Rng::mix(cfg.eval_seed, 0x7e57), static_cast<std::uint64_t>(p.id));
      auto set = sample_hypothesis_set(params, corpus.vocab, p.source, per);
      out.push_back(mbr_decode(set, corpus.vocab, u).tokens);
    }
    return out;
  }

  EvalRow score_system(const std::string& name, const std::vector<std::vector<int>>& outputs) {
    std::vector<std::vector<int>> refs;
    refs.reserve(corpus.test.size());
    for (const auto& p : corpus.test) refs.push_back(p.target);
    UtilityFunction chrf{UtilityId::kChrf, 6, 2.0, 4};
    UtilityFunction bleu{UtilityId::kSentenceBleu, 6, 2.0, 4};
    EvalRow row;
    row.system = name;
    CorpusScore cs = corpus_metrics(outputs, refs, corpus.vocab, chrf);
    row.chrf = cs.mean_utility;
    row.exact_match = cs.exact_match;
    row.sentence_bleu = corpus_metrics(outputs, refs, corpus.vocab, bleu).mean_utility;
    row.repetition_rate = repetition_rate(outputs);
    return row;
  }

  ExperimentReport evaluate() {
    ensure_dpo();
    return run_stage(Stage::kEvaluate, [&] {
      ExperimentReport report;
      report.rows.push_back(score_system("base-beam", decode_beam(base)));
      report.rows.push_back(
          score_system("base-mbr@" + std::to_string(cfg.sampling.set_size), decode_mbr(base)));
      report.rows.push_back(score_system("dpo-beam", decode_beam(dpo_model)));
      write_report(report);
      return report;
    });
  }

  void write_report(const ExperimentReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
      rows.push_back({{"system", r.system},
                      {"chrf", r.chrf},
                      {"sentence_bleu", r.sentence_bleu},
                      {"exact_match", r.exact_match},
                      {"repetition_rate", r.repetition_rate}});
    }
    json j = {{"config", config_to_json(cfg)}, {"rows", rows}};
    write_text_file((dir / "report.json").string(), j.dump(2) + "\n");
    write_text_file((dir / "report.txt").string(), format_rows(report.rows));
  }

  static std::string format_rows(const std::vector<EvalRow>& rows) {
    std::ostringstream ss;
    ss << "system                chrf      s-bleu    exact     rep\n";
    for (const auto& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-20s  %.6f  %.6f  %.6f  %.6f\n", r.system.c_str(), r.chrf,
                    r.sentence_bleu, r.exact_match, r.repetition_rate);
      ss << buf;
    }
    return ss.str();
  }
};

}  // namespace

ExperimentReport run_pipeline(const ExperimentConfig& cfg, bool resume, Stage up_to) {
  Pipeline p(cfg, resume);
  switch (up_to) {
    case Stage::kGenData: p.ensure_corpus(); return {};
    case Stage::kTrainBase: p.ensure_base(); return {};
    case Stage::kSample: p.ensure_hyps(); return {};
    case Stage::kRank: p.ensure_ranked(); return {};
    case Stage::kMakePrefs: p.ensure_prefs(); return {};
    case Stage::kDpoTrain: p.ensure_dpo(); return {};
    case Stage::kEvaluate: break;
  }
  return p.evaluate();
}

BetaSweepReport run_beta_sweep(const ExperimentConfig& cfg, const std::vector<double>& betas) {
  if (betas.empty()) throw std::invalid_argument("run_beta_sweep: need at least one beta");
  Pipeline shared(cfg, /*resume=*/true);
  shared.ensure_prefs();

  BetaSweepReport report;
  report.base = shared.score_system("base-beam", shared.decode_beam(shared.base));

  for (double beta : betas) {
    std::ostringstream tag;
    tag << "beta_" << beta;
    fs::path sub = fs::path(cfg.out_dir) / tag.str();
    fs::create_directories(sub);
    DpoConfig dc = cfg.dpo;
    dc.beta = beta;
    DpoResult res = dpo_finetune(shared.base, shared.corpus.vocab, shared.triplets, dc,
                                 shared.heldout_triplets);
    save_checkpoint((sub / "dpo.ckpt").string(), res.params, shared.corpus.vocab);
    write_margin_trace((sub / "margins.csv").string(), res.trace);
    write_heldout_margins((sub / "heldout_margins.csv").string(), res.trace);
    EvalRow row = shared.score_system(tag.str(), shared.decode_beam(res.params));
    report.rows.emplace_back(beta, row);
  }

  json rows = json::array();
  auto row_json = [](const EvalRow& r) {
    return json{{"system", r.system},
                {"chrf", r.chrf},
                {"sentence_bleu", r.sentence_bleu},
                {"exact_match", r.exact_match},
                {"repetition_rate", r.repetition_rate}};
  };
  for (const auto& [beta, row] : report.rows) {
    json j = row_json(row);
    j["beta"] = beta;
    rows.push_back(j);
  }
  json j = {{"base", row_json(report.base)}, {"rows", rows}};
  write_text_file((fs::path(cfg.out_dir) / "sweep_report.json").string(), j.dump(2) + "\n");
  std::vector<EvalRow> flat{report.base};
  for (const auto& [beta, row] : report.rows) flat.push_back(row);
  write_text_file((fs::path(cfg.out_dir) / "sweep_report.txt").string(),
                  Pipeline::format_rows(flat));
  return report;
}

StrategyGridReport run_strategy_grid(const ExperimentConfig& cfg,
                                     const std::vector<StrategyChoice>& strategies,
                                     const std::vector<std::size_t>& set_sizes) {
  if (strategies.empty() || set_sizes.empty()) {
    throw std::invalid_argument("run_strategy_grid: empty grid");
  }
  StrategyGridReport report;
  for (std::size_t h : set_sizes) {
    ExperimentConfig hcfg = cfg;
    hcfg.sampling.set_size = h;
    hcfg.out_dir = (fs::path(cfg.out_dir) / ("h" + std::to_string(h))).string();
    Pipeline shared(hcfg, /*resume=*/true);
    shared.ensure_ranked();
    // Cells only read the shared artifacts and write into distinct subdirs,
    // so one thread per cell is safe.
    std::vector<StrategyGridReport::Cell> cells(strategies.size());
    std::vector<std::exception_ptr> errors(strategies.size());
    std::vector<std::thread> workers;
    for (std::size_t ci = 0; ci < strategies.size(); ++ci) {
      workers.emplace_back([&, ci] {
        try {
          const StrategyChoice& sc = strategies[ci];
          std::string tag = strategy_name(sc.strategy) +
                            (sc.strategy == Strategy::kCPS ? std::to_string(sc.stride) : "");
          std::vector<PreferenceTriplet> triplets;
          std::size_t max_per_source = 0;
          for (const auto& r : shared.ranked) {
            auto all = select(sc.strategy, r, sc.stride, /*equality_filter=*/false);
            max_per_source = std::max(max_per_source, all.size());
            auto kept = select(sc.strategy, r, sc.stride, cfg.equality_filter);
            triplets.insert(triplets.end(), kept.begin(), kept.end());
          }
          fs::path sub = fs::path(hcfg.out_dir) / tag;
          fs::create_directories(sub);
          write_triplets((sub / "triplets.jsonl").string(), triplets, shared.corpus.vocab);
          DpoConfig dc = cfg.dpo;
          DpoResult res = dpo_finetune(shared.base, shared.corpus.vocab, triplets, dc);
          save_checkpoint((sub / "dpo.ckpt").string(), res.params, shared.corpus.vocab);
          EvalRow row = shared.score_system(tag, shared.decode_beam(res.params));
          cells[ci] = {tag, h, row.chrf, max_per_source};
        } catch (...) {
          errors[ci] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    report.cells.insert(report.cells.end(), cells.begin(), cells.end());
  }
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"strategy", c.strategy},
                     {"set_size", c.set_size},
                     {"chrf", c.chrf},
                     {"triplets_per_source_max", c.triplets_per_source_max}});
  }
  write_text_file((fs::path(cfg.out_dir) / "grid_report.json").string(),
                  json{{"cells", cells}}.dump(2) + "\n");
  return report;
}

}  // namespace mbrlab
