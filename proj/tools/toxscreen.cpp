#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <unordered_set>

#include "toxscreen/error.hpp"
#include "toxscreen/knn.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/pipeline.hpp"
#include "toxscreen/synth.hpp"
#include "toxscreen/text_io.hpp"

using namespace toxscreen;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::size_t> threads;
  std::string config;
};

KeyValueConfig load_config(const Globals& g) {
  return g.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config);
}

UnknownTermPolicy policy(bool strict) { return strict ? UnknownTermPolicy::strict : UnknownTermPolicy::warn_unspecified; }

fs::path index_or_default(const std::string& index, const std::string& emb) {
  return index.empty() ? default_index_path(emb) : fs::path(index);
}

// Slides listed for `subset` by a split file (train lists normal slides only).
std::vector<std::string> subset_slides(const fs::path& split_path, const Corpus& corpus, Subset subset) {
  const SplitAssignment a = assignment_from_compounds(read_split_csv(split_path), corpus.records, SplitConfig{});
  return subset == Subset::train ? a.train_slides : subset == Subset::validation ? a.validation_slides : a.test_slides;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxscreen: abnormality screening from slide patch embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: TOXSCREEN_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Flat 'key = value' configuration file");

  std::function<void()> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print statistics");
  struct {
    std::string manifest, diagnoses, taxonomy;
    bool strict = false;
  } in;
  ingest->add_option("--manifest", in.manifest)->required();
  ingest->add_option("--diagnoses", in.diagnoses)->required();
  ingest->add_option("--taxonomy", in.taxonomy)->required();
  ingest->add_flag("--strict", in.strict, "Reject finding terms missing from the taxonomy");
  ingest->callback([&] {
    action = [&] {
      load_config(g).check_all_used();
      const Corpus corpus = load_corpus(in.manifest, in.diagnoses, in.taxonomy, policy(in.strict));
      std::cout << corpus_summary(corpus, validate_embeddings(corpus));
    };
  });

  // split
  auto* split_cmd = app.add_subcommand("split", "Compound-disjoint train/validation/test split");
  struct {
    std::string manifest, diagnoses, taxonomy, out;
    std::optional<std::uint64_t> seed, trials;
    std::optional<double> test_frac, val_frac;
  } sp;
  split_cmd->add_option("--manifest", sp.manifest)->required();
  split_cmd->add_option("--diagnoses", sp.diagnoses)->required();
  split_cmd->add_option("--seed", sp.seed);
  split_cmd->add_option("--trials", sp.trials);
  split_cmd->add_option("--test-frac", sp.test_frac);
  split_cmd->add_option("--val-frac", sp.val_frac);
  split_cmd->add_option("--out", sp.out)->required();
  split_cmd->callback([&] {
    action = [&] {
      const KeyValueConfig kv = load_config(g);
      SplitConfig cfg = split_config_from(kv);
      kv.check_all_used();
      if (sp.seed) cfg.seed = *sp.seed;
      if (sp.trials) cfg.trials = *sp.trials;
      if (sp.test_frac) cfg.test_fraction = *sp.test_frac;
      if (sp.val_frac) cfg.val_fraction_of_nontest = *sp.val_frac;
      cfg.validate();
      const auto entries = read_manifest(sp.manifest);
      const auto records = propagate_labels(entries, read_diagnoses(sp.diagnoses));
      const SplitAssignment a = build_split(records, cfg);
      for (const auto& w : a.warnings) std::cerr << "warning: " << w << "\n";
      write_file(sp.out, format_split_csv(a, records, cfg));
    };
  });

  // pool
  auto* pool_cmd = app.add_subcommand("pool", "Pool patch embeddings into slide vectors");
  struct {
    std::string manifest, method = "mean", out, index;
  } po;
  pool_cmd->add_option("--manifest", po.manifest)->required();
  pool_cmd->add_option("--method", po.method)->check(CLI::IsMember({"mean", "max"}));
  pool_cmd->add_option("--out", po.out)->required();
  pool_cmd->add_option("--index", po.index, "Sidecar slide index (default: <out stem>.csv)");
  pool_cmd->callback([&] {
    action = [&] {
      load_config(g).check_all_used();
      const PooledSet set = pool_slides(read_manifest(po.manifest), parse_pool_method(po.method));
      write_pooled(set, po.out, index_or_default(po.index, po.out));
    };
  });

  // knn
  auto* knn_cmd = app.add_subcommand("knn", "Nearest-normal-neighbour distance scores");
  struct {
    std::string refs, refs_index, queries, queries_index, out;
  } kn;
  knn_cmd->add_option("--refs", kn.refs)->required();
  knn_cmd->add_option("--refs-index", kn.refs_index);
  knn_cmd->add_option("--queries", kn.queries)->required();
  knn_cmd->add_option("--queries-index", kn.queries_index);
  knn_cmd->add_option("--out", kn.out)->required();
  knn_cmd->callback([&] {
    action = [&] {
      load_config(g).check_all_used();
      const ReferenceSet refs(read_pooled(kn.refs, index_or_default(kn.refs_index, kn.refs)));
      const PooledSet queries = read_pooled(kn.queries, index_or_default(kn.queries_index, kn.queries));
      write_scores(kn.out, knn_score_table(queries, refs),
                   {"scorer=knn_l2 model_id=" + fnv1a_hex(read_file(kn.refs))});
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the gated sparse autoencoder on normal slides");
  struct {
    std::string train_pool, train_index, val_pool, val_index, val_labels, out, trace;
  } tr;
  train_cmd->add_option("--train-pool", tr.train_pool)->required();
  train_cmd->add_option("--train-index", tr.train_index);
  train_cmd->add_option("--val-pool", tr.val_pool)->required();
  train_cmd->add_option("--val-index", tr.val_index);
  train_cmd->add_option("--val-labels", tr.val_labels, "slide_id,label CSV; adds a validation AUC column to the trace");
  train_cmd->add_option("--out", tr.out)->required();
  train_cmd->add_option("--trace", tr.trace);
  train_cmd->callback([&] {
    action = [&] {
      const KeyValueConfig kv = load_config(g);
      const TrainConfig cfg = TrainConfig::from(kv);
      kv.check_all_used();
      const PooledSet train = read_pooled(tr.train_pool, index_or_default(tr.train_index, tr.train_pool));
      const PooledSet val = read_pooled(tr.val_pool, index_or_default(tr.val_index, tr.val_pool));
      std::vector<Label> labels;
      if (!tr.val_labels.empty()) labels = read_labels_for(tr.val_labels, val);
      const TrainResult result = train_sae(train, val, cfg, labels);
      save_checkpoint(tr.out, result.model);
      if (!tr.trace.empty()) write_file(tr.trace, format_trace_csv(result.trace));
    };
  });

  // score
  auto* score_cmd = app.add_subcommand("score", "Reconstruction-error scores from a trained model");
  struct {
    std::string model, pool, index, out;
  } sc;
  score_cmd->add_option("--model", sc.model)->required();
  score_cmd->add_option("--pool", sc.pool)->required();
  score_cmd->add_option("--index", sc.index);
  score_cmd->add_option("--out", sc.out)->required();
  score_cmd->callback([&] {
    action = [&] {
      load_config(g).check_all_used();
      const SaeModel model = load_checkpoint(sc.model);
      const PooledSet set = read_pooled(sc.pool, index_or_default(sc.index, sc.pool));
      write_scores(sc.out, score_pooled(model, set), {"scorer=sae_mse model_id=" + fnv1a_hex(read_file(sc.model))});
    };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Fit or apply an operating point and report metrics");
  struct {
    std::string scores, manifest, diagnoses, taxonomy, split, subset = "test", op, out, pooling = "mean";
    bool fit = false, strict = false;
  } ev;
  eval_cmd->add_option("--scores", ev.scores)->required();
  eval_cmd->add_option("--manifest", ev.manifest)->required();
  eval_cmd->add_option("--diagnoses", ev.diagnoses)->required();
  eval_cmd->add_option("--taxonomy", ev.taxonomy)->required();
  eval_cmd->add_option("--split", ev.split, "Split CSV; scored slides must belong to --subset");
  eval_cmd->add_option("--subset", ev.subset)->check(CLI::IsMember({"train", "validation", "val", "test"}));
  eval_cmd->add_option("--operating-point", ev.op, "op.json to apply");
  eval_cmd->add_flag("--fit-operating-point", ev.fit, "Write the Youden-optimal op.json instead of a report");
  eval_cmd->add_option("--pooling", ev.pooling, "Pooling recorded in the report")->check(CLI::IsMember({"mean", "max"}));
  eval_cmd->add_flag("--strict", ev.strict);
  eval_cmd->add_option("--out", ev.out)->required();
  eval_cmd->callback([&] {
    action = [&] {
      load_config(g).check_all_used();
      const Corpus corpus = load_corpus(ev.manifest, ev.diagnoses, ev.taxonomy, policy(ev.strict));
      const Subset subset = parse_subset(ev.subset);
      const ScoreTable table = read_scores(ev.scores);
      std::string split_id;
      if (!ev.split.empty()) {
        split_id = fnv1a_hex(read_file(ev.split));
        const auto listed = subset_slides(ev.split, corpus, subset);
        const std::unordered_set<std::string> allowed(listed.begin(), listed.end());
        for (const auto& id : table.slide_ids) {
          if (!allowed.contains(id)) {
            fail(ErrorKind::validation, "slide '" + id + "' is not in the " + to_string(subset) + " subset");
          }
        }
      }
      const LabeledScores ls = join_labels(table, corpus);
      if (ev.fit) {
        write_file(ev.out, operating_point_json(youden_threshold(ls.scores, ls.labels)));
        return;
      }
      if (ev.op.empty()) fail(ErrorKind::validation, "--operating-point is required unless --fit-operating-point is given");
      const OperatingPoint op = parse_operating_point_json(read_file(ev.op), ev.op);
      EvalReport report = confusion_report(ls.scores, ls.labels, op, ls.categories);
      const auto prov = score_provenance(ev.scores);
      report.provenance = {to_string(subset), split_id, prov.contains("model_id") ? prov.at("model_id") : "",
                           ev.pooling, prov.contains("scorer") ? prov.at("scorer") : ""};
      write_file(ev.out, report_json(report));
    };
  });

  // project
  auto* proj_cmd = app.add_subcommand("project", "Exact t-SNE of pooled slide vectors");
  struct {
    std::string pool, index, out, label = "abnormality", manifest, diagnoses, taxonomy;
    std::size_t top = 0;
    std::optional<double> perplexity;
    std::optional<std::uint64_t> iterations, seed;
  } pj;
  proj_cmd->add_option("--pool", pj.pool)->required();
  proj_cmd->add_option("--index", pj.index);
  proj_cmd->add_option("--out", pj.out)->required();
  proj_cmd->add_option("--top-compounds", pj.top, "Emit only the compounds with the most slides");
  proj_cmd->add_option("--label", pj.label)->check(CLI::IsMember({"abnormality", "compound", "scale", "none"}));
  proj_cmd->add_option("--manifest", pj.manifest, "Needed for labels and --top-compounds");
  proj_cmd->add_option("--diagnoses", pj.diagnoses);
  proj_cmd->add_option("--taxonomy", pj.taxonomy);
  proj_cmd->add_option("--perplexity", pj.perplexity);
  proj_cmd->add_option("--iterations", pj.iterations);
  proj_cmd->add_option("--seed", pj.seed);
  proj_cmd->callback([&] {
    action = [&] {
      const KeyValueConfig kv = load_config(g);
      TsneConfig cfg = tsne_config_from(kv);
      kv.check_all_used();
      if (pj.perplexity) cfg.perplexity = *pj.perplexity;
      if (pj.iterations) cfg.iterations = *pj.iterations;
      if (pj.seed) cfg.seed = *pj.seed;
      ProjectionLabel label = parse_projection_label(pj.label);
      std::optional<Corpus> corpus;
      if (!pj.manifest.empty()) {
        if (pj.diagnoses.empty()) fail(ErrorKind::validation, "--manifest needs --diagnoses");
        corpus = load_corpus(pj.manifest, pj.diagnoses, pj.taxonomy, UnknownTermPolicy::warn_unspecified);
      } else if (proj_cmd->count("--label") > 0 && label != ProjectionLabel::none) {
        fail(ErrorKind::validation, "--label needs --manifest and --diagnoses");
      } else {
        label = ProjectionLabel::none;
      }
      const PooledSet pooled = read_pooled(pj.pool, index_or_default(pj.index, pj.pool));
      const TsneResult result = tsne_project(pooled.vectors, cfg);
      write_file(pj.out, format_projection_csv(pooled, result, cfg, corpus ? &*corpus : nullptr, label, pj.top));
    };
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->callback([&] {
    action = [&] {
      const KeyValueConfig kv = load_config(g);
      const SynthConfig cfg = SynthConfig::from(kv);
      kv.check_all_used();
      const SynthSummary s = generate_corpus(cfg, synth_out);
      std::cout << "slides: " << s.slides << "\nanimals: " << s.animals << "\nabnormal_animals: " << s.abnormal_animals
                << "\nabnormal_slides: " << s.abnormal_slides << "\n";
    };
  });

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage end to end");
  struct {
    std::string manifest, diagnoses, taxonomy, out;
    bool strict = false;
  } pp;
  pipe_cmd->add_option("--manifest", pp.manifest)->required();
  pipe_cmd->add_option("--diagnoses", pp.diagnoses)->required();
  pipe_cmd->add_option("--taxonomy", pp.taxonomy)->required();
  pipe_cmd->add_option("--out", pp.out)->required();
  pipe_cmd->add_flag("--strict", pp.strict);
  pipe_cmd->callback([&] {
    action = [&] {
      const KeyValueConfig kv = load_config(g);
      PipelineConfig cfg = PipelineConfig::from(kv);
      kv.check_all_used();
      cfg.manifest = pp.manifest;
      cfg.diagnoses = pp.diagnoses;
      cfg.taxonomy = pp.taxonomy;
      cfg.out_dir = pp.out;
      cfg.strict = cfg.strict || pp.strict;
      const PipelineResult r = run_pipeline(cfg, &std::cerr);
      std::cout << "test_auc: " << (r.test.auc ? format_real(*r.test.auc) : "n/a") << "\n";
      std::cout << "validation_youden_j: " << format_real(r.validation.operating_point.j) << "\n";
      if (r.knn_test) std::cout << "knn_test_auc: " << (r.knn_test->auc ? format_real(*r.knn_test->auc) : "n/a") << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g.threads) set_thread_count(*g.threads);
    if (action) action();
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return exit_code(ErrorKind::io);
  }
  return 0;
}
