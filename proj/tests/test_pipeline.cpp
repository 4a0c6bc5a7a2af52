#include <gtest/gtest.h>

#include <json.hpp>

#include "pipeline_fixtures.hpp"
#include "test_support.hpp"
#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/text_io.hpp"

using namespace toxscreen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void expect_identities(const EvalReport& r) {
  EXPECT_EQ(r.counts.total(), r.n);
  EXPECT_EQ(r.counts.tp + r.counts.fn, r.n_abnormal);
  if (r.sensitivity) {
    EXPECT_DOUBLE_EQ(*r.sensitivity, double(r.counts.tp) / double(r.counts.tp + r.counts.fn));
  }
  if (r.specificity) {
    EXPECT_DOUBLE_EQ(*r.specificity, double(r.counts.tn) / double(r.counts.tn + r.counts.fp));
  }
  for (const auto& c : r.by_category) {
    EXPECT_LE(c.detected, c.samples);
    EXPECT_EQ(c.sensitivity.has_value(), c.samples > 0);
  }
}

const std::string cli = TOXSCREEN_CLI;

}  // namespace

TEST(Pipeline, ProducesEveryArtifact) {
  testkit::TempDir corpus("pipe_corpus"), out("pipe_out");
  generate_corpus(testkit::small_synth(3), corpus.path());
  const PipelineResult r = run_pipeline(testkit::small_pipeline(corpus.path(), out.path()));
  for (const char* name : {"ingest.txt", "split.csv", "train_manifest.csv", "validation_manifest.csv",
                           "test_manifest.csv", "train_pooled.emb", "train_pooled.csv", "validation_pooled.emb",
                           "test_pooled.emb", "validation_labels.csv", "model.sae", "trace.csv",
                           "scores_validation.csv", "scores_test.csv", "op.json", "report.json",
                           "report_validation.json", "knn_scores_test.csv", "knn_op.json", "report_knn.json",
                           "projection_manifest.csv", "tsne.csv"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }
  expect_identities(r.test);
  expect_identities(r.validation);
  ASSERT_TRUE(r.knn_test.has_value());
  expect_identities(*r.knn_test);

  const json report = json::parse(read_file(out / "report.json"));
  const json op = json::parse(read_file(out / "op.json"));
  EXPECT_EQ(report["operating_point"]["threshold"], op["threshold"]);
  EXPECT_EQ(report["subset"], "test");
  EXPECT_EQ(report["provenance"]["scorer"], "sae_mse");
  EXPECT_EQ(report["provenance"]["model_id"], fnv1a_hex(read_file(out / "model.sae")));
  EXPECT_EQ(report["provenance"]["split_id"], fnv1a_hex(read_file(out / "split.csv")));
  EXPECT_EQ(r.validation.operating_point.threshold, r.test.operating_point.threshold);

  // The tsne file covers every slide of the corpus.
  const auto rows = parse_csv(read_file(out / "tsne.csv"), "tsne").rows;
  EXPECT_EQ(rows.size(), 16u * 6 * 2);
}

TEST(Pipeline, RerunIsByteIdenticalAcrossThreadCounts) {
  testkit::TempDir corpus("pipe_corpus2"), a("pipe_a"), b("pipe_b");
  generate_corpus(testkit::small_synth(4), corpus.path());
  auto cfg = testkit::small_pipeline(corpus.path(), a.path());
  cfg.run_projection = false;
  const auto before = thread_count();
  set_thread_count(1);
  run_pipeline(cfg);
  cfg.out_dir = b.path();
  set_thread_count(3);
  run_pipeline(cfg);
  set_thread_count(before);
  for (const char* name : {"split.csv", "model.sae", "trace.csv", "scores_test.csv", "op.json", "report.json",
                           "report_knn.json"}) {
    EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
  }
}

TEST(Pipeline, MissingInputIsIoError) {
  testkit::TempDir out("pipe_missing");
  auto cfg = testkit::small_pipeline(out / "nowhere", out / "run");
  try {
    run_pipeline(cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(Pipeline, StageErrorsNameTheStage) {
  testkit::TempDir corpus("pipe_bad"), out("pipe_bad_out");
  generate_corpus(testkit::small_synth(5), corpus.path());
  // Corrupt one embedding: ingest must fail with a format error.
  const auto first = fs::directory_iterator(corpus / "embeddings")->path();
  write_file(first, "XXXX0000");
  try {
    run_pipeline(testkit::small_pipeline(corpus.path(), out.path()));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("ingest: ", 0), 0u) << e.what();
    EXPECT_NE(e.kind(), ErrorKind::io);
  }
}

TEST(Pipeline, ConfigKeys) {
  const auto kv = KeyValueConfig::parse(
      "pooling = max\nrun_knn = false\nepochs = 3\nsplit_seed = 9\ntsne_perplexity = 7\ntop_compounds = 4\n"
      "projection_label = scale\n",
      "t");
  const auto c = PipelineConfig::from(kv);
  kv.check_all_used();
  EXPECT_EQ(c.pooling, PoolMethod::max);
  EXPECT_FALSE(c.run_knn);
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.split.seed, 9u);
  EXPECT_EQ(c.tsne.perplexity, 7);
  EXPECT_EQ(c.top_compounds, 4u);
  EXPECT_EQ(c.projection_label, ProjectionLabel::scale);
  EXPECT_THROW(PipelineConfig::from(KeyValueConfig::parse("pooling = median\n", "t")), Error);
}

TEST(Cli, ExitCodes) {
  testkit::TempDir dir("cli_codes");
  EXPECT_EQ(testkit::run_command(cli + " --help > /dev/null"), 0);
  EXPECT_EQ(testkit::run_command(cli + " > /dev/null 2>&1"), 2);
  EXPECT_EQ(testkit::run_command(cli + " bogus > /dev/null 2>&1"), 2);
  EXPECT_EQ(testkit::run_command(cli + " ingest --manifest " + (dir / "none.csv").string() +
                                 " --diagnoses " + (dir / "none.csv").string() + " --taxonomy " + (dir / "none.csv").string() +
                                 " > /dev/null 2>&1"),
            4);
  write_file(dir / "bad.cfg", "dim = 4\nmanifold_rank = 9\n");
  EXPECT_EQ(testkit::run_command(cli + " --config " + (dir / "bad.cfg").string() + " synth --out " +
                                 (dir / "s").string() + " > /dev/null 2>&1"),
            2);
  write_file(dir / "typo.cfg", "dimm = 4\n");
  EXPECT_EQ(testkit::run_command(cli + " --config " + (dir / "typo.cfg").string() + " synth --out " +
                                 (dir / "s").string() + " > /dev/null 2>&1"),
            2);
}

TEST(Cli, StagesMatchInProcessPipeline) {
  testkit::TempDir corpus("cli_corpus"), out("cli_pipe"), stages("cli_stages");
  generate_corpus(testkit::small_synth(6), corpus.path());
  const auto cfg = testkit::small_pipeline(corpus.path(), out.path());
  const std::string cfg_text =
      "trials = 50\nepochs = 15\nlearning_rate = 0.001\nhidden_dim = 32\nlatent_dim = 8\nreduction_ratio = 4\n"
      "batch_size = 16\nsparsity_weight = 0.001\nrun_projection = false\n";
  write_file(stages / "run.cfg", cfg_text);
  const std::string inputs = " --manifest " + cfg.manifest.string() + " --diagnoses " + cfg.diagnoses.string() +
                             " --taxonomy " + cfg.taxonomy.string();
  ASSERT_EQ(testkit::run_command(cli + " --config " + (stages / "run.cfg").string() + " pipeline" + inputs +
                                 " --out " + out.path().string() + " > /dev/null"),
            0);
  const auto s = [&](const std::string& f) { return (stages / f).string(); };
  // The same configuration, driven stage by stage.
  write_file(stages / "split.cfg", "trials = 50\n");
  ASSERT_EQ(testkit::run_command(cli + " --config " + s("split.cfg") + " split --manifest " + cfg.manifest.string() +
                                 " --diagnoses " + cfg.diagnoses.string() + " --out " + s("split.csv") + " > /dev/null"),
            0);
  EXPECT_EQ(read_file(stages / "split.csv"), read_file(out / "split.csv"));
  for (const char* subset : {"train", "validation", "test"}) {
    const std::string name = subset;
    ASSERT_EQ(testkit::run_command(cli + " pool --manifest " + (out / (name + "_manifest.csv")).string() +
                                   " --out " + s(name + "_pooled.emb") + " > /dev/null"),
              0);
    EXPECT_EQ(read_bytes(stages / (name + "_pooled.emb")), read_bytes(out / (name + "_pooled.emb"))) << name;
  }
  write_file(stages / "train.cfg",
             "epochs = 15\nlearning_rate = 0.001\nhidden_dim = 32\nlatent_dim = 8\nreduction_ratio = 4\n"
             "batch_size = 16\nsparsity_weight = 0.001\n");
  ASSERT_EQ(testkit::run_command(cli + " --config " + s("train.cfg") + " train --train-pool " + s("train_pooled.emb") +
                                 " --val-pool " + s("validation_pooled.emb") + " --val-labels " +
                                 (out / "validation_labels.csv").string() + " --out " + s("model.sae") + " --trace " +
                                 s("trace.csv") + " > /dev/null"),
            0);
  EXPECT_EQ(read_bytes(stages / "model.sae"), read_bytes(out / "model.sae"));
  EXPECT_EQ(read_file(stages / "trace.csv"), read_file(out / "trace.csv"));
  ASSERT_EQ(testkit::run_command(cli + " score --model " + s("model.sae") + " --pool " + s("test_pooled.emb") +
                                 " --out " + s("scores_test.csv") + " > /dev/null"),
            0);
  EXPECT_EQ(read_file(stages / "scores_test.csv"), read_file(out / "scores_test.csv"));
  ASSERT_EQ(testkit::run_command(cli + " eval --scores " + s("scores_test.csv") + inputs + " --split " +
                                 s("split.csv") + " --subset test --operating-point " + (out / "op.json").string() +
                                 " --out " + s("report.json") + " > /dev/null"),
            0);
  EXPECT_EQ(read_file(stages / "report.json"), read_file(out / "report.json"));
  // Scores from the test subset are rejected when evaluated as validation.
  EXPECT_EQ(testkit::run_command(cli + " eval --scores " + s("scores_test.csv") + inputs + " --split " +
                                 s("split.csv") + " --subset validation --operating-point " +
                                 (out / "op.json").string() + " --out " + s("bad.json") + " > /dev/null 2>&1"),
            2);
}
