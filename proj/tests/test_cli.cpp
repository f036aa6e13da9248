#include "support/oracles.hpp"

#include "cli.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

using namespace vcdet;
using vcdet::testing::slurp;
using vcdet::testing::TempDir;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun vcdet_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct CliScene {
  TempDir dir{"cli"};
  std::string manifest;
  CliScene() {
    const CliRun r = vcdet_cli({"synth", "--out", (dir / "scene").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    manifest = (dir / "scene" / "manifest.json").string();
  }
};

CliScene& scene() {
  static CliScene s;
  return s;
}

}  // namespace

TEST(Cli, HelpAndUsage) {
  EXPECT_EQ(vcdet_cli({"--help"}).code, 0);
  EXPECT_EQ(vcdet_cli({"detect", "--help"}).code, 0);
  EXPECT_EQ(vcdet_cli({}).code, 3);
  EXPECT_EQ(vcdet_cli({"frobnicate"}).code, 3);
  EXPECT_EQ(vcdet_cli({"detect", "--scene", scene().manifest}).code, 3);  // --out missing
}

TEST(Cli, BadConfigValues) {
  const auto out = (scene().dir / "x.json").string();
  EXPECT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", out, "--tau-rate", "2"}).code, 3);
  EXPECT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", out, "--merge-schedule", "3,1"}).code, 3);
  EXPECT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", out, "--tau-occ", "abc"}).code, 3);
  EXPECT_EQ(vcdet_cli({"pipeline", "--scene", scene().manifest, "--out", out, "--scales", ""}).code, 3);
}

TEST(Cli, MissingInputIsInputError) {
  const CliRun r = vcdet_cli({"detect", "--scene", "/nonexistent/manifest.json", "--out", "/tmp/never.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("manifest"), std::string::npos);
}

TEST(Cli, ProviderFailureExitCode) {
  const CliRun r = vcdet_cli({"pipeline", "--scene", scene().manifest, "--out", (scene().dir / "p.json").string(),
                           "--provider", "cmd:/nonexistent/sidecar"});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST(Cli, PipelineWritesDetectionsAndMetadata) {
  const auto out = scene().dir / "pipe.json";
  const CliRun r = vcdet_cli({"pipeline", "--scene", scene().manifest, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const json dets = json::parse(slurp(out));
  ASSERT_EQ(dets.size(), 3u);
  std::set<std::string> labels;
  for (const auto& d : dets) labels.insert(d["label"].get<std::string>());
  EXPECT_EQ(labels, (std::set<std::string>{"chair", "table", "cabinet"}));
  const json meta = json::parse(slurp(out.string() + ".meta.json"));
  EXPECT_EQ(meta["command"], "pipeline");
  EXPECT_TRUE(meta["inputs"]["scene"].contains("manifest"));
  EXPECT_FALSE(meta["config"].contains("jobs"));
}

TEST(Cli, DetectThenLabelMatchesPipeline) {
  const auto boxes = scene().dir / "boxes.json";
  const auto labeled = scene().dir / "labeled.json";
  const auto pipe = scene().dir / "pipe2.json";
  ASSERT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", boxes.string()}).code, 0);
  for (const auto& d : json::parse(slurp(boxes))) {
    EXPECT_EQ(d["label"], "object");
    EXPECT_EQ(d["score"], 1.0);
    EXPECT_EQ(d["scene_id"], "synthetic");
  }
  ASSERT_EQ(vcdet_cli({"label", "--scene", scene().manifest, "--boxes", boxes.string(), "--out", labeled.string()}).code,
            0);
  ASSERT_EQ(vcdet_cli({"pipeline", "--scene", scene().manifest, "--out", pipe.string()}).code, 0);
  EXPECT_EQ(slurp(labeled), slurp(pipe));
}

TEST(Cli, DetectIsByteIdenticalAcrossRunsAndJobs) {
  const auto a = scene().dir / "a.json", b = scene().dir / "b.json", c = scene().dir / "c.json";
  ASSERT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", a.string()}).code, 0);
  ASSERT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", b.string()}).code, 0);
  ASSERT_EQ(vcdet_cli({"detect", "--scene", scene().manifest, "--out", c.string(), "--jobs", "4"}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a), slurp(c));
  EXPECT_EQ(slurp(a.string() + ".meta.json"), slurp(c.string() + ".meta.json"));
}

TEST(Cli, EvalMapAndBinary) {
  const auto pipe = scene().dir / "eval_pipe.json";
  const auto gt = scene().dir / "scene" / "gt.json";
  ASSERT_EQ(vcdet_cli({"pipeline", "--scene", scene().manifest, "--out", pipe.string()}).code, 0);
  CliRun r = vcdet_cli({"eval", "--preds", pipe.string(), "--gt", gt.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_DOUBLE_EQ(report["map"]["0.25"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["map"]["0.5"].get<double>(), 1.0);

  r = vcdet_cli({"eval", "--preds", pipe.string(), "--gt", gt.string(), "--protocol", "binary", "--conf", "0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json bin = json::parse(r.out);
  EXPECT_DOUBLE_EQ(bin["results"][0]["precision"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(bin["results"][0]["recall"].get<double>(), 1.0);

  EXPECT_EQ(vcdet_cli({"eval", "--preds", pipe.string(), "--gt", gt.string(), "--protocol", "binary"}).code, 3);
}

TEST(Cli, EvalSceneMismatchListsIds) {
  const auto preds = scene().dir / "mismatch.json";
  std::ofstream(preds) << R"({"other_scene": []})";
  const CliRun r = vcdet_cli({"eval", "--preds", preds.string(), "--gt", (scene().dir / "scene" / "gt.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("other_scene"), std::string::npos);
  EXPECT_NE(r.err.find("synthetic"), std::string::npos);
}

TEST(Cli, ExportPseudo) {
  TempDir dir("cli_export");
  ASSERT_EQ(vcdet_cli({"synth", "--kind", "micro", "--seed", "3", "--out", (dir / "scenes" / "m3").string()}).code, 0);
  ASSERT_EQ(vcdet_cli({"synth", "--out", (dir / "scenes" / "three").string()}).code, 0);
  const CliRun r = vcdet_cli({"export-pseudo", "--scene-dir", (dir / "scenes").string(), "--out", (dir / "out").string(),
                           "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(dir / "out" / "synthetic.json")).size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "micro_3.json"));

  std::filesystem::create_directories(dir / "empty");
  EXPECT_EQ(vcdet_cli({"export-pseudo", "--scene-dir", (dir / "empty").string(), "--out", (dir / "o2").string()}).code,
            2);
}
