#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <fstream>
#include <sstream>

#include "augmetrics/augmetrics.hpp"
#include "test_support.hpp"

using namespace augmetrics;
using augmetrics::testing::TempDir;
using augmetrics::testing::textured_image;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') {
      q += "'\\''";
    } else {
      q += c;
    }
  }
  return q + "'";
}

RunResult run(const TempDir& dir, const std::vector<std::string>& args) {
  std::string cmd = shell_quote(AUGMETRICS_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  const fs::path out = dir / "stdout.txt";
  cmd += " > " + shell_quote(out.string()) + " 2> " + shell_quote((dir / "stderr.txt").string());
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  r.out.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::string meta_value(const fs::path& p, const std::string& key) {
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return "<missing>";
}

void write_features(const fs::path& p, std::uint32_t n, std::uint32_t d, std::vector<float> values) {
  write_feature_file({"pool", n, d, std::move(values)}, p);
}

/// Manifest of `per_class` textured 32x32 PNGs per label under dir/img.
fs::path image_manifest(const TempDir& dir, const std::vector<std::pair<std::string, std::size_t>>& classes,
                        std::size_t side = 32) {
  fs::create_directories(dir / "img");
  std::vector<Record> records;
  std::uint64_t seed = 1;
  for (const auto& [label, n] : classes) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = label + "_" + std::to_string(i);
      save_png(textured_image(side, side, seed++), dir / "img" / (id + ".png"));
      records.push_back({id, "img/" + id + ".png", label});
    }
  }
  const fs::path path = dir / "manifest.csv";
  save_manifest(Manifest(std::move(records)), path);
  return path;
}

/// Every regular file under root with its contents, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

}  // namespace

TEST(Cli, UsageErrors) {
  TempDir dir("cli");
  EXPECT_EQ(run(dir, {}).code, 2);
  EXPECT_EQ(run(dir, {"nonsense"}).code, 2);
  EXPECT_EQ(run(dir, {"fid", "--features-a", "x"}).code, 2);
  EXPECT_EQ(run(dir, {"similarity", "--manifest", "m", "--class-a", "a", "--out", "o", "--metric", "psnr"}).code, 2);
  const auto v = run(dir, {"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(kVersion), std::string::npos);
}

TEST(Cli, FidSameFileIsZero) {
  TempDir dir("cli");
  write_features(dir / "a.fvec", 4, 2, {0, 0, 1, 0, 0, 1, 1, 1});
  const auto r = run(dir, {"fid", "--features-a", (dir / "a.fvec").string(), "--features-b", (dir / "a.fvec").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_LE(std::abs(std::stod(r.out)), 1e-8);
}

TEST(Cli, FidMomentMatchedPair) {
  TempDir dir("cli");
  // Sample moments (0, 1) and (3, 4), exact in float32.
  write_features(dir / "a.fvec", 3, 1, {-1, 0, 1});
  write_features(dir / "b.fvec", 3, 1, {1, 3, 5});
  const auto r = run(dir, {"fid", "--features-a", (dir / "a.fvec").string(), "--features-b",
                           (dir / "b.fvec").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out), 10.0, 1e-6);
  EXPECT_NEAR(std::stod(slurp(dir / "out" / "fid.txt")), 10.0, 1e-6);
  const auto meta = dir / "out" / "run.meta";
  EXPECT_EQ(meta_value(meta, "subcommand"), "fid");
  EXPECT_EQ(meta_value(meta, "version"), kVersion);
  EXPECT_EQ(meta_value(meta, "input.features_a.sha256").size(), 64u);
}

TEST(Cli, FidErrors) {
  TempDir dir("cli");
  write_features(dir / "a.fvec", 3, 1, {-1, 0, 1});
  write_features(dir / "b.fvec", 3, 2, {1, 3, 5, 1, 2, 3});
  EXPECT_EQ(run(dir, {"fid", "--features-a", (dir / "a.fvec").string(), "--features-b", (dir / "b.fvec").string()}).code,
            3);
  EXPECT_EQ(run(dir, {"fid", "--features-a", (dir / "a.fvec").string(), "--features-b", (dir / "nope").string()}).code,
            4);
  write_file(dir / "bad.fvec", "FVEC1 garbage");
  EXPECT_EQ(run(dir, {"fid", "--features-a", (dir / "a.fvec").string(), "--features-b", (dir / "bad.fvec").string()}).code,
            4);
}

TEST(Cli, EvalIdenticalAndDiagonal) {
  TempDir dir("cli");
  write_file(dir / "truth.txt", "a\nb\nc\na\nb\n");
  write_file(dir / "p1.txt", "a\nb\nc\na\nb\n");
  write_file(dir / "p2.txt", "a\nb\nc\na\nb\n");
  const auto r = run(dir, {"eval", "--truth", (dir / "truth.txt").string(), "--pred", (dir / "p1.txt").string(),
                           (dir / "p2.txt").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir / "out" / "metrics.csv"),
            "scenario,accuracy,precision,recall,f1,specificity,mcc\np1,1,1,1,1,1,1\np2,1,1,1,1,1,1\n");
  EXPECT_EQ(slurp(dir / "out" / "pvalues.csv"), format_pvalue_table({"p1", "p2"}, {{1.0, 1.0}, {1.0, 1.0}}));
  EXPECT_NE(slurp(dir / "out" / "stuart_maxwell.csv").find("p1,p2,0,"), std::string::npos);
}

TEST(Cli, EvalMatchesLibrary) {
  TempDir dir("cli");
  CounterRng rng(5);
  const std::vector<std::string> names{"covid", "normal", "opacity", "viral"};
  std::vector<std::size_t> t, a, b;
  std::string ts, as, bs;
  for (int i = 0; i < 400; ++i) {
    t.push_back(rng.below(4));
    a.push_back(rng.uniform01() < 0.8 ? t.back() : rng.below(4));
    b.push_back(rng.uniform01() < 0.6 ? t.back() : rng.below(4));
    ts += names[t.back()] + "\n";
    as += names[a.back()] + "\n";
    bs += names[b.back()] + "\n";
  }
  write_file(dir / "truth.txt", ts);
  write_file(dir / "a.txt", as);
  write_file(dir / "b.txt", bs);
  const auto r = run(dir, {"eval", "--truth", (dir / "truth.txt").string(), "--pred", (dir / "a.txt").string(),
                           (dir / "b.txt").string(), "--name", "base", "--name", "aug", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  const std::string expected = std::string(kReportHeader) + "\n" + format_report_row("base", metrics(confusion(t, a, 4))) +
                               "\n" + format_report_row("aug", metrics(confusion(t, b, 4))) + "\n";
  EXPECT_EQ(slurp(dir / "out" / "metrics.csv"), expected);
  const auto sm = stuart_maxwell({4, a, b});
  char row[128];
  std::snprintf(row, sizeof(row), "base,aug,%.10g,%zu,%.10g\n", sm.chi2, sm.df, sm.pvalue);
  EXPECT_EQ(slurp(dir / "out" / "stuart_maxwell.csv"), std::string("a,b,chi2,df,pvalue\n") + row);
}

TEST(Cli, EvalLengthMismatchIsContractError) {
  TempDir dir("cli");
  write_file(dir / "truth.txt", "a\nb\n");
  write_file(dir / "p.txt", "a\n");
  EXPECT_EQ(run(dir, {"eval", "--truth", (dir / "truth.txt").string(), "--pred", (dir / "p.txt").string()}).code, 3);
}

TEST(Cli, AdaSimTrajectory) {
  TempDir dir("cli");
  std::string signs;
  for (int i = 0; i < 120; ++i) signs += "1.0\n";
  write_file(dir / "signs.txt", signs);
  const auto r = run(dir, {"ada-sim", "--signs", (dir / "signs.txt").string(), "--step", "0.01", "--out",
                           (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  const auto csv = slurp(dir / "out" / "trajectory.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,r_t,p");
  EXPECT_EQ(line_count(dir / "out" / "trajectory.csv"), 121u);
  std::istringstream in(csv);
  std::string line;
  std::size_t first_one = 0;
  while (std::getline(in, line)) {
    if (first_one == 0 && line.size() > 2 && line.substr(line.rfind(',') + 1) == "1") {
      first_one = std::stoul(line.substr(0, line.find(',')));
    }
  }
  EXPECT_EQ(first_one, 100u);
}

TEST(Cli, AdaSimFromConfigFile) {
  TempDir dir("cli");
  write_file(dir / "signs.txt", "1\n1\n");
  write_file(dir / "run.ini", "[ada-sim]\nsigns = " + (dir / "signs.txt").string() + "\nstep = 0.5\n");
  const auto r = run(dir, {"--config", (dir / "run.ini").string(), "ada-sim"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "step,r_t,p\n1,1,0.5\n2,1,1\n");
  // Flags take precedence over the file.
  EXPECT_EQ(run(dir, {"--config", (dir / "run.ini").string(), "ada-sim", "--step", "0.25"}).out,
            "step,r_t,p\n1,1,0.25\n2,1,0.5\n");
}

TEST(Cli, AdaSimRejectsOutOfRange) {
  TempDir dir("cli");
  write_file(dir / "signs.txt", "0.5\n1.5\n");
  EXPECT_EQ(run(dir, {"ada-sim", "--signs", (dir / "signs.txt").string()}).code, 3);
}

TEST(Cli, PreprocessEmptyManifest) {
  TempDir dir("cli");
  write_file(dir / "manifest.csv", "id,path,class,split,origin,annotated\n");
  fs::create_directories(dir / "masks");
  const auto r = run(dir, {"preprocess", "--manifest", (dir / "manifest.csv").string(), "--masks",
                           (dir / "masks").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(load_manifest(dir / "out" / "manifest.csv").size(), 0u);
}

TEST(Cli, PreprocessImageAndMissingMask) {
  TempDir dir("cli");
  fs::create_directories(dir / "img");
  fs::create_directories(dir / "masks");
  save_png(textured_image(256, 256, 1), dir / "img" / "a.png");
  save_png(textured_image(64, 64, 2), dir / "img" / "b.png");
  save_png(GrayImage(256, 256, 1.0), dir / "masks" / "a.png");
  save_manifest(Manifest({{"a", "img/a.png", "covid"}, {"b", "img/b.png", "covid"}}), dir / "manifest.csv");
  const auto r = run(dir, {"preprocess", "--manifest", (dir / "manifest.csv").string(), "--masks",
                           (dir / "masks").string(), "--out", (dir / "out").string(), "--jobs", "2"});
  EXPECT_EQ(r.code, 4);
  const auto img = load_png(dir / "out" / "a.png");
  EXPECT_EQ(img.width(), 128u);
  EXPECT_EQ(img.height(), 128u);
  const auto m = load_manifest(dir / "out" / "manifest.csv");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.records()[0].path, "a.png");
  const auto failures = slurp(dir / "out" / "failures.csv");
  EXPECT_EQ(failures.rfind("id,error\nb,", 0), 0u);
}

TEST(Cli, SimilarityIntraAndInterCounts) {
  TempDir dir("cli");
  const auto manifest = image_manifest(dir, {{"a", 300}, {"b", 300}});
  const auto r = run(dir, {"similarity", "--manifest", manifest.string(), "--class-a", "a", "--class-b", "b", "--n",
                           "300", "--out", (dir / "out").string(), "--seed", "3", "--jobs", "4"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(line_count(dir / "out" / "intra_rmse.values"), 44850u);
  EXPECT_EQ(line_count(dir / "out" / "inter_rmse.values"), 90000u);
  EXPECT_EQ(slurp(dir / "out" / "intra_rmse.csv").rfind("bin_lo,bin_hi,count,density\n", 0), 0u);
  EXPECT_EQ(line_count(dir / "out" / "inter_rmse.csv"), 51u);
  EXPECT_EQ(meta_value(dir / "out" / "run.meta", "seed"), "3");
  // Intra and inter histograms share their edges.
  const auto first_col = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, cols;
    while (std::getline(in, line)) cols += line.substr(0, line.find(',', line.find(',') + 1)) + "\n";
    return cols;
  };
  EXPECT_EQ(first_col(slurp(dir / "out" / "intra_rmse.csv")), first_col(slurp(dir / "out" / "inter_rmse.csv")));
}

TEST(Cli, SimilarityIntraOnlyAndSreDrops) {
  TempDir dir("cli");
  fs::create_directories(dir / "img");
  std::vector<Record> records;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "x" + std::to_string(i);
    save_png(i < 2 ? GrayImage(8, 8, 0.5) : textured_image(8, 8, i), dir / "img" / (id + ".png"));
    records.push_back({id, "img/" + id + ".png", "c"});
  }
  save_manifest(Manifest(records), dir / "manifest.csv");
  const auto r = run(dir, {"similarity", "--manifest", (dir / "manifest.csv").string(), "--class-a", "c", "--n", "4",
                           "--metric", "sre", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "intra_sre.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "inter_sre.csv"));
  EXPECT_EQ(meta_value(dir / "out" / "intra_sre.meta", "dropped"), "1");
  EXPECT_EQ(line_count(dir / "out" / "intra_sre.values"), 5u);
}

TEST(Cli, SimilarityInsufficientImages) {
  TempDir dir("cli");
  const auto manifest = image_manifest(dir, {{"a", 3}}, 8);
  EXPECT_EQ(run(dir, {"similarity", "--manifest", manifest.string(), "--class-a", "a", "--n", "4", "--out",
                      (dir / "out").string()})
                .code,
            3);
}

TEST(Cli, SimilarityByteIdenticalAcrossJobs) {
  TempDir dir("cli");
  const auto manifest = image_manifest(dir, {{"a", 40}, {"b", 40}});
  for (const char* jobs : {"1", "8"}) {
    const auto r = run(dir, {"similarity", "--manifest", manifest.string(), "--class-a", "a", "--class-b", "b",
                             "--metric", "ssim", "--n", "40", "--seed", "9", "--jobs", jobs, "--out",
                             (dir / ("out" + std::string(jobs))).string()});
    ASSERT_EQ(r.code, 0);
  }
  EXPECT_EQ(tree(dir / "out1"), tree(dir / "out8"));
}

TEST(Cli, BalanceDuplication) {
  TempDir dir("cli");
  const auto manifest = image_manifest(dir, {{"a", 5}, {"b", 2}}, 8);
  const auto r = run(dir, {"balance", "--manifest", manifest.string(), "--mode", "dup", "--seed", "1", "--out",
                           (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  const auto m = load_manifest(dir / "out" / "manifest.csv");
  EXPECT_EQ(m.class_counts(Split::Train), (std::map<std::string, std::size_t>{{"a", 5}, {"b", 5}}));
  for (const auto& rec : m.records()) EXPECT_TRUE(fs::exists(resolve_path(dir / "out", rec.path))) << rec.path;
}

TEST(Cli, BalanceAugmentationIndependentOfJobs) {
  TempDir dir("cli");
  const auto manifest = image_manifest(dir, {{"a", 6}, {"b", 2}, {"c", 3}}, 16);
  for (const char* jobs : {"1", "8"}) {
    const auto r = run(dir, {"balance", "--manifest", manifest.string(), "--mode", "aug", "--seed", "4", "--jobs",
                             jobs, "--out", (dir / ("out" + std::string(jobs))).string()});
    ASSERT_EQ(r.code, 0);
  }
  const auto m = load_manifest(dir / "out1" / "manifest.csv");
  EXPECT_EQ(m.class_counts(Split::Train), (std::map<std::string, std::size_t>{{"a", 6}, {"b", 6}, {"c", 6}}));
  EXPECT_TRUE(fs::exists(dir / "out1" / "b_synth_0.png"));
  EXPECT_EQ(tree(dir / "out1"), tree(dir / "out8"));
}

TEST(Cli, GridSearchExternalScorer) {
  TempDir dir("cli");
  // Arguments: rotation shift stretch zoom brightness; peak at (5, 15, 40).
  write_file(dir / "score.sh",
             "awk -v r=\"$1\" -v z=\"$4\" -v b=\"$5\" "
             "'BEGIN { print -((r - 5)^2 + (z * 100 - 15)^2 + (b * 100 - 40)^2) }'\n");
  const auto r = run(dir, {"grid-search", "--scorer", "cmd:sh " + (dir / "score.sh").string(), "--out",
                           (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(line_count(dir / "out" / "grid.csv"), 28u);
  const auto best = dir / "out" / "best.txt";
  EXPECT_EQ(meta_value(best, "geo"), "5");
  EXPECT_EQ(meta_value(best, "zoom"), "15");
  EXPECT_EQ(meta_value(best, "bright"), "40");
  EXPECT_EQ(meta_value(best, "evaluations"), "27");
}

TEST(Cli, GridSearchProxyScorer) {
  TempDir dir("cli");
  const auto manifest = image_manifest(dir, {{"a", 4}}, 16);
  const auto r = run(dir, {"grid-search", "--manifest", manifest.string(), "--class", "a", "--n", "4", "--grid",
                           "geo=0,5;zoom=10;bright=30", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(line_count(dir / "out" / "grid.csv"), 3u);
  EXPECT_EQ(meta_value(dir / "out" / "best.txt", "evaluations"), "2");
  EXPECT_EQ(run(dir, {"grid-search", "--out", (dir / "o2").string()}).code, 2);
  EXPECT_EQ(run(dir, {"grid-search", "--grid", "geo=;zoom=1;bright=2", "--scorer", "cmd:true", "--out",
                      (dir / "o3").string()})
                .code,
            3);
}
