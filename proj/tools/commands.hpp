#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "augmetrics/augment.hpp"
#include "augmetrics/simmetrics.hpp"

namespace augmetrics::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitContract = 3;
inline constexpr int kExitIo = 4;

struct PreprocessConfig {
  std::filesystem::path manifest;
  std::filesystem::path masks;
  std::size_t target = 128;
  std::filesystem::path out;
  std::size_t jobs = 1;
};

struct SimilarityConfig {
  std::filesystem::path manifest;
  std::string class_a;
  std::string class_b;  // empty: same as class_a
  std::string origin_a = "any";
  std::string origin_b = "any";
  std::string split = "any";
  std::string metric = "rmse";
  std::size_t n = 300;
  std::size_t bins = 50;
  SsimParams ssim{};
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path out;
};

struct FidConfig {
  std::filesystem::path features_a;
  std::filesystem::path features_b;
  std::filesystem::path out;  // optional
};

struct BalanceConfig {
  std::filesystem::path manifest;
  std::string mode = "dup";
  AugmentParams params = AugmentParams::defaults();
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path out;
};

struct EvalConfig {
  std::filesystem::path truth;
  std::vector<std::filesystem::path> predictions;
  std::vector<std::string> names;
  std::filesystem::path out;  // optional
};

struct AdaSimConfig {
  std::filesystem::path signs;
  double target = 0.6;
  double step = 0.01;
  std::size_t window = 4;
  std::filesystem::path out;  // optional
};

struct GridSearchConfig {
  std::filesystem::path manifest;
  std::string label;
  std::string grid = "geo=0,5,10;zoom=10,15,20;bright=30,40,50";
  std::string scorer = "proxy";
  std::size_t n = 16;
  SsimParams ssim{};
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path out;
};

int cmd_preprocess(const PreprocessConfig& cfg);
int cmd_similarity(const SimilarityConfig& cfg);
int cmd_fid(const FidConfig& cfg);
int cmd_balance(const BalanceConfig& cfg);
int cmd_eval(const EvalConfig& cfg);
int cmd_ada_sim(const AdaSimConfig& cfg);
int cmd_grid_search(const GridSearchConfig& cfg);

/// Parses "geo=0,5,10;zoom=10,15,20;bright=30,40,50".
ParamGrid parse_grid(const std::string& spec);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace augmetrics::cli
