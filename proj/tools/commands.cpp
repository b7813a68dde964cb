#include "commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <utility>

#include "augmetrics/augmetrics.hpp"

namespace augmetrics::cli {

namespace fs = std::filesystem;

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  require(out.good(), ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::error_code ec;
  require(fs::is_regular_file(path, ec), ErrorCode::FileNotFound, "'" + path.string() + "' not found");
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::IoError, "cannot create directory '" + dir.string() + "'");
}

fs::path manifest_dir(const fs::path& manifest) {
  return fs::absolute(manifest).parent_path();
}

std::optional<Origin> parse_origin_filter(const std::string& token) {
  if (token == "any") return std::nullopt;
  auto o = parse_origin(token);
  require(o.has_value(), ErrorCode::InvalidArgument, "unknown origin '" + token + "'");
  return o;
}

std::optional<Split> parse_split_filter(const std::string& token) {
  if (token == "any") return std::nullopt;
  auto s = parse_split(token);
  require(s.has_value(), ErrorCode::InvalidArgument, "unknown split '" + token + "'");
  return s;
}

/// Ordered key=value run metadata written as run.meta.
class RunMeta {
 public:
  explicit RunMeta(const std::string& subcommand) {
    add("tool", "augmetrics");
    add("version", kVersion);
    add("subcommand", subcommand);
  }

  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_real(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

  void add_input(const std::string& name, const fs::path& path) {
    add("input." + name, path.generic_string());
    add("input." + name + ".sha256", file_digest(path));
  }

  void add_ssim(const SsimParams& p) {
    add("ssim.k1", p.k1);
    add("ssim.k2", p.k2);
    add("ssim.dynamic_range", p.dynamic_range);
    add("ssim.window", static_cast<std::uint64_t>(p.window));
    add("ssim.stride", static_cast<std::uint64_t>(p.stride));
  }

  void add_augment(const AugmentParams& p) {
    add("augment.order", "rotate,shift,stretch,zoom,brightness");
    add("augment.rotation_max_deg", p.rotation_max_deg);
    add("augment.shift_max_frac", p.shift_max_frac);
    add("augment.stretch_max_frac", p.stretch_max_frac);
    add("augment.zoom_max_frac", p.zoom_max_frac);
    add("augment.brightness_max_frac", p.brightness_max_frac);
  }

  void write(const fs::path& dir) const {
    std::string text;
    for (const auto& [k, v] : entries_) text += k + "=" + v + "\n";
    write_text(dir / "run.meta", text);
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_binary_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) == 1 &&
              EVP_DigestFinal_ex(ctx.get(), digest, &length) == 1,
          ErrorCode::IoError, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

ParamGrid parse_grid(const std::string& spec) {
  ParamGrid grid;
  std::stringstream groups(spec);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    const auto eq = group.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidArgument, "grid group '" + group + "' lacks '='");
    const std::string axis = group.substr(0, eq);
    std::vector<double> levels;
    std::stringstream values(group.substr(eq + 1));
    std::string token;
    while (std::getline(values, token, ',')) {
      try {
        std::size_t used = 0;
        levels.push_back(std::stod(token, &used));
        require(used == token.size(), ErrorCode::InvalidArgument, "bad grid value '" + token + "'");
      } catch (const std::logic_error&) {
        fail(ErrorCode::InvalidArgument, "bad grid value '" + token + "'");
      }
    }
    if (axis == "geo") {
      grid.geo_levels = levels;
    } else if (axis == "zoom") {
      grid.zoom_levels = levels;
    } else if (axis == "bright") {
      grid.brightness_levels = levels;
    } else {
      fail(ErrorCode::InvalidArgument, "unknown grid axis '" + axis + "'");
    }
  }
  require(grid.size() > 0, ErrorCode::InvalidArgument, "grid '" + spec + "' has an empty axis");
  return grid;
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const PreprocessConfig& cfg) {
  const Manifest m = load_manifest(cfg.manifest);
  const fs::path base = manifest_dir(cfg.manifest);
  ensure_dir(cfg.out);

  std::vector<std::optional<Error>> failures(m.size());
  parallel_for(m.size(), cfg.jobs, [&](std::size_t i) {
    const Record& r = m.records()[i];
    try {
      const GrayImage img = load_png(resolve_path(base, r.path));
      const BinaryMask mask = load_mask(cfg.masks / (r.id + ".png"));
      save_png(preprocess(img, mask, cfg.target), cfg.out / (r.id + ".png"));
    } catch (const Error& e) {
      failures[i] = e;
    }
  }, 4);

  std::vector<Record> kept;
  std::string report = "id,error\n";
  bool io_failure = false;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (failures[i]) {
      ++failed;
      io_failure = io_failure || is_io_error(failures[i]->code());
      std::string what = failures[i]->what();
      std::replace(what.begin(), what.end(), ',', ';');
      report += m.records()[i].id + "," + what + "\n";
      continue;
    }
    Record r = m.records()[i];
    r.path = r.id + ".png";
    kept.push_back(std::move(r));
  }
  save_manifest(Manifest(std::move(kept)), cfg.out / "manifest.csv");
  write_text(cfg.out / "failures.csv", report);

  RunMeta meta("preprocess");
  meta.add_input("manifest", cfg.manifest);
  meta.add("masks", cfg.masks.generic_string());
  meta.add("target", static_cast<std::uint64_t>(cfg.target));
  meta.add("seed", std::uint64_t{0});
  meta.add("failures", static_cast<std::uint64_t>(failed));
  meta.write(cfg.out);

  if (failed > 0) {
    std::cerr << "preprocess: " << failed << " of " << m.size() << " records failed, see "
              << (cfg.out / "failures.csv").string() << "\n";
    return io_failure ? kExitIo : kExitContract;
  }
  return kExitOk;
}

int cmd_similarity(const SimilarityConfig& cfg) {
  const auto metric = parse_metric(cfg.metric);
  require(metric.has_value(), ErrorCode::InvalidArgument, "unknown metric '" + cfg.metric + "'");
  const Manifest m = load_manifest(cfg.manifest);
  const fs::path base = manifest_dir(cfg.manifest);
  const std::string class_b = cfg.class_b.empty() ? cfg.class_a : cfg.class_b;
  const auto split_filter = parse_split_filter(cfg.split);
  const auto origin_a = parse_origin_filter(cfg.origin_a);
  const auto origin_b = parse_origin_filter(cfg.origin_b);
  ensure_dir(cfg.out);

  const ImageLoader loader = [&](const std::string& id) {
    const Record* r = m.find(id);
    require(r != nullptr, ErrorCode::InvalidArgument, "unknown record id '" + id + "'");
    return load_png(resolve_path(base, r->path));
  };

  PairOptions opt;
  opt.metric = *metric;
  opt.ssim = cfg.ssim;
  opt.jobs = cfg.jobs;

  // One draw per (class, filters, seed), shared by every metric.
  const auto ids_a = sample_images(m, cfg.class_a, cfg.n, cfg.seed, split_filter, origin_a);
  SimilarityDistribution intra = intra_similarity(ids_a, loader, opt);
  intra.seed = cfg.seed;

  const bool inter_run = class_b != cfg.class_a || cfg.origin_a != cfg.origin_b;
  std::optional<SimilarityDistribution> inter;
  if (inter_run) {
    const auto ids_b = sample_images(m, class_b, cfg.n, cfg.seed, split_filter, origin_b);
    inter = inter_similarity(ids_a, ids_b, loader, opt);
    inter->seed = cfg.seed;
  }

  std::vector<const SimilarityDistribution*> pooled{&intra};
  if (inter) pooled.push_back(&*inter);
  const auto edges = uniform_edges(pooled, cfg.bins);
  const std::string suffix = std::string(to_string(*metric));
  export_distribution(intra, histogram(intra.values, edges), cfg.out, "intra_" + suffix);
  if (inter) export_distribution(*inter, histogram(inter->values, edges), cfg.out, "inter_" + suffix);

  RunMeta meta("similarity");
  meta.add_input("manifest", cfg.manifest);
  meta.add("class_a", cfg.class_a);
  meta.add("class_b", class_b);
  meta.add("origin_a", cfg.origin_a);
  meta.add("origin_b", cfg.origin_b);
  meta.add("split", cfg.split);
  meta.add("metric", suffix);
  meta.add("n", static_cast<std::uint64_t>(cfg.n));
  meta.add("bins", static_cast<std::uint64_t>(cfg.bins));
  meta.add_ssim(cfg.ssim);
  meta.add("seed", cfg.seed);
  meta.add("intra.count", static_cast<std::uint64_t>(intra.values.size()));
  meta.add("intra.dropped", static_cast<std::uint64_t>(intra.dropped));
  if (inter) {
    meta.add("inter.count", static_cast<std::uint64_t>(inter->values.size()));
    meta.add("inter.dropped", static_cast<std::uint64_t>(inter->dropped));
  }
  meta.write(cfg.out);

  std::cout << "intra_" << suffix << ": " << intra.values.size() << " values, " << intra.dropped << " dropped\n";
  if (inter) {
    std::cout << "inter_" << suffix << ": " << inter->values.size() << " values, " << inter->dropped
              << " dropped\n";
  }
  return kExitOk;
}

int cmd_fid(const FidConfig& cfg) {
  const FeatureFile a = read_feature_file(cfg.features_a);
  const FeatureFile b = read_feature_file(cfg.features_b);
  const double value = fid(a.to_feature_set(), b.to_feature_set());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  std::cout << buf << "\n";
  if (!cfg.out.empty()) {
    ensure_dir(cfg.out);
    write_text(cfg.out / "fid.txt", std::string(buf) + "\n");
    RunMeta meta("fid");
    meta.add_input("features_a", cfg.features_a);
    meta.add_input("features_b", cfg.features_b);
    meta.add("layer_a", a.layer_tag);
    meta.add("layer_b", b.layer_tag);
    meta.add("seed", std::uint64_t{0});
    meta.add("fid", value);
    meta.write(cfg.out);
  }
  return kExitOk;
}

int cmd_balance(const BalanceConfig& cfg) {
  const Manifest m = load_manifest(cfg.manifest);
  const fs::path base = manifest_dir(cfg.manifest);
  ensure_dir(cfg.out);

  Manifest balanced;
  if (cfg.mode == "dup") {
    balanced = balance_by_duplication(m, cfg.seed);
  } else if (cfg.mode == "aug") {
    balanced = balance_by_augmentation(m, cfg.params, cfg.seed, fs::absolute(cfg.out), cfg.jobs, base);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown balance mode '" + cfg.mode + "'");
  }
  // Relative paths are rewritten against the output directory; synthetic
  // images (written under the absolute output path) become plain filenames.
  std::vector<Record> records = balanced.records();
  const fs::path out_abs = fs::absolute(cfg.out).lexically_normal();
  for (auto& r : records) {
    const fs::path p(r.path);
    if (p.is_absolute() && r.origin != Origin::Aug) continue;
    const fs::path abs = p.is_absolute() ? p : base / p;
    r.path = abs.lexically_normal().lexically_relative(out_abs).generic_string();
  }
  const Manifest result(std::move(records));
  save_manifest(result, cfg.out / "manifest.csv");

  RunMeta meta("balance");
  meta.add_input("manifest", cfg.manifest);
  meta.add("mode", cfg.mode);
  if (cfg.mode == "aug") meta.add_augment(cfg.params);
  meta.add("seed", cfg.seed);
  meta.add("records.in", static_cast<std::uint64_t>(m.size()));
  meta.add("records.out", static_cast<std::uint64_t>(result.size()));
  meta.write(cfg.out);

  for (const auto& [label, count] : result.class_counts(Split::Train)) {
    std::cout << label << ": " << count << "\n";
  }
  return kExitOk;
}

int cmd_eval(const EvalConfig& cfg) {
  require(!cfg.predictions.empty(), ErrorCode::InvalidArgument, "at least one prediction file is required");
  require(cfg.names.empty() || cfg.names.size() == cfg.predictions.size(), ErrorCode::InvalidArgument,
          "--name must be given once per prediction file");
  const auto truth = read_lines(cfg.truth);
  std::vector<std::vector<std::string>> preds;
  for (const auto& p : cfg.predictions) {
    preds.push_back(read_lines(p));
    require(preds.back().size() == truth.size(), ErrorCode::LengthMismatch,
            "'" + p.string() + "' has " + std::to_string(preds.back().size()) + " labels, truth has " +
                std::to_string(truth.size()));
  }

  std::map<std::string, std::size_t> index;
  for (const auto& t : truth) index.emplace(t, 0);
  for (const auto& p : preds) {
    for (const auto& l : p) index.emplace(l, 0);
  }
  std::vector<std::string> labels;
  for (auto& [label, idx] : index) {
    idx = labels.size();
    labels.push_back(label);
  }
  auto encode = [&](const std::vector<std::string>& v) {
    std::vector<std::size_t> out;
    out.reserve(v.size());
    for (const auto& l : v) out.push_back(index.at(l));
    return out;
  };
  const auto y_true = encode(truth);
  std::vector<std::vector<std::size_t>> y_pred;
  for (const auto& p : preds) y_pred.push_back(encode(p));

  std::vector<std::string> names = cfg.names;
  if (names.empty()) {
    for (const auto& p : cfg.predictions) names.push_back(p.stem().string());
  }

  std::string report = std::string(kReportHeader) + "\n";
  for (std::size_t s = 0; s < y_pred.size(); ++s) {
    const MetricReport r = metrics(confusion(y_true, y_pred[s], labels.size()));
    report += format_report_row(names[s], r) + "\n";
    for (const auto& w : r.warnings) std::cerr << "warning: " << names[s] << ": zero denominator in " << w << "\n";
  }
  std::cout << report;

  std::string pvalues_csv;
  std::string pairs_csv = "a,b,chi2,df,pvalue\n";
  if (y_pred.size() >= 2) {
    std::vector<std::vector<double>> table(y_pred.size(), std::vector<double>(y_pred.size(), 1.0));
    for (std::size_t i = 0; i < y_pred.size(); ++i) {
      for (std::size_t j = i + 1; j < y_pred.size(); ++j) {
        const auto sm = stuart_maxwell({std::max<std::size_t>(labels.size(), 2), y_pred[i], y_pred[j]});
        table[i][j] = table[j][i] = sm.pvalue;
        char buf[128];
        std::snprintf(buf, sizeof(buf), ",%.10g,%zu,%.10g\n", sm.chi2, sm.df, sm.pvalue);
        pairs_csv += names[i] + "," + names[j] + buf;
      }
    }
    pvalues_csv = format_pvalue_table(names, table);
    std::cout << "\n" << pairs_csv;
  }

  if (!cfg.out.empty()) {
    ensure_dir(cfg.out);
    write_text(cfg.out / "metrics.csv", report);
    if (!pvalues_csv.empty()) {
      write_text(cfg.out / "pvalues.csv", pvalues_csv);
      write_text(cfg.out / "stuart_maxwell.csv", pairs_csv);
    }
    RunMeta meta("eval");
    meta.add_input("truth", cfg.truth);
    for (std::size_t i = 0; i < cfg.predictions.size(); ++i) meta.add_input("pred." + names[i], cfg.predictions[i]);
    meta.add("labels", detail::join(labels, ';'));
    meta.add("averaging", "macro");
    meta.add("seed", std::uint64_t{0});
    meta.write(cfg.out);
  }
  return kExitOk;
}

int cmd_ada_sim(const AdaSimConfig& cfg) {
  AdaController ada(cfg.target, cfg.step, cfg.window);
  std::string csv = "step,r_t,p\n";
  std::size_t step = 0;
  for (const auto& line : read_lines(cfg.signs)) {
    if (line.empty()) continue;
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(line, &used);
      require(used == line.size(), ErrorCode::ParseError, "line " + std::to_string(step + 1) + ": '" + line + "'");
    } catch (const std::logic_error&) {
      fail(ErrorCode::ParseError, "line " + std::to_string(step + 1) + ": '" + line + "'");
    }
    const double p = ada.observe(value);
    csv += std::to_string(++step) + "," + format_real(ada.r_t()) + "," + format_real(p) + "\n";
  }
  if (cfg.out.empty()) {
    std::cout << csv;
    return kExitOk;
  }
  ensure_dir(cfg.out);
  write_text(cfg.out / "trajectory.csv", csv);
  RunMeta meta("ada-sim");
  meta.add_input("signs", cfg.signs);
  meta.add("target", cfg.target);
  meta.add("step", cfg.step);
  meta.add("window", static_cast<std::uint64_t>(cfg.window));
  meta.add("seed", std::uint64_t{0});
  meta.write(cfg.out);
  return kExitOk;
}

namespace {

/// Runs `command` with the five parameters appended and parses the last
/// nonempty stdout line as the score.
double external_score(const std::string& command, const AugmentParams& p) {
  std::string full = command;
  for (double v : {p.rotation_max_deg, p.shift_max_frac, p.stretch_max_frac, p.zoom_max_frac, p.brightness_max_frac}) {
    full += " " + format_real(v);
  }
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(full.c_str(), "r"), pclose);
  require(pipe != nullptr, ErrorCode::IoError, "cannot run scorer '" + command + "'");
  std::string output;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe.get()) != nullptr) output += buf;
  const int status = pclose(pipe.release());
  require(status == 0, ErrorCode::IoError, "scorer '" + command + "' exited with status " + std::to_string(status));
  std::istringstream lines(output);
  std::string line, last;
  while (std::getline(lines, line)) {
    if (!line.empty()) last = line;
  }
  try {
    return std::stod(last);
  } catch (const std::logic_error&) {
    fail(ErrorCode::ParseError, "scorer printed no number: '" + last + "'");
  }
}

}  // namespace

int cmd_grid_search(const GridSearchConfig& cfg) {
  const ParamGrid grid = parse_grid(cfg.grid);
  ensure_dir(cfg.out);

  std::function<double(const AugmentParams&)> score;
  std::vector<GrayImage> images;
  std::string scorer_kind;
  if (cfg.scorer == "proxy") {
    scorer_kind = "proxy";
    const Manifest m = load_manifest(cfg.manifest);
    const fs::path base = manifest_dir(cfg.manifest);
    for (const auto& id : sample_images(m, cfg.label, cfg.n, cfg.seed, std::nullopt, Origin::Real)) {
      images.push_back(load_png(resolve_path(base, m.find(id)->path)));
    }
    // Mean MSSIM between each real image and its augmented version.
    score = [&](const AugmentParams& p) {
      std::vector<double> values(images.size());
      const CounterRng root(cfg.seed);
      parallel_for(images.size(), cfg.jobs, [&](std::size_t i) {
        values[i] = mssim(images[i], augment_random(images[i], p, root.fork(i).next_u64()), cfg.ssim);
      }, 1);
      double sum = 0.0;
      for (double v : values) sum += v;
      return sum / static_cast<double>(values.size());
    };
  } else if (cfg.scorer.rfind("cmd:", 0) == 0) {
    scorer_kind = "external";
    const std::string command = cfg.scorer.substr(4);
    score = [command](const AugmentParams& p) { return external_score(command, p); };
  } else {
    fail(ErrorCode::InvalidArgument, "unknown scorer '" + cfg.scorer + "' (use 'proxy' or 'cmd:<command>')");
  }

  const GridResult result = grid_search(grid, score);

  std::string csv = "geo,zoom,bright,score\n";
  for (const auto& [point, s] : result.evaluations) {
    csv += format_real(point.geo) + "," + format_real(point.zoom) + "," + format_real(point.brightness) + "," +
           format_real(s) + "\n";
  }
  write_text(cfg.out / "grid.csv", csv);

  std::string best;
  best += "geo=" + format_real(result.best.geo) + "\n";
  best += "zoom=" + format_real(result.best.zoom) + "\n";
  best += "bright=" + format_real(result.best.brightness) + "\n";
  best += "rotation_max_deg=" + format_real(result.params.rotation_max_deg) + "\n";
  best += "shift_max_frac=" + format_real(result.params.shift_max_frac) + "\n";
  best += "stretch_max_frac=" + format_real(result.params.stretch_max_frac) + "\n";
  best += "zoom_max_frac=" + format_real(result.params.zoom_max_frac) + "\n";
  best += "brightness_max_frac=" + format_real(result.params.brightness_max_frac) + "\n";
  best += "score=" + format_real(result.score) + "\n";
  best += "evaluations=" + std::to_string(result.evaluations.size()) + "\n";
  write_text(cfg.out / "best.txt", best);
  std::cout << best;

  RunMeta meta("grid-search");
  if (scorer_kind == "proxy") meta.add_input("manifest", cfg.manifest);
  meta.add("class", cfg.label);
  meta.add("grid", cfg.grid);
  meta.add("scorer", cfg.scorer);
  meta.add("n", static_cast<std::uint64_t>(cfg.n));
  meta.add_ssim(cfg.ssim);
  meta.add("seed", cfg.seed);
  meta.write(cfg.out);
  return kExitOk;
}

}  // namespace augmetrics::cli
