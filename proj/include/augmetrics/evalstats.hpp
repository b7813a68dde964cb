#pragma once

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "augmetrics/error.hpp"

namespace augmetrics {

/// k x k counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k, std::vector<std::string> labels = {})
      : k_(k), counts_(k * k, 0), labels_(std::move(labels)) {
    require(k_ >= 1, ErrorCode::InvalidArgument, "class count must be at least 1");
    if (labels_.empty()) {
      for (std::size_t i = 0; i < k_; ++i) labels_.push_back(std::to_string(i));
    }
    require(labels_.size() == k_, ErrorCode::InvalidArgument, "label count does not match k");
  }

  static ConfusionMatrix from_counts(std::size_t k, const std::vector<std::uint64_t>& counts) {
    require(counts.size() == k * k, ErrorCode::InvalidArgument, "count vector is not k*k");
    ConfusionMatrix cm(k);
    cm.counts_ = counts;
    return cm;
  }

  std::size_t k() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1) { counts_[truth * k_ + predicted] += n; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }
  std::uint64_t row_sum(std::size_t i) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < k_; ++j) s += at(i, j);
    return s;
  }
  std::uint64_t col_sum(std::size_t j) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < k_; ++i) s += at(i, j);
    return s;
  }

  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    return a.k_ == b.k_ && a.counts_ == b.counts_;
  }

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::string> labels_;
};

inline ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                 std::size_t k) {
  require(y_true.size() == y_pred.size(), ErrorCode::LengthMismatch,
          std::to_string(y_true.size()) + " truths vs " + std::to_string(y_pred.size()) + " predictions");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    require(y_true[i] < k && y_pred[i] < k, ErrorCode::UnknownLabel, "label index outside [0, k) at item " +
                                                                          std::to_string(i));
    cm.add(y_true[i], y_pred[i]);
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
};

struct MetricReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
  double mcc = 0.0;
  std::vector<ClassMetrics> per_class;
  /// Zero denominators that were scored as 0, e.g. "precision[2]" or "mcc".
  std::vector<std::string> warnings;
};

/**
 * Accuracy, macro-averaged one-vs-rest precision / recall / F1 /
 * specificity, and the multiclass Matthews correlation R_K:
 *
 *   (c s - sum_k p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))
 *
 * with c the trace, s the total, p_k column sums and t_k row sums.
 */
inline MetricReport metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  require(total > 0, ErrorCode::EmptyMatrix, "confusion matrix is empty");
  const std::size_t k = cm.k();
  const double s = static_cast<double>(total);

  MetricReport r;
  auto ratio = [&](double num, double den, const char* name, std::size_t cls) {
    if (den > 0.0) return num / den;
    r.warnings.push_back(std::string(name) + "[" + std::to_string(cls) + "]");
    return 0.0;
  };

  double trace = 0.0;
  double sum_pt = 0.0, sum_pp = 0.0, sum_tt = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double tp = static_cast<double>(cm.at(i, i));
    const double row = static_cast<double>(cm.row_sum(i));
    const double col = static_cast<double>(cm.col_sum(i));
    const double fp = col - tp;
    const double fn = row - tp;
    const double tn = s - tp - fp - fn;
    trace += tp;
    sum_pt += col * row;
    sum_pp += col * col;
    sum_tt += row * row;

    ClassMetrics c;
    c.precision = ratio(tp, tp + fp, "precision", i);
    c.recall = ratio(tp, tp + fn, "recall", i);
    c.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn, "f1", i);
    c.specificity = ratio(tn, tn + fp, "specificity", i);
    r.per_class.push_back(c);
    r.precision += c.precision;
    r.recall += c.recall;
    r.f1 += c.f1;
    r.specificity += c.specificity;
  }
  const double kd = static_cast<double>(k);
  r.precision /= kd;
  r.recall /= kd;
  r.f1 /= kd;
  r.specificity /= kd;
  r.accuracy = trace / s;

  const double denom = (s * s - sum_pp) * (s * s - sum_tt);
  if (denom > 0.0) {
    r.mcc = (trace * s - sum_pt) / std::sqrt(denom);
  } else {
    r.warnings.emplace_back("mcc");
    r.mcc = 0.0;
  }
  return r;
}

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
inline double chi2_sf(double x, double df) {
  require(std::isfinite(x) && x >= 0.0, ErrorCode::InvalidArgument, "chi-square statistic must be >= 0");
  require(std::isfinite(df) && df >= 1.0, ErrorCode::InvalidArgument, "degrees of freedom must be >= 1");
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

struct PairedPredictions {
  std::size_t k = 0;
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
};

struct StuartMaxwellResult {
  double chi2 = 0.0;
  std::size_t df = 0;
  double pvalue = 1.0;
  std::vector<std::size_t> dropped;  // degenerate categories removed
};

/**
 * Stuart-Maxwell test of marginal homogeneity on the k x k agreement table
 * T (rows: classifier A, columns: classifier B).
 *
 * Categories never involved in a disagreement (T_ij = T_ji = 0 for all
 * j != i) carry no information and are removed, lowering df. Of the
 * remaining m categories the last is dropped, and with
 *   d_i  = row_i - col_i
 *   S_ii = row_i + col_i - 2 T_ii,  S_ij = -(T_ij + T_ji)
 * the statistic is d^T S^-1 d with m - 1 degrees of freedom.
 * If nothing remains the classifiers agree everywhere: chi2 0, p 1.
 */
inline StuartMaxwellResult stuart_maxwell(const PairedPredictions& p) {
  require(p.a.size() == p.b.size(), ErrorCode::LengthMismatch, "paired prediction lengths differ");
  require(!p.a.empty(), ErrorCode::InvalidArgument, "need at least one paired item");
  require(p.k >= 2, ErrorCode::InvalidArgument, "need at least two categories");
  const std::size_t k = p.k;
  std::vector<double> t(k * k, 0.0);
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    require(p.a[i] < k && p.b[i] < k, ErrorCode::UnknownLabel, "label index outside [0, k) at item " +
                                                                   std::to_string(i));
    t[p.a[i] * k + p.b[i]] += 1.0;
  }

  StuartMaxwellResult result;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < k; ++i) {
    bool involved = false;
    for (std::size_t j = 0; j < k && !involved; ++j) {
      if (j != i && (t[i * k + j] > 0.0 || t[j * k + i] > 0.0)) involved = true;
    }
    (involved ? kept : result.dropped).push_back(i);
  }
  if (kept.size() < 2) return result;

  const std::size_t m = kept.size() - 1;
  Eigen::VectorXd d(static_cast<Eigen::Index>(m));
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t u = 0; u < m; ++u) {
    const std::size_t i = kept[u];
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row += t[i * k + j];
      col += t[j * k + i];
    }
    d[static_cast<Eigen::Index>(u)] = row - col;
    for (std::size_t v = 0; v < m; ++v) {
      const std::size_t j = kept[v];
      cov(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) =
          u == v ? row + col - 2.0 * t[i * k + i] : -(t[i * k + j] + t[j * k + i]);
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  lu.setThreshold(1e-12);
  require(lu.isInvertible(), ErrorCode::SingularCovariance,
          "Stuart-Maxwell covariance is singular after removing degenerate categories");
  const Eigen::VectorXd solved = lu.solve(d);
  result.chi2 = std::max(0.0, d.dot(solved));
  result.df = m;
  result.pvalue = chi2_sf(result.chi2, static_cast<double>(m));
  return result;
}

// ---------------------------------------------------------------------------
// Export.

inline constexpr const char* kReportHeader = "scenario,accuracy,precision,recall,f1,specificity,mcc";

inline std::string format_report_row(const std::string& scenario, const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g,%.10g,%.10g,%.10g", r.accuracy, r.precision, r.recall, r.f1,
                r.specificity, r.mcc);
  return scenario + buf;
}

/// Square table of pairwise p-values; the diagonal is left blank.
inline std::string format_pvalue_table(const std::vector<std::string>& names,
                                       const std::vector<std::vector<double>>& pvalues) {
  std::string out = "scenario";
  for (const auto& n : names) out += ',' + n;
  out += '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += names[i];
    for (std::size_t j = 0; j < names.size(); ++j) {
      out += ',';
      if (i == j) continue;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", pvalues[i][j]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace augmetrics
