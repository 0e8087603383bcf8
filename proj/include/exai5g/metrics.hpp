#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/schema.hpp"

namespace exai5g {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;

    static ConfusionMatrix from(const std::vector<int>& truth, const std::vector<int>& pred,
                                std::size_t n_classes = kNumClasses);
    long long total() const { return counts.sum(); }
    double accuracy() const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
};

struct ClassReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro;
    ClassMetrics weighted;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    /// Zero-division notes, e.g. "precision undefined for MITM".
    std::vector<std::string> flags;

    /// Table-style CSV: attack classes, then Benign, then macro/weighted averages and accuracy.
    std::string to_csv() const;
};

/// Per-class precision/recall/F1 plus averages. The macro average runs over
/// classes with nonzero support in `truth`.
ClassReport class_report(const std::vector<int>& truth, const std::vector<int>& pred,
                         std::size_t n_classes = kNumClasses);

inline double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
    return class_report(truth, pred).macro.f1;
}

struct CurvePoint {
    double threshold;
    double tpr;
    double fpr;
    double precision;
    double recall;
};

struct ClassCurve {
    int class_code = 0;
    bool degenerate = false;
    std::vector<CurvePoint> points;
    double roc_auc = std::numeric_limits<double>::quiet_NaN();
    double average_precision = std::numeric_limits<double>::quiet_NaN();
};

struct CurveReport {
    std::vector<ClassCurve> classes;
    std::vector<std::string> flags;

    /// One row per point: class, threshold, tpr, fpr, precision, recall.
    std::string points_csv() const;
    /// One row per class: class, roc_auc, average_precision, degenerate.
    std::string auc_csv() const;
};

/// One-vs-rest ROC and precision-recall points at every distinct score.
CurveReport roc_pr_points(const std::vector<int>& truth, const Eigen::MatrixXd& scores);

struct LatencyReport {
    double median_ms = 0.0;
    double p95_ms = 0.0;
    std::vector<double> samples_ms;

    std::string to_json() const;
};

/// Median and nearest-rank 95th percentile of a nonempty sample.
LatencyReport summarize_latency(std::vector<double> samples_ms);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace exai5g
