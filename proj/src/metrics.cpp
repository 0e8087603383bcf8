#include "exai5g/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "exai5g/errors.hpp"
#include "exai5g/ingest.hpp"

namespace exai5g {

ConfusionMatrix ConfusionMatrix::from(const std::vector<int>& truth, const std::vector<int>& pred,
                                      std::size_t n_classes) {
    if (truth.size() != pred.size()) {
        throw LengthMismatch("truth has " + std::to_string(truth.size()) + " labels, predictions " +
                             std::to_string(pred.size()));
    }
    ConfusionMatrix cm;
    const auto n = static_cast<Eigen::Index>(n_classes);
    cm.counts = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n || pred[i] < 0 || pred[i] >= n) {
            throw LengthMismatch("label out of range at index " + std::to_string(i));
        }
        cm.counts(truth[i], pred[i])++;
    }
    return cm;
}

double ConfusionMatrix::accuracy() const {
    const long long n = total();
    return n == 0 ? 0.0 : double(counts.trace()) / double(n);
}

ClassReport class_report(const std::vector<int>& truth, const std::vector<int>& pred, std::size_t n_classes) {
    if (truth.empty()) throw LengthMismatch("class_report needs at least one label");
    ClassReport r;
    r.confusion = ConfusionMatrix::from(truth, pred, n_classes);
    const auto& cm = r.confusion.counts;
    const long long n = r.confusion.total();
    r.accuracy = r.confusion.accuracy();
    int present = 0;
    for (Eigen::Index c = 0; c < cm.rows(); ++c) {
        ClassMetrics m;
        const long long tp = cm(c, c);
        const long long predicted = cm.col(c).sum();
        m.support = cm.row(c).sum();
        const std::string name = n_classes == kNumClasses ? std::string(class_name(int(c))) : std::to_string(c);
        if (predicted > 0) {
            m.precision = double(tp) / double(predicted);
        } else if (m.support > 0) {
            r.flags.push_back("precision undefined for " + name + " (no predictions); set to 0");
        }
        if (m.support > 0) m.recall = double(tp) / double(m.support);
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        if (m.support > 0) {
            ++present;
            r.macro.precision += m.precision;
            r.macro.recall += m.recall;
            r.macro.f1 += m.f1;
            const double w = double(m.support) / double(n);
            r.weighted.precision += w * m.precision;
            r.weighted.recall += w * m.recall;
            r.weighted.f1 += w * m.f1;
        }
        r.per_class.push_back(m);
    }
    r.macro.precision /= present;
    r.macro.recall /= present;
    r.macro.f1 /= present;
    r.macro.support = n;
    r.weighted.support = n;
    return r;
}

std::string ClassReport::to_csv() const {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    std::string out = "class,precision,recall,f1,support\n";
    auto row = [&](const std::string& name, const ClassMetrics& m) {
        out += name + "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.f1) + "," +
               std::to_string(m.support) + "\n";
    };
    const bool named = per_class.size() == kNumClasses;
    for (std::size_t c = 1; c < per_class.size(); ++c) {
        row(named ? std::string(class_name(int(c))) : std::to_string(c), per_class[c]);
    }
    if (!per_class.empty()) row(named ? "Benign" : "0", per_class[0]);
    row("macro avg", macro);
    row("weighted avg", weighted);
    out += "accuracy,,," + fmt(accuracy) + "," + std::to_string(macro.support) + "\n";
    return out;
}

CurveReport roc_pr_points(const std::vector<int>& truth, const Eigen::MatrixXd& scores) {
    if (static_cast<Eigen::Index>(truth.size()) != scores.rows()) {
        throw LengthMismatch("roc_pr_points: score rows differ from labels");
    }
    CurveReport report;
    const std::size_t n = truth.size();
    std::vector<std::size_t> order(n);
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        ClassCurve curve;
        curve.class_code = static_cast<int>(c);
        const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), int(c)));
        const std::size_t negatives = n - positives;
        const std::string name = scores.cols() == Eigen::Index(kNumClasses) ? std::string(class_name(int(c)))
                                                                             : std::to_string(c);
        if (positives == 0 || negatives == 0) {
            curve.degenerate = true;
            report.flags.push_back("DegenerateClass: " + name +
                                   (positives == 0 ? " absent from labels" : " has no negatives"));
            report.classes.push_back(std::move(curve));
            continue;
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores(a, c) > scores(b, c); });
        curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0, 1.0, 0.0});
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (std::size_t i = 0; i < n;) {
            const double thr = scores(order[i], c);
            while (i < n && scores(order[i], c) == thr) {
                (truth[order[i]] == c ? tp : fp)++;
                ++i;
            }
            CurvePoint p;
            p.threshold = thr;
            p.tpr = double(tp) / double(positives);
            p.fpr = double(fp) / double(negatives);
            p.precision = double(tp) / double(tp + fp);
            p.recall = p.tpr;
            curve.points.push_back(p);
        }
        double auc = 0.0;
        double ap = 0.0;
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            const auto& a = curve.points[i - 1];
            const auto& b = curve.points[i];
            auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
            ap += (b.recall - a.recall) * b.precision;
        }
        curve.roc_auc = auc;
        curve.average_precision = ap;
        report.classes.push_back(std::move(curve));
    }
    return report;
}

std::string CurveReport::points_csv() const {
    std::string out = "class,threshold,tpr,fpr,precision,recall\n";
    for (const auto& c : classes) {
        for (const auto& p : c.points) {
            out += std::string(class_name(c.class_code)) + "," +
                   (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "," +
                   format_double(p.tpr) + "," + format_double(p.fpr) + "," + format_double(p.precision) + "," +
                   format_double(p.recall) + "\n";
        }
    }
    return out;
}

std::string CurveReport::auc_csv() const {
    std::string out = "class,roc_auc,average_precision,degenerate\n";
    for (const auto& c : classes) {
        out += std::string(class_name(c.class_code)) + "," + (c.degenerate ? "" : format_double(c.roc_auc)) + "," +
               (c.degenerate ? "" : format_double(c.average_precision)) + "," + (c.degenerate ? "true" : "false") +
               "\n";
    }
    return out;
}

LatencyReport summarize_latency(std::vector<double> samples_ms) {
    if (samples_ms.empty()) throw Error("latency summary needs samples");
    LatencyReport r;
    r.samples_ms = samples_ms;
    std::sort(samples_ms.begin(), samples_ms.end());
    const std::size_t n = samples_ms.size();
    r.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * double(n)));
    r.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
    return r;
}

std::string LatencyReport::to_json() const {
    nlohmann::ordered_json j;
    j["median_ms"] = median_ms;
    j["p95_ms"] = p95_ms;
    j["n"] = samples_ms.size();
    j["samples_ms"] = samples_ms;
    return j.dump(2) + "\n";
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / double(values.size()))};
}

}  // namespace exai5g
