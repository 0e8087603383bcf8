#include "exai5g/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "exai5g/errors.hpp"

namespace exai5g {

namespace {

struct FeatureRange {
    double lo;
    double hi;
    bool integer;
    bool binary;
};

// Plausible value ranges, schema order.
constexpr std::array<FeatureRange, kNumFeatures> kRanges{{
    {1, 9, true, false},            // http.request.uri (category code)
    {0, 1, true, true},             // http.request
    {0, 65535, true, false},        // tcp.dstport
    {0, 65535, true, false},        // tcp.srcport
    {0, 65535, true, false},        // tcp.port
    {0, 2, false, false},           // tcp.time_delta
    {0, 1000, false, false},        // tcp.time_relative
    {0, 5000, true, false},         // tcp.reassembled.length
    {0, 10, true, false},           // tcp.segments
    {0, 0.5, false, false},         // tcp.analysis.ack_rtt
    {0, 255, true, false},          // tcp.flags
    {0, 10, true, false},           // tcp.urgent_pointer
    {0, 1e6, true, false},          // tcp.stream
    {0, 1500, true, false},         // tcp.len
    {0, 1e6, true, false},          // tcp.seq
    {0, 1e6, true, false},          // tcp.ack
    {0, 4.29e9, true, false},       // tcp.ack_raw
    {0, 65535, true, false},        // tcp.window_size
    {0, 65535, true, false},        // tcp.window_size.1
    {0, 65535, true, false},        // udp.port
    {0, 1500, true, false},         // udp.length
    {0, 20, true, false},           // ip.proto
    {1, 255, true, false},          // ip.ttl
    {0, 5, true, false},            // ip.fragments
    {0, 1, true, true},             // ip.flags.mf
    {0, 1, true, true},             // ip.flags.df
    {40, 1500, true, false},        // ip.len
    {0, 1, false, false},           // frame.time_delta
    {0, 1000, false, false},        // frame.time_relative
}};

constexpr std::size_t kUriFeature = 0;

struct ClassGeometry {
    // mean[c][f]; for binary features the Bernoulli probability.
    std::array<std::array<double, kNumFeatures>, kNumClasses> mean{};
    std::array<double, kNumFeatures> sigma{};
};

ClassGeometry build_geometry(const SynthConfig& cfg) {
    const auto& schema = FeatureSchema::standard();
    ClassGeometry g;
    std::mt19937_64 rng(cfg.geometry_seed);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto& r = kRanges[f];
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const double u = unit(rng);
            g.mean[c][f] = r.binary ? u : r.lo + (r.hi - r.lo) * u;
        }
    }
    for (const auto& rule : cfg.planted_rules) {
        const std::size_t f = *schema.index_of(rule.feature);
        const auto& r = kRanges[f];
        const double above = rule.threshold + 0.5 * (r.hi - rule.threshold);
        const double below = r.lo + 0.5 * (rule.threshold - r.lo);
        const bool greater = rule.op == RuleOp::Greater;
        g.mean[static_cast<std::size_t>(rule.cls)][f] = greater ? above : below;
        g.mean[0][f] = greater ? below : above;
    }
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        double lo = g.mean[0][f];
        double hi = g.mean[0][f];
        for (std::size_t c = 1; c < kNumClasses; ++c) {
            lo = std::min(lo, g.mean[c][f]);
            hi = std::max(hi, g.mean[c][f]);
        }
        g.sigma[f] = cfg.noise_fraction * (hi - lo) / double(kNumClasses - 1);
    }
    return g;
}

/// Moves `x` onto the requested side of the rule threshold.
double enforce(double x, const PlantedRule& rule, const FeatureRange& r, bool satisfy) {
    const double t = rule.threshold;
    const bool need_greater = (rule.op == RuleOp::Greater) == satisfy;
    if (need_greater) {
        if (!(x > t)) x = std::min(2.0 * t - x, r.hi);
        if (r.integer) x = std::max(std::round(x), std::floor(t) + 1.0);
        if (!(x > t)) x = std::nextafter(t, r.hi + 1.0);
    } else {
        if (!(x <= t)) x = std::max(2.0 * t - x, r.lo);
        if (r.integer) x = std::min(std::round(x), std::floor(t));
        if (!(x <= t)) x = t;
    }
    return x;
}

}  // namespace

std::array<double, kNumClasses> SynthConfig::testbed_weights() {
    constexpr std::array<double, kNumClasses> counts{1322254, 291, 165070, 70, 250514, 3525, 677, 475, 207};
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::array<double, kNumClasses> w{};
    for (std::size_t i = 0; i < kNumClasses; ++i) w[i] = counts[i] / total;
    return w;
}

std::vector<PlantedRule> SynthConfig::default_planted_rules() {
    return {
        {ClassLabel::DoS_MQTT, "tcp.stream", RuleOp::Greater, 5e5},
        {ClassLabel::DDoS, "frame.time_relative", RuleOp::Greater, 600.0},
        {ClassLabel::Eavesdropping, "tcp.time_relative", RuleOp::Greater, 700.0},
        {ClassLabel::BruteForce, "tcp.dstport", RuleOp::LessEqual, 30.0},
        {ClassLabel::MITM, "ip.ttl", RuleOp::LessEqual, 40.0},
        {ClassLabel::DeviceSpoofing, "udp.port", RuleOp::Greater, 60000.0},
        {ClassLabel::UnauthorizedDataAccess, "tcp.reassembled.length", RuleOp::Greater, 4000.0},
        {ClassLabel::SQLInjection, "tcp.len", RuleOp::Greater, 1200.0},
    };
}

void SynthConfig::validate() const {
    double sum = 0.0;
    for (double w : class_weights) {
        if (!(w >= 0.0)) throw WeightMismatch("class weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw WeightMismatch("class weights sum to " + std::to_string(sum) + ", expected 1");
    }
    if (total_records < kNumClasses) {
        throw ConfigInvalid("synth.total_records", "must be at least the number of classes");
    }
    if (!(noise_fraction > 0.0)) throw ConfigInvalid("synth.noise_fraction", "must be positive");
    const auto& schema = FeatureSchema::standard();
    for (const auto& rule : planted_rules) {
        const auto f = schema.index_of(rule.feature);
        if (!f) throw ConfigInvalid("synth.planted_rules", "unknown feature '" + rule.feature + "'");
        if (schema[*f].kind == FeatureKind::Categorical || kRanges[*f].binary) {
            throw ConfigInvalid("synth.planted_rules", "feature '" + rule.feature + "' cannot carry a threshold rule");
        }
        if (rule.cls == ClassLabel::Benign) {
            throw ConfigInvalid("synth.planted_rules", "Benign cannot carry a planted rule");
        }
        const auto& r = kRanges[*f];
        if (!(rule.threshold > r.lo && rule.threshold < r.hi)) {
            throw ConfigInvalid("synth.planted_rules", "threshold for '" + rule.feature + "' outside its range");
        }
    }
}

std::array<std::size_t, kNumClasses> class_counts(const SynthConfig& cfg) {
    cfg.validate();
    std::array<std::size_t, kNumClasses> counts{};
    std::size_t assigned = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
        counts[c] = static_cast<std::size_t>(std::llround(cfg.class_weights[c] * double(cfg.total_records)));
        assigned += counts[c];
    }
    if (assigned > cfg.total_records) throw WeightMismatch("rounded attack counts exceed total_records");
    counts[0] = cfg.total_records - assigned;
    return counts;
}

Dataset generate(const SynthConfig& cfg) {
    const auto counts = class_counts(cfg);
    const auto& schema = FeatureSchema::standard();
    const ClassGeometry geo = build_geometry(cfg);

    std::vector<int> labels;
    labels.reserve(cfg.total_records);
    for (std::size_t c = 0; c < kNumClasses; ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(labels.begin(), labels.end(), rng);

    std::vector<std::pair<std::size_t, const PlantedRule*>> rules;
    for (const auto& rule : cfg.planted_rules) rules.emplace_back(*schema.index_of(rule.feature), &rule);

    const std::size_t n_uris = synth_uris().size();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any_uri(0, n_uris - 1);

    Dataset d;
    d.provenance = Provenance::Synthetic;
    d.labels = labels;
    d.records.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(kNumFeatures));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            const auto& r = kRanges[f];
            double x = 0.0;
            if (f == kUriFeature) {
                // Each class prefers one URI; the rest of its mass is spread uniformly.
                const std::size_t pick = unit(rng) < 0.7 ? c % n_uris : any_uri(rng);
                x = double(pick + 1);
            } else if (r.binary) {
                x = unit(rng) < geo.mean[c][f] ? 1.0 : 0.0;
            } else {
                x = std::clamp(geo.mean[c][f] + geo.sigma[f] * normal(rng), r.lo, r.hi);
                if (r.integer) x = std::round(x);
            }
            d.records(row, static_cast<Eigen::Index>(f)) = x;
        }
        for (const auto& [f, rule] : rules) {
            const bool own = static_cast<std::size_t>(rule->cls) == c;
            if (!own && c != 0) continue;
            double& x = d.records(row, static_cast<Eigen::Index>(f));
            x = enforce(x, *rule, kRanges[f], own);
        }
    }
    d.check();
    return d;
}

const std::vector<std::string>& synth_uris() {
    static const std::vector<std::string> uris = [] {
        std::vector<std::string> u{"/",           "/admin",   "/api/data",   "/api/login",
                                   "/firmware",   "/index.html", "/mqtt/publish",
                                   "/search?q=1' OR '1'='1", "/status"};
        std::sort(u.begin(), u.end());
        return u;
    }();
    return uris;
}

RawTable to_raw_table(const Dataset& data) {
    const auto& schema = FeatureSchema::standard();
    RawTable t = to_table(data, schema);
    const auto& uris = synth_uris();
    for (auto& row : t.rows) {
        const auto code = static_cast<std::size_t>(std::stod(row[kUriFeature]));
        row[kUriFeature] = uris.at(code - 1);
    }
    return t;
}

}  // namespace exai5g
