#include "exai5g/schema.hpp"

#include <stdexcept>

namespace exai5g {

namespace {

constexpr std::array<FeatureDescriptor, kNumFeatures> kFeatures{{
    {"http.request.uri", Layer::Http, FeatureKind::Categorical},
    {"http.request", Layer::Http, FeatureKind::Numeric},
    {"tcp.dstport", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.srcport", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.port", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.time_delta", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.time_relative", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.reassembled.length", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.segments", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.analysis.ack_rtt", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.flags", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.urgent_pointer", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.stream", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.len", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.seq", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.ack", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.ack_raw", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.window_size", Layer::Tcp, FeatureKind::Numeric},
    {"tcp.window_size.1", Layer::Tcp, FeatureKind::Numeric},
    {"udp.port", Layer::Udp, FeatureKind::Numeric},
    {"udp.length", Layer::Udp, FeatureKind::Numeric},
    {"ip.proto", Layer::Ip, FeatureKind::Numeric},
    {"ip.ttl", Layer::Ip, FeatureKind::Numeric},
    {"ip.fragments", Layer::Ip, FeatureKind::Numeric},
    {"ip.flags.mf", Layer::Ip, FeatureKind::Numeric},
    {"ip.flags.df", Layer::Ip, FeatureKind::Numeric},
    {"ip.len", Layer::Ip, FeatureKind::Numeric},
    {"frame.time_delta", Layer::Frame, FeatureKind::Numeric},
    {"frame.time_relative", Layer::Frame, FeatureKind::Numeric},
}};

constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "Benign",  "BruteForce",    "DDoS", "DeviceSpoofing", "DoS_MQTT",
    "Eavesdropping", "MITM", "SQLInjection", "UnauthorizedDataAccess",
};

}  // namespace

const FeatureSchema& FeatureSchema::standard() {
    static const FeatureSchema schema{kFeatures};
    return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) return i;
    }
    return std::nullopt;
}

std::string_view class_name(ClassLabel label) { return class_name(static_cast<int>(label)); }

std::string_view class_name(int code) {
    if (code < 0 || code >= static_cast<int>(kNumClasses)) {
        throw std::out_of_range("class code out of range: " + std::to_string(code));
    }
    return kClassNames[static_cast<std::size_t>(code)];
}

std::optional<ClassLabel> parse_class(std::string_view name) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (kClassNames[i] == name) return static_cast<ClassLabel>(i);
    }
    return std::nullopt;
}

}  // namespace exai5g
