#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace exai5g {

inline constexpr std::size_t kNumFeatures = 29;
inline constexpr std::size_t kNumClasses = 9;

enum class Layer { Http, Tcp, Udp, Ip, Frame };
enum class FeatureKind { Numeric, Categorical };

struct FeatureDescriptor {
    std::string_view name;
    Layer layer;
    FeatureKind kind;
};

/// Intrusion classes with their canonical integer codes. Benign is 0.
enum class ClassLabel : int {
    Benign = 0,
    BruteForce = 1,
    DDoS = 2,
    DeviceSpoofing = 3,
    DoS_MQTT = 4,
    Eavesdropping = 5,
    MITM = 6,
    SQLInjection = 7,
    UnauthorizedDataAccess = 8,
};

/// The fixed 29-column flow schema. Ordering is shared by every stage.
class FeatureSchema {
public:
    static const FeatureSchema& standard();

    std::span<const FeatureDescriptor> features() const { return features_; }
    std::size_t size() const { return features_.size(); }
    const FeatureDescriptor& operator[](std::size_t i) const { return features_[i]; }
    std::string_view name(std::size_t i) const { return features_[i].name; }
    std::optional<std::size_t> index_of(std::string_view name) const;

private:
    explicit FeatureSchema(std::array<FeatureDescriptor, kNumFeatures> features)
        : features_(features) {}

    std::array<FeatureDescriptor, kNumFeatures> features_;
};

std::string_view class_name(ClassLabel label);
std::string_view class_name(int code);
std::optional<ClassLabel> parse_class(std::string_view name);
inline int code(ClassLabel label) { return static_cast<int>(label); }

/// Threshold comparison used by planted rules and tree conditions.
enum class RuleOp { LessEqual, Greater };

inline std::string_view op_symbol(RuleOp op) { return op == RuleOp::Greater ? ">" : "<="; }

}  // namespace exai5g
