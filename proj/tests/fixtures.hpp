#pragma once

#include <string>

#include "exai5g/explain.hpp"

namespace fixtures {

/// phi4 explanation for a DoS_MQTT record, as published.
inline const std::string kPhi4Text =
    "- A high `frame.time_relative` of 812.4183 is a key indicator, contributing significantly to the "
    "classification of DoS_MQTT due to its high attribution score.\n"
    "- The `tcp.time_relative` value of 0.0000 is \"small\", aligning with expected values for this pattern and "
    "strongly supporting the DoS_MQTT classification due to its negative attribution.\n"
    "- A \"large\" `tcp.stream` count of 598269.0000 serves as a crucial factor, positively influencing the "
    "identification of DoS_MQTT activity based on its notable attribution score.\n";

/// Attribution signs as stated in the text above; magnitudes are arbitrary.
inline exai5g::ExplanationRequest phi4_request() {
    exai5g::ExplanationRequest r;
    r.record_id = 60492;
    r.cls_name = "DoS_MQTT";
    r.clause = "class(DoS_MQTT) :- tcp.stream > 500000.0000 AND frame.time_relative > 600.0000";
    r.top5 = {{"frame.time_relative", 812.4183, 0.41},
              {"tcp.stream", 598269.0, 0.22},
              {"tcp.time_relative", 0.0, -0.13},
              {"tcp.window_size.1", 64.0, 0.05},
              {"ip.len", 60.0, -0.02}};
    return r;
}

}  // namespace fixtures
