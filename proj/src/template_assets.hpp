#pragma once

#include <string_view>

namespace sumfact::assets {

extern const std::string_view kBinary;
extern const std::string_view kBinaryReasoning;
extern const std::string_view kFullLocalization;
extern const std::string_view kSummarize;

}  // namespace sumfact::assets
