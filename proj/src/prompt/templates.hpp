#pragma once

#include <string_view>

namespace coldqs::prompt::detail {

extern const std::string_view kGeneralIntent;
extern const std::string_view kProductRecommendation;
extern const std::string_view kJudge;

}  // namespace coldqs::prompt::detail
