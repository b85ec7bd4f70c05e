#pragma once

#include <functional>
#include <string_view>

namespace ionwalk {

using WarningSink = std::function<void(std::string_view)>;

/// Reports a non-fatal condition (domain warnings, flagged invariants).
/// Goes to stderr unless a sink is installed.
void warn(std::string_view message);

/// Installs a sink and returns the previous one; an empty sink silences.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace ionwalk
