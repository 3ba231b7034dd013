#pragma once

#include <functional>
#include <string_view>

namespace scopealign {

using WarningSink = std::function<void(std::string_view)>;

// Non-fatal conditions (skipped batches, degenerate splits) go through here.
// The default sink writes one line to stderr.
void warn(std::string_view message);

// Returns the previous sink. Passing an empty function silences warnings.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace scopealign
