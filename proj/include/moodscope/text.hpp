#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace moodscope {

/// Splits text into lowercase word tokens.
///
/// Word characters are ASCII letters and digits, the underscore, and every
/// non-ASCII UTF-8 sequence; an apostrophe is kept when it sits between two
/// word characters ("don't"). Everything else separates tokens. Only ASCII
/// letters are case-folded.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace moodscope
