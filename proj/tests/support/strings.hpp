#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace testgen {

/// All strings over `alphabet` with length 0..max_len, in (length, lex)
/// order.
inline std::vector<std::string> all_strings(std::string_view alphabet,
                                            int max_len) {
  std::vector<std::string> out = {""};
  std::size_t level_start = 0;
  for (int len = 1; len <= max_len; ++len) {
    std::size_t level_end = out.size();
    for (std::size_t i = level_start; i < level_end; ++i)
      for (char c : alphabet) out.push_back(out[i] + c);
    level_start = level_end;
  }
  return out;
}

}  // namespace testgen
