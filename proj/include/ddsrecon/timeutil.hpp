#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ddsrecon {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Parses "YYYY-MM-DDTHH:MM:SSZ". Throws InputError on anything else.
Timestamp parse_timestamp(std::string_view text);

std::string format_timestamp(Timestamp t);

}  // namespace ddsrecon
