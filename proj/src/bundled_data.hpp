#pragma once

// Data files compiled into the library at configure time.

#include <string_view>

namespace edg::detail {

std::string_view bundled_iec62443_csv();

}  // namespace edg::detail
