#pragma once

namespace ratchet {

inline constexpr const char* version() { return "1.0.0"; }

}
