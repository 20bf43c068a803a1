#pragma once

#define JOINTCAL_VERSION_MAJOR 0
#define JOINTCAL_VERSION_MINOR 1
#define JOINTCAL_VERSION_PATCH 0
#define JOINTCAL_VERSION_STRING "0.1.0"

namespace jointcal {
inline constexpr const char* version() { return JOINTCAL_VERSION_STRING; }
}
