#pragma once

#include <functional>
#include <string>

namespace coha {

using Clock = std::function<std::string()>;

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_now();

}  // namespace coha
