#pragma once

namespace seqpolicy {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace seqpolicy
