#pragma once

namespace rosae {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Format tag written into every serialized model and manifest.
inline constexpr int kModelFormatVersion = 1;

} // namespace rosae
