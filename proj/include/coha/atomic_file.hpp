#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace coha {

// Points inside atomic_write_file where a crash can be simulated. The hook is
// invoked at each stage and may throw to abandon the write.
enum class WriteStage {
  temp_created,   // temp file exists, empty
  temp_partial,   // first half of the payload written
  temp_written,   // full payload written, not yet synced
  temp_synced,    // fsync done, not yet renamed
  renamed,        // target replaced, directory not yet synced
};

using FaultHook = std::function<void(WriteStage, const std::filesystem::path& target)>;

// Writes `content` to `target` via temp-file + fsync + rename. Readers see the
// old file or the new one, never a mix.
void atomic_write_file(const std::filesystem::path& target, std::string_view content,
                       const FaultHook& hook = {});

std::string read_file(const std::filesystem::path& path);

// Suffix used by atomic_write_file for temporaries; load() sweeps these.
inline constexpr std::string_view kTempSuffix = ".tmp-coha";

}  // namespace coha
