#pragma once

#include <cstdint>
#include <string>

#include "edlm/model.hpp"

namespace edlm {

/// Trained model state as persisted on disk. The format is versioned and
/// CRC-protected; load(save(x)) reproduces the parameters bit-exactly.
struct Checkpoint {
    NetworkSpec spec;
    Parameters<float> params;
    std::uint32_t epochs_completed = 0;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace edlm
