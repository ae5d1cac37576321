#ifndef MTE_CHECKPOINT_HPP_
#define MTE_CHECKPOINT_HPP_

#include <optional>
#include <string>

#include "mte/ensemble.hpp"
#include "mte/model.hpp"

namespace mte {

// Self-describing binary container: magic + version, a JSON architecture
// descriptor (encoder kind, dims, task specs, seed), then the named
// parameter tensors as 64-bit little-endian doubles. save -> load -> save is
// byte-identical.

void save_checkpoint(MultiTaskModel& model, const std::string& path);
void save_checkpoint(EnsembleModel& model, const std::string& path);

// Reads the stored descriptor's encoder kind without building the model.
std::string checkpoint_descriptor(const std::string& path);

// `expect`, when set, must match the stored encoder kind; a mismatch raises
// DataError naming both descriptors. The embedding table is re-attached by
// the caller and must match the stored embed_dim.
MultiTaskModel load_multitask_checkpoint(const std::string& path, const EmbeddingTable* table,
                                         std::optional<EncoderKind> expect = std::nullopt);

EnsembleModel load_ensemble_checkpoint(const std::string& path);

}  // namespace mte

#endif  // MTE_CHECKPOINT_HPP_
