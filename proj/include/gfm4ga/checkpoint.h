#ifndef GFM4GA_CHECKPOINT_H_
#define GFM4GA_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>

#include "gfm4ga/estimator.h"
#include "gfm4ga/finetune.h"
#include "json.hpp"

namespace gfm4ga {

// Estimator parameters as one JSON document.
nlohmann::json estimator_to_json(const EstimatorParams& params);
EstimatorParams estimator_from_json(const nlohmann::json& doc);
void save_estimator(const EstimatorParams& params,
                    const std::filesystem::path& path);
EstimatorParams load_estimator(const std::filesystem::path& path);

// Checkpoint layout: a single JSON header line (format, dims, layer count,
// relation ids, tensor table, embedded estimator document) followed by a
// flat little-endian float64 block holding the encoder tensors in declared
// order and then the context head.
void write_checkpoint(const Model& model, std::ostream& out);
Model read_checkpoint(std::istream& in);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace gfm4ga

#endif  // GFM4GA_CHECKPOINT_H_
