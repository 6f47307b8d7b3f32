#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "glrc/epoch_record.hpp"

namespace glrc {

/// One JSON object per line with keys epoch, loss_total, loss_rec, loss_l1,
/// loss_l2, loss_l3, loss_l4, recall20, ndcg20, seconds. Metrics are null on
/// epochs without validation.
std::string epoch_record_json(const EpochRecord& record);
void write_metrics_log(const std::filesystem::path& path, const std::vector<EpochRecord>& records);
std::vector<EpochRecord> read_metrics_log(const std::filesystem::path& path);

}  // namespace glrc
