#include "glrc/metrics_log.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "glrc/error.hpp"

namespace glrc {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_value(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string epoch_record_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["loss_total"] = r.total;
  j["loss_rec"] = r.rec;
  j["loss_l1"] = r.l1;
  j["loss_l2"] = r.l2;
  j["loss_l3"] = r.l3;
  j["loss_l4"] = r.l4;
  j["recall20"] = optional_json(r.recall20);
  j["ndcg20"] = optional_json(r.ndcg20);
  j["seconds"] = r.seconds;
  return j.dump();
}

void write_metrics_log(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << epoch_record_json(r) << '\n';
}

std::vector<EpochRecord> read_metrics_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<EpochRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EpochRecord r;
      r.epoch = j.at("epoch").get<std::size_t>();
      r.total = j.at("loss_total").get<double>();
      r.rec = j.at("loss_rec").get<double>();
      r.l1 = j.at("loss_l1").get<double>();
      r.l2 = j.at("loss_l2").get<double>();
      r.l3 = j.at("loss_l3").get<double>();
      r.l4 = j.at("loss_l4").get<double>();
      r.recall20 = optional_value(j.at("recall20"));
      r.ndcg20 = optional_value(j.at("ndcg20"));
      r.seconds = j.at("seconds").get<double>();
      records.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": bad metrics line: " + e.what());
    }
  }
  return records;
}

}  // namespace glrc
